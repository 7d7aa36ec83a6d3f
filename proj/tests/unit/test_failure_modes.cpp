#include <cmath>

#include "doctest.h"
#include "fifa/error.hpp"
#include "fifa/failure_modes.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace fifa;

namespace {

// Rows 0..n-1 with the given labels; one node per `chunk` consecutive rows.
struct Fixture {
  Dataset data;
  MapperGraph graph;
};

Fixture fixture(const std::vector<double>& truth, const std::vector<double>& pred, std::size_t chunk,
                TaskKind task = TaskKind::classification) {
  const std::size_t n = truth.size();
  Matrix x(n, 2);
  for (std::size_t r = 0; r < n; ++r) {
    x(r, 0) = static_cast<double>(r);
    x(r, 1) = static_cast<double>(r % 7);
  }
  Meta meta;
  meta.task = task;
  meta.ground_truth = truth;
  meta.prediction = pred;
  meta.error_measure.assign(n, 0.5);
  Fixture f{Dataset(std::move(x), {"a", "b"}, std::move(meta)), {}};
  for (std::size_t start = 0, id = 0; start < n; start += chunk, ++id) {
    MapperNode node;
    node.id = id;
    for (std::size_t r = start; r < std::min(n, start + chunk); ++r) node.members.push_back(r);
    f.graph.nodes.push_back(node);
  }
  f.graph.row_count = n;
  return f;
}

}  // namespace

TEST_CASE("select: size and accuracy thresholds") {
  // Part 0: 14 rows all wrong. Part 1: 30 rows, 3 correct, truth 5. Part 2: 200 rows all correct.
  std::vector<double> truth, pred;
  for (int i = 0; i < 14; ++i) truth.push_back(1), pred.push_back(2);
  for (int i = 0; i < 30; ++i) truth.push_back(5), pred.push_back(i < 3 ? 5 : 8);
  for (int i = 0; i < 200; ++i) truth.push_back(3), pred.push_back(3);
  auto f = fixture(truth, pred, 2);
  Partition p(f.graph.nodes.size());
  for (std::size_t v = 0; v < p.size(); ++v) p[v] = v < 7 ? 0 : (v < 22 ? 1 : 2);
  const ExtractionThresholds t;
  const auto modes = select_failure_modes(p, f.graph, f.data, t);
  REQUIRE(modes.size() == 1);
  CHECK(modes[0].size() == 30);
  CHECK(modes[0].accuracy == doctest::Approx(0.1));
  CHECK(modes[0].ground_truth_mode == 5.0);
  CHECK(modes[0].provenance == Provenance::automatic);
  CHECK(modes[0].ground_truth_counts.at(5) == 30);
  CHECK(modes[0].prediction_counts.at(8) == 27);

  ExtractionThresholds bad;
  bad.baseline_accuracy = 1.5;
  CHECK_THROWS_AS(select_failure_modes(p, f.graph, f.data, bad), ConfigError);
}

TEST_CASE("select: overlapping node members are counted once") {
  std::vector<double> truth(20, 1), pred(20, 2);
  auto f = fixture(truth, pred, 10);
  f.graph.nodes[1].members.push_back(0);
  f.graph.nodes[1].members.push_back(5);
  const auto modes = select_failure_modes(Partition{0, 0}, f.graph, f.data, ExtractionThresholds{});
  REQUIRE(modes.size() == 1);
  CHECK(modes[0].size() == 20);
}

TEST_CASE("property: selection is monotone in the thresholds") {
  gen::Rng rng(51);
  for (int t = 0; t < 50; ++t) {
    const std::size_t n = rng.index(20, 200);
    std::vector<double> truth(n), pred(n);
    for (std::size_t r = 0; r < n; ++r) {
      truth[r] = static_cast<double>(rng.index(0, 3));
      pred[r] = rng.coin(0.3) ? truth[r] : static_cast<double>(rng.index(0, 3));
    }
    auto f = fixture(truth, pred, rng.index(1, 10));
    Partition p(f.graph.nodes.size());
    for (auto& x : p) x = rng.index(0, 5);
    ExtractionThresholds a{rng.index(1, 30), rng.uniform(0.2, 1.0), 1.0};
    ExtractionThresholds b = a;
    b.min_size += rng.index(0, 10);
    b.baseline_accuracy -= rng.uniform(0.0, 0.2);
    const auto ma = select_failure_modes(p, f.graph, f.data, a);
    const auto mb = select_failure_modes(p, f.graph, f.data, b);
    CHECK(mb.size() <= ma.size());
    for (const auto& m : mb) {
      bool found = false;
      for (const auto& o : ma) found = found || o.members == m.members;
      CHECK(found);
    }
  }
}

TEST_CASE("manual_select") {
  std::vector<double> truth(30, 4), pred(30, 4);
  pred[0] = 1;
  auto f = fixture(truth, pred, 5);
  const std::vector<std::size_t> ids{2, 0, 2};
  const auto m = manual_select(f.graph, ids, f.data, ExtractionThresholds{});
  CHECK(m.provenance == Provenance::manual);
  CHECK(m.node_ids == std::vector<std::size_t>{0, 2});
  CHECK(m.size() == 10);
  CHECK(m.accuracy == doctest::Approx(0.9));
  REQUIRE(m.warnings.size() == 1);
  CHECK(m.warnings[0].find("size 10 < 15") != std::string::npos);

  CHECK_THROWS_WITH_AS(manual_select(f.graph, std::vector<std::size_t>{}, f.data, {}), "empty selection",
                       SelectionError);
  CHECK_THROWS_WITH_AS(manual_select(f.graph, std::vector<std::size_t>{1, 99}, f.data, {}), "unknown node id 99",
                       SelectionError);
}

TEST_CASE("regression accuracy uses the tolerance") {
  std::vector<double> truth{10, 20, 30, 40}, pred{10.5, 25, 30, 39};
  const auto f = fixture(truth, pred, 4, TaskKind::regression);
  ExtractionThresholds t;
  t.regression_tolerance = 1.0;
  const auto m = manual_select(f.graph, std::vector<std::size_t>{0}, f.data, t);
  CHECK(m.accuracy == doctest::Approx(0.75));
  CHECK(m.ground_truth_mode == doctest::Approx(25.0));
  CHECK(m.residual_mean == doctest::Approx(1.125));
}

TEST_CASE("ks_statistic examples") {
  CHECK(ks_statistic(std::vector<double>{1, 2, 3}, std::vector<double>{1, 2, 3}) == 0.0);
  CHECK(ks_statistic(std::vector<double>{0, 1}, std::vector<double>{5, 6}) == 1.0);
  CHECK(ks_statistic(std::vector<double>{1, 2, 3}, std::vector<double>{2, 3, 4}) == doctest::Approx(1.0 / 3.0));
  CHECK_THROWS_AS(ks_statistic(std::vector<double>{}, std::vector<double>{1}), ArgumentError);
}

TEST_CASE("property: ks_statistic equals the double-loop oracle and is symmetric") {
  gen::Rng rng(52);
  for (int t = 0; t < 300; ++t) {
    std::vector<double> a(rng.index(1, 50)), b(rng.index(1, 50));
    for (auto& v : a) v = rng.integer(-5, 5);
    for (auto& v : b) v = rng.integer(-5, 5);
    CHECK(ks_statistic(a, b) == oracle::ks_double_loop(a, b));
    CHECK(ks_statistic(a, b) == ks_statistic(b, a));
  }
}

TEST_CASE("rank_features") {
  gen::Rng rng(53);
  const std::size_t n = 200;
  Matrix x(n, 6);
  for (std::size_t r = 0; r < n; ++r) {
    for (std::size_t c = 0; c < 6; ++c) x(r, c) = rng.normal() + (c == 3 && r < 50 ? 10.0 : 0.0);
  }
  Meta meta;
  meta.ground_truth.assign(n, 0);
  meta.prediction.assign(n, 0);
  meta.error_measure.assign(n, 0);
  const Dataset d(std::move(x), {"a", "b", "c", "d", "e", "f"}, meta);
  std::vector<std::size_t> mode, rest;
  for (std::size_t r = 0; r < n; ++r) (r < 50 ? mode : rest).push_back(r);

  const auto rep = rank_features(mode, rest, d, 5);
  REQUIRE(rep.features.size() == 5);
  CHECK(rep.features[0].name == "d");
  CHECK(rep.features[0].statistic == doctest::Approx(1.0));
  for (std::size_t i = 1; i < 5; ++i) CHECK(rep.features[i - 1].statistic >= rep.features[i].statistic);

  const auto same = rank_features(mode, mode, d, 10, Execution::serial);
  CHECK(same.features.size() == 6);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(same.features[i].statistic == 0.0);
    CHECK(same.features[i].feature == i);
  }
  CHECK_THROWS_AS(rank_features(mode, rest, d, 0), ArgumentError);
}

TEST_CASE("extract_failure_modes on a stratified graph") {
  // Two cliques of nodes, a correct region and a wrong one, bridged once.
  std::vector<double> truth, pred;
  for (int i = 0; i < 60; ++i) truth.push_back(1), pred.push_back(1);
  for (int i = 0; i < 60; ++i) truth.push_back(5), pred.push_back(8);
  auto f = fixture(truth, pred, 10);
  for (std::size_t u = 0; u < 12; ++u) {
    for (std::size_t v = u + 1; v < 12; ++v) {
      if ((u < 6) == (v < 6) || (u == 5 && v == 6)) f.graph.edges.push_back({u, v, 1});
    }
  }
  std::vector<double> err;
  for (int i = 0; i < 120; ++i) err.push_back(i < 60 ? 0.9 : 0.1);
  const auto modes = extract_failure_modes(f.graph, f.data, make_filter_values("err", err), ExtractionThresholds{});
  REQUIRE(modes.size() == 1);
  CHECK(modes[0].members.front() == 60);
  CHECK(modes[0].size() == 60);
  CHECK(modes[0].ground_truth_mode == 5.0);
}
