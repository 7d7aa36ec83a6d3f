#include <algorithm>
#include <set>

#include "doctest.h"
#include "fifa/error.hpp"
#include "fifa/pipeline.hpp"
#include "fifa/planted.hpp"
#include "generators.hpp"
#include "workdir.hpp"

using namespace fifa;
namespace fs = std::filesystem;

TEST_CASE("config: defaults and canonical form") {
  work::TempDir dir("cfg");
  const auto cfg = parse_config(work::small_config(dir.path()), dir.path());
  CHECK(cfg.metric == MetricKind::variance_normalized_euclidean);
  CHECK(cfg.bins == 10);
  CHECK(cfg.extraction.min_size == 15);
  CHECK(cfg.extraction.baseline_accuracy == doctest::Approx(0.9905));
  CHECK(cfg.classifier.kind == ClassifierKind::linear_svm);
  CHECK(cfg.output == dir.path() / "out");
  const auto canon = canonical_config(cfg);
  CHECK_FALSE(canon.contains("output"));
  CHECK(canonical_config(parse_config(work::small_config(dir.path()), dir.path())) == canon);
}

TEST_CASE("config: errors") {
  work::TempDir dir("cfgerr");
  auto base = work::small_config(dir.path());

  auto unknown = base;
  unknown["colour"] = "blue";
  CHECK_THROWS_AS(parse_config(unknown, dir.path()), ConfigError);

  auto mismatch = base;
  mismatch["covers"].erase(1);
  CHECK_THROWS_AS(parse_config(mismatch, dir.path()), ConfigError);

  auto no_path = base;
  no_path["dataset"].erase("path");
  CHECK_THROWS_AS(parse_config(no_path, dir.path()), ConfigError);

  auto bad_kind = base;
  bad_kind["filters"][0]["kind"] = "tsne";
  CHECK_THROWS_AS(parse_config(bad_kind, dir.path()), ConfigError);

  auto bad_overlap = base;
  bad_overlap["covers"][0]["overlap"] = 1.2;
  CHECK_THROWS_AS(Pipeline(parse_config(bad_overlap, dir.path())).run(), Error);

  work::write_text(dir / "broken.json", "{ not json");
  CHECK_THROWS_AS(load_config(dir / "broken.json"), ConfigError);
}

TEST_CASE("kfold_split: sizes and disjointness") {
  const auto splits = kfold_split(20000, 5, 3);
  REQUIRE(splits.size() == 5);
  std::vector<int> seen(20000, 0);
  for (const auto& s : splits) {
    CHECK(s.train.size() == 16000);
    CHECK(s.test.size() == 4000);
    CHECK(std::is_sorted(s.test.begin(), s.test.end()));
    std::vector<std::size_t> both;
    std::set_intersection(s.train.begin(), s.train.end(), s.test.begin(), s.test.end(), std::back_inserter(both));
    CHECK(both.empty());
    for (auto r : s.test) seen[r]++;
  }
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
  CHECK(kfold_split(20000, 5, 3)[2].test == splits[2].test);
}

TEST_CASE("property: kfold sizes differ by at most one") {
  gen::Rng rng(71);
  for (int t = 0; t < 100; ++t) {
    const std::size_t n = rng.index(2, 500);
    const std::size_t k = rng.index(2, n);
    const auto s = kfold_split(n, k, rng.engine()());
    std::size_t lo = n, hi = 0, total = 0;
    for (const auto& f : s) {
      lo = std::min(lo, f.test.size());
      hi = std::max(hi, f.test.size());
      total += f.test.size();
      CHECK(f.train.size() + f.test.size() == n);
    }
    CHECK(hi - lo <= 1);
    CHECK(total == n);
  }
}

TEST_CASE("kfold_split: leave-one-out and errors") {
  const auto loo = kfold_split(7, 7, 1);
  for (const auto& s : loo) CHECK(s.test.size() == 1);
  CHECK_THROWS_AS(kfold_split(5, 1, 1), ArgumentError);
  CHECK_THROWS_AS(kfold_split(5, 6, 1), ArgumentError);
}

TEST_CASE("planted generator") {
  PlantedSpec spec;
  const auto d = generate_planted(spec);
  CHECK(d.rows() == 1000);
  CHECK(d.cols() == 10);
  std::size_t wrong = 0, clean = 0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    const bool inlier = d.meta().flags.at("clean")[r] == 1;
    clean += inlier ? 1 : 0;
    if (!d.is_correct(r, 1.0)) {
      ++wrong;
      CHECK_FALSE(inlier);
      CHECK(d.meta().ground_truth[r] == kPlantedTrueLabel);
      CHECK(d.meta().prediction[r] == kPlantedWrongLabel);
    }
  }
  CHECK(wrong == 200);
  CHECK(clean == 800);

  spec.outliers = 0;
  const auto none = generate_planted(spec);
  for (std::size_t r = 0; r < none.rows(); ++r) CHECK(none.is_correct(r, 1.0));

  spec.inliers = 0;
  CHECK_THROWS_AS(generate_planted(spec), ArgumentError);
}

TEST_CASE("planted generator: outliers are their own nearest neighbours") {
  const auto d = generate_planted(PlantedSpec{});
  const auto& x = d.features();
  const auto& flag = d.meta().flags.at("clean");
  std::size_t outliers = 0, pure = 0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (flag[r]) continue;
    ++outliers;
    double best = 1e300;
    std::size_t arg = r;
    for (std::size_t s = 0; s < d.rows(); ++s) {
      if (s == r) continue;
      double dist = 0.0;
      for (std::size_t c = 0; c < x.cols(); ++c) dist += (x(r, c) - x(s, c)) * (x(r, c) - x(s, c));
      if (dist < best) best = dist, arg = s;
    }
    pure += flag[arg] ? 0 : 1;
  }
  CHECK(static_cast<double>(pure) / static_cast<double>(outliers) >= 0.95);
}

TEST_CASE("planted generator: regression residual") {
  PlantedSpec spec;
  spec.task = TaskKind::regression;
  const auto d = generate_planted(spec);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (d.meta().flags.at("clean")[r]) continue;
    sum += d.residual(r);
    ++n;
  }
  CHECK(std::abs(sum / static_cast<double>(n) - kPlantedOffset) <= 2.0);
}

TEST_CASE("pipeline: a full run writes stamped artifacts") {
  work::TempDir dir("run");
  Pipeline p(load_config(work::write_config(dir.path(), work::small_config(dir.path()))));
  const auto report = p.run();
  for (const char* name : {"graph.json", "modes.json", "ensemble.json", "evaluation.json", "diagnostics.json",
                           "report.json", "timing.json"}) {
    REQUIRE(fs::exists(dir / ("out/" + std::string(name))));
    CHECK(read_json(dir / ("out/" + std::string(name))).at("config_hash") == p.config_hash());
  }
  CHECK_FALSE(fs::exists(dir / "out/stale.json"));
  const auto& run = report.document.at("runs").at(0);
  CHECK(run.at("graph").at("coverage").get<double>() == 1.0);
  CHECK(run.at("modes").size() >= 1);
  CHECK(run.at("evaluation").at("corrected_accuracy").get<double>() >
        run.at("evaluation").at("base_accuracy").get<double>());
  std::set<std::string> stages;
  for (const auto& t : report.timing) stages.insert(t.stage);
  CHECK(stages == std::set<std::string>{"build_graph", "extract", "train", "evaluate", "diagnose", "report"});
}

TEST_CASE("pipeline: two runs produce identical artifacts") {
  work::TempDir dir("determinism");
  auto cfg = work::small_config(dir.path());
  Pipeline(load_config(work::write_config(dir.path(), cfg))).run();
  cfg["output"] = "out2";
  Pipeline(load_config(work::write_config(dir.path(), cfg))).run();
  for (const char* name : {"graph.json", "modes.json", "ensemble.json", "evaluation.json", "diagnostics.json",
                           "report.json"}) {
    const auto a = read_json(dir / ("out/" + std::string(name)));
    const auto b = read_json(dir / ("out2/" + std::string(name)));
    CHECK_MESSAGE(a == b, name);
  }
}

TEST_CASE("pipeline: k-fold runs one workspace per fold") {
  work::TempDir dir("kfold");
  Pipeline p(load_config(work::write_config(dir.path(), work::small_config(dir.path(), 3))));
  REQUIRE(p.workspaces().size() == 3);
  const auto report = p.run();
  for (int f = 1; f <= 3; ++f) CHECK(fs::exists(dir / ("out/fold-" + std::to_string(f) + "/evaluation.json")));
  CHECK(report.document.at("summary").at("runs") == 3);
  CHECK(p.workspace_for(dir / "out/fold-2").fold == 2);
  CHECK_THROWS_AS(p.workspace_for(dir / "elsewhere"), InputError);
}

TEST_CASE("pipeline: warnings for a missing error filter and no test set") {
  work::TempDir dir("warn");
  auto cfg = work::small_config(dir.path());
  cfg["filters"].erase(1);
  cfg["covers"].erase(1);
  cfg["dataset"].erase("test_path");
  Pipeline p(parse_config(cfg, dir.path()));
  p.build_graph();
  const auto r = p.report();
  const auto& w = r.warnings;
  CHECK(std::any_of(w.begin(), w.end(), [](const std::string& s) { return s.find("no prediction-error filter") != std::string::npos; }));
  CHECK(std::any_of(w.begin(), w.end(), [](const std::string& s) { return s.find("uses the training rows") != std::string::npos; }));
  CHECK(p.workspaces()[0].test_is_train);
}

TEST_CASE("pipeline: a failing stage leaves stale.json") {
  work::TempDir dir("stale");
  auto cfg = work::small_config(dir.path());
  cfg["clustering"] = {{"max_cell_size", 5}};
  Pipeline p(parse_config(cfg, dir.path()));
  CHECK_THROWS_AS(p.run(), StageError);
  REQUIRE(fs::exists(dir / "out/stale.json"));
  CHECK(read_json(dir / "out/stale.json").at("stage") == "build_graph");
  CHECK_THROWS_AS(p.extract(), StageError);
}

TEST_CASE("pipeline: downstream stages refuse artifacts from another config") {
  work::TempDir dir("hash");
  auto cfg = work::small_config(dir.path());
  Pipeline first(parse_config(cfg, dir.path()));
  first.build_graph();
  cfg["extraction"] = {{"min_size", 20}};
  Pipeline second(parse_config(cfg, dir.path()));
  CHECK(second.config_hash() != first.config_hash());
  try {
    second.extract();
    FAIL("extract accepted a stale graph");
  } catch (const StageError& e) {
    CHECK(std::string(e.what()).find("config hash") != std::string::npos);
  }
}

TEST_CASE("config hash covers the input bytes") {
  work::TempDir dir("bytes");
  const auto cfg = work::small_config(dir.path());
  const auto a = Pipeline(parse_config(cfg, dir.path())).config_hash();
  PlantedSpec spec;
  spec.inliers = 240;
  spec.outliers = 60;
  spec.dims = 4;
  spec.seed = 99;
  work::write_csv(dir / "train.csv", generate_planted(spec));
  CHECK(Pipeline(parse_config(cfg, dir.path())).config_hash() != a);
}

TEST_CASE("external filter values") {
  work::TempDir dir("external");
  work::write_text(dir / "v.csv", "score\n1\n2.5\n-3\n");
  CHECK(load_filter_values(dir / "v.csv") == std::vector<double>{1, 2.5, -3});
  auto cfg = work::small_config(dir.path());
  cfg["filters"][0] = {{"kind", "external"}, {"name", "score"}, {"path", "v.csv"}};
  CHECK_THROWS_AS(Pipeline(parse_config(cfg, dir.path())), ConfigError);
}
