#include <cmath>

#include "doctest.h"
#include "fifa/artifacts.hpp"
#include "fifa/correction.hpp"
#include "fifa/error.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace fifa;

namespace {

struct Labeled {
  Matrix x;
  std::vector<int> y;
};

// Two Gaussian clouds centered at -gap/2 and +gap/2 along every axis.
Labeled clouds(gen::Rng& rng, std::size_t per_class, std::size_t dims, double gap, double sd = 1.0) {
  Labeled out{Matrix(2 * per_class, dims), {}};
  for (std::size_t r = 0; r < 2 * per_class; ++r) {
    const int label = r < per_class ? 0 : 1;
    for (std::size_t k = 0; k < dims; ++k) out.x(r, k) = rng.normal((label ? 0.5 : -0.5) * gap, sd);
    out.y.push_back(label);
  }
  return out;
}

double accuracy(const Classifier& c, const Labeled& data) {
  std::size_t hits = 0;
  for (std::size_t r = 0; r < data.x.rows(); ++r) hits += (c.fires(data.x.row(r)) ? 1 : 0) == data.y[r] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(data.x.rows());
}

double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff = std::max(diff, std::abs(a[i] - b[i]));
    scale = std::max(scale, std::abs(b[i]));
  }
  return diff / std::max(scale, 1e-8);
}

// Ensemble over one feature with hand-set linear members.
CorrectionEnsemble hand_ensemble(std::vector<std::pair<LinearModel, CorrectionAction>> members,
                                 TaskKind task = TaskKind::classification) {
  CorrectionEnsemble e;
  e.task = task;
  e.feature_names = {"x"};
  e.center = {0.0};
  e.scale = {1.0};
  std::size_t id = 0;
  for (auto& [model, action] : members) e.members.push_back({id++, Classifier(model), action, 10});
  return e;
}

LinearModel threshold(double w, double b) {
  LinearModel m;
  m.weights = {w};
  m.intercept = b;
  return m;
}

}  // namespace

TEST_CASE("linear_objective gradients match central differences") {
  gen::Rng rng(61);
  for (auto kind : {ClassifierKind::logistic_regression, ClassifierKind::linear_svm}) {
    for (int t = 0; t < 10; ++t) {
      const auto data = clouds(rng, rng.index(3, 20), rng.index(1, 5), 1.0);
      std::vector<double> theta(data.x.cols() + 1);
      for (auto& v : theta) v = rng.normal(0, 0.5);
      std::vector<double> w(data.x.rows());
      for (auto& v : w) v = rng.uniform(0.5, 2.0);
      const double C = rng.uniform(0.1, 10);
      const auto f = [&](const std::vector<double>& th) { return linear_objective(kind, data.x, data.y, th, C, w).loss; };
      const auto got = linear_objective(kind, data.x, data.y, theta, C, w).gradient;
      CHECK(relative_error(got, oracle::numeric_gradient(f, theta)) <= 1e-5);
    }
  }
  const auto data = clouds(rng, 3, 2, 1.0);
  CHECK_THROWS_AS(linear_objective(ClassifierKind::gaussian_nb, data.x, data.y, std::vector<double>(3), 1.0),
                  ArgumentError);
  CHECK_THROWS_AS(linear_objective(ClassifierKind::linear_svm, data.x, data.y, std::vector<double>(2), 1.0),
                  ArgumentError);
}

TEST_CASE("every classifier separates well-separated clouds") {
  gen::Rng rng(62);
  const auto data = clouds(rng, 100, 3, 10.0);
  for (auto kind : {ClassifierKind::logistic_regression, ClassifierKind::linear_svm, ClassifierKind::gaussian_nb}) {
    ClassifierSpec spec;
    spec.kind = kind;
    const auto c = fit_classifier(data.x, data.y, spec);
    CHECK(c.kind() == kind);
    CHECK(c.dimension() == 3);
    CHECK(accuracy(c, data) == 1.0);
  }
}

TEST_CASE("fit_classifier rejects a single class") {
  const Matrix x(3, 1, std::vector<double>{1, 2, 3});
  const std::vector<int> y{1, 1, 1};
  CHECK_THROWS_AS(fit_classifier(x, y, ClassifierSpec{}), DegenerateTrainingError);
}

TEST_CASE("gaussian_nb: boundary of symmetric unit clouds sits at zero") {
  gen::Rng rng(63);
  const auto data = clouds(rng, 2000, 1, 4.0);
  const auto nb = fit_gaussian_nb(data.x, data.y);
  CHECK(nb.prior[0] == doctest::Approx(0.5));
  CHECK(nb.mean[1][0] == doctest::Approx(2.0).epsilon(0.05));
  double lo = -2.0, hi = 2.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    const std::vector<double> p{mid};
    (nb.posterior(p)[1] > 0.5 ? hi : lo) = mid;
  }
  CHECK(std::abs(lo) <= 0.1);
  const std::vector<double> far{-2.0};
  const auto post = nb.posterior(far);
  CHECK(post[0] + post[1] == doctest::Approx(1.0));
  CHECK(post[0] > 0.99);
}

TEST_CASE("fit_linear: loss never increases and converges") {
  gen::Rng rng(64);
  for (auto kind : {ClassifierKind::logistic_regression, ClassifierKind::linear_svm}) {
    const auto data = clouds(rng, 60, 4, 1.5);
    ClassifierSpec spec;
    spec.kind = kind;
    std::vector<double> trace;
    const auto m = fit_linear(data.x, data.y, spec, 1.0, &trace);
    REQUIRE(trace.size() >= 2);
    for (std::size_t i = 1; i < trace.size(); ++i) CHECK(trace[i] <= trace[i - 1] + 1e-12);
    CHECK(m.converged);
    CHECK(m.gradient_norm <= spec.tolerance);
    CHECK(m.weights.size() == 4);
  }
}

TEST_CASE("select_C picks from the grid and ties go to the smaller value") {
  gen::Rng rng(65);
  const auto data = clouds(rng, 40, 2, 12.0);
  ClassifierSpec spec;
  spec.c_grid = {0.1, 1.0, 10.0};
  // Separable: every grid value scores 1.0, so the smallest wins.
  CHECK(select_C(data.x, data.y, spec, 5) == 0.1);
  CHECK(cross_validated_accuracy(data.x, data.y, spec, 1.0, 5) == 1.0);

  const auto noisy = clouds(rng, 60, 3, 1.0);
  const double c = select_C(noisy.x, noisy.y, spec, 5);
  CHECK((c == 0.1 || c == 1.0 || c == 10.0));
  double best = 0.0;
  for (double v : spec.c_grid) best = std::max(best, cross_validated_accuracy(noisy.x, noisy.y, spec, v, 5));
  CHECK(cross_validated_accuracy(noisy.x, noisy.y, spec, c, 5) == best);

  const Matrix tiny(4, 1, std::vector<double>{0, 1, 2, 3});
  const std::vector<int> y{0, 0, 0, 1};
  CHECK_THROWS_AS(select_C(tiny, y, spec, 2), ArgumentError);
}

TEST_CASE("correct: label override") {
  const auto e = hand_ensemble({{threshold(1.0, -1.0), {ActionKind::label_override, 5}}});
  const std::vector<double> inside{3.0}, outside{-3.0};
  const auto hit = correct(e, inside, 8.0);
  CHECK(hit.value == 5.0);
  CHECK(hit.applied_mode == 0u);
  REQUIRE(hit.fired.size() == 1);
  CHECK(hit.fired[0].score == doctest::Approx(2.0));

  const auto miss = correct(e, outside, 8.0);
  CHECK(miss.value == 8.0);
  CHECK_FALSE(miss.applied_mode.has_value());
  CHECK(miss.fired.empty());

  const std::vector<double> wrong{1.0, 2.0};
  CHECK_THROWS_AS(correct(e, wrong, 8.0), InputError);
}

TEST_CASE("correct: regression offset") {
  const auto e = hand_ensemble({{threshold(1.0, 0.0), {ActionKind::offset, 100.0}}}, TaskKind::regression);
  const std::vector<double> x{1.0};
  CHECK(correct(e, x, 1600.0).value == 1500.0);
}

TEST_CASE("correct: the highest score wins, ties go to the lowest mode id") {
  const auto e = hand_ensemble({{threshold(1.0, 0.0), {ActionKind::label_override, 1}},
                                {threshold(2.0, 0.0), {ActionKind::label_override, 2}},
                                {threshold(2.0, 0.0), {ActionKind::label_override, 3}}});
  const std::vector<double> x{1.0};
  const auto r = correct(e, x, 0.0);
  CHECK(r.fired.size() == 3);
  CHECK(r.applied_mode == 1u);
  CHECK(r.value == 2.0);
}

TEST_CASE("train_ensemble, bias and evaluation on blobs") {
  gen::Rng rng(66);
  const auto d = gen::blobs(rng, 300, 3, 2, 8.0);
  // Mode: every row of blob 1.
  FailureMode mode;
  mode.id = 4;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (d.meta().ground_truth[r] == 1.0) mode.members.push_back(r);
  }
  mode.ground_truth_mode = 1.0;
  FailureMode empty_mode;
  empty_mode.id = 9;
  const std::vector<FailureMode> modes{mode, empty_mode};
  ClassifierSpec spec;
  const auto e = train_ensemble(modes, d, spec);
  REQUIRE(e.members.size() == 1);
  CHECK(e.members[0].mode_id == 4);
  CHECK(e.members[0].training_size == mode.size());
  REQUIRE(e.warnings.size() == 1);
  CHECK(e.warnings[0].find("failure mode 9") != std::string::npos);

  const auto bias = evaluate_bias(e, d);
  REQUIRE(bias.size() == 1);
  CHECK(bias[0].captured == mode.size());
  CHECK(*bias[0].purity == 1.0);
  CHECK(bias[0].clean_fraction.has_value());

  const auto ev = evaluate_ensemble(e, d);
  CHECK(ev.rows == d.rows());
  CHECK(ev.corrected_count == mode.size());
  CHECK(ev.corrected_accuracy >= ev.base_accuracy);
  CHECK(ev.captures.at(4) == mode.size());
  CHECK_FALSE(ev.base_rmse.has_value());

  SUBCASE("JSON round trip preserves every decision") {
    const auto back = ensemble_from_json(to_json(e));
    CHECK(back.members.size() == 1);
    CHECK(back.feature_names == e.feature_names);
    for (std::size_t r = 0; r < d.rows(); ++r) {
      const auto a = correct(e, d.features().row(r), d.meta().prediction[r]);
      const auto b = correct(back, d.features().row(r), d.meta().prediction[r]);
      CHECK(a.value == b.value);
    }
  }
}

TEST_CASE("gaussian_nb ensemble survives a JSON round trip") {
  gen::Rng rng(67);
  const auto d = gen::blobs(rng, 120, 2, 2, 8.0);
  FailureMode mode;
  for (std::size_t r = 0; r < d.rows(); ++r) {
    if (d.meta().ground_truth[r] == 0.0) mode.members.push_back(r);
  }
  ClassifierSpec spec;
  spec.kind = ClassifierKind::gaussian_nb;
  const auto e = train_ensemble(std::vector<FailureMode>{mode}, d, spec);
  const auto back = ensemble_from_json(to_json(e));
  REQUIRE(back.members.size() == 1);
  CHECK(back.members[0].classifier.kind() == ClassifierKind::gaussian_nb);
  for (std::size_t r = 0; r < d.rows(); ++r) {
    CHECK(back.members[0].classifier.score(back.transform(d.features().row(r))) ==
          doctest::Approx(e.members[0].classifier.score(e.transform(d.features().row(r)))));
  }
}
