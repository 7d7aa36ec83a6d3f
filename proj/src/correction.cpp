#include "fifa/correction.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "fifa/error.hpp"
#include "fifa/parallel.hpp"

namespace fifa {

std::string_view to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::logistic_regression: return "logistic_regression";
    case ClassifierKind::linear_svm: return "linear_svm";
    case ClassifierKind::gaussian_nb: return "gaussian_nb";
  }
  return "?";
}

ClassifierKind parse_classifier_kind(std::string_view text) {
  if (text == "logistic_regression" || text == "lr") return ClassifierKind::logistic_regression;
  if (text == "linear_svm" || text == "svm") return ClassifierKind::linear_svm;
  if (text == "gaussian_nb" || text == "gnb") return ClassifierKind::gaussian_nb;
  throw ConfigError("unknown classifier kind '" + std::string(text) + "'");
}

double LinearModel::decision(std::span<const double> x) const {
  double z = intercept;
  for (std::size_t k = 0; k < weights.size(); ++k) z += weights[k] * x[k];
  return z;
}

std::array<double, 2> GaussianNB::posterior(std::span<const double> x) const {
  std::array<double, 2> logp{};
  for (int c = 0; c < 2; ++c) {
    double lp = std::log(prior[c]);
    for (std::size_t k = 0; k < x.size(); ++k) {
      const double v = variance[c][k];
      const double d = x[k] - mean[c][k];
      lp += -0.5 * std::log(2.0 * std::numbers::pi * v) - d * d / (2.0 * v);
    }
    logp[c] = lp;
  }
  const double top = std::max(logp[0], logp[1]);
  const double e0 = std::exp(logp[0] - top);
  const double e1 = std::exp(logp[1] - top);
  return {e0 / (e0 + e1), e1 / (e0 + e1)};
}

ClassifierKind Classifier::kind() const {
  if (const auto* lm = std::get_if<LinearModel>(&model_)) return lm->kind;
  return ClassifierKind::gaussian_nb;
}

std::size_t Classifier::dimension() const {
  if (const auto* lm = std::get_if<LinearModel>(&model_)) return lm->weights.size();
  return std::get<GaussianNB>(model_).mean[0].size();
}

double Classifier::score(std::span<const double> x) const {
  if (const auto* lm = std::get_if<LinearModel>(&model_)) return lm->decision(x);
  return std::get<GaussianNB>(model_).posterior(x)[1];
}

bool Classifier::fires(std::span<const double> x) const {
  const double s = score(x);
  return kind() == ClassifierKind::gaussian_nb ? s > 0.5 : s > 0.0;
}

// ---------------------------------------------------------------------------
// Linear models

namespace {

void check_training_data(const Matrix& x, std::span<const int> y) {
  if (x.rows() != y.size()) throw ArgumentError("feature rows and labels differ in length");
  bool pos = false;
  bool neg = false;
  for (int v : y) {
    if (v != 0 && v != 1) throw ArgumentError("labels must be 0 or 1");
    pos = pos || v == 1;
    neg = neg || v == 0;
  }
  if (!pos || !neg) throw DegenerateTrainingError("training labels contain a single class");
  for (double v : x.data()) {
    if (!std::isfinite(v)) throw ArgumentError("training features must be finite");
  }
}

std::vector<double> balanced_weights(std::span<const int> y) {
  const double n = static_cast<double>(y.size());
  const double n_pos = static_cast<double>(std::count(y.begin(), y.end(), 1));
  const double n_neg = n - n_pos;
  std::vector<double> w(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) w[i] = y[i] == 1 ? n / (2.0 * n_pos) : n / (2.0 * n_neg);
  return w;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double e : v) s += e * e;
  return std::sqrt(s);
}

}  // namespace

LossAndGradient linear_objective(ClassifierKind kind, const Matrix& x, std::span<const int> y,
                                 std::span<const double> theta, double C, std::span<const double> sample_weights) {
  if (kind == ClassifierKind::gaussian_nb) throw ArgumentError("linear_objective: not a linear classifier");
  const std::size_t d = x.cols();
  const std::size_t n = x.rows();
  if (theta.size() != d + 1) throw ArgumentError("theta must hold d weights plus an intercept");
  LossAndGradient out;
  out.gradient.assign(d + 1, 0.0);
  const double b = theta[d];
  for (std::size_t i = 0; i < n; ++i) {
    const auto row = x.row(i);
    double z = b;
    for (std::size_t k = 0; k < d; ++k) z += theta[k] * row[k];
    const double s = y[i] == 1 ? 1.0 : -1.0;
    const double alpha = sample_weights.empty() ? 1.0 : sample_weights[i];
    const double t = s * z;
    double loss_i;
    double dz;  // d loss_i / d z
    if (kind == ClassifierKind::logistic_regression) {
      // log(1 + exp(-t)) evaluated without overflow.
      loss_i = t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
      const double sig = t > 0 ? std::exp(-t) / (1.0 + std::exp(-t)) : 1.0 / (1.0 + std::exp(t));
      dz = -s * sig;
    } else {
      const double margin = std::max(0.0, 1.0 - t);
      loss_i = margin * margin;
      dz = -2.0 * s * margin;
    }
    out.loss += alpha * loss_i;
    for (std::size_t k = 0; k < d; ++k) out.gradient[k] += alpha * dz * row[k];
    out.gradient[d] += alpha * dz;
  }
  const double inv_n = 1.0 / static_cast<double>(n);
  out.loss *= inv_n;
  for (double& g : out.gradient) g *= inv_n;
  double penalty = 0.0;
  for (std::size_t k = 0; k < d; ++k) {
    penalty += theta[k] * theta[k];
    out.gradient[k] += theta[k] / C;
  }
  out.loss += penalty / (2.0 * C);
  return out;
}

LinearModel fit_linear(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec, double C,
                       std::vector<double>* loss_trace) {
  check_training_data(x, y);
  if (!(C > 0.0)) throw ConfigError("regularization C must be positive");
  const std::vector<double> weights = spec.balance_classes ? balanced_weights(y) : std::vector<double>{};
  const std::size_t dim = x.cols() + 1;

  std::vector<double> theta(dim, 0.0);
  auto current = linear_objective(spec.kind, x, y, theta, C, weights);
  std::vector<double> prev_theta;
  std::vector<double> prev_grad;
  double step = 1.0;
  LinearModel model;
  model.kind = spec.kind;
  model.C = C;

  std::vector<double> trial(dim);
  std::size_t it = 0;
  for (; it < spec.max_iterations; ++it) {
    if (loss_trace) loss_trace->push_back(current.loss);
    const double gnorm = norm(current.gradient);
    if (gnorm <= spec.tolerance) {
      model.converged = true;
      break;
    }
    if (!prev_theta.empty()) {
      double ss = 0.0;
      double sy = 0.0;
      for (std::size_t k = 0; k < dim; ++k) {
        const double s = theta[k] - prev_theta[k];
        const double yk = current.gradient[k] - prev_grad[k];
        ss += s * s;
        sy += s * yk;
      }
      step = sy > 0.0 ? ss / sy : step * 2.0;
    }
    step = std::clamp(step, 1e-12, 1e12);

    // Armijo backtracking keeps the objective monotone.
    const double g2 = gnorm * gnorm;
    LossAndGradient next;
    bool accepted = false;
    for (int halvings = 0; halvings < 80; ++halvings) {
      for (std::size_t k = 0; k < dim; ++k) trial[k] = theta[k] - step * current.gradient[k];
      next = linear_objective(spec.kind, x, y, trial, C, weights);
      if (next.loss <= current.loss - 1e-4 * step * g2) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;  // no descent possible at machine precision
    prev_theta = theta;
    prev_grad = current.gradient;
    theta = trial;
    current = std::move(next);
  }
  if (loss_trace && !model.converged) loss_trace->push_back(current.loss);
  model.iterations = it;
  model.gradient_norm = norm(current.gradient);
  model.converged = model.converged || model.gradient_norm <= spec.tolerance;
  model.weights.assign(theta.begin(), theta.end() - 1);
  model.intercept = theta.back();
  return model;
}

GaussianNB fit_gaussian_nb(const Matrix& x, std::span<const int> y) {
  check_training_data(x, y);
  constexpr double kVarianceFloor = 1e-9;
  const std::size_t d = x.cols();
  GaussianNB nb;
  std::array<double, 2> count{};
  for (int c = 0; c < 2; ++c) {
    nb.mean[c].assign(d, 0.0);
    nb.variance[c].assign(d, 0.0);
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const int c = y[i];
    count[c] += 1.0;
    for (std::size_t k = 0; k < d; ++k) nb.mean[c][k] += x(i, k);
  }
  for (int c = 0; c < 2; ++c) {
    for (double& m : nb.mean[c]) m /= count[c];
  }
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const int c = y[i];
    for (std::size_t k = 0; k < d; ++k) {
      const double dev = x(i, k) - nb.mean[c][k];
      nb.variance[c][k] += dev * dev;
    }
  }
  for (int c = 0; c < 2; ++c) {
    for (double& v : nb.variance[c]) v = std::max(v / count[c], kVarianceFloor);
    nb.prior[c] = count[c] / static_cast<double>(x.rows());
  }
  return nb;
}

Classifier fit_classifier(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec) {
  if (spec.kind == ClassifierKind::gaussian_nb) return Classifier(fit_gaussian_nb(x, y));
  return Classifier(fit_linear(x, y, spec, spec.C));
}

namespace {

/// Stratified fold index per row: each class is dealt round-robin in row order.
std::vector<std::size_t> stratified_folds(std::span<const int> y, std::size_t folds) {
  std::vector<std::size_t> fold(y.size());
  std::array<std::size_t, 2> next{};
  for (std::size_t i = 0; i < y.size(); ++i) fold[i] = next[y[i]]++ % folds;
  return fold;
}

double fold_accuracy(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec, double C,
                     const std::vector<std::size_t>& fold, std::size_t f) {
  std::vector<std::size_t> train_rows;
  std::vector<std::size_t> test_rows;
  for (std::size_t i = 0; i < y.size(); ++i) (fold[i] == f ? test_rows : train_rows).push_back(i);
  std::vector<int> train_y;
  for (std::size_t i : train_rows) train_y.push_back(y[i]);
  ClassifierSpec local = spec;
  local.C = C;
  const Classifier clf = fit_classifier(x.select_rows(train_rows), train_y, local);
  std::size_t hits = 0;
  for (std::size_t i : test_rows) hits += (clf.fires(x.row(i)) ? 1 : 0) == y[i] ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(test_rows.size());
}

void check_cv_feasible(std::span<const int> y, std::size_t folds) {
  if (folds < 2) throw ArgumentError("cross-validation needs at least 2 folds");
  const auto pos = static_cast<std::size_t>(std::count(y.begin(), y.end(), 1));
  const std::size_t neg = y.size() - pos;
  if (pos < folds || neg < folds) {
    throw ArgumentError("stratified " + std::to_string(folds) + "-fold split infeasible with class sizes " +
                        std::to_string(neg) + "/" + std::to_string(pos));
  }
}

}  // namespace

double cross_validated_accuracy(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec, double C,
                                std::size_t folds) {
  check_cv_feasible(y, folds);
  const auto fold = stratified_folds(y, folds);
  double sum = 0.0;
  for (std::size_t f = 0; f < folds; ++f) sum += fold_accuracy(x, y, spec, C, fold, f);
  return sum / static_cast<double>(folds);
}

double select_C(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec, std::size_t folds) {
  std::vector<double> grid = spec.c_grid.empty() ? std::vector<double>{spec.C} : spec.c_grid;
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  for (double c : grid) {
    if (!(c > 0.0)) throw ConfigError("C grid values must be positive");
  }
  if (grid.size() == 1 || spec.kind == ClassifierKind::gaussian_nb) return grid.front();
  check_cv_feasible(y, folds);
  const auto fold = stratified_folds(y, folds);

  // Every (C, fold) fit is independent; results land in fixed slots.
  const std::size_t tasks = grid.size() * folds;
  std::vector<double> acc(tasks, 0.0);
  parallel_for(tasks, Execution::parallel, [&](std::size_t idx) {
    acc[idx] = fold_accuracy(x, y, spec, grid[idx / folds], fold, idx % folds);
  });
  std::size_t best = 0;
  double best_acc = -1.0;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    double sum = 0.0;
    for (std::size_t f = 0; f < folds; ++f) sum += acc[g * folds + f];
    const double mean = sum / static_cast<double>(folds);
    if (mean > best_acc) {
      best_acc = mean;
      best = g;
    }
  }
  return grid[best];
}

// ---------------------------------------------------------------------------
// Ensemble

std::vector<double> CorrectionEnsemble::transform(std::span<const double> features) const {
  std::vector<double> out(features.begin(), features.end());
  if (kind == ClassifierKind::gaussian_nb) return out;
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = (out[k] - center[k]) / scale[k];
  return out;
}

CorrectionEnsemble train_ensemble(std::span<const FailureMode> modes, const Dataset& train,
                                  const ClassifierSpec& spec) {
  constexpr double kScaleFloor = 1e-9;
  CorrectionEnsemble ens;
  ens.task = train.task();
  ens.kind = spec.kind;
  ens.feature_names = train.feature_names();
  const std::size_t d = train.cols();
  const std::size_t n = train.rows();
  ens.center.assign(d, 0.0);
  ens.scale.assign(d, 1.0);

  Matrix x = train.features();
  if (spec.kind != ClassifierKind::gaussian_nb && n > 0) {
    for (std::size_t k = 0; k < d; ++k) {
      double mean = 0.0;
      for (std::size_t r = 0; r < n; ++r) mean += x(r, k);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (std::size_t r = 0; r < n; ++r) var += (x(r, k) - mean) * (x(r, k) - mean);
      ens.center[k] = mean;
      ens.scale[k] = std::max(std::sqrt(var / static_cast<double>(n)), kScaleFloor);
      for (std::size_t r = 0; r < n; ++r) x(r, k) = (x(r, k) - mean) / ens.scale[k];
    }
  }

  struct Job {
    const FailureMode* mode;
    std::vector<int> y;
  };
  std::vector<Job> jobs;
  for (const auto& mode : modes) {
    std::vector<int> y(n, 0);
    std::size_t positives = 0;
    for (std::size_t r : mode.members) {
      if (r >= n) throw ArgumentError("failure mode " + std::to_string(mode.id) + " names row outside training set");
      positives += y[r] == 0 ? 1 : 0;
      y[r] = 1;
    }
    if (positives == 0 || positives == n) {
      ens.warnings.push_back("failure mode " + std::to_string(mode.id) + " skipped: degenerate one-vs-rest labels");
      continue;
    }
    jobs.push_back({&mode, std::move(y)});
  }

  std::vector<EnsembleMember> trained(jobs.size());
  std::vector<std::string> notes(jobs.size());
  parallel_for(jobs.size(), Execution::parallel, [&](std::size_t idx) {
    const Job& job = jobs[idx];
    ClassifierSpec local = spec;
    if (spec.kind != ClassifierKind::gaussian_nb && spec.c_grid.size() > 1) {
      try {
        local.C = select_C(x, job.y, spec, spec.cv_folds);
      } catch (const ArgumentError& e) {
        notes[idx] = "failure mode " + std::to_string(job.mode->id) + ": C selection skipped (" + e.what() +
                     "), using C=" + std::to_string(spec.C);
      }
    }
    EnsembleMember member;
    member.mode_id = job.mode->id;
    member.training_size = job.mode->members.size();
    member.classifier = fit_classifier(x, job.y, local);
    if (train.task() == TaskKind::classification) {
      member.action = {ActionKind::label_override, job.mode->ground_truth_mode};
    } else {
      double sum = 0.0;
      for (std::size_t r : job.mode->members) sum += train.residual(r);
      member.action = {ActionKind::offset, sum / static_cast<double>(job.mode->members.size())};
    }
    trained[idx] = std::move(member);
  });
  for (auto& note : notes) {
    if (!note.empty()) ens.warnings.push_back(std::move(note));
  }
  ens.members = std::move(trained);
  return ens;
}

CorrectionResult correct(const CorrectionEnsemble& ensemble, std::span<const double> features,
                         double original_prediction) {
  if (features.size() != ensemble.feature_names.size()) {
    throw InputError("expected " + std::to_string(ensemble.feature_names.size()) + " features, got " +
                     std::to_string(features.size()));
  }
  const auto z = ensemble.transform(features);
  CorrectionResult result;
  result.value = original_prediction;
  const EnsembleMember* winner = nullptr;
  double best = 0.0;
  for (const auto& m : ensemble.members) {
    if (!m.classifier.fires(z)) continue;
    const double s = m.classifier.score(z);
    result.fired.push_back({m.mode_id, s});
    if (!winner || s > best || (s == best && m.mode_id < winner->mode_id)) {
      winner = &m;
      best = s;
    }
  }
  if (winner) {
    result.applied_mode = winner->mode_id;
    result.action = winner->action;
    result.value = winner->action.kind == ActionKind::label_override ? winner->action.value
                                                                     : original_prediction - winner->action.value;
  }
  return result;
}

std::vector<BiasProfile> evaluate_bias(const CorrectionEnsemble& ensemble, const Dataset& holdout,
                                       const std::string& clean_flag) {
  const auto& meta = holdout.meta();
  const auto flag = meta.flags.find(clean_flag);
  std::vector<BiasProfile> out;
  for (const auto& m : ensemble.members) {
    BiasProfile p;
    p.mode_id = m.mode_id;
    std::size_t matching = 0;
    std::size_t clean = 0;
    std::vector<double> residuals;
    for (std::size_t r = 0; r < holdout.rows(); ++r) {
      if (!m.classifier.fires(ensemble.transform(holdout.features().row(r)))) continue;
      ++p.captured;
      if (flag != meta.flags.end()) clean += flag->second[r];
      if (holdout.task() == TaskKind::classification) {
        p.ground_truth_counts[static_cast<long long>(meta.ground_truth[r])]++;
        matching += meta.ground_truth[r] == m.action.value ? 1 : 0;
      } else {
        residuals.push_back(holdout.residual(r));
        // Consistent bias: same residual sign as the mode's offset.
        matching += (holdout.residual(r) > 0.0) == (m.action.value > 0.0) ? 1 : 0;
      }
    }
    if (p.captured > 0) {
      const double c = static_cast<double>(p.captured);
      p.purity = static_cast<double>(matching) / c;
      if (flag != meta.flags.end()) p.clean_fraction = static_cast<double>(clean) / c;
      if (!residuals.empty()) {
        const double mean = std::accumulate(residuals.begin(), residuals.end(), 0.0) / c;
        double var = 0.0;
        for (double v : residuals) var += (v - mean) * (v - mean);
        p.residual_mean = mean;
        p.residual_sd = std::sqrt(var / c);
      }
    }
    out.push_back(std::move(p));
  }
  return out;
}

EnsembleEvaluation evaluate_ensemble(const CorrectionEnsemble& ensemble, const Dataset& test,
                                     const std::string& clean_flag, double regression_tolerance) {
  const auto& meta = test.meta();
  const auto flag = meta.flags.find(clean_flag);
  EnsembleEvaluation ev;
  ev.rows = test.rows();
  std::size_t base_hits = 0;
  std::size_t corrected_hits = 0;
  std::size_t clean = 0;
  double base_sq = 0.0;
  double corrected_sq = 0.0;
  const bool classification = test.task() == TaskKind::classification;
  auto is_hit = [&](double predicted, double truth) {
    return classification ? predicted == truth : std::abs(predicted - truth) <= regression_tolerance;
  };
  for (const auto& m : ensemble.members) ev.captures[m.mode_id] = 0;
  for (std::size_t r = 0; r < test.rows(); ++r) {
    const double truth = meta.ground_truth[r];
    const double original = meta.prediction[r];
    const auto res = correct(ensemble, test.features().row(r), original);
    ev.corrected_predictions.push_back(res.value);
    base_hits += is_hit(original, truth) ? 1 : 0;
    corrected_hits += is_hit(res.value, truth) ? 1 : 0;
    base_sq += (original - truth) * (original - truth);
    corrected_sq += (res.value - truth) * (res.value - truth);
    if (res.applied_mode) {
      ++ev.corrected_count;
      ev.captures[*res.applied_mode]++;
      if (flag != meta.flags.end()) clean += flag->second[r];
    }
  }
  if (ev.rows > 0) {
    const double n = static_cast<double>(ev.rows);
    ev.base_accuracy = static_cast<double>(base_hits) / n;
    ev.corrected_accuracy = static_cast<double>(corrected_hits) / n;
    if (!classification) {
      ev.base_rmse = std::sqrt(base_sq / n);
      ev.corrected_rmse = std::sqrt(corrected_sq / n);
    }
  }
  if (ev.corrected_count > 0 && flag != meta.flags.end()) {
    ev.clean_fraction = static_cast<double>(clean) / static_cast<double>(ev.corrected_count);
  }
  return ev;
}

}  // namespace fifa
