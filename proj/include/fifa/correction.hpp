#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "fifa/dataset.hpp"
#include "fifa/failure_modes.hpp"
#include "fifa/matrix.hpp"

namespace fifa {

enum class ClassifierKind { logistic_regression, linear_svm, gaussian_nb };

std::string_view to_string(ClassifierKind kind);
ClassifierKind parse_classifier_kind(std::string_view text);

struct ClassifierSpec {
  ClassifierKind kind = ClassifierKind::linear_svm;
  /// Regularization strength; the penalty is ||w||^2 / (2C).
  double C = 1.0;
  /// Candidate values for cross-validated selection; empty means use C.
  std::vector<double> c_grid;
  std::size_t cv_folds = 5;
  /// Reweight samples so both classes carry equal total weight.
  bool balance_classes = false;
  double tolerance = 1e-6;
  std::size_t max_iterations = 5'000;
};

/// Weights and intercept of a logistic-regression or squared-hinge SVM
/// decision function w.x + b.
struct LinearModel {
  ClassifierKind kind = ClassifierKind::linear_svm;
  std::vector<double> weights;
  double intercept = 0.0;
  double C = 1.0;
  std::size_t iterations = 0;
  double gradient_norm = 0.0;
  bool converged = false;

  double decision(std::span<const double> x) const;
};

/// Two-class Gaussian naive Bayes; index 1 is the positive (in-mode) class.
struct GaussianNB {
  std::array<double, 2> prior{};
  std::array<std::vector<double>, 2> mean;
  std::array<std::vector<double>, 2> variance;

  /// {P(rest | x), P(mode | x)}.
  std::array<double, 2> posterior(std::span<const double> x) const;
};

class Classifier {
 public:
  Classifier() = default;
  explicit Classifier(LinearModel m) : model_(std::move(m)) {}
  explicit Classifier(GaussianNB m) : model_(std::move(m)) {}

  ClassifierKind kind() const;
  std::size_t dimension() const;
  /// Signed decision value (linear models) or positive-class posterior (GNB).
  double score(std::span<const double> x) const;
  bool fires(std::span<const double> x) const;

  const std::variant<LinearModel, GaussianNB>& model() const noexcept { return model_; }

 private:
  std::variant<LinearModel, GaussianNB> model_;
};

/// Mean training loss plus L2 penalty, and its gradient with respect to
/// (w, b). `theta` packs the weights followed by the intercept. Labels are
/// 0/1 and mapped to -1/+1.
struct LossAndGradient {
  double loss = 0.0;
  std::vector<double> gradient;
};

LossAndGradient linear_objective(ClassifierKind kind, const Matrix& x, std::span<const int> y,
                                 std::span<const double> theta, double C,
                                 std::span<const double> sample_weights = {});

/// Full-batch gradient descent from zero with Armijo backtracking; the step
/// guess is the Barzilai-Borwein ratio. `loss_trace`, when given, receives
/// the objective before each step and after the last one.
LinearModel fit_linear(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec, double C,
                       std::vector<double>* loss_trace = nullptr);

GaussianNB fit_gaussian_nb(const Matrix& x, std::span<const int> y);

/// Throws DegenerateTrainingError unless y holds both classes.
Classifier fit_classifier(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec);

/// Stratified k-fold cross-validated accuracy for every grid value; returns
/// the argmax, ties to the smaller C. Throws ArgumentError when a class has
/// fewer members than folds.
double select_C(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec, std::size_t folds);

/// Mean CV accuracy for one C (exposed for tests).
double cross_validated_accuracy(const Matrix& x, std::span<const int> y, const ClassifierSpec& spec, double C,
                                std::size_t folds);

enum class ActionKind { label_override, offset };

struct CorrectionAction {
  ActionKind kind = ActionKind::label_override;
  /// Label to emit, or mean residual to subtract from the prediction.
  double value = 0.0;
};

struct EnsembleMember {
  std::size_t mode_id = 0;
  Classifier classifier;
  CorrectionAction action;
  std::size_t training_size = 0;
};

struct CorrectionEnsemble {
  TaskKind task = TaskKind::classification;
  ClassifierKind kind = ClassifierKind::linear_svm;
  std::vector<std::string> feature_names;
  /// Standardization applied before linear models (identity for GNB).
  std::vector<double> center;
  std::vector<double> scale;
  std::vector<EnsembleMember> members;
  std::string tie_policy = "highest_score_then_lowest_mode_id";
  std::vector<std::string> warnings;

  std::vector<double> transform(std::span<const double> features) const;
};

/// One classifier per mode: positives are the mode's members, negatives all
/// other rows of `train`. Degenerate modes are skipped with a warning.
CorrectionEnsemble train_ensemble(std::span<const FailureMode> modes, const Dataset& train,
                                  const ClassifierSpec& spec);

struct Firing {
  std::size_t mode_id = 0;
  double score = 0.0;
};

struct CorrectionResult {
  double value = 0.0;
  std::vector<Firing> fired;
  std::optional<std::size_t> applied_mode;
  std::optional<CorrectionAction> action;
};

/// Throws InputError when the feature count differs from training.
CorrectionResult correct(const CorrectionEnsemble& ensemble, std::span<const double> features,
                         double original_prediction);

struct BiasProfile {
  std::size_t mode_id = 0;
  std::size_t captured = 0;
  std::map<long long, std::size_t> ground_truth_counts;
  std::optional<double> purity;
  std::optional<double> clean_fraction;
  std::optional<double> residual_mean;
  std::optional<double> residual_sd;
};

/// Statistics of the rows each classifier captures on its own.
std::vector<BiasProfile> evaluate_bias(const CorrectionEnsemble& ensemble, const Dataset& holdout,
                                       const std::string& clean_flag = "clean");

struct EnsembleEvaluation {
  std::size_t rows = 0;
  double base_accuracy = 0.0;
  double corrected_accuracy = 0.0;
  std::size_t corrected_count = 0;
  /// Fraction of corrected rows flagged clean; empty if nothing was corrected
  /// or the flag is absent.
  std::optional<double> clean_fraction;
  std::map<std::size_t, std::size_t> captures;  ///< mode id -> rows it corrected
  std::optional<double> base_rmse;
  std::optional<double> corrected_rmse;
  std::vector<double> corrected_predictions;
};

EnsembleEvaluation evaluate_ensemble(const CorrectionEnsemble& ensemble, const Dataset& test,
                                     const std::string& clean_flag = "clean", double regression_tolerance = 1.0);

}  // namespace fifa
