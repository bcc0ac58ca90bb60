#pragma once

// Logistic-regression calibration over QA confidence and NLI class scores.
//
// The training objective is the L2-regularized negative log-likelihood
//
//   L(b, w) = sum_i [softplus(b + w.x_i) - y_i (b + w.x_i)] + (reg / 2) ||w||^2
//
// with the intercept b unpenalized. Features are raw probabilities in [0, 1].
// Minimization is full-batch Newton with step halving.

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "contrarank/records.hpp"

namespace contrarank {

enum class Feature { kQa, kEntail, kContradict, kNeutral };

// "QA", "E", "C", "N"
std::string_view short_name(Feature f);
// Case-insensitive "qa" / "e" / "c" / "n". Throws ConfigError.
Feature parse_feature(std::string_view text);

// Nonempty duplicate-free subset of {QA, E, C, N}, always held in that order.
class FeatureSet {
 public:
  // Throws ConfigError on empty input or duplicates.
  explicit FeatureSet(std::vector<Feature> members);

  // Accepts "QA+E+C", "qa,e,c", "e c" and similar.
  static FeatureSet parse(std::string_view text);

  std::span<const Feature> members() const { return members_; }
  std::size_t size() const { return members_.size(); }
  bool contains(Feature f) const;
  // Position of f in canonical order, or nullopt.
  std::optional<std::size_t> index_of(Feature f) const;
  // "QA+E+C"
  std::string name() const;

  bool operator==(const FeatureSet&) const = default;

 private:
  std::vector<Feature> members_;
};

using FeatureVector = std::vector<double>;

FeatureVector extract_features(const ScoredCandidate& candidate, const FeatureSet& fs);

struct LabeledExample {
  FeatureVector x;
  bool correct = false;
};

enum class Backend { kSerial, kParallel };

struct TrainingConfig {
  double reg_strength = 1.0;
  int max_iters = 1000;
  double tol = 1e-8;  // on the gradient's Euclidean norm
  Backend backend = Backend::kParallel;
};

struct TrainingMeta {
  std::string dataset_id;
  std::size_t holdout_size = 0;  // questions (or examples when trained directly)
  std::size_t examples = 0;
  int iterations = 0;
  double final_loss = 0.0;
  double gradient_norm = 0.0;
  double regularization_strength = 1.0;
  bool converged = false;  // gradient tolerance met, or no step lowers the loss
  double holdout_accuracy = 0.0;
};

struct CalibrationModel {
  FeatureSet feature_set{{Feature::kQa}};
  double intercept = 0.0;
  std::vector<double> weights;
  TrainingMeta training_meta;
};

// Loss after each accepted Newton step, starting with the initial loss.
struct TrainingTrace {
  std::vector<double> losses;
};

// Throws DegenerateTrainingError on an empty or single-class holdout and
// InputError on non-finite or misaligned features.
CalibrationModel train_calibration(std::span<const LabeledExample> holdout, const FeatureSet& fs,
                                   const TrainingConfig& config = {},
                                   TrainingTrace* trace = nullptr);

// sigma(intercept + w.x). Throws InputError on a dimension mismatch.
double predict(const CalibrationModel& model, std::span<const double> x);
double predict(const CalibrationModel& model, const ScoredCandidate& candidate);

// Objective value, gradient and Hessian at theta = [b, w...].
struct Objective {
  double loss = 0.0;
  std::vector<double> grad;
  std::vector<double> hess;
};
Objective regularized_objective(std::span<const LabeledExample> data, std::span<const double> theta,
                                double reg_strength, Backend backend = Backend::kParallel);

inline constexpr double kExtractiveCorrectF1 = 0.5;

// Extractive correctness: the sole candidate reaches token F1 >= 0.5 against
// some gold span (an empty prediction on an unanswerable question counts).
bool extractive_correct(const QuestionRecord& record);

// Multiple choice: one example per candidate, labeled by gold choice.
// Extractive: one example for the QA model's answer.
std::vector<LabeledExample> build_training_set(const std::vector<QuestionRecord>& holdout,
                                               const FeatureSet& fs);

// Builds the training set from holdout questions, trains, and stamps the
// dataset id and question count into training_meta.
CalibrationModel calibrate_on_records(const std::vector<QuestionRecord>& holdout,
                                      const FeatureSet& fs, const TrainingConfig& config = {});

struct CoefficientRow {
  std::string dataset_id;
  std::string combination;
  double intercept = 0.0;
  std::optional<double> qa, entail, contradict, neutral;
  double accuracy = 0.0;
};

std::vector<CoefficientRow> coefficient_report(std::span<const CalibrationModel> models);

std::string model_to_json(const CalibrationModel& model);
// Throws ParseError / ConfigError on a malformed model document.
CalibrationModel model_from_json(std::string_view text);
void save_model(const std::filesystem::path& path, const CalibrationModel& model);
CalibrationModel load_model(const std::filesystem::path& path);

}  // namespace contrarank
