#include "contrarank/calibration.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "contrarank/errors.hpp"
#include "contrarank/kernels.hpp"
#include "contrarank/metrics.hpp"
#include "json.hpp"

namespace contrarank {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view short_name(Feature f) {
  switch (f) {
    case Feature::kQa: return "QA";
    case Feature::kEntail: return "E";
    case Feature::kContradict: return "C";
    case Feature::kNeutral: return "N";
  }
  return "?";
}

Feature parse_feature(std::string_view text) {
  std::string t(text);
  std::transform(t.begin(), t.end(), t.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (t == "qa") return Feature::kQa;
  if (t == "e") return Feature::kEntail;
  if (t == "c") return Feature::kContradict;
  if (t == "n") return Feature::kNeutral;
  throw ConfigError("unknown feature '" + std::string(text) + "' (expected qa, e, c or n)");
}

FeatureSet::FeatureSet(std::vector<Feature> members) : members_(std::move(members)) {
  if (members_.empty()) throw ConfigError("feature set is empty");
  std::sort(members_.begin(), members_.end());
  if (std::adjacent_find(members_.begin(), members_.end()) != members_.end())
    throw ConfigError("feature set has duplicate members");
}

FeatureSet FeatureSet::parse(std::string_view text) {
  std::vector<Feature> members;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) members.push_back(parse_feature(token));
    token.clear();
  };
  for (char c : text) {
    if (c == '+' || c == ',' || std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      token.push_back(c);
    }
  }
  flush();
  return FeatureSet(std::move(members));
}

bool FeatureSet::contains(Feature f) const { return index_of(f).has_value(); }

std::optional<std::size_t> FeatureSet::index_of(Feature f) const {
  auto it = std::find(members_.begin(), members_.end(), f);
  if (it == members_.end()) return std::nullopt;
  return static_cast<std::size_t>(it - members_.begin());
}

std::string FeatureSet::name() const {
  std::string out;
  for (auto f : members_) {
    if (!out.empty()) out += '+';
    out += short_name(f);
  }
  return out;
}

FeatureVector extract_features(const ScoredCandidate& c, const FeatureSet& fs) {
  FeatureVector v;
  v.reserve(fs.size());
  for (auto f : fs.members()) {
    switch (f) {
      case Feature::kQa: v.push_back(c.qa_confidence); break;
      case Feature::kEntail: v.push_back(c.nli.entail); break;
      case Feature::kContradict: v.push_back(c.nli.contradict); break;
      case Feature::kNeutral: v.push_back(c.nli.neutral); break;
    }
  }
  return v;
}

namespace {

struct PackedData {
  std::vector<double> features;
  std::vector<double> labels;
  std::size_t rows = 0;
  std::size_t cols = 0;

  kernels::DesignView view() const { return {features, labels, rows, cols}; }
};

PackedData pack(std::span<const LabeledExample> data, std::size_t cols) {
  PackedData p;
  p.rows = data.size();
  p.cols = cols;
  p.features.reserve(data.size() * cols);
  p.labels.reserve(data.size());
  for (const auto& ex : data) {
    if (ex.x.size() != cols) {
      throw InputError("feature vector has " + std::to_string(ex.x.size()) +
                       " values, expected " + std::to_string(cols));
    }
    for (double v : ex.x) {
      if (!std::isfinite(v)) throw InputError("non-finite feature value in training data");
      p.features.push_back(v);
    }
    p.labels.push_back(ex.correct ? 1.0 : 0.0);
  }
  return p;
}

Objective objective_packed(const PackedData& data, std::span<const double> theta, double reg,
                           Backend backend) {
  auto terms = backend == Backend::kSerial ? kernels::serial::logistic_terms(data.view(), theta)
                                           : kernels::parallel::logistic_terms(data.view(), theta);
  Objective o;
  o.loss = terms.nll;
  o.grad = std::move(terms.grad);
  o.hess = std::move(terms.hess);
  const std::size_t d = theta.size();
  for (std::size_t j = 1; j < d; ++j) {
    o.loss += 0.5 * reg * theta[j] * theta[j];
    o.grad[j] += reg * theta[j];
    o.hess[j * d + j] += reg;
  }
  return o;
}

double norm2(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Solves H s = g for symmetric positive definite H (row-major, d x d) by
// Cholesky. Returns false if H is not numerically positive definite.
bool cholesky_solve(std::vector<double> h, std::span<const double> g, std::vector<double>& s) {
  const std::size_t d = g.size();
  for (std::size_t j = 0; j < d; ++j) {
    double diag = h[j * d + j];
    for (std::size_t k = 0; k < j; ++k) diag -= h[j * d + k] * h[j * d + k];
    if (!(diag > 0.0)) return false;
    const double ljj = std::sqrt(diag);
    h[j * d + j] = ljj;
    for (std::size_t i = j + 1; i < d; ++i) {
      double v = h[i * d + j];
      for (std::size_t k = 0; k < j; ++k) v -= h[i * d + k] * h[j * d + k];
      h[i * d + j] = v / ljj;
    }
  }
  s.assign(g.begin(), g.end());
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t k = 0; k < i; ++k) s[i] -= h[i * d + k] * s[k];
    s[i] /= h[i * d + i];
  }
  for (std::size_t i = d; i-- > 0;) {
    for (std::size_t k = i + 1; k < d; ++k) s[i] -= h[k * d + i] * s[k];
    s[i] /= h[i * d + i];
  }
  return true;
}

}  // namespace

Objective regularized_objective(std::span<const LabeledExample> data, std::span<const double> theta,
                                double reg_strength, Backend backend) {
  if (theta.empty()) throw InputError("parameter vector is empty");
  return objective_packed(pack(data, theta.size() - 1), theta, reg_strength, backend);
}

CalibrationModel train_calibration(std::span<const LabeledExample> holdout, const FeatureSet& fs,
                                   const TrainingConfig& config, TrainingTrace* trace) {
  if (!(config.reg_strength >= 0.0) || !std::isfinite(config.reg_strength))
    throw ConfigError("regularization strength must be finite and non-negative");
  const auto positives = std::count_if(holdout.begin(), holdout.end(),
                                       [](const LabeledExample& e) { return e.correct; });
  if (holdout.empty() || positives == 0 ||
      positives == static_cast<std::ptrdiff_t>(holdout.size())) {
    throw DegenerateTrainingError(
        "calibration holdout of " + std::to_string(holdout.size()) +
        " examples contains a single label class; enlarge the holdout so both correct and "
        "incorrect answers are present");
  }

  const PackedData data = pack(holdout, fs.size());
  const std::size_t d = fs.size() + 1;
  std::vector<double> theta(d, 0.0);
  Objective obj = objective_packed(data, theta, config.reg_strength, config.backend);
  if (trace) trace->losses.assign(1, obj.loss);

  int iter = 0;
  bool converged = false;
  std::vector<double> step, candidate(d);
  while (true) {
    if (norm2(obj.grad) <= config.tol) {
      converged = true;
      break;
    }
    if (iter >= config.max_iters) break;
    if (!cholesky_solve(obj.hess, obj.grad, step)) step = obj.grad;

    double t = 1.0;
    bool accepted = false;
    Objective next;
    for (int halvings = 0; halvings < 60; ++halvings, t *= 0.5) {
      for (std::size_t j = 0; j < d; ++j) candidate[j] = theta[j] - t * step[j];
      next = objective_packed(data, candidate, config.reg_strength, config.backend);
      if (next.loss < obj.loss ||
          (next.loss == obj.loss && norm2(next.grad) < norm2(obj.grad))) {
        accepted = true;
        break;
      }
    }
    ++iter;
    if (!accepted) {
      // no representable improvement along the Newton direction
      converged = true;
      break;
    }
    theta = candidate;
    obj = std::move(next);
    if (trace) trace->losses.push_back(obj.loss);
  }

  CalibrationModel m;
  m.feature_set = fs;
  m.intercept = theta[0];
  m.weights.assign(theta.begin() + 1, theta.end());
  auto& meta = m.training_meta;
  meta.holdout_size = holdout.size();
  meta.examples = holdout.size();
  meta.iterations = iter;
  meta.final_loss = obj.loss;
  meta.gradient_norm = norm2(obj.grad);
  meta.regularization_strength = config.reg_strength;
  meta.converged = converged;

  std::size_t hits = 0;
  for (const auto& ex : holdout) hits += (predict(m, ex.x) > 0.5) == ex.correct;
  meta.holdout_accuracy = static_cast<double>(hits) / static_cast<double>(holdout.size());
  return m;
}

double predict(const CalibrationModel& model, std::span<const double> x) {
  if (x.size() != model.weights.size()) {
    throw InputError("feature vector has " + std::to_string(x.size()) + " values, model " +
                     model.feature_set.name() + " expects " + std::to_string(model.weights.size()));
  }
  double z = model.intercept;
  for (std::size_t j = 0; j < x.size(); ++j) z += model.weights[j] * x[j];
  return kernels::sigmoid(z);
}

double predict(const CalibrationModel& model, const ScoredCandidate& candidate) {
  return predict(model, extract_features(candidate, model.feature_set));
}

bool extractive_correct(const QuestionRecord& record) {
  if (record.candidates.empty()) return false;
  return token_f1(record.candidates.front().answer_text, record.gold.text_spans) >=
         kExtractiveCorrectF1;
}

std::vector<LabeledExample> build_training_set(const std::vector<QuestionRecord>& holdout,
                                               const FeatureSet& fs) {
  std::vector<LabeledExample> out;
  for (const auto& r : holdout) {
    if (r.task_kind == TaskKind::kMultipleChoice) {
      for (std::size_t i = 0; i < r.candidates.size(); ++i) {
        const bool gold = r.gold.choice_index && static_cast<std::size_t>(*r.gold.choice_index) == i;
        out.push_back({extract_features(r.candidates[i], fs), gold});
      }
    } else if (!r.candidates.empty()) {
      out.push_back({extract_features(r.candidates.front(), fs), extractive_correct(r)});
    }
  }
  return out;
}

CalibrationModel calibrate_on_records(const std::vector<QuestionRecord>& holdout,
                                      const FeatureSet& fs, const TrainingConfig& config) {
  const auto examples = build_training_set(holdout, fs);
  CalibrationModel m = train_calibration(examples, fs, config);
  m.training_meta.holdout_size = holdout.size();
  const auto ids = dataset_ids(holdout);
  std::string joined;
  for (const auto& id : ids) joined += (joined.empty() ? "" : ",") + id;
  m.training_meta.dataset_id = joined;
  return m;
}

std::vector<CoefficientRow> coefficient_report(std::span<const CalibrationModel> models) {
  std::vector<CoefficientRow> rows;
  rows.reserve(models.size());
  for (const auto& m : models) {
    CoefficientRow row;
    row.dataset_id = m.training_meta.dataset_id;
    row.combination = m.feature_set.name();
    row.intercept = m.intercept;
    auto weight = [&](Feature f) -> std::optional<double> {
      if (auto i = m.feature_set.index_of(f)) return m.weights.at(*i);
      return std::nullopt;
    };
    row.qa = weight(Feature::kQa);
    row.entail = weight(Feature::kEntail);
    row.contradict = weight(Feature::kContradict);
    row.neutral = weight(Feature::kNeutral);
    row.accuracy = m.training_meta.holdout_accuracy;
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string model_to_json(const CalibrationModel& m) {
  ordered_json j;
  std::vector<std::string> names;
  for (auto f : m.feature_set.members()) names.emplace_back(short_name(f));
  j["feature_set"] = names;
  j["intercept"] = m.intercept;
  j["weights"] = m.weights;
  const auto& t = m.training_meta;
  j["training_meta"] = {{"dataset_id", t.dataset_id},
                        {"holdout_size", t.holdout_size},
                        {"examples", t.examples},
                        {"iterations", t.iterations},
                        {"final_loss", t.final_loss},
                        {"gradient_norm", t.gradient_norm},
                        {"regularization_strength", t.regularization_strength},
                        {"converged", t.converged},
                        {"holdout_accuracy", t.holdout_accuracy}};
  return j.dump(2);
}

CalibrationModel model_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(1, std::string("malformed model: ") + e.what());
  }
  try {
    std::vector<Feature> members;
    for (const auto& f : j.at("feature_set")) members.push_back(parse_feature(f.get<std::string>()));
    CalibrationModel m;
    m.feature_set = FeatureSet(std::move(members));
    m.intercept = j.at("intercept").get<double>();
    m.weights = j.at("weights").get<std::vector<double>>();
    if (m.weights.size() != m.feature_set.size())
      throw ConfigError("model has " + std::to_string(m.weights.size()) + " weights for " +
                        std::to_string(m.feature_set.size()) + " features");
    if (j.contains("training_meta")) {
      const auto& t = j.at("training_meta");
      auto& meta = m.training_meta;
      meta.dataset_id = t.value("dataset_id", std::string{});
      meta.holdout_size = t.value("holdout_size", std::size_t{0});
      meta.examples = t.value("examples", std::size_t{0});
      meta.iterations = t.value("iterations", 0);
      meta.final_loss = t.value("final_loss", 0.0);
      meta.gradient_norm = t.value("gradient_norm", 0.0);
      meta.regularization_strength = t.value("regularization_strength", 1.0);
      meta.converged = t.value("converged", false);
      meta.holdout_accuracy = t.value("holdout_accuracy", 0.0);
    }
    return m;
  } catch (const json::exception& e) {
    throw ParseError(1, std::string("malformed model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const CalibrationModel& model) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write model '" + path.string() + "'");
  out << model_to_json(model) << '\n';
}

CalibrationModel load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open model '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return model_from_json(buf.str());
}

}  // namespace contrarank
