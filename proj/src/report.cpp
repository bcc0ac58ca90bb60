#include "contrarank/report.hpp"

#include <fstream>
#include <optional>
#include <set>

#include "contrarank/analytics.hpp"
#include "contrarank/errors.hpp"
#include "contrarank/metrics.hpp"
#include "contrarank/ranking.hpp"
#include "contrarank/rejection.hpp"

namespace contrarank {

std::vector<FeatureSet> report_feature_sets() {
  return {FeatureSet::parse("QA+E+C"), FeatureSet::parse("QA+E"), FeatureSet::parse("QA+C"),
          FeatureSet::parse("E+C")};
}

namespace {

struct KindState {
  std::map<std::string, CalibrationModel> models;  // by feature-set name
  std::set<std::string> holdout_ids;               // question ids
  std::string calibration_dataset;
};

class ReportBuilder {
 public:
  ReportBuilder(std::vector<QuestionRecord> records, const ReportConfig& config)
      : all_(std::move(records)), config_(config) {
    sort_canonical(all_);
  }

  ReportBundle build() {
    for (const auto& r : all_) kinds_.insert(r.task_kind);
    for (auto kind : kinds_) train_kind(kind);
    for (const auto& r : all_) {
      const auto& st = state_[r.task_kind];
      if (r.dataset_id == st.calibration_dataset && st.holdout_ids.count(r.question_id)) continue;
      eval_.push_back(r);
    }
    if (eval_.empty()) bundle_.problems.push_back("no evaluation records remain after the holdout split");

    emit("ranking_nli", ranking_table({"QA", "E+C", "E", "C"}));
    emit("ranking_calibrated", ranking_table({"QA", "QA+E+C", "QA+E", "QA+C"}));
    emit("selective", selective_table());
    if (std::any_of(eval_.begin(), eval_.end(), [](const auto& r) { return r.unanswerable(); }))
      emit("rejection", rejection_report());
    emit("correlation_per_dataset", correlation(CorrelationScope::kPerDataset));
    emit("correlation_pooled", correlation(CorrelationScope::kPooled));
    emit("coefficients", coefficients());
    return std::move(bundle_);
  }

 private:
  void emit(const std::string& stem, const Table& table) {
    bundle_.files.push_back(
        {stem + std::string(file_extension(config_.format)), render(table, config_.format)});
  }

  void train_kind(TaskKind kind) {
    auto& st = state_[kind];
    std::string ds;
    if (auto it = config_.calibration_dataset.find(kind); it != config_.calibration_dataset.end()) {
      ds = it->second;
    } else {
      for (const auto& r : all_) {
        if (r.task_kind == kind) {
          ds = r.dataset_id;  // records are sorted, so this is the smallest id
          break;
        }
      }
    }
    st.calibration_dataset = ds;
    const std::string kind_name(to_string(kind));
    auto subset = filter_dataset(all_, ds);
    if (subset.empty() || subset.front().task_kind != kind) {
      bundle_.problems.push_back("calibration dataset '" + ds + "' has no " + kind_name +
                                 " records; calibrated policies unavailable");
      return;
    }
    if (subset.size() < config_.holdout_size) {
      bundle_.problems.push_back("calibration dataset '" + ds + "' has " +
                                 std::to_string(subset.size()) + " records, fewer than the holdout size " +
                                 std::to_string(config_.holdout_size));
      return;
    }
    const auto split = split_holdout(subset, config_.holdout_size, config_.seed);
    for (const auto& r : split.holdout) st.holdout_ids.insert(r.question_id);

    TrainingConfig tc;
    tc.reg_strength = config_.reg_strength;
    for (const auto& fs : report_feature_sets()) {
      try {
        st.models.emplace(fs.name(), calibrate_on_records(split.holdout, fs, tc));
      } catch (const DegenerateTrainingError& e) {
        bundle_.problems.push_back(kind_name + " " + fs.name() + ": " + e.what());
      }
    }
  }

  std::optional<RankingPolicy> policy(TaskKind kind, const std::string& name) const {
    if (name.find('+') == std::string::npos) return RankingPolicy::single(parse_feature(name));
    const auto& models = state_.at(kind).models;
    auto it = models.find(name);
    if (it == models.end()) return std::nullopt;
    return RankingPolicy::calibrated(it->second);
  }

  // Accuracy of the policy's pick (multiple choice) or mean F1 (extractive).
  static double ranking_metric(const std::vector<QuestionRecord>& subset, const RankingPolicy& p) {
    std::vector<double> scores;
    scores.reserve(subset.size());
    const auto picks = select_all(p, subset);
    for (std::size_t i = 0; i < subset.size(); ++i) {
      const auto& r = subset[i];
      if (r.task_kind == TaskKind::kMultipleChoice) {
        const bool hit = r.gold.choice_index && static_cast<std::size_t>(*r.gold.choice_index) == picks[i];
        scores.push_back(hit ? 1.0 : 0.0);
      } else {
        scores.push_back(token_f1(r.candidates.front().answer_text, r.gold.text_spans));
      }
    }
    return exact_sum(scores) / static_cast<double>(scores.size());
  }

  Table ranking_table(const std::vector<std::string>& policies) const {
    const auto datasets = dataset_ids(eval_);
    Table t;
    t.header.push_back("policy");
    for (const auto& ds : datasets) t.header.push_back(ds);
    t.header.push_back("avg");
    for (const auto& name : policies) {
      std::vector<std::string> row{name};
      std::vector<double> values;
      bool complete = !datasets.empty();
      for (const auto& ds : datasets) {
        const auto subset = filter_dataset(eval_, ds);
        const auto p = policy(subset.front().task_kind, name);
        if (!p) {
          row.emplace_back(kMissingCell);
          complete = false;
          continue;
        }
        values.push_back(ranking_metric(subset, *p));
        row.push_back(format_percent(values.back()));
      }
      row.push_back(complete ? format_percent(exact_sum(values) / static_cast<double>(values.size()))
                             : std::string(kMissingCell));
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  Table selective_table() const {
    const std::vector<std::string> names{"QA+E+C", "QA+E", "QA+C", "E+C", "E", "C", "QA"};
    PolicyGrid grid;
    grid.policies = names;
    grid.coverages = config_.coverages;
    for (const auto& ds : dataset_ids(eval_)) {
      const auto subset = filter_dataset(eval_, ds);
      std::vector<NamedPolicy> policies;
      for (const auto& n : names) policies.push_back({n, policy(subset.front().task_kind, n)});
      auto one = compare_policies(subset, policies, config_.coverages, config_.selection);
      grid.datasets.push_back(ds);
      grid.metrics.push_back(one.metrics.front());
      grid.values.push_back(std::move(one.values.front()));
    }
    grid.average.assign(grid.coverages.size(), std::vector<std::optional<double>>(names.size()));
    for (std::size_t c = 0; c < grid.coverages.size() && !grid.datasets.empty(); ++c) {
      for (std::size_t p = 0; p < names.size(); ++p) {
        std::vector<double> vals;
        for (const auto& per_ds : grid.values)
          if (per_ds[c][p]) vals.push_back(*per_ds[c][p]);
        if (vals.size() == grid.datasets.size())
          grid.average[c][p] = exact_sum(vals) / static_cast<double>(vals.size());
      }
    }
    return grid_table(grid);
  }

  Table rejection_report() const {
    Table t;
    bool header_set = false;
    for (const auto& ds : dataset_ids(eval_)) {
      const auto subset = filter_dataset(eval_, ds);
      if (subset.front().task_kind != TaskKind::kExtractive) continue;
      if (std::none_of(subset.begin(), subset.end(), [](const auto& r) { return r.unanswerable(); }))
        continue;
      std::vector<RejectionReport> reports;
      auto sweep = [&](Feature f, Comparator cmp, std::vector<double> th) {
        auto part = threshold_sweep(f, cmp, std::move(th), subset);
        reports.insert(reports.end(), part.begin(), part.end());
      };
      sweep(Feature::kQa, Comparator::kLessThan, {0.25, 0.50, 0.75});
      sweep(Feature::kEntail, Comparator::kLessThan, {0.05, 0.10, 0.25, 0.50});
      sweep(Feature::kContradict, Comparator::kGreaterThan, {0.05, 0.10, 0.25, 0.50});
      Table part = rejection_table(reports);
      if (!header_set) {
        t.header = part.header;
        t.header.insert(t.header.begin(), "dataset");
        header_set = true;
      }
      for (auto& row : part.rows) {
        row.insert(row.begin(), ds);
        t.rows.push_back(std::move(row));
      }
    }
    return t;
  }

  Table correlation(CorrelationScope scope) const {
    const auto signals = all_correlation_signals();
    CorrelationOptions opt;
    opt.answered_only = config_.answered_only;
    return correlation_table(correlation_report(eval_, signals, scope, opt));
  }

  Table coefficients() const {
    std::vector<CalibrationModel> models;
    for (auto kind : kinds_) {
      const auto& st = state_.at(kind);
      for (const auto& fs : report_feature_sets()) {
        auto it = st.models.find(fs.name());
        if (it != st.models.end()) models.push_back(it->second);
      }
    }
    Table t;
    t.header = {"dataset", "combination", "intercept", "QA", "E", "C", "N", "accuracy"};
    auto opt = [](const std::optional<double>& v) { return v ? format_fixed(*v, 2) : std::string(); };
    for (const auto& row : coefficient_report(models)) {
      t.rows.push_back({row.dataset_id, row.combination, format_fixed(row.intercept, 2), opt(row.qa),
                        opt(row.entail), opt(row.contradict), opt(row.neutral),
                        format_fixed(row.accuracy, 2)});
    }
    return t;
  }

  std::vector<QuestionRecord> all_;
  std::vector<QuestionRecord> eval_;
  const ReportConfig& config_;
  std::set<TaskKind> kinds_;
  std::map<TaskKind, KindState> state_;
  ReportBundle bundle_;
};

}  // namespace

ReportBundle report_all(std::vector<QuestionRecord> records, const ReportConfig& config) {
  for (double c : config.coverages) {
    if (!(c > 0.0 && c <= 1.0)) throw ConfigError("coverage " + format_fixed(c, 4) + " outside (0, 1]");
  }
  return ReportBuilder(std::move(records), config).build();
}

void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  for (const auto& f : bundle.files) {
    std::ofstream out(dir / f.name, std::ios::binary);
    if (!out) throw InputError("cannot write '" + (dir / f.name).string() + "'");
    out << f.content;
  }
}

}  // namespace contrarank
