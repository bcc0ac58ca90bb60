#include "contrarank/analytics.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "contrarank/calibration.hpp"
#include "contrarank/errors.hpp"
#include "contrarank/metrics.hpp"

namespace contrarank {

std::optional<double> mc_accuracy(const std::vector<QuestionRecord>& records,
                                  const std::vector<std::vector<RankedAnswer>>& selections) {
  if (records.size() != selections.size()) {
    throw InputError("mc_accuracy: " + std::to_string(records.size()) + " records but " +
                     std::to_string(selections.size()) + " selections");
  }
  if (records.empty()) return std::nullopt;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& gold = records[i].gold.choice_index;
    if (gold && selected_index(selections[i]) == static_cast<std::size_t>(*gold)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(records.size());
}

std::string_view to_string(CorrelationSignal s) {
  switch (s) {
    case CorrelationSignal::kQa: return "QA";
    case CorrelationSignal::kCScore: return "C_score";
    case CorrelationSignal::kCClass: return "C_class";
    case CorrelationSignal::kEScore: return "E_score";
    case CorrelationSignal::kEClass: return "E_class";
    case CorrelationSignal::kNScore: return "N_score";
    case CorrelationSignal::kNClass: return "N_class";
  }
  return "?";
}

std::vector<CorrelationSignal> all_correlation_signals() {
  return {CorrelationSignal::kQa,     CorrelationSignal::kCScore, CorrelationSignal::kCClass,
          CorrelationSignal::kEScore, CorrelationSignal::kEClass, CorrelationSignal::kNScore,
          CorrelationSignal::kNClass};
}

CorrelationSignal parse_correlation_signal(std::string_view text) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
  };
  const auto want = lower(text);
  for (auto s : all_correlation_signals())
    if (lower(to_string(s)) == want) return s;
  throw ConfigError("unknown correlation signal '" + std::string(text) + "'");
}

CorrelationScope parse_correlation_scope(std::string_view text) {
  if (text == "per-dataset" || text == "per_dataset") return CorrelationScope::kPerDataset;
  if (text == "pooled") return CorrelationScope::kPooled;
  throw ConfigError("unknown correlation scope '" + std::string(text) + "'");
}

double signal_value(CorrelationSignal s, const ScoredCandidate& c) {
  auto cls = [](double v) { return v > kClassThreshold ? 1.0 : 0.0; };
  switch (s) {
    case CorrelationSignal::kQa: return c.qa_confidence;
    case CorrelationSignal::kCScore: return c.nli.contradict;
    case CorrelationSignal::kCClass: return cls(c.nli.contradict);
    case CorrelationSignal::kEScore: return c.nli.entail;
    case CorrelationSignal::kEClass: return cls(c.nli.entail);
    case CorrelationSignal::kNScore: return c.nli.neutral;
    case CorrelationSignal::kNClass: return cls(c.nli.neutral);
  }
  return 0.0;
}

namespace {

struct Observations {
  std::vector<const ScoredCandidate*> candidates;
  std::vector<double> correct;
};

void observe(const QuestionRecord& r, const CorrelationOptions& opt, Observations& obs) {
  if (r.task_kind == TaskKind::kMultipleChoice) {
    for (std::size_t i = 0; i < r.candidates.size(); ++i) {
      obs.candidates.push_back(&r.candidates[i]);
      const bool gold = r.gold.choice_index && static_cast<std::size_t>(*r.gold.choice_index) == i;
      obs.correct.push_back(gold ? 1.0 : 0.0);
    }
  } else {
    if (opt.answered_only && r.unanswerable()) return;
    if (r.candidates.empty()) return;
    obs.candidates.push_back(&r.candidates.front());
    obs.correct.push_back(extractive_correct(r) ? 1.0 : 0.0);
  }
}

}  // namespace

CorrelationReport correlation_report(const std::vector<QuestionRecord>& records,
                                     std::span<const CorrelationSignal> signals,
                                     CorrelationScope scope, const CorrelationOptions& options) {
  std::set<TaskKind> kinds;
  for (const auto& r : records) kinds.insert(r.task_kind);

  // std::map keeps groups in sorted order; records are visited in input order
  // within a group, and rho does not depend on observation order.
  std::map<std::string, Observations> groups;
  for (const auto& r : records) {
    std::string group;
    if (scope == CorrelationScope::kPerDataset) {
      group = r.dataset_id;
    } else {
      group = kinds.size() <= 1 ? "all" : "all:" + std::string(to_string(r.task_kind));
    }
    observe(r, options, groups[group]);
  }

  CorrelationReport report;
  report.scope = scope;
  std::vector<double> xs;
  for (const auto& [group, obs] : groups) {
    for (auto s : signals) {
      xs.clear();
      for (const auto* c : obs.candidates) xs.push_back(signal_value(s, *c));
      report.rows.push_back({group, s, spearman_rho(xs, obs.correct), xs.size()});
    }
  }
  return report;
}

Table correlation_table(const CorrelationReport& report) {
  std::vector<std::string> groups;
  std::map<std::pair<std::string, CorrelationSignal>, std::optional<double>> cell;
  std::set<CorrelationSignal> present;
  for (const auto& row : report.rows) {
    if (groups.empty() || groups.back() != row.group) groups.push_back(row.group);
    cell[{row.group, row.signal}] = row.rho;
    present.insert(row.signal);
  }
  auto value = [&](const std::string& g, CorrelationSignal s) {
    auto it = cell.find({g, s});
    return it == cell.end() ? std::string() : format_number(it->second, 2);
  };

  Table t;
  if (report.scope == CorrelationScope::kPerDataset) {
    std::vector<CorrelationSignal> cols;
    t.header.push_back("Dataset");
    for (auto s : all_correlation_signals()) {
      if (!present.count(s)) continue;
      cols.push_back(s);
      t.header.emplace_back(to_string(s));
    }
    for (const auto& g : groups) {
      std::vector<std::string> row{g};
      for (auto s : cols) row.push_back(value(g, s));
      t.rows.push_back(std::move(row));
    }
    return t;
  }

  t.header = {"Group", "Measure", "contradiction", "entailment", "neutral", "QA"};
  for (const auto& g : groups) {
    t.rows.push_back({g, "Confidence", value(g, CorrelationSignal::kCScore),
                      value(g, CorrelationSignal::kEScore), value(g, CorrelationSignal::kNScore),
                      value(g, CorrelationSignal::kQa)});
    t.rows.push_back({g, "Class", value(g, CorrelationSignal::kCClass),
                      value(g, CorrelationSignal::kEClass), value(g, CorrelationSignal::kNClass),
                      ""});
  }
  return t;
}

}  // namespace contrarank
