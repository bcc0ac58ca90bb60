#include "contrarank/selective.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>

#include "contrarank/calibration.hpp"
#include "contrarank/errors.hpp"
#include "contrarank/metrics.hpp"

namespace contrarank {

SelectionMode parse_selection_mode(std::string_view text) {
  if (text == "qa") return SelectionMode::kQa;
  if (text == "policy") return SelectionMode::kPolicy;
  throw ConfigError("unknown selection mode '" + std::string(text) + "' (expected qa or policy)");
}

std::string_view to_string(MetricKind m) { return m == MetricKind::kAccuracy ? "accuracy" : "f1"; }

std::size_t answered_count(double coverage, std::size_t total) {
  const auto n = static_cast<std::size_t>(std::floor(coverage * static_cast<double>(total) + 1e-9));
  return std::clamp<std::size_t>(n, 1, std::max<std::size_t>(total, 1));
}

namespace {

void check_coverages(const std::vector<double>& coverages) {
  for (double c : coverages) {
    if (!(c > 0.0 && c <= 1.0))
      throw InputError("coverage " + format_fixed(c, 4) + " outside (0, 1]");
  }
}

TaskKind common_kind(const std::vector<QuestionRecord>& records) {
  if (records.empty()) throw InputError("selective evaluation needs at least one record");
  const TaskKind kind = records.front().task_kind;
  for (const auto& r : records) {
    if (r.task_kind != kind)
      throw InputError("selective evaluation over mixed task kinds; split by dataset first");
  }
  return kind;
}

std::size_t qa_pick(const QuestionRecord& r) {
  return selected_index(select_answer(RankingPolicy::single(Feature::kQa), r));
}

}  // namespace

std::vector<QuestionOutcome> score_questions(const std::vector<QuestionRecord>& records,
                                             const RankingPolicy& policy, SelectionMode mode) {
  std::vector<QuestionOutcome> out(records.size());
  const auto n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(static) if (n > 1024)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto& r = records[static_cast<std::size_t>(k)];
    auto& o = out[static_cast<std::size_t>(k)];
    o.question_id = r.question_id;
    if (r.task_kind == TaskKind::kExtractive) {
      o.confidence = question_confidence(policy, r);
      o.score = token_f1(r.candidates.front().answer_text, r.gold.text_spans);
      continue;
    }
    std::size_t answered;
    if (mode == SelectionMode::kQa) {
      answered = qa_pick(r);
      o.confidence = rank_score(policy, r.candidates[answered]);
    } else {
      const auto ranked = select_answer(policy, r);
      answered = selected_index(ranked);
      o.confidence = ranked[answered].rank_score;
    }
    const auto& gold = r.gold.choice_index;
    o.score = gold && static_cast<std::size_t>(*gold) == answered ? 1.0 : 0.0;
  }
  return out;
}

namespace {

std::vector<std::size_t> confidence_order(const std::vector<QuestionOutcome>& outcomes) {
  std::vector<std::size_t> order(outcomes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (outcomes[a].confidence != outcomes[b].confidence)
      return outcomes[a].confidence > outcomes[b].confidence;
    return outcomes[a].question_id < outcomes[b].question_id;
  });
  return order;
}

}  // namespace

CoverageReport coverage_curve(const std::vector<QuestionRecord>& records,
                              const RankingPolicy& policy, const std::vector<double>& coverages,
                              SelectionMode mode) {
  check_coverages(coverages);
  const TaskKind kind = common_kind(records);
  const auto outcomes = score_questions(records, policy, mode);
  const auto order = confidence_order(outcomes);

  std::vector<double> ranked_scores;
  ranked_scores.reserve(order.size());
  for (auto i : order) ranked_scores.push_back(outcomes[i].score);

  CoverageReport report;
  report.dataset_id = records.front().dataset_id;
  report.policy_name = policy.name();
  for (double c : coverages) {
    const std::size_t n = answered_count(c, records.size());
    report.rows.push_back({c, n,
                           kind == TaskKind::kMultipleChoice ? MetricKind::kAccuracy : MetricKind::kF1,
                           exact_sum(std::span(ranked_scores).first(n)) / static_cast<double>(n)});
  }
  return report;
}

double unselective_metric(const std::vector<QuestionRecord>& records, SelectionMode mode,
                          const RankingPolicy& policy) {
  common_kind(records);
  std::vector<double> scores;
  for (const auto& o : score_questions(records, policy, mode)) scores.push_back(o.score);
  return exact_sum(scores) / static_cast<double>(records.size());
}

PolicyGrid compare_policies(const std::vector<QuestionRecord>& records,
                            const std::vector<NamedPolicy>& policies,
                            const std::vector<double>& coverages, SelectionMode mode) {
  check_coverages(coverages);
  PolicyGrid grid;
  grid.coverages = coverages;
  for (const auto& p : policies) grid.policies.push_back(p.name);
  grid.datasets = dataset_ids(records);

  for (const auto& ds : grid.datasets) {
    const auto subset = filter_dataset(records, ds);
    grid.metrics.push_back(subset.front().task_kind == TaskKind::kMultipleChoice
                               ? MetricKind::kAccuracy
                               : MetricKind::kF1);
    std::vector<std::vector<std::optional<double>>> per_cov(
        coverages.size(), std::vector<std::optional<double>>(policies.size()));
    for (std::size_t p = 0; p < policies.size(); ++p) {
      if (!policies[p].policy) continue;
      const auto curve = coverage_curve(subset, *policies[p].policy, coverages, mode);
      for (std::size_t c = 0; c < coverages.size(); ++c) per_cov[c][p] = curve.rows[c].value;
    }
    grid.values.push_back(std::move(per_cov));
  }

  grid.average.assign(coverages.size(), std::vector<std::optional<double>>(policies.size()));
  if (!grid.datasets.empty()) {
    for (std::size_t c = 0; c < coverages.size(); ++c) {
      for (std::size_t p = 0; p < policies.size(); ++p) {
        double sum = 0.0;
        bool complete = true;
        for (std::size_t d = 0; d < grid.datasets.size(); ++d) {
          if (!grid.values[d][c][p]) {
            complete = false;
            break;
          }
          sum += *grid.values[d][c][p];
        }
        if (complete) grid.average[c][p] = sum / static_cast<double>(grid.datasets.size());
      }
    }
  }
  return grid;
}

Table grid_table(const PolicyGrid& grid) {
  Table t;
  t.header = {"coverage", "dataset", "metric"};
  for (const auto& p : grid.policies) t.header.push_back(p);
  auto cell = [](const std::optional<double>& v) {
    return v ? format_percent(v) : std::string(kMissingCell);
  };
  for (std::size_t c = 0; c < grid.coverages.size(); ++c) {
    const std::string cov = format_percent(grid.coverages[c]) + "%";
    for (std::size_t d = 0; d < grid.datasets.size(); ++d) {
      std::vector<std::string> row{cov, grid.datasets[d], std::string(to_string(grid.metrics[d]))};
      for (std::size_t p = 0; p < grid.policies.size(); ++p) row.push_back(cell(grid.values[d][c][p]));
      t.rows.push_back(std::move(row));
    }
    std::string metric;
    if (!grid.metrics.empty() &&
        std::all_of(grid.metrics.begin(), grid.metrics.end(),
                    [&](MetricKind m) { return m == grid.metrics.front(); }))
      metric = to_string(grid.metrics.front());
    else
      metric = "mixed";
    std::vector<std::string> avg{cov, "avg", metric};
    for (std::size_t p = 0; p < grid.policies.size(); ++p) avg.push_back(cell(grid.average[c][p]));
    t.rows.push_back(std::move(avg));
  }
  return t;
}

}  // namespace contrarank
