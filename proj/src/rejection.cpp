#include "contrarank/rejection.hpp"

#include <algorithm>

#include "contrarank/errors.hpp"

namespace contrarank {

Comparator parse_comparator(std::string_view text) {
  if (text == "lt" || text == "<") return Comparator::kLessThan;
  if (text == "gt" || text == ">") return Comparator::kGreaterThan;
  throw ConfigError("unknown comparator '" + std::string(text) + "' (expected lt or gt)");
}

std::string RejectionRule::label() const {
  std::string pct = format_fixed(threshold * 100.0, 2);
  // 50.00 -> 50, 12.50 -> 12.5
  pct.erase(pct.find_last_not_of('0') + 1);
  if (pct.back() == '.') pct.pop_back();
  return std::string(short_name(signal)) + (comparator == Comparator::kLessThan ? " < " : " > ") +
         pct + "%";
}

bool RejectionRule::conventional() const {
  return signal == Feature::kContradict ? comparator == Comparator::kGreaterThan
                                        : comparator == Comparator::kLessThan;
}

double rule_signal(Feature signal, const ScoredCandidate& c) {
  switch (signal) {
    case Feature::kQa: return c.qa_confidence;
    case Feature::kEntail: return c.nli.entail;
    case Feature::kContradict: return c.nli.contradict;
    case Feature::kNeutral: break;
  }
  throw ConfigError("rejection rules use the QA, E or C signal");
}

RejectionCounts apply_rule(const RejectionRule& rule, const std::vector<QuestionRecord>& records,
                           Backend backend) {
  if (rule.signal == Feature::kNeutral)
    throw ConfigError("rejection rules use the QA, E or C signal");
  std::vector<double> signal;
  std::vector<std::uint8_t> unanswerable;
  signal.reserve(records.size());
  unanswerable.reserve(records.size());
  for (const auto& r : records) {
    if (r.task_kind != TaskKind::kExtractive)
      throw InputError("answer rejection needs extractive records; '" + r.question_id +
                       "' is multiple choice");
    if (r.candidates.size() != 1)
      throw InputError("answer rejection needs exactly one candidate per question; '" +
                       r.question_id + "' has " + std::to_string(r.candidates.size()));
    signal.push_back(rule_signal(rule.signal, r.candidates.front()));
    unanswerable.push_back(r.unanswerable() ? 1 : 0);
  }
  const auto tally =
      backend == Backend::kSerial
          ? kernels::serial::tally_rejections(signal, unanswerable, rule.comparator, rule.threshold)
          : kernels::parallel::tally_rejections(signal, unanswerable, rule.comparator,
                                                rule.threshold);
  RejectionCounts c;
  c.tp = tally.tp;
  c.fp = tally.fp;
  c.fn = tally.fn;
  c.tn = tally.tn;
  c.total = records.size();
  c.unanswerable_total = tally.tp + tally.fn;
  return c;
}

RejectionMetrics rejection_metrics(const RejectionCounts& c) {
  if (c.tp + c.fp + c.fn + c.tn != c.total || c.tp + c.fn != c.unanswerable_total)
    throw InputError("rejection counts do not partition the corpus");
  auto ratio = [](std::uint64_t num, std::uint64_t den) -> std::optional<double> {
    if (den == 0) return std::nullopt;
    return static_cast<double>(num) / static_cast<double>(den);
  };
  RejectionMetrics m;
  m.rejects = ratio(c.tp, c.unanswerable_total);
  if (auto fp_rate = ratio(c.fp, c.total)) m.accepts = 1.0 - *fp_rate;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall_paper = ratio(c.tp, c.total);
  m.recall_standard = ratio(c.tp, c.unanswerable_total);
  if (c.tp > 0) {
    const double p = *m.precision;
    const double r = *m.recall_paper;
    m.f1 = 2.0 * p * r / (p + r);
  }
  return m;
}

std::vector<RejectionReport> threshold_sweep(Feature signal, Comparator comparator,
                                             std::vector<double> thresholds,
                                             const std::vector<QuestionRecord>& records,
                                             Backend backend) {
  std::sort(thresholds.begin(), thresholds.end());
  std::vector<RejectionReport> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    RejectionReport rep;
    rep.rule = {signal, comparator, t};
    rep.counts = apply_rule(rep.rule, records, backend);
    rep.metrics = rejection_metrics(rep.counts);
    out.push_back(rep);
  }
  return out;
}

Table rejection_table(const std::vector<RejectionReport>& reports) {
  Table t;
  t.header = {"rule", "rejects", "accepts", "precision", "recall", "f1", "recall_standard",
              "tp",   "fp",      "fn",      "tn"};
  for (const auto& r : reports) {
    const auto& m = r.metrics;
    t.rows.push_back({r.rule.label(), format_percent(m.rejects), format_percent(m.accepts),
                      format_percent(m.precision), format_percent(m.recall_paper),
                      format_percent(m.f1), format_percent(m.recall_standard),
                      std::to_string(r.counts.tp), std::to_string(r.counts.fp),
                      std::to_string(r.counts.fn), std::to_string(r.counts.tn)});
  }
  return t;
}

}  // namespace contrarank
