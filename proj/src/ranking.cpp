#include "contrarank/ranking.hpp"

#include <cstdint>

#include "contrarank/errors.hpp"
#include "contrarank/kernels.hpp"

namespace contrarank {

RankingPolicy RankingPolicy::single(Feature signal) { return RankingPolicy(signal); }

RankingPolicy RankingPolicy::calibrated(CalibrationModel model) {
  return RankingPolicy(std::move(model));
}

RankingPolicy RankingPolicy::parse(std::string_view spec) {
  constexpr std::string_view kPrefix = "calibrated:";
  if (spec.substr(0, kPrefix.size()) == kPrefix) {
    const auto path = spec.substr(kPrefix.size());
    if (path.empty()) throw ConfigError("calibrated policy needs a model path");
    return calibrated(load_model(std::filesystem::path(std::string(path))));
  }
  return single(parse_feature(spec));
}

std::string RankingPolicy::name() const {
  if (is_calibrated()) return model().feature_set.name();
  return std::string(short_name(signal()));
}

double rank_score(const RankingPolicy& policy, const ScoredCandidate& c) {
  if (policy.is_calibrated()) return predict(policy.model(), c);
  switch (policy.signal()) {
    case Feature::kQa: return c.qa_confidence;
    case Feature::kEntail: return c.nli.entail;
    case Feature::kNeutral: return c.nli.neutral;
    case Feature::kContradict: return 1.0 - c.nli.contradict;
  }
  return 0.0;
}

std::vector<RankedAnswer> select_answer(const RankingPolicy& policy, const QuestionRecord& record) {
  if (record.candidates.empty())
    throw InputError("question '" + record.question_id + "' has no candidates");
  std::vector<RankedAnswer> ranked(record.candidates.size());
  std::size_t best = 0;
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    ranked[i].candidate_index = i;
    ranked[i].rank_score = rank_score(policy, record.candidates[i]);
    if (ranked[i].rank_score > ranked[best].rank_score) best = i;
  }
  ranked[best].selected = true;
  return ranked;
}

std::size_t selected_index(const std::vector<RankedAnswer>& ranked) {
  for (const auto& r : ranked)
    if (r.selected) return r.candidate_index;
  throw InputError("ranking has no selected candidate");
}

double question_confidence(const RankingPolicy& policy, const QuestionRecord& record) {
  const auto ranked = select_answer(policy, record);
  return ranked[selected_index(ranked)].rank_score;
}

std::string_view to_string(NliClass c) {
  switch (c) {
    case NliClass::kEntailment: return "entailment";
    case NliClass::kNeutral: return "neutral";
    case NliClass::kContradiction: return "contradiction";
  }
  return "?";
}

NliClass dominant_class(const NliScores& nli) {
  NliClass best = NliClass::kEntailment;
  double score = nli.entail;
  if (nli.neutral > score) {
    best = NliClass::kNeutral;
    score = nli.neutral;
  }
  if (nli.contradict > score) best = NliClass::kContradiction;
  return best;
}

std::vector<CandidateExplanation> explain_selection(const RankingPolicy& policy,
                                                    const QuestionRecord& record) {
  const auto ranked = select_answer(policy, record);
  std::vector<CandidateExplanation> out;
  out.reserve(ranked.size());
  for (const auto& r : ranked) {
    const auto& nli = record.candidates[r.candidate_index].nli;
    out.push_back({r.candidate_index, r.rank_score, r.selected, dominant_class(nli),
                   nli.contradict > kContradictedThreshold});
  }
  return out;
}

std::vector<std::size_t> select_all(const RankingPolicy& policy,
                                    const std::vector<QuestionRecord>& records, Backend backend) {
  std::vector<std::size_t> offsets(records.size() + 1, 0);
  for (std::size_t k = 0; k < records.size(); ++k) {
    if (records[k].candidates.empty())
      throw InputError("question '" + records[k].question_id + "' has no candidates");
    offsets[k + 1] = offsets[k] + records[k].candidates.size();
  }
  std::vector<double> scores(offsets.back());
  const auto n = static_cast<std::int64_t>(records.size());
#pragma omp parallel for schedule(static) if (backend == Backend::kParallel && n > 1024)
  for (std::int64_t k = 0; k < n; ++k) {
    const auto& r = records[static_cast<std::size_t>(k)];
    for (std::size_t i = 0; i < r.candidates.size(); ++i)
      scores[offsets[static_cast<std::size_t>(k)] + i] = rank_score(policy, r.candidates[i]);
  }
  const kernels::Segments segs{scores, offsets};
  return backend == Backend::kSerial ? kernels::serial::segment_argmax(segs)
                                     : kernels::parallel::segment_argmax(segs);
}

}  // namespace contrarank
