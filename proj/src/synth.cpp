#include "contrarank/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

#include "contrarank/errors.hpp"
#include "contrarank/hypothesis.hpp"
#include "contrarank/kernels.hpp"
#include "contrarank/random.hpp"

namespace contrarank {

namespace {

constexpr std::array<const char*, 32> kVocabulary{
    "amber",  "basalt", "cedar",  "delta",  "ember",  "fjord",  "garnet", "harbor",
    "indigo", "juniper", "kelp",  "lagoon", "marble", "nectar", "oasis",  "pepper",
    "quartz", "raven",  "saffron", "tundra", "umber", "velvet", "willow", "xenon",
    "yarrow", "zephyr", "anchor", "beacon", "canyon", "dune",   "estuary", "falcon"};

constexpr std::size_t kMaxDraws = 1'000'000;

struct Signals {
  double qa = 0.0;
  NliScores nli;
};

class Generator {
 public:
  explicit Generator(const SynthSpec& spec) : spec_(spec), rng_(spec.seed) {}

  Signals draw() {
    Signals s;
    s.qa = kernels::sigmoid(rng_.normal(0.0, 1.5));
    const double le = rng_.normal(0.0, 2.0);
    const double ln = rng_.normal(0.0, 2.0);
    const double lc = rng_.normal(0.0, 2.0);
    const double m = std::max({le, ln, lc});
    const double ee = std::exp(le - m), en = std::exp(ln - m), ec = std::exp(lc - m);
    const double z = ee + en + ec;
    s.nli = {ee / z, en / z, ec / z};
    return s;
  }

  double logit(const Signals& s) const {
    return spec_.qa_weight * s.qa + spec_.e_weight * s.nli.entail +
           spec_.c_weight * s.nli.contradict + spec_.intercept;
  }

  // Returns the signals together with the Bernoulli correctness draw.
  std::pair<Signals, bool> draw_labeled() {
    Signals s = draw();
    const bool correct = rng_.bernoulli(kernels::sigmoid(logit(s)));
    return {s, correct};
  }

  Signals draw_conditioned(bool want_correct) {
    for (std::size_t i = 0; i < kMaxDraws; ++i) {
      auto [s, correct] = draw_labeled();
      if (correct == want_correct) return s;
    }
    throw ConfigError(std::string("synthetic coefficients make ") +
                      (want_correct ? "correct" : "incorrect") + " answers unreachable");
  }

  std::string word() { return kVocabulary[rng_.below(kVocabulary.size())]; }

  // Two distinct vocabulary words not in `avoid`.
  std::string phrase(const std::vector<std::string>& avoid = {}) {
    auto pick = [&](const std::vector<std::string>& taken) {
      while (true) {
        std::string w = word();
        if (std::find(taken.begin(), taken.end(), w) == taken.end()) return w;
      }
    };
    std::vector<std::string> taken = avoid;
    std::string a = pick(taken);
    taken.push_back(a);
    std::string b = pick(taken);
    return a + " " + b;
  }

  std::string hypothesis(const std::string& answer, std::size_t q) {
    // a quarter of the statements lose the answer, as QA2D models often do
    std::string statement = rng_.bernoulli(0.25)
                                ? "Question " + std::to_string(q) + " has an answer."
                                : "The answer to question " + std::to_string(q) + " is " + answer + ".";
    return postprocess_hypothesis(answer, statement);
  }

  Rng& rng() { return rng_; }

 private:
  const SynthSpec& spec_;
  Rng rng_;
};

std::string question_id(const std::string& dataset, std::size_t q) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "q%06zu", q);
  return dataset + "-" + buf;
}

std::vector<std::string> split_words(const std::string& s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto j = s.find(' ', i);
    if (j == std::string::npos) j = s.size();
    out.push_back(s.substr(i, j - i));
    i = j + 1;
  }
  return out;
}

}  // namespace

std::vector<QuestionRecord> generate_synthetic(const SynthSpec& spec) {
  if (spec.n_questions == 0) throw ConfigError("synthetic corpus needs at least one question");
  if (spec.dataset_id.empty()) throw ConfigError("synthetic dataset id is empty");
  if (!(spec.unanswerable_fraction >= 0.0 && spec.unanswerable_fraction <= 1.0))
    throw ConfigError("unanswerable fraction must lie in [0, 1]");
  for (double w : {spec.qa_weight, spec.e_weight, spec.c_weight, spec.intercept})
    if (!std::isfinite(w)) throw ConfigError("synthetic coefficients must be finite");
  if (spec.task_kind == TaskKind::kMultipleChoice) {
    if (spec.candidates_per_question < 2)
      throw ConfigError("multiple-choice synthesis needs at least 2 candidates per question");
    if (spec.unanswerable_fraction > 0.0)
      throw ConfigError("unanswerable questions only exist in extractive corpora");
  }

  Generator gen(spec);
  std::vector<QuestionRecord> out;
  out.reserve(spec.n_questions);
  for (std::size_t q = 0; q < spec.n_questions; ++q) {
    QuestionRecord r;
    r.question_id = question_id(spec.dataset_id, q);
    r.dataset_id = spec.dataset_id;
    r.task_kind = spec.task_kind;
    r.question_text = "What does synthetic question " + std::to_string(q) + " ask?";
    r.context_text = "Synthetic passage " + std::to_string(q) + " of " + spec.dataset_id + ".";

    if (spec.task_kind == TaskKind::kMultipleChoice) {
      const std::size_t k = spec.candidates_per_question;
      const auto gold = static_cast<std::size_t>(gen.rng().below(k));
      r.gold.choice_index = static_cast<int>(gold);
      for (std::size_t i = 0; i < k; ++i) {
        const Signals s = gen.draw_conditioned(i == gold);
        ScoredCandidate c;
        c.answer_text = gen.phrase() + " " + std::to_string(i + 1);
        c.hypothesis_text = gen.hypothesis(c.answer_text, q);
        c.qa_confidence = s.qa;
        c.nli = s.nli;
        r.candidates.push_back(std::move(c));
      }
    } else {
      const bool unanswerable = gen.rng().bernoulli(spec.unanswerable_fraction);
      Signals s;
      bool correct = false;
      if (unanswerable) {
        s = gen.draw_conditioned(false);
      } else {
        std::tie(s, correct) = gen.draw_labeled();
      }
      ScoredCandidate c;
      c.answer_text = gen.phrase();
      c.hypothesis_text = gen.hypothesis(c.answer_text, q);
      c.qa_confidence = s.qa;
      c.nli = s.nli;
      if (!unanswerable) {
        if (correct) {
          r.gold.text_spans = {c.answer_text, "the " + c.answer_text};
        } else {
          r.gold.text_spans = {gen.phrase(split_words(c.answer_text))};
        }
      }
      r.candidates.push_back(std::move(c));
    }
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace contrarank
