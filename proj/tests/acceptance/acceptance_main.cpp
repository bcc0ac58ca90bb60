// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "contrarank/analytics.hpp"
#include "contrarank/calibration.hpp"
#include "contrarank/errors.hpp"
#include "contrarank/hypothesis.hpp"
#include "contrarank/kernels.hpp"
#include "contrarank/metrics.hpp"
#include "contrarank/random.hpp"
#include "contrarank/ranking.hpp"
#include "contrarank/records.hpp"
#include "contrarank/rejection.hpp"
#include "contrarank/report.hpp"
#include "contrarank/selective.hpp"
#include "contrarank/synth.hpp"
#include "fuzz.hpp"
#include "oracles.hpp"

using namespace contrarank;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void fail(const std::string& why) {
    if (pass) detail = why;
    pass = false;
  }
  void require(bool ok, const std::string& why) {
    if (!ok) fail(why);
  }
};

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string fmt(const char* f, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof buf, f, a, b);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome rejection_formulas() {
  Outcome o;
  struct Row {
    const char* label;
    std::uint64_t tp, fp;
    double rejects;  // as stated for the C > 50% row; the others use the published value
  };
  const std::vector<Row> rows{{"C > 50%", 2543, 77, 42.77}, {"E < 50%", 4573, 1007, -1},
                              {"C > 5%", 4527, 804, -1}};
  for (const auto& row : rows) {
    const auto& published = oracle::published_rejection_rows();
    auto it = std::find_if(published.begin(), published.end(),
                           [&](const auto& p) { return std::string(p.label) == row.label; });
    if (it == published.end()) {
      o.fail(std::string("no published row ") + row.label);
      continue;
    }
    const auto tp_solved =
        static_cast<std::uint64_t>(std::llround(it->recall / 100 * oracle::kSquadDevTotal));
    const auto fp_solved = static_cast<std::uint64_t>(
        std::llround((100 - it->accepts) / 100 * oracle::kSquadDevTotal));
    o.require(tp_solved == row.tp && fp_solved == row.fp,
              std::string(row.label) + ": back-solved counts differ");

    RejectionCounts c;
    c.total = oracle::kSquadDevTotal;
    c.unanswerable_total = oracle::kSquadDevUnanswerable;
    c.tp = row.tp;
    c.fp = row.fp;
    c.fn = c.unanswerable_total - c.tp;
    c.tn = c.total - c.unanswerable_total - c.fp;
    const auto m = rejection_metrics(c);
    const double rejects = row.rejects > 0 ? row.rejects : it->rejects;
    auto close = [&](double got, double want, const char* what) {
      o.require(std::fabs(100 * got - want) <= 0.02,
                std::string(row.label) + " " + what + fmt(": %.4f vs %.2f", 100 * got, want));
    };
    close(*m.precision, it->precision, "precision");
    close(m.f1, it->f1, "F1");
    close(*m.accepts, it->accepts, "accepts");
    close(*m.rejects, rejects, "rejects");
  }
  if (o.pass) o.detail = "3 rows within 0.02pp";
  return o;
}

// ---------------------------------------------------------------------------

std::vector<QuestionRecord> mc_corpus(std::size_t n, std::uint64_t seed, std::size_t k = 4) {
  SynthSpec spec;
  spec.n_questions = n;
  spec.candidates_per_question = k;
  spec.seed = seed;
  return generate_synthetic(spec);
}

Outcome calibration_oracle() {
  Outcome o;
  const std::vector<std::string> subsets{"QA+E+C", "QA+C", "E+C", "QA+N", "QA+E+C+N"};
  double worst = 0.0;
  for (std::size_t s = 0; s < subsets.size(); ++s) {
    const auto fs = FeatureSet::parse(subsets[s]);
    const auto data = build_training_set(mc_corpus(100, 1000 + s), fs);
    TrainingConfig cfg;
    cfg.reg_strength = 1.0;
    const auto model = train_calibration(data, fs, cfg);
    const auto ref = oracle::fit_logistic(data, cfg.reg_strength);
    double diff = std::fabs(model.intercept - ref.theta[0]);
    for (std::size_t j = 0; j < model.weights.size(); ++j)
      diff = std::max(diff, std::fabs(model.weights[j] - ref.theta[j + 1]));
    worst = std::max(worst, diff);
    o.require(diff <= 1e-4, subsets[s] + fmt(": weight diff %.3g", diff));
  }

  // central differences at random parameter points
  Rng rng(77);
  const auto fs = FeatureSet::parse("QA+E+C+N");
  const auto data = build_training_set(mc_corpus(100, 2000), fs);
  double worst_rel = 0.0;
  for (int p = 0; p < 10; ++p) {
    std::vector<double> theta(fs.size() + 1);
    for (auto& t : theta) t = rng.normal(0.0, 2.0);
    const auto obj = regularized_objective(data, theta, 1.0, Backend::kSerial);
    std::vector<double> fd(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) {
      const double h = 1e-5 * std::max(1.0, std::fabs(theta[j]));
      auto plus = theta, minus = theta;
      plus[j] += h;
      minus[j] -= h;
      fd[j] = (static_cast<double>(oracle::logistic_loss(data, plus, 1.0)) -
               static_cast<double>(oracle::logistic_loss(data, minus, 1.0))) /
              (2 * h);
    }
    double num = 0.0, den = 0.0;
    for (std::size_t j = 0; j < fd.size(); ++j) {
      num += (obj.grad[j] - fd[j]) * (obj.grad[j] - fd[j]);
      den += fd[j] * fd[j];
    }
    const double rel = std::sqrt(num) / std::max(std::sqrt(den), 1e-12);
    worst_rel = std::max(worst_rel, rel);
    o.require(rel <= 1e-5, fmt("gradient relative error %.3g at point %.0f", rel, p));
  }
  if (o.pass) o.detail = fmt("max weight diff %.2g, max gradient rel err %.2g", worst, worst_rel);
  return o;
}

// ---------------------------------------------------------------------------

Outcome sign_recovery() {
  Outcome o;
  const auto fs = FeatureSet::parse("QA+E+C");
  const double truth[] = {3.0, 1.5, -1.2};
  {
    const auto model = calibrate_on_records(mc_corpus(10'000, 31), fs);
    for (int j = 0; j < 3; ++j) {
      o.require(std::fabs(model.weights[j] - truth[j]) <= 0.3,
                fmt("large holdout weight %.3f vs %.1f", model.weights[j], truth[j]));
    }
    if (o.pass)
      o.detail = "10k: (" + fmt("%.2f, %.2f", model.weights[0], model.weights[1]) +
                 fmt(", %.2f)", model.weights[2]);
  }
  int recovered = 0;
  for (int seed = 0; seed < 20; ++seed) {
    const auto model = calibrate_on_records(mc_corpus(100, 500 + seed), fs);
    bool ok = true;
    for (int j = 0; j < 3; ++j) ok = ok && (model.weights[j] > 0) == (truth[j] > 0);
    recovered += ok ? 1 : 0;
  }
  o.require(recovered >= 18, fmt("signs recovered in %.0f of 20 seeds", recovered));
  if (o.pass) o.detail += fmt("; holdout 100 signs %.0f/20", recovered);
  return o;
}

// ---------------------------------------------------------------------------

std::vector<QuestionRecord> fuzz_mc(Rng& rng, std::size_t n) {
  std::vector<QuestionRecord> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int steps = i % 2 == 0 ? 10 : 0;
    out.push_back(fuzz::mc_record(rng, i, 2 + rng.below(6), steps));
  }
  return out;
}

std::size_t argmax_first(const std::vector<double>& v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

Outcome ranking_invariants() {
  Outcome o;
  Rng rng(4242);
  const auto records = fuzz_mc(rng, 1000);
  const auto c_policy = RankingPolicy::single(Feature::kContradict);

  CalibrationModel model{FeatureSet::parse("QA+E+C"), -0.4, {2.0, 1.1, -1.7}, {}};
  const std::vector<RankingPolicy> policies{RankingPolicy::single(Feature::kQa),
                                            RankingPolicy::single(Feature::kEntail), c_policy,
                                            RankingPolicy::calibrated(model)};
  const std::vector<std::function<double(double)>> transforms{
      [](double x) { return 2 * x; }, [](double x) { return std::exp(3 * x); },
      [](double x) { return x * x * x + x; }, [](double x) { return std::atan(x) - 7; }};

  std::size_t checked_transforms = 0, skipped_transforms = 0;
  for (const auto& r : records) {
    // single(C) picks the smallest contradiction, lowest index on ties
    std::size_t lowest = 0;
    for (std::size_t i = 1; i < r.candidates.size(); ++i)
      if (r.candidates[i].nli.contradict < r.candidates[lowest].nli.contradict) lowest = i;
    if (selected_index(select_answer(c_policy, r)) != lowest) {
      o.fail("single(C) differs from argmin contradict at " + r.question_id);
      break;
    }

    for (const auto& p : policies) {
      std::vector<double> scores;
      for (const auto& c : r.candidates) scores.push_back(rank_score(p, c));
      const std::size_t chosen = selected_index(select_answer(p, r));
      for (const auto& t : transforms) {
        std::vector<double> mapped;
        for (double s : scores) mapped.push_back(t(s));
        // only a transform that stays strictly increasing on these values applies
        bool strict = true;
        for (std::size_t a = 0; a < scores.size(); ++a)
          for (std::size_t b = 0; b < scores.size(); ++b)
            if (scores[a] < scores[b] && !(mapped[a] < mapped[b])) strict = false;
        if (!strict) {
          ++skipped_transforms;
          continue;
        }
        ++checked_transforms;
        const std::vector<std::size_t> offsets{0, mapped.size()};
        const auto via_kernel =
            kernels::serial::segment_argmax({mapped, offsets}).front();
        if (via_kernel != chosen || argmax_first(mapped) != chosen) {
          o.fail("transform changed the selection at " + r.question_id);
        }
      }

      // permuting candidates moves the pick with its candidate unless tied;
      // ties resolve to the lowest position in the new order
      std::vector<std::size_t> perm(r.candidates.size());
      std::iota(perm.begin(), perm.end(), 0);
      std::shuffle(perm.begin(), perm.end(), rng.engine());
      QuestionRecord shuffled = r;
      for (std::size_t i = 0; i < perm.size(); ++i) shuffled.candidates[i] = r.candidates[perm[i]];
      const std::size_t pick = selected_index(select_answer(p, shuffled));
      const double best = scores[chosen];
      std::size_t expected = perm.size();
      for (std::size_t i = 0; i < perm.size() && expected == perm.size(); ++i)
        if (scores[perm[i]] == best) expected = i;
      if (pick != expected) o.fail("permutation changed the selection at " + r.question_id);
    }
  }
  if (o.pass)
    o.detail = "1000 records, " + std::to_string(checked_transforms) + " transform checks (" +
               std::to_string(skipped_transforms) + " not strict in floating point)";
  return o;
}

// ---------------------------------------------------------------------------

std::vector<QuestionRecord> fuzz_corpus(Rng& rng, std::size_t n) {
  std::vector<QuestionRecord> out;
  const bool extractive = rng.bernoulli(0.5);
  const int steps = rng.bernoulli(0.5) ? 4 : 0;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(extractive ? fuzz::extractive_record(rng, i, 0.3, steps)
                             : fuzz::mc_record(rng, i, 2 + rng.below(4), steps));
  }
  std::shuffle(out.begin(), out.end(), rng.engine());
  return out;
}

Outcome selective_oracle() {
  Outcome o;
  Rng rng(9001);
  CalibrationModel model{FeatureSet::parse("QA+C"), 0.3, {2.5, -1.5}, {}};
  const std::vector<RankingPolicy> policies{RankingPolicy::single(Feature::kQa),
                                            RankingPolicy::single(Feature::kContradict),
                                            RankingPolicy::single(Feature::kEntail),
                                            RankingPolicy::calibrated(model)};
  std::size_t comparisons = 0;
  for (int corpus = 0; corpus < 200; ++corpus) {
    const auto records = fuzz_corpus(rng, 1 + rng.below(20));
    const std::vector<double> coverages{0.2, 0.5, 1.0 / 3.0, 0.05 + 0.9 * rng.uniform(), 1.0};
    for (const auto& p : policies) {
      for (auto mode : {SelectionMode::kQa, SelectionMode::kPolicy}) {
        const auto curve = coverage_curve(records, p, coverages, mode);
        for (std::size_t i = 0; i < coverages.size(); ++i) {
          ++comparisons;
          const double want = oracle::selective_metric(records, p, coverages[i], mode);
          if (curve.rows[i].value != want) {
            o.fail(fmt("corpus %.0f coverage %.3f mismatch", corpus, coverages[i]));
          }
        }
        if (curve.rows.back().value != unselective_metric(records, mode, p))
          o.fail(fmt("corpus %.0f: full coverage differs from unselective metric", corpus));
      }
    }
  }
  if (o.pass) o.detail = std::to_string(comparisons) + " exact comparisons over 200 corpora";
  return o;
}

// ---------------------------------------------------------------------------

Outcome selective_qualitative() {
  Outcome o;
  const auto fs = FeatureSet::parse("QA+C");
  const std::vector<double> coverages{0.2, 0.5};
  int wins = 0;
  double margin20 = 0.0, margin50 = 0.0;
  for (int seed = 0; seed < 20; ++seed) {
    const auto corpus = mc_corpus(1000, 7000 + seed);
    const auto split = split_holdout(corpus, kDefaultHoldoutSize, seed);
    const auto model = calibrate_on_records(split.holdout, fs);
    const auto combined = coverage_curve(split.eval, RankingPolicy::calibrated(model), coverages);
    const auto qa = coverage_curve(split.eval, RankingPolicy::single(Feature::kQa), coverages);
    const bool win = combined.rows[0].value >= qa.rows[0].value &&
                     combined.rows[1].value >= qa.rows[1].value;
    wins += win ? 1 : 0;
    margin20 += combined.rows[0].value - qa.rows[0].value;
    margin50 += combined.rows[1].value - qa.rows[1].value;
  }
  o.require(wins >= 18, fmt("QA+C >= QA in %.0f of 20 seeds", wins));
  o.detail = fmt("QA+C >= QA in %.0f/20 seeds", wins) +
             fmt("; mean gain %.2fpp @20%%, %.2fpp @50%%", 100 * margin20 / 20, 100 * margin50 / 20);
  return o;
}

// ---------------------------------------------------------------------------

Outcome metrics_conformance() {
  Outcome o;
  std::ifstream in(std::filesystem::path(TEST_DATA_DIR) / "token_f1_golden.jsonl");
  std::string line;
  std::size_t cases = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    const auto golds = j.at("golds").get<std::vector<std::string>>();
    const double got = token_f1(j.at("prediction").get<std::string>(), golds);
    const double want = j.at("f1").get<double>();
    ++cases;
    o.require(std::fabs(got - want) <= 1e-12,
              "token_f1 golden case " + std::to_string(cases) + fmt(": %.6f vs %.6f", got, want));
  }
  o.require(cases == 25, "expected 25 token_f1 cases, read " + std::to_string(cases));

  Rng rng(31337);
  double worst = 0.0;
  for (int s = 0; s < 100; ++s) {
    const std::size_t n = 2 + rng.below(60);
    const int steps = s % 3 == 0 ? 0 : 1 + static_cast<int>(rng.below(6));
    std::vector<double> xs(n), ys(n);
    for (std::size_t i = 0; i < n; ++i) {
      xs[i] = fuzz::grid(rng, steps);
      ys[i] = rng.bernoulli(0.5) ? xs[i] + fuzz::grid(rng, steps) : fuzz::grid(rng, steps);
    }
    const auto got = spearman_rho(xs, ys);
    const double want = oracle::spearman(xs, ys);
    if (std::isnan(want)) {
      o.require(!got.has_value(), "spearman defined where the reference is not");
      continue;
    }
    if (!got) {
      o.fail("spearman undefined where the reference is defined");
      continue;
    }
    worst = std::max(worst, std::fabs(*got - want));
  }
  o.require(worst <= 1e-12, fmt("spearman max diff %.3g", worst));

  SynthSpec spec;
  spec.task_kind = TaskKind::kExtractive;
  spec.n_questions = 3000;
  spec.seed = 12;
  spec.dataset_id = "synth-ex";
  const auto corpus = generate_synthetic(spec);
  const std::vector<CorrelationSignal> signals{CorrelationSignal::kCScore, CorrelationSignal::kEScore,
                                               CorrelationSignal::kNScore};
  const auto report = correlation_report(corpus, signals, CorrelationScope::kPooled);
  double c = 0, e = 0, n = 0;
  for (const auto& row : report.rows) {
    if (!row.rho) continue;
    if (row.signal == CorrelationSignal::kCScore) c = *row.rho;
    if (row.signal == CorrelationSignal::kEScore) e = *row.rho;
    if (row.signal == CorrelationSignal::kNScore) n = *row.rho;
  }
  o.require(c < 0 && e > 0 && std::fabs(n) < std::fabs(c) && std::fabs(n) < std::fabs(e),
            fmt("rho pattern C %.3f E %.3f", c, e) + fmt(" N %.3f", n));
  if (o.pass)
    o.detail = "25 F1 cases, spearman diff " + fmt("%.1g", worst) +
               fmt(", rho C %.3f E %.3f", c, e) + fmt(" N %.3f", n);
  return o;
}

// ---------------------------------------------------------------------------

Outcome qa2d_heuristic() {
  Outcome o;
  Rng rng(2718);
  const std::vector<std::string> extra{"He", "left", "early.", "Paris,", "(1999)", "it's", "\"quoted\"",
                                       "--", "Éclair", "42"};
  auto token = [&]() {
    return rng.bernoulli(0.7) ? fuzz::words()[rng.below(fuzz::words().size())]
                              : extra[rng.below(extra.size())];
  };
  auto text = [&](std::size_t max_words) {
    std::string s;
    const auto n = rng.below(max_words + 1);
    for (std::size_t i = 0; i < n; ++i) {
      if (!s.empty() || rng.bernoulli(0.1)) s += rng.bernoulli(0.1) ? "  " : " ";
      s += token();
    }
    return s;
  };
  std::size_t appended = 0;
  for (int i = 0; i < 10'000; ++i) {
    const std::string answer = text(4);
    const std::string statement = text(12);
    const std::string once = postprocess_hypothesis(answer, statement);
    const std::string twice = postprocess_hypothesis(answer, once);
    if (once != statement) ++appended;
    if (once != twice) o.fail("not idempotent for answer '" + answer + "'");
    const double ratio = token_overlap(answer, once).ratio;
    if (ratio < kMinAnswerOverlap) o.fail("overlap " + fmt("%.3f", ratio) + " for '" + answer + "'");
  }
  const std::string boundary = postprocess_hypothesis("she left", "He left early.");
  o.require(boundary == "He left early.", "boundary case changed to '" + boundary + "'");
  if (o.pass) o.detail = "10000 pairs (" + std::to_string(appended) + " appended), boundary unchanged";
  return o;
}

// ---------------------------------------------------------------------------

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome end_to_end_determinism() {
  Outcome o;
  auto records = parse_records(std::filesystem::path(TEST_DATA_DIR) / "fixture_200.jsonl").records;
  o.require(records.size() == 200, "fixture has " + std::to_string(records.size()) + " records");
  ReportConfig cfg;
  cfg.holdout_size = 40;
  cfg.seed = 3;

  const auto base = report_all(records, cfg);
  o.require(base.files.size() == 7, "expected 7 report files, got " + std::to_string(base.files.size()));
  o.require(base.problems.empty(), base.problems.empty() ? "" : "report problem: " + base.problems.front());

  const auto tmp = std::filesystem::temp_directory_path() / "contrarank_acceptance";
  std::filesystem::remove_all(tmp);
  write_bundle(base, tmp / "run0");

  Rng rng(55);
  for (int run = 1; run <= 4; ++run) {
    auto input = records;
    if (run > 1) std::shuffle(input.begin(), input.end(), rng.engine());
    const auto again = report_all(input, cfg);
    const auto dir = tmp / ("run" + std::to_string(run));
    write_bundle(again, dir);
    o.require(again.files.size() == base.files.size(), "file count changed");
    for (std::size_t i = 0; i < std::min(again.files.size(), base.files.size()); ++i) {
      o.require(again.files[i].name == base.files[i].name, "file order changed");
      o.require(again.files[i].content == base.files[i].content,
                base.files[i].name + " differs on run " + std::to_string(run));
      o.require(read_file(dir / base.files[i].name) == read_file(tmp / "run0" / base.files[i].name),
                base.files[i].name + " bytes on disk differ on run " + std::to_string(run));
    }
    o.require(again.problems == base.problems, "problem list changed");
  }
  std::filesystem::remove_all(tmp);
  if (o.pass) o.detail = "7 files identical across 2 runs and 3 shuffled inputs";
  return o;
}

struct Criterion {
  const char* name;
  Outcome (*run)();
};

}  // namespace

int main() {
  const std::vector<Criterion> criteria{
      {"rejection-table-formulas", rejection_formulas},
      {"calibration-oracle-equivalence", calibration_oracle},
      {"coefficient-sign-recovery", sign_recovery},
      {"ranking-invariants", ranking_invariants},
      {"selective-qa-oracle", selective_oracle},
      {"selective-qa-qualitative", selective_qualitative},
      {"metrics-conformance", metrics_conformance},
      {"qa2d-heuristic", qa2d_heuristic},
      {"end-to-end-determinism", end_to_end_determinism},
  };
  int failures = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome result;
    try {
      result = c.run();
    } catch (const std::exception& e) {
      result.fail(std::string("exception: ") + e.what());
    }
    const auto ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %-32s %9.1f ms  %s\n", result.pass ? "PASS" : "FAIL", c.name, ms,
                result.detail.c_str());
    failures += result.pass ? 0 : 1;
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
