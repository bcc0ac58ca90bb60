// contrarank: answer ranking, calibration and selective-QA evaluation over
// pre-scored QA/NLI records.
//
// Exit codes: 0 ok, 1 invalid data, 2 configuration error, 3 degenerate
// calibration training.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "contrarank/analytics.hpp"
#include "contrarank/calibration.hpp"
#include "contrarank/errors.hpp"
#include "contrarank/hypothesis.hpp"
#include "contrarank/ranking.hpp"
#include "contrarank/records.hpp"
#include "contrarank/rejection.hpp"
#include "contrarank/report.hpp"
#include "contrarank/selective.hpp"
#include "contrarank/synth.hpp"
#include "contrarank/table.hpp"

namespace cr = contrarank;
using json = nlohmann::json;

namespace {

enum Exit { kOk = 0, kDataError = 1, kConfigError = 2, kDegenerate = 3 };

struct Globals {
  std::uint64_t seed = 0;
  std::string format;  // empty: command default
  std::string out_dir;
  bool quiet = false;
};

Globals g;

void note(const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

cr::TableFormat table_format(cr::TableFormat fallback) {
  return g.format.empty() ? fallback : cr::parse_table_format(g.format);
}

std::string out_dir_or(const std::string& fallback) {
  if (!g.out_dir.empty()) return g.out_dir;
  if (const char* env = std::getenv("CONTRARANK_OUT_DIR"); env && *env) return env;
  return fallback;
}

std::vector<double> parse_reals(const std::string& text, const char* what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item.substr(b), &used));
      if (item.find_first_not_of(" \t", b + used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::logic_error&) {
      throw cr::ConfigError(std::string("bad ") + what + " value '" + item + "'");
    }
  }
  if (out.empty()) throw cr::ConfigError(std::string("no ") + what + " given");
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

cr::LoadResult load(const std::string& path) {
  auto result = path == "-" ? cr::parse_records(std::cin) : cr::parse_records(std::filesystem::path(path));
  if (result.summary.skipped_empty_context > 0) {
    note("skipped " + std::to_string(result.summary.skipped_empty_context) +
         " record(s) with an empty context");
  }
  return result;
}

// Writes to path, or stdout when the path is empty or "-".
void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw cr::InputError("cannot write '" + path + "'");
  out << text;
}

std::string model_file_stem(const std::string& name) {
  std::string s = "calibration_";
  for (char c : name) s += c == '+' ? '_' : c;
  return s;
}

// ---------------------------------------------------------------- commands

struct CalibrateArgs {
  std::string records;
  std::vector<std::string> features;
  std::size_t holdout_size = cr::kDefaultHoldoutSize;
  double reg_strength = 1.0;
  int max_iters = 1000;
  double tol = 1e-8;
  std::string out;
  std::string manifest;
  std::string dataset;
};

int run_calibrate(const CalibrateArgs& a) {
  auto records = load(a.records).records;
  std::vector<cr::QuestionRecord> holdout;
  if (!a.manifest.empty()) {
    holdout = cr::split_by_manifest(records, cr::parse_manifest(a.manifest)).holdout;
  } else {
    const auto ids = cr::dataset_ids(records);
    if (ids.empty()) throw cr::InputError("no records to calibrate on");
    std::string ds = a.dataset;
    if (ds.empty()) {
      if (ids.size() > 1) note("several datasets present; calibrating on '" + ids.front() + "'");
      ds = ids.front();
    }
    auto subset = cr::filter_dataset(records, ds);
    if (subset.empty()) throw cr::ConfigError("dataset '" + ds + "' not found in records");
    cr::sort_canonical(subset);
    holdout = cr::split_holdout(subset, a.holdout_size, g.seed).holdout;
  }

  std::vector<cr::FeatureSet> sets;
  for (const auto& f : a.features) sets.push_back(cr::FeatureSet::parse(f));
  if (sets.empty()) sets = cr::report_feature_sets();

  cr::TrainingConfig tc;
  tc.reg_strength = a.reg_strength;
  tc.max_iters = a.max_iters;
  tc.tol = a.tol;

  std::vector<cr::CalibrationModel> models;
  for (const auto& fs : sets) {
    models.push_back(cr::calibrate_on_records(holdout, fs, tc));
    if (!models.back().training_meta.converged)
      note(fs.name() + ": stopped after " + std::to_string(tc.max_iters) + " iterations without converging");
  }

  if (models.size() == 1 && !a.out.empty()) {
    cr::save_model(a.out, models.front());
  } else {
    const std::filesystem::path dir = a.out.empty() ? out_dir_or(".") : a.out;
    std::filesystem::create_directories(dir);
    for (const auto& m : models)
      cr::save_model(dir / (model_file_stem(m.feature_set.name()) + ".json"), m);
  }

  cr::Table t;
  t.header = {"dataset", "combination", "intercept", "QA", "E", "C", "N", "accuracy"};
  auto cell = [](const std::optional<double>& v) { return v ? cr::format_fixed(*v, 2) : std::string(); };
  for (const auto& r : cr::coefficient_report(models)) {
    t.rows.push_back({r.dataset_id, r.combination, cr::format_fixed(r.intercept, 2), cell(r.qa),
                      cell(r.entail), cell(r.contradict), cell(r.neutral), cr::format_fixed(r.accuracy, 2)});
  }
  std::cout << cr::render(t, table_format(cr::TableFormat::kMarkdown));
  return kOk;
}

struct RankArgs {
  std::string policy;
  std::string records;
  bool explain = false;
  std::string out;
};

int run_rank(const RankArgs& a) {
  const auto policy = cr::RankingPolicy::parse(a.policy);
  const auto records = load(a.records).records;
  std::ostringstream out;
  for (const auto& r : records) {
    json line = json::object();
    line["question_id"] = r.question_id;
    line["dataset_id"] = r.dataset_id;
    line["policy"] = policy.name();
    json ranked = json::array();
    for (const auto& ra : cr::select_answer(policy, r)) {
      ranked.push_back({{"candidate_index", ra.candidate_index},
                        {"rank_score", ra.rank_score},
                        {"selected", ra.selected}});
    }
    line["ranked"] = std::move(ranked);
    if (a.explain) {
      json alts = json::array();
      for (const auto& e : cr::explain_selection(policy, r)) {
        if (e.selected) continue;
        alts.push_back({{"candidate_index", e.candidate_index},
                        {"dominant_class", std::string(cr::to_string(e.dominant))},
                        {"contradicted", e.contradicted}});
      }
      line["alternatives"] = std::move(alts);
    }
    out << line.dump() << '\n';
  }
  emit(a.out, out.str());
  return kOk;
}

struct SelectiveArgs {
  std::string records;
  std::string coverages = "0.2,0.5";
  std::string policies = "qa,e,c";
  std::string selection = "qa";
  std::string out;
};

int run_selective(const SelectiveArgs& a) {
  const auto coverages = parse_reals(a.coverages, "coverage");
  const auto mode = cr::parse_selection_mode(a.selection);
  std::vector<cr::NamedPolicy> policies;
  for (const auto& spec : split_list(a.policies)) {
    auto p = cr::RankingPolicy::parse(spec);
    policies.push_back({p.name(), std::move(p)});
  }
  if (policies.empty()) throw cr::ConfigError("no policies given");
  const auto records = load(a.records).records;
  const auto grid = cr::compare_policies(records, policies, coverages, mode);
  emit(a.out, cr::render(cr::grid_table(grid), table_format(cr::TableFormat::kMarkdown)));
  return kOk;
}

struct RejectArgs {
  std::string records;
  std::string signal = "c";
  std::string comparator;
  std::string thresholds = "0.05,0.10,0.25,0.50";
  std::string out;
};

int run_reject(const RejectArgs& a) {
  const auto signal = cr::parse_feature(a.signal);
  if (signal == cr::Feature::kNeutral) throw cr::ConfigError("rejection rules use the qa, e or c signal");
  const auto cmp = a.comparator.empty()
                       ? (signal == cr::Feature::kContradict ? cr::Comparator::kGreaterThan
                                                             : cr::Comparator::kLessThan)
                       : cr::parse_comparator(a.comparator);
  const cr::RejectionRule probe{signal, cmp, 0.5};
  if (!probe.conventional()) {
    note(std::string("warning: ") + std::string(cr::short_name(signal)) +
         (cmp == cr::Comparator::kLessThan ? " < t" : " > t") +
         " rejects the most confident answers; the usual rules are C > t, QA < t and E < t");
  }
  const auto records = load(a.records).records;
  const auto reports = cr::threshold_sweep(signal, cmp, parse_reals(a.thresholds, "threshold"), records);
  emit(a.out, cr::render(cr::rejection_table(reports), table_format(cr::TableFormat::kMarkdown)));
  return kOk;
}

struct CorrelateArgs {
  std::string records;
  std::string scope = "per-dataset";
  std::string signals = "all";
  bool answered_only = false;
  std::string out;
};

int run_correlate(const CorrelateArgs& a) {
  std::vector<cr::CorrelationSignal> signals;
  if (a.signals == "all") {
    signals = cr::all_correlation_signals();
  } else {
    for (const auto& s : split_list(a.signals)) signals.push_back(cr::parse_correlation_signal(s));
  }
  if (signals.empty()) throw cr::ConfigError("no correlation signals given");
  const auto scope = cr::parse_correlation_scope(a.scope);
  const auto records = load(a.records).records;
  cr::CorrelationOptions opt;
  opt.answered_only = a.answered_only;
  const auto report = cr::correlation_report(records, signals, scope, opt);
  emit(a.out, cr::render(cr::correlation_table(report), table_format(cr::TableFormat::kMarkdown)));
  return kOk;
}

struct PostprocessArgs {
  std::string in = "-";
  std::string out = "-";
};

int run_postprocess(const PostprocessArgs& a) {
  std::ifstream file;
  if (a.in != "-") {
    file.open(a.in);
    if (!file) throw cr::InputError("cannot open '" + a.in + "'");
  }
  std::istream& in = a.in == "-" ? std::cin : file;
  std::ostringstream out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw cr::ParseError(n, e.what());
    }
    if (!j.is_object() || !j.contains("answer") || !j.contains("statement") || !j["answer"].is_string() ||
        !j["statement"].is_string())
      throw cr::ParseError(n, "expected {\"answer\": string, \"statement\": string}");
    const auto answer = j["answer"].get<std::string>();
    const auto statement = j["statement"].get<std::string>();
    const auto hyp = cr::postprocess_hypothesis(answer, statement);
    json o = json::object();
    o["hypothesis"] = hyp;
    o["appended"] = hyp != statement;
    out << o.dump() << '\n';
  }
  emit(a.out, out.str());
  return kOk;
}

struct SynthArgs {
  cr::SynthSpec spec;
  std::string task_kind = "multiple_choice";
  std::string out;
};

int run_synth(SynthArgs a) {
  a.spec.task_kind = cr::parse_task_kind(a.task_kind);
  a.spec.seed = g.seed;
  std::ostringstream out;
  cr::write_records(out, cr::generate_synthetic(a.spec));
  emit(a.out, out.str());
  return kOk;
}

struct ReportArgs {
  std::string records;
  cr::ReportConfig config;
  std::string coverages = "0.2,0.5";
  std::string selection = "qa";
  std::string mc_dataset;
  std::string extractive_dataset;
};

int run_report(ReportArgs a) {
  a.config.seed = g.seed;
  a.config.coverages = parse_reals(a.coverages, "coverage");
  a.config.selection = cr::parse_selection_mode(a.selection);
  a.config.format = table_format(cr::TableFormat::kCsv);
  if (!a.mc_dataset.empty()) a.config.calibration_dataset[cr::TaskKind::kMultipleChoice] = a.mc_dataset;
  if (!a.extractive_dataset.empty())
    a.config.calibration_dataset[cr::TaskKind::kExtractive] = a.extractive_dataset;
  auto records = load(a.records).records;
  const auto bundle = cr::report_all(std::move(records), a.config);
  const std::filesystem::path dir = out_dir_or("report");
  cr::write_bundle(bundle, dir);
  for (const auto& p : bundle.problems) note("warning: " + p);
  for (const auto& f : bundle.files) note("wrote " + (dir / f.name).string());
  return kOk;
}

int run_validate(const std::string& path) {
  const auto result = load(path);
  std::cout << "ok: " << result.summary.loaded << " record(s) loaded from " << result.summary.lines_read
            << " line(s), " << result.summary.skipped_empty_context << " skipped\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Answer ranking, calibration and selective QA evaluation over NLI-scored records"};
  app.fallthrough();
  app.require_subcommand(1);
  app.add_option("--seed", g.seed, "Seed for holdout splits and synthetic corpora");
  app.add_option("--format", g.format, "Table format: csv | markdown");
  app.add_option("--out-dir", g.out_dir, "Output directory (default $CONTRARANK_OUT_DIR)");
  app.add_flag("--quiet", g.quiet, "Suppress notes and warnings on stderr");

  int status = kOk;

  CalibrateArgs cal;
  auto* cmd = app.add_subcommand("calibrate", "Fit logistic calibration models on a holdout");
  cmd->add_option("--records", cal.records, "Score-record JSONL ('-' for stdin)")->required();
  cmd->add_option("--features", cal.features, "Feature set, e.g. qa,e,c (repeat for several models)");
  cmd->add_option("--holdout-size", cal.holdout_size, "Holdout questions")->capture_default_str();
  cmd->add_option("--reg-strength", cal.reg_strength, "L2 penalty on the weights")->capture_default_str();
  cmd->add_option("--max-iters", cal.max_iters, "Newton iteration cap")->capture_default_str();
  cmd->add_option("--tol", cal.tol, "Gradient-norm tolerance")->capture_default_str();
  cmd->add_option("--out", cal.out, "Model file (one model) or directory (several)");
  cmd->add_option("--manifest", cal.manifest, "Dataset manifest with fixed holdout ids");
  cmd->add_option("--dataset", cal.dataset, "Dataset to calibrate on (default: first id)");
  cmd->callback([&] { status = run_calibrate(cal); });

  RankArgs rank;
  cmd = app.add_subcommand("rank", "Rank every record's candidates with one policy");
  cmd->add_option("--policy", rank.policy, "qa | e | c | n | calibrated:PATH")->required();
  cmd->add_option("--records", rank.records, "Score-record JSONL ('-' for stdin)")->required();
  cmd->add_flag("--explain", rank.explain, "Annotate the non-selected candidates");
  cmd->add_option("--out", rank.out, "Output JSONL (default stdout)");
  cmd->callback([&] { status = run_rank(rank); });

  SelectiveArgs sel;
  cmd = app.add_subcommand("selective", "Selective QA metric at fixed coverages");
  cmd->add_option("--records", sel.records, "Score-record JSONL ('-' for stdin)")->required();
  cmd->add_option("--coverages", sel.coverages, "Comma-separated coverages")->capture_default_str();
  cmd->add_option("--policies", sel.policies, "Comma-separated policies")->capture_default_str();
  cmd->add_option("--selection", sel.selection, "Answered candidate: qa | policy")->capture_default_str();
  cmd->add_option("--out", sel.out, "Output file (default stdout)");
  cmd->callback([&] { status = run_selective(sel); });

  RejectArgs rej;
  cmd = app.add_subcommand("reject", "Unanswerable-question rejection by threshold rules");
  cmd->add_option("--records", rej.records, "Score-record JSONL ('-' for stdin)")->required();
  cmd->add_option("--signal", rej.signal, "qa | e | c")->capture_default_str();
  cmd->add_option("--comparator", rej.comparator, "lt | gt (default gt for c, lt otherwise)");
  cmd->add_option("--thresholds", rej.thresholds, "Comma-separated thresholds")->capture_default_str();
  cmd->add_option("--out", rej.out, "Output file (default stdout)");
  cmd->callback([&] { status = run_reject(rej); });

  CorrelateArgs cor;
  cmd = app.add_subcommand("correlate", "Spearman correlation of signals with correctness");
  cmd->add_option("--records", cor.records, "Score-record JSONL ('-' for stdin)")->required();
  cmd->add_option("--scope", cor.scope, "per-dataset | pooled")->capture_default_str();
  cmd->add_option("--signals", cor.signals, "all, or a list such as QA,C_score")->capture_default_str();
  cmd->add_flag("--answered-only", cor.answered_only, "Drop unanswerable extractive questions");
  cmd->add_option("--out", cor.out, "Output file (default stdout)");
  cmd->callback([&] { status = run_correlate(cor); });

  PostprocessArgs post;
  cmd = app.add_subcommand("postprocess", "Append answers missing from QA2D statements");
  cmd->add_option("--in", post.in, "JSONL of {answer, statement}")->capture_default_str();
  cmd->add_option("--out", post.out, "JSONL of {hypothesis, appended}")->capture_default_str();
  cmd->callback([&] { status = run_postprocess(post); });

  SynthArgs syn;
  cmd = app.add_subcommand("synth", "Generate a synthetic score-record corpus");
  cmd->add_option("--task-kind", syn.task_kind, "multiple_choice | extractive")->capture_default_str();
  cmd->add_option("--questions", syn.spec.n_questions, "Question count")->capture_default_str();
  cmd->add_option("--candidates", syn.spec.candidates_per_question, "Candidates per MC question")
      ->capture_default_str();
  cmd->add_option("--qa-weight", syn.spec.qa_weight)->capture_default_str();
  cmd->add_option("--e-weight", syn.spec.e_weight)->capture_default_str();
  cmd->add_option("--c-weight", syn.spec.c_weight)->capture_default_str();
  cmd->add_option("--intercept", syn.spec.intercept)->capture_default_str();
  cmd->add_option("--unanswerable", syn.spec.unanswerable_fraction, "Extractive unanswerable fraction")
      ->capture_default_str();
  cmd->add_option("--dataset-id", syn.spec.dataset_id)->capture_default_str();
  cmd->add_option("--out", syn.out, "Output JSONL (default stdout)");
  cmd->callback([&] { status = run_synth(syn); });

  ReportArgs rep;
  cmd = app.add_subcommand("report-all", "Write every evaluation table for one corpus");
  cmd->add_option("--records", rep.records, "Score-record JSONL ('-' for stdin)")->required();
  cmd->add_option("--holdout-size", rep.config.holdout_size, "Calibration holdout questions")
      ->capture_default_str();
  cmd->add_option("--reg-strength", rep.config.reg_strength)->capture_default_str();
  cmd->add_option("--coverages", rep.coverages)->capture_default_str();
  cmd->add_option("--selection", rep.selection, "qa | policy")->capture_default_str();
  cmd->add_flag("--answered-only", rep.config.answered_only, "Correlations skip unanswerable questions");
  cmd->add_option("--mc-calibration-dataset", rep.mc_dataset);
  cmd->add_option("--extractive-calibration-dataset", rep.extractive_dataset);
  cmd->callback([&] { status = run_report(rep); });

  std::string validate_path;
  cmd = app.add_subcommand("validate", "Check a score-record file");
  cmd->add_option("--records", validate_path, "Score-record JSONL ('-' for stdin)")->required();
  cmd->callback([&] { status = run_validate(validate_path); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  } catch (const cr::ValidationError& e) {
    for (const auto& v : e.violations()) std::cerr << "invalid: " << v << '\n';
    return kDataError;
  } catch (const cr::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const cr::DegenerateTrainingError& e) {
    std::cerr << "degenerate training: " << e.what() << '\n';
    return kDegenerate;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kDataError;
  }
  return status;
}
