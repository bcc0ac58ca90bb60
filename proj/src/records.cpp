#include "contrarank/records.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_set>

#include "contrarank/errors.hpp"
#include "contrarank/random.hpp"
#include "json.hpp"

namespace contrarank {

using nlohmann::json;
using nlohmann::ordered_json;

ValidationError::ValidationError(std::vector<std::string> violations)
    : Error([&] {
        std::string msg = "validation failed";
        for (const auto& v : violations) msg += "\n  " + v;
        return msg;
      }()),
      violations_(std::move(violations)) {}

std::string_view to_string(TaskKind kind) {
  return kind == TaskKind::kMultipleChoice ? "multiple_choice" : "extractive";
}

TaskKind parse_task_kind(std::string_view text) {
  if (text == "multiple_choice" || text == "mc") return TaskKind::kMultipleChoice;
  if (text == "extractive") return TaskKind::kExtractive;
  throw ConfigError("unknown task kind '" + std::string(text) + "'");
}

namespace {

bool in_unit_interval(double x) { return x >= 0.0 && x <= 1.0; }

}  // namespace

std::vector<std::string> validate_record(const QuestionRecord& record) {
  std::vector<std::string> out;
  if (record.question_id.empty()) out.emplace_back("question_id is empty");
  if (record.dataset_id.empty()) out.emplace_back("dataset_id is empty");
  if (record.context_text.empty()) out.emplace_back("context is empty");
  if (record.candidates.empty()) out.emplace_back("no candidates");

  if (record.task_kind == TaskKind::kMultipleChoice) {
    if (!record.gold.choice_index) {
      out.emplace_back("multiple_choice record missing choice_index");
    } else if (*record.gold.choice_index < 0 ||
               static_cast<std::size_t>(*record.gold.choice_index) >= record.candidates.size()) {
      out.emplace_back("choice index out of bounds");
    }
  } else {
    if (record.gold.choice_index) out.emplace_back("extractive record carries choice_index");
    if (record.candidates.size() > 1)
      out.emplace_back("extractive record must carry exactly one candidate");
  }

  for (std::size_t i = 0; i < record.candidates.size(); ++i) {
    const auto& c = record.candidates[i];
    const std::string where = "candidate " + std::to_string(i) + ": ";
    if (c.hypothesis_text.empty()) out.push_back(where + "hypothesis is empty");
    if (!in_unit_interval(c.qa_confidence)) out.push_back(where + "qa_confidence outside [0,1]");
    const auto& n = c.nli;
    if (!in_unit_interval(n.entail) || !in_unit_interval(n.neutral) ||
        !in_unit_interval(n.contradict)) {
      out.push_back(where + "NLI score outside [0,1]");
    }
    const double sum = n.entail + n.neutral + n.contradict;
    if (!(std::fabs(sum - 1.0) <= kNliSumTolerance)) out.push_back(where + "NLI scores not normalized");
  }
  return out;
}

namespace {

// Structural access helpers; every failure is a ParseError for this line.
class LineReader {
 public:
  explicit LineReader(std::size_t line) : line_(line) {}

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(line_, what); }

  void expect_keys(const json& obj, std::string_view where,
                   std::initializer_list<std::string_view> required,
                   std::initializer_list<std::string_view> optional = {}) const {
    if (!obj.is_object()) fail(std::string(where) + " must be a JSON object");
    for (auto key : required) {
      if (!obj.contains(std::string(key)))
        fail(std::string(where) + " missing field '" + std::string(key) + "'");
    }
    for (const auto& [key, _] : obj.items()) {
      const bool known =
          std::find(required.begin(), required.end(), key) != required.end() ||
          std::find(optional.begin(), optional.end(), key) != optional.end();
      if (!known) fail(std::string(where) + " has unknown field '" + key + "'");
    }
  }

  std::string string_field(const json& obj, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_string()) fail(std::string("field '") + key + "' must be a string");
    return v.get<std::string>();
  }

  double number_field(const json& obj, const char* key) const {
    const auto& v = obj.at(key);
    if (!v.is_number()) fail(std::string("field '") + key + "' must be a number");
    return v.get<double>();
  }

 private:
  std::size_t line_;
};

}  // namespace

QuestionRecord parse_record_line(std::string_view line, std::size_t line_number) {
  LineReader rd(line_number);
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    rd.fail(std::string("malformed JSON: ") + e.what());
  }
  rd.expect_keys(j, "record",
                 {"question_id", "dataset_id", "task_kind", "question", "context", "gold",
                  "candidates"});

  QuestionRecord r;
  r.question_id = rd.string_field(j, "question_id");
  r.dataset_id = rd.string_field(j, "dataset_id");
  try {
    r.task_kind = parse_task_kind(rd.string_field(j, "task_kind"));
  } catch (const ConfigError& e) {
    rd.fail(e.what());
  }
  r.question_text = rd.string_field(j, "question");
  r.context_text = rd.string_field(j, "context");

  const auto& gold = j.at("gold");
  rd.expect_keys(gold, "gold", {}, {"choice_index", "text_spans"});
  if (gold.contains("choice_index")) {
    const auto& ci = gold.at("choice_index");
    if (!ci.is_number_integer()) rd.fail("gold.choice_index must be an integer");
    r.gold.choice_index = ci.get<int>();
  }
  if (gold.contains("text_spans")) {
    const auto& spans = gold.at("text_spans");
    if (!spans.is_array()) rd.fail("gold.text_spans must be an array");
    for (const auto& s : spans) {
      if (!s.is_string()) rd.fail("gold.text_spans entries must be strings");
      r.gold.text_spans.push_back(s.get<std::string>());
    }
  }

  const auto& cands = j.at("candidates");
  if (!cands.is_array()) rd.fail("candidates must be an array");
  for (const auto& c : cands) {
    rd.expect_keys(c, "candidate", {"answer", "hypothesis", "qa_confidence", "nli"});
    ScoredCandidate sc;
    sc.answer_text = rd.string_field(c, "answer");
    sc.hypothesis_text = rd.string_field(c, "hypothesis");
    sc.qa_confidence = rd.number_field(c, "qa_confidence");
    const auto& nli = c.at("nli");
    rd.expect_keys(nli, "nli", {"entail", "neutral", "contradict"});
    sc.nli.entail = rd.number_field(nli, "entail");
    sc.nli.neutral = rd.number_field(nli, "neutral");
    sc.nli.contradict = rd.number_field(nli, "contradict");
    r.candidates.push_back(std::move(sc));
  }
  return r;
}

LoadResult parse_records(std::istream& in, std::optional<TaskKind> expected) {
  LoadResult result;
  std::vector<std::string> violations;
  std::map<std::pair<std::string, std::string>, std::size_t> seen;

  std::string line;
  std::size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++result.summary.lines_read;

    QuestionRecord r = parse_record_line(line, line_number);
    if (r.context_text.empty()) {
      ++result.summary.skipped_empty_context;
      result.summary.skipped_ids.push_back(r.question_id);
      continue;
    }

    const std::string where = "line " + std::to_string(line_number) + ": ";
    for (auto& v : validate_record(r)) violations.push_back(where + v);
    if (expected && r.task_kind != *expected) {
      violations.push_back(where + "task_kind '" + std::string(to_string(r.task_kind)) +
                           "' does not match expected '" + std::string(to_string(*expected)) +
                           "'");
    }

    auto [it, inserted] = seen.emplace(std::pair{r.dataset_id, r.question_id}, line_number);
    if (!inserted) {
      throw IntegrityError("duplicate question_id '" + r.question_id + "' in dataset '" +
                           r.dataset_id + "' (lines " + std::to_string(it->second) + " and " +
                           std::to_string(line_number) + ")");
    }
    result.records.push_back(std::move(r));
  }
  if (!violations.empty()) throw ValidationError(std::move(violations));
  result.summary.loaded = result.records.size();
  return result;
}

LoadResult parse_records(const std::filesystem::path& path, std::optional<TaskKind> expected) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open record file '" + path.string() + "'");
  return parse_records(in, expected);
}

std::string serialize_record(const QuestionRecord& r) {
  ordered_json j;
  j["question_id"] = r.question_id;
  j["dataset_id"] = r.dataset_id;
  j["task_kind"] = to_string(r.task_kind);
  j["question"] = r.question_text;
  j["context"] = r.context_text;
  ordered_json gold = ordered_json::object();
  if (r.gold.choice_index) gold["choice_index"] = *r.gold.choice_index;
  if (!r.gold.text_spans.empty() || r.task_kind == TaskKind::kExtractive)
    gold["text_spans"] = r.gold.text_spans;
  j["gold"] = std::move(gold);
  ordered_json cands = ordered_json::array();
  for (const auto& c : r.candidates) {
    ordered_json cj;
    cj["answer"] = c.answer_text;
    cj["hypothesis"] = c.hypothesis_text;
    cj["qa_confidence"] = c.qa_confidence;
    cj["nli"] = {{"entail", c.nli.entail},
                 {"neutral", c.nli.neutral},
                 {"contradict", c.nli.contradict}};
    cands.push_back(std::move(cj));
  }
  j["candidates"] = std::move(cands);
  return j.dump();
}

void write_records(std::ostream& out, const std::vector<QuestionRecord>& records) {
  for (const auto& r : records) out << serialize_record(r) << '\n';
}

void write_records(const std::filesystem::path& path, const std::vector<QuestionRecord>& records) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  write_records(out, records);
}

DatasetManifest parse_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open manifest '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  LineReader rd(1);
  json j;
  try {
    j = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    rd.fail(std::string("malformed manifest: ") + e.what());
  }
  rd.expect_keys(j, "manifest",
                 {"dataset_id", "task_kind", "record_count", "source_path", "holdout_ids"});
  DatasetManifest m;
  m.dataset_id = rd.string_field(j, "dataset_id");
  try {
    m.task_kind = parse_task_kind(rd.string_field(j, "task_kind"));
  } catch (const ConfigError& e) {
    rd.fail(e.what());
  }
  if (!j.at("record_count").is_number_unsigned()) rd.fail("record_count must be a non-negative integer");
  m.record_count = j.at("record_count").get<std::size_t>();
  m.source_path = rd.string_field(j, "source_path");
  if (!j.at("holdout_ids").is_array()) rd.fail("holdout_ids must be an array");
  for (const auto& id : j.at("holdout_ids")) {
    if (!id.is_string()) rd.fail("holdout_ids entries must be strings");
    m.holdout_ids.push_back(id.get<std::string>());
  }
  return m;
}

std::string serialize_manifest(const DatasetManifest& m) {
  ordered_json j;
  j["dataset_id"] = m.dataset_id;
  j["task_kind"] = to_string(m.task_kind);
  j["record_count"] = m.record_count;
  j["source_path"] = m.source_path;
  j["holdout_ids"] = m.holdout_ids;
  return j.dump(2);
}

HoldoutSplit split_holdout(const std::vector<QuestionRecord>& records, std::size_t n,
                           std::uint64_t seed) {
  if (n > records.size()) {
    throw InputError("holdout size " + std::to_string(n) + " exceeds record count " +
                     std::to_string(records.size()));
  }
  const std::uint64_t salt = splitmix64(seed);
  std::vector<std::uint64_t> keys(records.size());
  for (std::size_t i = 0; i < records.size(); ++i) {
    std::uint64_t h = fnv1a64(records[i].dataset_id);
    h = fnv1a64(std::string_view("\x1f", 1), h);
    h = fnv1a64(records[i].question_id, h);
    keys[i] = splitmix64(h ^ salt);
  }
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return std::tie(keys[a], records[a].dataset_id, records[a].question_id) <
           std::tie(keys[b], records[b].dataset_id, records[b].question_id);
  });

  std::vector<bool> in_holdout(records.size(), false);
  for (std::size_t k = 0; k < n; ++k) in_holdout[order[k]] = true;

  HoldoutSplit split;
  split.holdout.reserve(n);
  split.eval.reserve(records.size() - n);
  for (std::size_t i = 0; i < records.size(); ++i)
    (in_holdout[i] ? split.holdout : split.eval).push_back(records[i]);
  return split;
}

HoldoutSplit split_by_manifest(const std::vector<QuestionRecord>& records,
                               const DatasetManifest& manifest) {
  std::set<std::string> wanted;
  for (const auto& id : manifest.holdout_ids) {
    if (!wanted.insert(id).second)
      throw IntegrityError("manifest lists holdout id '" + id + "' twice");
  }
  HoldoutSplit split;
  std::set<std::string> found;
  for (const auto& r : records) {
    if (r.dataset_id != manifest.dataset_id) continue;
    if (wanted.count(r.question_id)) {
      found.insert(r.question_id);
      split.holdout.push_back(r);
    } else {
      split.eval.push_back(r);
    }
  }
  for (const auto& id : wanted) {
    if (!found.count(id))
      throw IntegrityError("holdout id '" + id + "' not present in dataset '" +
                           manifest.dataset_id + "'");
  }
  return split;
}

std::vector<QuestionRecord> filter_dataset(const std::vector<QuestionRecord>& records,
                                           std::string_view dataset_id) {
  std::vector<QuestionRecord> out;
  for (const auto& r : records)
    if (r.dataset_id == dataset_id) out.push_back(r);
  return out;
}

std::vector<std::string> dataset_ids(const std::vector<QuestionRecord>& records) {
  std::set<std::string> ids;
  for (const auto& r : records) ids.insert(r.dataset_id);
  return {ids.begin(), ids.end()};
}

void sort_canonical(std::vector<QuestionRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    return std::tie(a.dataset_id, a.question_id) < std::tie(b.dataset_id, b.question_id);
  });
}

}  // namespace contrarank
