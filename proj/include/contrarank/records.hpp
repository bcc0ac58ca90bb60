#pragma once

// Score-record model and ingestion.
//
// A score-record file is UTF-8 JSONL, one QuestionRecord per line:
//
//   {"question_id": "...", "dataset_id": "...", "task_kind": "multiple_choice",
//    "question": "...", "context": "...",
//    "gold": {"choice_index": 2} | {"text_spans": ["..."]},
//    "candidates": [{"answer": "...", "hypothesis": "...", "qa_confidence": 0.8,
//                    "nli": {"entail": 0.7, "neutral": 0.2, "contradict": 0.1}}]}
//
// Records are treated as immutable once loaded; every downstream module takes
// them by const reference.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace contrarank {

enum class TaskKind { kMultipleChoice, kExtractive };

std::string_view to_string(TaskKind kind);
// Accepts "multiple_choice" / "extractive". Throws ConfigError otherwise.
TaskKind parse_task_kind(std::string_view text);

// Softmax triple from an NLI classifier.
struct NliScores {
  double entail = 0.0;
  double neutral = 0.0;
  double contradict = 0.0;

  bool operator==(const NliScores&) const = default;
};

inline constexpr double kNliSumTolerance = 1e-3;

struct GoldAnswer {
  std::optional<int> choice_index;
  std::vector<std::string> text_spans;

  bool operator==(const GoldAnswer&) const = default;
};

struct ScoredCandidate {
  std::string answer_text;
  std::string hypothesis_text;
  double qa_confidence = 0.0;
  NliScores nli;

  bool operator==(const ScoredCandidate&) const = default;
};

struct QuestionRecord {
  std::string question_id;
  std::string dataset_id;
  TaskKind task_kind = TaskKind::kMultipleChoice;
  std::string question_text;
  std::string context_text;
  GoldAnswer gold;
  std::vector<ScoredCandidate> candidates;

  // Extractive record with no gold spans.
  bool unanswerable() const {
    return task_kind == TaskKind::kExtractive && gold.text_spans.empty();
  }

  bool operator==(const QuestionRecord&) const = default;
};

struct DatasetManifest {
  std::string dataset_id;
  TaskKind task_kind = TaskKind::kMultipleChoice;
  std::size_t record_count = 0;
  std::string source_path;
  std::vector<std::string> holdout_ids;

  bool operator==(const DatasetManifest&) const = default;
};

// Empty means the record is valid. Every violated invariant is listed.
std::vector<std::string> validate_record(const QuestionRecord& record);

struct LoadSummary {
  std::size_t lines_read = 0;
  std::size_t loaded = 0;
  std::size_t skipped_empty_context = 0;
  // question ids of skipped records, in file order
  std::vector<std::string> skipped_ids;
};

struct LoadResult {
  std::vector<QuestionRecord> records;
  LoadSummary summary;
};

// Parses one JSON line into a record. Structural problems (missing or unknown
// fields, wrong types) throw ParseError tagged with `line_number`; invariant
// checks are left to validate_record.
QuestionRecord parse_record_line(std::string_view line, std::size_t line_number);

// Loads a score-record stream. Records with an empty context are skipped and
// counted. Throws ParseError (malformed line), ValidationError (invariant
// violations, each prefixed with its line) or IntegrityError (duplicate
// (dataset_id, question_id)). When `expected` is set, records of another
// task kind are validation failures.
LoadResult parse_records(std::istream& in, std::optional<TaskKind> expected = std::nullopt);
LoadResult parse_records(const std::filesystem::path& path,
                         std::optional<TaskKind> expected = std::nullopt);

std::string serialize_record(const QuestionRecord& record);
void write_records(std::ostream& out, const std::vector<QuestionRecord>& records);
void write_records(const std::filesystem::path& path, const std::vector<QuestionRecord>& records);

DatasetManifest parse_manifest(const std::filesystem::path& path);
std::string serialize_manifest(const DatasetManifest& manifest);

struct HoldoutSplit {
  std::vector<QuestionRecord> holdout;
  std::vector<QuestionRecord> eval;
};

inline constexpr std::size_t kDefaultHoldoutSize = 100;

// Seeded shuffle keyed on (dataset_id, question_id): the chosen holdout set
// depends only on ids and seed, never on input order. Both output lists keep
// input order. Throws InputError when n exceeds the record count.
HoldoutSplit split_holdout(const std::vector<QuestionRecord>& records, std::size_t n,
                           std::uint64_t seed);

// Splits by a manifest's holdout ids (restricted to the manifest's dataset).
// Throws IntegrityError when a holdout id is not present.
HoldoutSplit split_by_manifest(const std::vector<QuestionRecord>& records,
                               const DatasetManifest& manifest);

// Records of one dataset, input order preserved.
std::vector<QuestionRecord> filter_dataset(const std::vector<QuestionRecord>& records,
                                           std::string_view dataset_id);

// Sorted, deduplicated dataset ids.
std::vector<std::string> dataset_ids(const std::vector<QuestionRecord>& records);

// Stable total order by (dataset_id, question_id).
void sort_canonical(std::vector<QuestionRecord>& records);

}  // namespace contrarank
