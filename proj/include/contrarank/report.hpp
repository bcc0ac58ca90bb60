#pragma once

// Full evaluation bundle over one corpus: ranking accuracy (single-signal and
// calibrated), selective QA grids, rejection sweeps, correlation tables and
// the calibration coefficient table.

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "contrarank/calibration.hpp"
#include "contrarank/records.hpp"
#include "contrarank/selective.hpp"
#include "contrarank/table.hpp"

namespace contrarank {

struct ReportConfig {
  std::size_t holdout_size = kDefaultHoldoutSize;
  std::uint64_t seed = 0;
  double reg_strength = 1.0;
  std::vector<double> coverages = kDefaultCoverages;
  SelectionMode selection = SelectionMode::kQa;
  TableFormat format = TableFormat::kCsv;
  bool answered_only = false;
  // Calibration domain per task kind; defaults to the first dataset id of
  // that kind in sorted order.
  std::map<TaskKind, std::string> calibration_dataset;
};

struct ReportFile {
  std::string name;  // file name including extension
  std::string content;
};

struct ReportBundle {
  std::vector<ReportFile> files;
  // Tables or cells that could not be produced, e.g. a degenerate holdout.
  std::vector<std::string> problems;
};

// Feature sets trained for every task kind, in table column order.
std::vector<FeatureSet> report_feature_sets();

// Output depends only on the record set (not its order), the config and the
// seed. Calibration holdout questions are excluded from every evaluation
// table.
ReportBundle report_all(std::vector<QuestionRecord> records, const ReportConfig& config);

// Writes every file into dir (created if missing).
void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir);

}  // namespace contrarank
