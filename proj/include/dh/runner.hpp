#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dh/manifest.hpp"

namespace dh {

// One unit of work: a single (experiment, epoch, seed) combination.
struct Cell {
  std::size_t experiment_index = 0;
  Family family = Family::NN;
  std::optional<int> architecture;
  int epochs = 0;
  std::uint64_t seed = 0;
};

// Manifest order: experiments as listed, then their epoch list, then seeds.
std::vector<Cell> enumerate_cells(const RunManifest& m);

// 16-hex-digit FNV-1a over the cell's identity fields (dataset name, split
// counts, strategy, family, architecture, epochs, seed). Paths are excluded
// so relocating the data does not orphan finished work.
std::string cell_id(const RunManifest& m, const Cell& c);

struct RunOutcome {
  int exit_code = 0;  // 0 all cells done, 1 some failed
  std::size_t total = 0;
  std::size_t computed = 0;
  std::size_t skipped = 0;  // resumed from an earlier results.jsonl
  std::size_t failed = 0;
};

// Executes every cell (up to `jobs` in parallel), appending one JSON record
// per cell to <output>/results.jsonl in enumeration order -- the bytes are
// identical whatever the scheduling, and identical across reruns. Cells whose
// records already exist are skipped; a torn final line (crash artifact) is
// truncated away. Wall times go to timings.jsonl, failures to failures.jsonl
// (rewritten each run), and a report plus plot series are emitted at the end.
RunOutcome run_manifest(const RunManifest& m, int jobs = 1, std::ostream* log = nullptr);

// One parsed results.jsonl record.
struct ResultRecord {
  std::string cell_id;
  std::string model_family;
  std::optional<int> architecture_id;
  int epochs = 0;
  std::optional<double> chosen_hyper;
  double test_accuracy = 0.0;
  std::uint64_t seed = 0;
  std::string dataset_name;
};

std::vector<ResultRecord> load_results(const std::string& path);

enum class ReportFormat { Text, Csv, Json };

// Peak table: fixed family rows {NN, SVM, KNN, NN/SVM, NN/KNN}, one column
// per dataset (sorted), cells = best accuracy as a percent with 2 decimals.
// Missing cells: text em-dash, csv empty, json null.
std::string render_report(const std::vector<ResultRecord>& records, ReportFormat format);

// Flat one-line-per-record listing (the per-run aggregation).
std::string render_per_run(const std::vector<ResultRecord>& records);

// Accuracy-vs-epoch CSV per (dataset, family, architecture) group: one row
// per epoch, one column per seed plus their median. Returns the paths.
std::vector<std::string> write_plot_series(const std::vector<ResultRecord>& records,
                                           const std::string& directory);

}  // namespace dh
