#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dh/dataset.hpp"
#include "dh/pipeline.hpp"

namespace dh {

// Parse or validation failure; the message names the offending section/field.
struct ManifestError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DatasetConfig {
  std::string type;  // "image" | "numeric"
  std::string name;
  // image: IDX pairs (plain or gzipped). The test pair is optional; when
  // present the test split is carved from it in given order.
  std::string train_images, train_labels, test_images, test_labels;
  // numeric: one CSV, labels in label_column (-1 = last).
  std::string csv;
  int label_column = -1;
  bool header = false;

  bool has_test_files() const { return !test_images.empty(); }
};

struct SplitConfig {
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  std::size_t test_count = 0;  // with predefined test files, 0 = whole file
  SplitStrategy strategy = SplitStrategy::Shuffled;
};

struct ExperimentConfig {
  Family family = Family::NN;
  std::optional<int> architecture;       // required for NN families
  std::vector<int> epochs;               // {0} for the no-network baselines
  std::vector<std::uint64_t> seeds = {1, 2, 3};
};

enum class Aggregation { Peak, PerRun };

struct OutputConfig {
  std::string directory = "results";
  Aggregation aggregation = Aggregation::Peak;
};

struct RunManifest {
  DatasetConfig dataset;
  SplitConfig split;
  std::vector<ExperimentConfig> experiments;
  OutputConfig output;
};

// Grammar: '#' comments, blank lines, [section] headers, key = value lines.
// Sections: [dataset] and [split] exactly once, [experiment] one or more,
// [output] at most once. List values are comma-separated.
RunManifest parse_manifest_text(const std::string& text);
RunManifest parse_manifest(const std::string& path);

// Re-checks every invariant (parse_manifest already runs this).
void validate_manifest(const RunManifest& m);

}  // namespace dh
