#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dh/tensor.hpp"

namespace dh {

struct Dataset {
  // Images: [N,1,H,W] scaled to [0,1]. Numeric: [N,D].
  Tensor features;
  std::vector<int> labels;  // contiguous 0..class_count-1
  int class_count = 0;
  std::string name;

  std::size_t size() const { return labels.size(); }
  // Feature width of one sample (product of non-leading dims).
  std::size_t sample_dim() const;
  // Copy of row i as a flat vector (for single-sample predictions).
  std::vector<double> row(std::size_t i) const;
};

enum class SplitStrategy { GivenOrder, Shuffled };

struct SplitSpec {
  std::size_t train_count = 0;
  std::size_t val_count = 0;
  std::size_t test_count = 0;
  std::uint64_t seed = 0;
  SplitStrategy strategy = SplitStrategy::Shuffled;
};

struct Splits {
  Dataset train, val, test;
};

enum class NormalizationMode { Image, ZScore };

struct NormalizationStats {
  NormalizationMode mode = NormalizationMode::Image;
  // ZScore only; per-feature, std floored at 1e-8.
  std::vector<double> mean, stddev;
};

// IDX errors, named distinctly so callers can tell them apart.
struct IdxError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct IdxBadMagic : IdxError {
  using IdxError::IdxError;
};
struct IdxTruncated : IdxError {
  using IdxError::IdxError;
};
struct IdxCountMismatch : IdxError {
  using IdxError::IdxError;
};

// CSV errors.
struct CsvError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct CsvEmpty : CsvError {
  using CsvError::CsvError;
};
struct CsvRaggedRow : CsvError {
  using CsvError::CsvError;
};
struct CsvBadCell : CsvError {
  using CsvError::CsvError;
};

// Reads a whole file; transparently inflates gzip (.gz magic detected).
std::vector<std::uint8_t> read_file_bytes(const std::string& path);

// Canonical MNIST-style IDX pair. Pixels come out divided by 255.
Dataset load_idx(const std::string& image_path, const std::string& label_path);

// Writes a [N,1,H,W] dataset back to an IDX pair; pixel p is stored as the
// byte round(p*255), so values on the /255 grid round-trip bit-exactly.
void write_idx(const Dataset& ds, const std::string& image_path, const std::string& label_path);

// Numeric CSV. label_column == -1 means the last column. Labels must be
// integral; they are remapped to contiguous 0-based ids preserving the sorted
// order of the original values.
Dataset load_csv(const std::string& path, int label_column, bool header);

// Mapping from original label values (sorted) used by load_csv; exposed for
// reporting. remap[i] is the original value of contiguous id i.
Dataset load_csv(const std::string& path, int label_column, bool header,
                 std::vector<long long>* original_labels);

Splits split(const Dataset& ds, const SplitSpec& spec);

NormalizationStats normalize_fit(const Dataset& train, NormalizationMode mode);
Dataset normalize_apply(const NormalizationStats& stats, const Dataset& ds);

// Seeded Gaussian blobs (unit variance) with pairwise center distance >=
// separation; class-major row order. Test-oracle data.
Dataset synth_blobs(std::size_t per_class, std::size_t dims, int class_count, double separation,
                    std::uint64_t seed);

}  // namespace dh
