#include "dh/dataset.hpp"

#include <zlib.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <set>

#include "dh/rng.hpp"

namespace dh {

std::size_t Dataset::sample_dim() const {
  if (features.rank() < 2) throw std::runtime_error("dataset: features must be rank >= 2");
  std::size_t d = 1;
  for (std::size_t i = 1; i < features.rank(); ++i) d *= features.shape[i];
  return d;
}

std::vector<double> Dataset::row(std::size_t i) const {
  std::size_t d = sample_dim();
  auto begin = features.data.begin() + static_cast<std::ptrdiff_t>(i * d);
  return std::vector<double>(begin, begin + static_cast<std::ptrdiff_t>(d));
}

std::vector<std::uint8_t> read_file_bytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (bytes.size() >= 2 && bytes[0] == 0x1f && bytes[1] == 0x8b) {
    // gzip payload: inflate in chunks.
    std::vector<std::uint8_t> out;
    z_stream zs;
    std::memset(&zs, 0, sizeof(zs));
    if (inflateInit2(&zs, 16 + MAX_WBITS) != Z_OK)
      throw std::runtime_error("zlib init failed for " + path);
    zs.next_in = bytes.data();
    zs.avail_in = static_cast<uInt>(bytes.size());
    std::vector<std::uint8_t> chunk(1 << 20);
    int rc = Z_OK;
    while (rc != Z_STREAM_END) {
      zs.next_out = chunk.data();
      zs.avail_out = static_cast<uInt>(chunk.size());
      rc = inflate(&zs, Z_NO_FLUSH);
      if (rc != Z_OK && rc != Z_STREAM_END) {
        inflateEnd(&zs);
        throw std::runtime_error("gzip decode failed for " + path);
      }
      out.insert(out.end(), chunk.begin(), chunk.begin() + (chunk.size() - zs.avail_out));
    }
    inflateEnd(&zs);
    return out;
  }
  return bytes;
}

namespace {

std::uint32_t read_be32(const std::vector<std::uint8_t>& b, std::size_t off,
                        const std::string& path) {
  if (off + 4 > b.size()) throw IdxTruncated("idx: truncated header in " + path);
  return (std::uint32_t(b[off]) << 24) | (std::uint32_t(b[off + 1]) << 16) |
         (std::uint32_t(b[off + 2]) << 8) | std::uint32_t(b[off + 3]);
}

}  // namespace

Dataset load_idx(const std::string& image_path, const std::string& label_path) {
  auto ib = read_file_bytes(image_path);
  auto lb = read_file_bytes(label_path);

  std::uint32_t imagic = read_be32(ib, 0, image_path);
  if (imagic != 0x00000803u)
    throw IdxBadMagic("idx: bad image magic in " + image_path + " (got " +
                      std::to_string(imagic) + ", want 2051)");
  std::uint32_t lmagic = read_be32(lb, 0, label_path);
  if (lmagic != 0x00000801u)
    throw IdxBadMagic("idx: bad label magic in " + label_path + " (got " +
                      std::to_string(lmagic) + ", want 2049)");

  std::uint32_t n = read_be32(ib, 4, image_path);
  std::uint32_t h = read_be32(ib, 8, image_path);
  std::uint32_t w = read_be32(ib, 12, image_path);
  std::uint32_t ln = read_be32(lb, 4, label_path);
  if (n != ln)
    throw IdxCountMismatch("idx: " + std::to_string(n) + " images vs " + std::to_string(ln) +
                           " labels");

  std::size_t want = 16 + std::size_t(n) * h * w;
  if (ib.size() < want)
    throw IdxTruncated("idx: image payload truncated in " + image_path + " (have " +
                       std::to_string(ib.size()) + " bytes, want " + std::to_string(want) + ")");
  if (lb.size() < 8 + std::size_t(ln))
    throw IdxTruncated("idx: label payload truncated in " + label_path);

  Dataset ds;
  ds.name = image_path;
  std::vector<double> pix(std::size_t(n) * h * w);
  for (std::size_t i = 0; i < pix.size(); ++i) pix[i] = ib[16 + i] / 255.0;
  ds.features = Tensor({n, 1, h, w}, std::move(pix));
  ds.labels.resize(n);
  int max_label = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ds.labels[i] = lb[8 + i];
    max_label = std::max(max_label, ds.labels[i]);
  }
  ds.class_count = max_label + 1;
  return ds;
}

void write_idx(const Dataset& ds, const std::string& image_path, const std::string& label_path) {
  if (ds.features.rank() != 4 || ds.features.shape[1] != 1)
    throw std::runtime_error("write_idx: dataset features must be [N,1,H,W]");
  std::uint32_t n = static_cast<std::uint32_t>(ds.features.shape[0]);
  std::uint32_t h = static_cast<std::uint32_t>(ds.features.shape[2]);
  std::uint32_t w = static_cast<std::uint32_t>(ds.features.shape[3]);

  auto put_be32 = [](std::ofstream& o, std::uint32_t v) {
    unsigned char b[4] = {static_cast<unsigned char>(v >> 24), static_cast<unsigned char>(v >> 16),
                          static_cast<unsigned char>(v >> 8), static_cast<unsigned char>(v)};
    o.write(reinterpret_cast<char*>(b), 4);
  };

  std::ofstream io(image_path, std::ios::binary);
  if (!io) throw std::runtime_error("cannot write " + image_path);
  put_be32(io, 0x00000803u);
  put_be32(io, n);
  put_be32(io, h);
  put_be32(io, w);
  for (double v : ds.features.data) {
    auto byte = static_cast<unsigned char>(std::lround(v * 255.0));
    io.write(reinterpret_cast<char*>(&byte), 1);
  }

  std::ofstream lo(label_path, std::ios::binary);
  if (!lo) throw std::runtime_error("cannot write " + label_path);
  put_be32(lo, 0x00000801u);
  put_be32(lo, n);
  for (int l : ds.labels) {
    auto byte = static_cast<unsigned char>(l);
    lo.write(reinterpret_cast<char*>(&byte), 1);
  }
}

Dataset load_csv(const std::string& path, int label_column, bool header) {
  return load_csv(path, label_column, header, nullptr);
}

Dataset load_csv(const std::string& path, int label_column, bool header,
                 std::vector<long long>* original_labels) {
  auto bytes = read_file_bytes(path);
  std::string text(bytes.begin(), bytes.end());

  std::vector<std::vector<double>> rows;
  std::vector<long long> raw_labels;
  std::size_t line_no = 0;
  std::size_t expected_cols = 0;

  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string::npos) eol = text.size();
    std::string line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    ++line_no;
    if (line.empty()) continue;
    if (header && line_no == 1) continue;

    std::vector<double> cells;
    std::size_t cpos = 0;
    while (true) {
      std::size_t comma = line.find(',', cpos);
      std::string cell = line.substr(cpos, comma == std::string::npos ? std::string::npos
                                                                      : comma - cpos);
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(cell, &used);
      } catch (const std::exception&) {
        throw CsvBadCell("csv: non-numeric cell '" + cell + "' at " + path + ":" +
                         std::to_string(line_no));
      }
      while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
      if (used != cell.size())
        throw CsvBadCell("csv: non-numeric cell '" + cell + "' at " + path + ":" +
                         std::to_string(line_no));
      cells.push_back(v);
      if (comma == std::string::npos) break;
      cpos = comma + 1;
    }

    if (expected_cols == 0) {
      expected_cols = cells.size();
      if (expected_cols < 2)
        throw CsvError("csv: need at least one feature and one label column in " + path);
    } else if (cells.size() != expected_cols) {
      throw CsvRaggedRow("csv: row at " + path + ":" + std::to_string(line_no) + " has " +
                         std::to_string(cells.size()) + " cells, expected " +
                         std::to_string(expected_cols));
    }

    std::size_t lc = label_column < 0 ? expected_cols - 1 : static_cast<std::size_t>(label_column);
    if (lc >= expected_cols)
      throw CsvError("csv: label column " + std::to_string(label_column) + " out of range for " +
                     std::to_string(expected_cols) + " columns");
    double lv = cells[lc];
    if (std::floor(lv) != lv || std::abs(lv) > 1e15)
      throw CsvBadCell("csv: label cell " + std::to_string(lv) + " at " + path + ":" +
                       std::to_string(line_no) + " is not integral");
    raw_labels.push_back(static_cast<long long>(lv));
    cells.erase(cells.begin() + static_cast<std::ptrdiff_t>(lc));
    rows.push_back(std::move(cells));
  }

  if (rows.empty()) throw CsvEmpty("csv: no data rows in " + path);

  // Remap labels to contiguous ids preserving sorted original order.
  std::set<long long> distinct(raw_labels.begin(), raw_labels.end());
  std::map<long long, int> remap;
  std::vector<long long> originals;
  int next = 0;
  for (long long v : distinct) {
    remap[v] = next++;
    originals.push_back(v);
  }
  if (original_labels) *original_labels = originals;

  std::size_t n = rows.size(), d = rows[0].size();
  std::vector<double> flat;
  flat.reserve(n * d);
  for (auto& r : rows) flat.insert(flat.end(), r.begin(), r.end());

  Dataset ds;
  ds.name = path;
  ds.features = Tensor({n, d}, std::move(flat));
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = remap[raw_labels[i]];
  ds.class_count = next;
  return ds;
}

namespace {

Dataset gather(const Dataset& ds, const std::vector<std::size_t>& perm, std::size_t begin,
               std::size_t count, const char* part) {
  Dataset out;
  out.class_count = ds.class_count;
  out.name = ds.name + "/" + part;
  if (count == 0) return out;  // empty part (e.g. predefined test file elsewhere)
  std::size_t d = ds.sample_dim();
  std::vector<std::size_t> shape = ds.features.shape;
  shape[0] = count;
  std::vector<double> flat(count * d);
  out.labels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    std::size_t src = perm[begin + i];
    std::copy_n(ds.features.data.begin() + static_cast<std::ptrdiff_t>(src * d), d,
                flat.begin() + static_cast<std::ptrdiff_t>(i * d));
    out.labels[i] = ds.labels[src];
  }
  out.features = Tensor(std::move(shape), std::move(flat));
  return out;
}

}  // namespace

Splits split(const Dataset& ds, const SplitSpec& spec) {
  std::size_t total = spec.train_count + spec.val_count + spec.test_count;
  if (total > ds.size()) {
    throw std::runtime_error("split: requested " + std::to_string(total) + " samples from " +
                             std::to_string(ds.size()));
  }
  std::vector<std::size_t> perm;
  if (spec.strategy == SplitStrategy::Shuffled) {
    Rng rng(derive_seed(spec.seed, "split"));
    perm = rng.permutation(ds.size());
  } else {
    perm.resize(ds.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  }
  Splits s;
  s.train = gather(ds, perm, 0, spec.train_count, "train");
  s.val = gather(ds, perm, spec.train_count, spec.val_count, "val");
  s.test = gather(ds, perm, spec.train_count + spec.val_count, spec.test_count, "test");
  return s;
}

NormalizationStats normalize_fit(const Dataset& train, NormalizationMode mode) {
  if (train.size() == 0) throw std::runtime_error("normalize_fit: empty dataset");
  NormalizationStats st;
  st.mode = mode;
  if (mode == NormalizationMode::ZScore) {
    std::size_t n = train.size(), d = train.sample_dim();
    st.mean.assign(d, 0.0);
    st.stddev.assign(d, 0.0);
    const double* p = train.features.data.data();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) st.mean[j] += p[i * d + j];
    for (std::size_t j = 0; j < d; ++j) st.mean[j] /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double dv = p[i * d + j] - st.mean[j];
        st.stddev[j] += dv * dv;
      }
    for (std::size_t j = 0; j < d; ++j)
      st.stddev[j] = std::max(std::sqrt(st.stddev[j] / static_cast<double>(n)), 1e-8);
  }
  return st;
}

Dataset normalize_apply(const NormalizationStats& stats, const Dataset& ds) {
  if (ds.size() == 0) throw std::runtime_error("normalize_apply: empty dataset");
  Dataset out = ds;
  if (stats.mode == NormalizationMode::Image) {
    // Idempotent: data already in [0,1] passes through untouched.
    double mx = 0.0;
    for (double v : out.features.data) mx = std::max(mx, v);
    if (mx > 1.0)
      for (double& v : out.features.data) v /= 255.0;
  } else {
    std::size_t d = ds.sample_dim();
    if (stats.mean.size() != d)
      throw std::runtime_error("normalize_apply: stats fitted for dim " +
                               std::to_string(stats.mean.size()) + ", dataset has " +
                               std::to_string(d));
    std::size_t n = ds.size();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        double& v = out.features.data[i * d + j];
        v = (v - stats.mean[j]) / stats.stddev[j];
      }
  }
  return out;
}

Dataset synth_blobs(std::size_t per_class, std::size_t dims, int class_count, double separation,
                    std::uint64_t seed) {
  if (separation <= 0) throw std::runtime_error("synth_blobs: separation must be > 0");
  Rng rng(derive_seed(seed, "blobs"));
  std::size_t n = per_class * static_cast<std::size_t>(class_count);
  std::vector<double> flat(n * dims);
  std::vector<int> labels(n);
  // Centers sit on the first axis at multiples of `separation`, so every pair
  // of centers is at least `separation` apart.
  std::size_t row = 0;
  for (int c = 0; c < class_count; ++c) {
    for (std::size_t i = 0; i < per_class; ++i, ++row) {
      for (std::size_t j = 0; j < dims; ++j) {
        double center = (j == 0) ? separation * c : 0.0;
        flat[row * dims + j] = center + rng.normal();
      }
      labels[row] = c;
    }
  }
  Dataset ds;
  ds.name = "synth_blobs";
  ds.features = Tensor({n, dims}, std::move(flat));
  ds.labels = std::move(labels);
  ds.class_count = class_count;
  return ds;
}

}  // namespace dh
