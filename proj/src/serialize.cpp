#include "dh/serialize.hpp"

#include <bit>
#include <cstdint>
#include <fstream>
#include <stdexcept>

#include "dh/architecture.hpp"

namespace dh {

namespace {

constexpr std::uint32_t kFormatVersion = 1;

struct Writer {
  std::string buf;

  void u8(std::uint8_t v) { buf.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) buf.push_back(static_cast<char>((v >> s) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) buf.push_back(static_cast<char>((v >> s) & 0xff));
  }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    buf.append(s);
  }
  void magic(const char m[5]) { buf.append(m, 4); }
};

struct Reader {
  std::vector<std::uint8_t> bytes;
  std::size_t pos = 0;
  std::string path;

  void need(std::size_t n) {
    if (pos + n > bytes.size())
      throw std::runtime_error("serialize: truncated file " + path + " (at byte " +
                               std::to_string(pos) + ")");
  }
  std::uint8_t u8() {
    need(1);
    return bytes[pos++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int s = 0; s < 32; s += 8) v |= std::uint32_t(bytes[pos++]) << s;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int s = 0; s < 64; s += 8) v |= std::uint64_t(bytes[pos++]) << s;
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str() {
    std::uint32_t n = u32();
    need(n);
    std::string s(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                  bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    pos += n;
    return s;
  }
  void magic(const char want[5]) {
    need(4);
    for (int i = 0; i < 4; ++i) {
      if (static_cast<char>(bytes[pos + static_cast<std::size_t>(i)]) != want[i])
        throw std::runtime_error("serialize: bad magic in " + path + " (want " +
                                 std::string(want, 4) + ")");
    }
    pos += 4;
  }
  void version() {
    std::uint32_t v = u32();
    if (v != kFormatVersion)
      throw std::runtime_error("serialize: unsupported format version " + std::to_string(v) +
                               " in " + path);
  }
  void expect_end() {
    if (pos != bytes.size())
      throw std::runtime_error("serialize: trailing data in " + path + " (" +
                               std::to_string(bytes.size() - pos) + " extra bytes)");
  }
};

void write_file(const std::string& path, const std::string& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed for " + path);
}

Reader open_reader(const std::string& path) {
  Reader r;
  r.bytes = read_file_bytes(path);
  r.path = path;
  return r;
}

}  // namespace

void save_network(const TrainedNetwork& net, const std::string& path) {
  Writer w;
  w.magic("DHNN");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(net.spec.id));
  w.u32(static_cast<std::uint32_t>(net.spec.class_count));
  w.u32(static_cast<std::uint32_t>(net.spec.input_shape.size()));
  for (std::size_t d : net.spec.input_shape) w.u64(d);
  w.u64(net.seed);
  w.u32(static_cast<std::uint32_t>(net.epochs_trained));
  for (const LayerParams& p : net.parameters) {
    if (!p.has_params()) continue;
    for (double v : p.weights.data) w.f64(v);
    for (double v : p.bias.data) w.f64(v);
  }
  write_file(path, w.buf);
}

TrainedNetwork load_network(const std::string& path) {
  Reader r = open_reader(path);
  r.magic("DHNN");
  r.version();
  int id = static_cast<int>(r.u32());
  int class_count = static_cast<int>(r.u32());
  std::uint32_t rank = r.u32();
  std::vector<std::size_t> input_shape(rank);
  for (std::uint32_t i = 0; i < rank; ++i) input_shape[i] = static_cast<std::size_t>(r.u64());
  std::uint64_t seed = r.u64();
  int epochs = static_cast<int>(r.u32());

  ArchitectureSpec spec = build_architecture(id, input_shape, class_count);
  TrainedNetwork net = init_network(spec, seed);
  net.epochs_trained = epochs;
  for (LayerParams& p : net.parameters) {
    if (!p.has_params()) continue;
    for (double& v : p.weights.data) v = r.f64();
    for (double& v : p.bias.data) v = r.f64();
  }
  r.expect_end();
  return net;
}

void save_svm(const SvmModel& model, const std::string& path) {
  Writer w;
  w.magic("DHSV");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.class_count));
  w.f64(model.hyper.C);
  w.f64(model.hyper.gamma);
  w.u32(static_cast<std::uint32_t>(model.binaries.size()));
  for (std::size_t p = 0; p < model.binaries.size(); ++p) {
    const SvmBinaryModel& b = model.binaries[p];
    w.u32(static_cast<std::uint32_t>(model.pairs[p].first));
    w.u32(static_cast<std::uint32_t>(model.pairs[p].second));
    w.u8(b.converged ? 1 : 0);
    w.f64(b.bias);
    w.f64(b.hyper.C);
    w.f64(b.hyper.gamma);
    std::uint64_t s = b.dual_coefs.size();
    std::uint64_t d = s ? b.support_vectors.shape[1] : 0;
    w.u64(s);
    w.u64(d);
    for (std::size_t i : b.support_indices) w.u64(i);
    for (double v : b.dual_coefs) w.f64(v);
    if (s) {
      for (double v : b.support_vectors.data) w.f64(v);
    }
  }
  write_file(path, w.buf);
}

SvmModel load_svm(const std::string& path) {
  Reader r = open_reader(path);
  r.magic("DHSV");
  r.version();
  SvmModel model;
  model.class_count = static_cast<int>(r.u32());
  model.hyper.C = r.f64();
  model.hyper.gamma = r.f64();
  std::uint32_t pair_count = r.u32();
  std::uint32_t expected =
      static_cast<std::uint32_t>(model.class_count) *
      static_cast<std::uint32_t>(model.class_count - 1) / 2;
  if (pair_count != expected)
    throw std::runtime_error("serialize: " + path + " has " + std::to_string(pair_count) +
                             " binary models, expected " + std::to_string(expected));
  for (std::uint32_t p = 0; p < pair_count; ++p) {
    int a = static_cast<int>(r.u32());
    int b = static_cast<int>(r.u32());
    if (a >= b || b >= model.class_count)
      throw std::runtime_error("serialize: bad class pair in " + path);
    model.pairs.emplace_back(a, b);
    SvmBinaryModel bin;
    bin.converged = r.u8() != 0;
    bin.bias = r.f64();
    bin.hyper.C = r.f64();
    bin.hyper.gamma = r.f64();
    std::uint64_t s = r.u64();
    std::uint64_t d = r.u64();
    bin.support_indices.resize(s);
    for (std::uint64_t i = 0; i < s; ++i) bin.support_indices[i] = static_cast<std::size_t>(r.u64());
    bin.dual_coefs.resize(s);
    for (std::uint64_t i = 0; i < s; ++i) bin.dual_coefs[i] = r.f64();
    if (s) {
      std::vector<double> flat(s * d);
      for (double& v : flat) v = r.f64();
      bin.support_vectors = Tensor({static_cast<std::size_t>(s), static_cast<std::size_t>(d)},
                                   std::move(flat));
    }
    model.binaries.push_back(std::move(bin));
  }
  r.expect_end();
  return model;
}

void save_knn(const KnnModel& model, const std::string& path) {
  Writer w;
  w.magic("DHKN");
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(model.k));
  w.u64(model.points.shape[0]);
  w.u64(model.points.shape[1]);
  for (int l : model.labels) w.u32(static_cast<std::uint32_t>(l));
  for (double v : model.points.data) w.f64(v);
  write_file(path, w.buf);
}

KnnModel load_knn(const std::string& path) {
  Reader r = open_reader(path);
  r.magic("DHKN");
  r.version();
  KnnModel model;
  model.k = static_cast<int>(r.u32());
  std::uint64_t n = r.u64();
  std::uint64_t d = r.u64();
  model.labels.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) model.labels[i] = static_cast<int>(r.u32());
  std::vector<double> flat(n * d);
  for (double& v : flat) v = r.f64();
  model.points =
      Tensor({static_cast<std::size_t>(n), static_cast<std::size_t>(d)}, std::move(flat));
  r.expect_end();
  return model;
}

void save_dataset(const Dataset& ds, const std::string& path) {
  Writer w;
  w.magic("DHDS");
  w.u32(kFormatVersion);
  w.str(ds.name);
  w.u32(static_cast<std::uint32_t>(ds.class_count));
  w.u32(static_cast<std::uint32_t>(ds.features.rank()));
  for (std::size_t d : ds.features.shape) w.u64(d);
  for (int l : ds.labels) w.u32(static_cast<std::uint32_t>(l));
  for (double v : ds.features.data) w.f64(v);
  write_file(path, w.buf);
}

Dataset load_dataset_cache(const std::string& path) {
  Reader r = open_reader(path);
  r.magic("DHDS");
  r.version();
  Dataset ds;
  ds.name = r.str();
  ds.class_count = static_cast<int>(r.u32());
  std::uint32_t rank = r.u32();
  std::vector<std::size_t> shape(rank);
  for (std::uint32_t i = 0; i < rank; ++i) shape[i] = static_cast<std::size_t>(r.u64());
  std::size_t n = rank ? shape[0] : 0;
  ds.labels.resize(n);
  for (std::size_t i = 0; i < n; ++i) ds.labels[i] = static_cast<int>(r.u32());
  std::vector<double> flat(shape_product(shape));
  for (double& v : flat) v = r.f64();
  ds.features = Tensor(std::move(shape), std::move(flat));
  r.expect_end();
  return ds;
}

}  // namespace dh
