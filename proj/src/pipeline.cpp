#include "dh/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <stdexcept>

#include "dh/architecture.hpp"

namespace dh {

std::string family_name(Family f) {
  switch (f) {
    case Family::NN:
      return "NN";
    case Family::SVM:
      return "SVM";
    case Family::KNN:
      return "KNN";
    case Family::NN_SVM:
      return "NN/SVM";
    case Family::NN_KNN:
      return "NN/KNN";
  }
  throw std::runtime_error("family_name: bad family");
}

Family family_from_name(const std::string& name) {
  if (name == "NN") return Family::NN;
  if (name == "SVM") return Family::SVM;
  if (name == "KNN") return Family::KNN;
  if (name == "NN/SVM") return Family::NN_SVM;
  if (name == "NN/KNN") return Family::NN_KNN;
  throw std::runtime_error("unknown model family '" + name +
                           "' (want NN, SVM, KNN, NN/SVM or NN/KNN)");
}

bool family_needs_network(Family f) {
  return f == Family::NN || f == Family::NN_SVM || f == Family::NN_KNN;
}

const std::vector<double>& HyperGrid::c_values() {
  static const std::vector<double> grid = {0.01, 0.1, 1.0, 10.0, 100.0, 1000.0};
  return grid;
}

namespace {

std::size_t isqrt(std::size_t n) {
  auto r = static_cast<std::size_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

}  // namespace

std::vector<int> HyperGrid::k_values(std::size_t train_size) {
  std::vector<int> grid = {3, 5, 7, 11, 25};
  grid.push_back(static_cast<int>(isqrt(train_size)));
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  std::erase_if(grid, [&](int k) {
    return k < 1 || static_cast<std::size_t>(k) > train_size;
  });
  return grid;
}

const char* split_part_name(SplitPart p) {
  switch (p) {
    case SplitPart::Train:
      return "train";
    case SplitPart::Val:
      return "val";
    case SplitPart::Test:
      return "test";
  }
  return "?";
}

std::size_t AuditLog::read_count(SplitPart part) const {
  std::size_t n = 0;
  for (const AuditEvent& e : events)
    if (e.kind == AuditEvent::Kind::Read && e.part == part) ++n;
  return n;
}

AuditedSplits::AuditedSplits(Splits splits, std::string dataset_name, AuditLog* log)
    : splits_(std::move(splits)), name_(std::move(dataset_name)), log_(log) {}

const Dataset& AuditedSplits::read(SplitPart part, const std::string& purpose) const {
  const Dataset* ds = nullptr;
  switch (part) {
    case SplitPart::Train:
      ds = &splits_.train;
      break;
    case SplitPart::Val:
      ds = &splits_.val;
      break;
    case SplitPart::Test:
      ds = &splits_.test;
      break;
  }
  if (ds->size() == 0)
    throw std::runtime_error(std::string("split part '") + split_part_name(part) + "' is empty");
  if (log_) log_->events.push_back({AuditEvent::Kind::Read, part, purpose});
  return *ds;
}

void AuditedSplits::net_train_begin() const {
  if (log_) log_->events.push_back({AuditEvent::Kind::NetTrainBegin, SplitPart::Train, ""});
}

void AuditedSplits::net_train_end() const {
  if (log_) log_->events.push_back({AuditEvent::Kind::NetTrainEnd, SplitPart::Train, ""});
}

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (predictions.empty()) throw std::runtime_error("accuracy: empty prediction list");
  if (predictions.size() != truth.size())
    throw std::runtime_error("accuracy: " + std::to_string(predictions.size()) +
                             " predictions vs " + std::to_string(truth.size()) + " labels");
  std::size_t correct = 0;
  for (std::size_t i = 0; i < predictions.size(); ++i)
    if (predictions[i] == truth[i]) ++correct;
  return static_cast<double>(correct) / static_cast<double>(predictions.size());
}

namespace {

Tensor flat_features(const Dataset& ds) {
  return ds.features.reshaped({ds.size(), ds.sample_dim()});
}

Tensor concat_rows(const Tensor& a, const Tensor& b) {
  if (a.shape[1] != b.shape[1])
    throw std::runtime_error("concat: column mismatch, " + shape_str(a.shape) + " vs " +
                             shape_str(b.shape));
  std::vector<double> flat;
  flat.reserve(a.size() + b.size());
  flat.insert(flat.end(), a.data.begin(), a.data.end());
  flat.insert(flat.end(), b.data.begin(), b.data.end());
  return Tensor({a.shape[0] + b.shape[0], a.shape[1]}, std::move(flat));
}

std::vector<int> concat_labels(const std::vector<int>& a, const std::vector<int>& b) {
  std::vector<int> out = a;
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

Dataset concat_datasets(const Dataset& a, const Dataset& b) {
  if (a.sample_dim() != b.sample_dim())
    throw std::runtime_error("concat: sample dim mismatch between '" + a.name + "' and '" +
                             b.name + "'");
  std::vector<std::size_t> shape = a.features.shape;
  shape[0] = a.size() + b.size();
  std::vector<double> flat;
  flat.reserve(a.features.size() + b.features.size());
  flat.insert(flat.end(), a.features.data.begin(), a.features.data.end());
  flat.insert(flat.end(), b.features.data.begin(), b.features.data.end());
  Dataset out;
  out.features = Tensor(std::move(shape), std::move(flat));
  out.labels = concat_labels(a.labels, b.labels);
  out.class_count = std::max(a.class_count, b.class_count);
  out.name = a.name;
  return out;
}

std::vector<std::size_t> sample_shape(const Dataset& ds) {
  return {ds.features.shape.begin() + 1, ds.features.shape.end()};
}

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

}  // namespace

double validate_select(const Tensor& train_x, const std::vector<int>& train_y,
                       const Tensor& val_x, const std::vector<int>& val_y,
                       const std::vector<double>& c_grid) {
  if (c_grid.empty()) throw std::runtime_error("validate_select: empty C grid");
  if (train_y.empty() || val_y.empty())
    throw std::runtime_error("validate_select: empty split");
  std::vector<double> grid = c_grid;
  std::sort(grid.begin(), grid.end());
  std::vector<SvmModel> models;
  try {
    models = svm_fit_grid(train_x, train_y, grid);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("validate_select: ") + e.what());
  }
  double best_value = grid[0];
  double best_acc = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    double acc = accuracy(svm_predict_batch(models[i], val_x), val_y);
    if (acc > best_acc) {  // strict: ties keep the smaller value
      best_acc = acc;
      best_value = grid[i];
    }
  }
  return best_value;
}

int validate_select(const Tensor& train_x, const std::vector<int>& train_y, const Tensor& val_x,
                    const std::vector<int>& val_y, const std::vector<int>& k_grid) {
  if (k_grid.empty()) throw std::runtime_error("validate_select: empty k grid");
  if (train_y.empty() || val_y.empty())
    throw std::runtime_error("validate_select: empty split");
  std::vector<int> grid = k_grid;
  std::sort(grid.begin(), grid.end());
  int best_value = grid[0];
  double best_acc = -1.0;
  for (int k : grid) {
    double acc;
    try {
      KnnModel model = knn_fit(train_x, train_y, k);
      acc = accuracy(knn_predict_batch(model, val_x), val_y);
    } catch (const std::exception& e) {
      throw std::runtime_error("validate_select k=" + std::to_string(k) + ": " + e.what());
    }
    if (acc > best_acc) {
      best_acc = acc;
      best_value = k;
    }
  }
  return best_value;
}

ExperimentResult run_baseline_classifier(Family family, const AuditedSplits& data,
                                         std::uint64_t seed) {
  if (family != Family::SVM && family != Family::KNN)
    throw std::runtime_error("run_baseline_classifier: family must be SVM or KNN");
  auto started = Clock::now();

  const Dataset& tr = data.read(SplitPart::Train, "validate-fit");
  const Dataset& va = data.read(SplitPart::Val, "validate-eval");
  Tensor tr_x = flat_features(tr);
  Tensor va_x = flat_features(va);

  ExperimentResult result;
  result.model_family = family_name(family);
  result.epochs = 0;
  result.seed = seed;
  result.dataset_name = data.dataset_name();

  Tensor merged_x = concat_rows(tr_x, va_x);
  std::vector<int> merged_y = concat_labels(tr.labels, va.labels);
  const Dataset& te = data.read(SplitPart::Test, "final-eval");
  Tensor te_x = flat_features(te);

  if (family == Family::SVM) {
    double c = validate_select(tr_x, tr.labels, va_x, va.labels, HyperGrid::c_values());
    SvmModel model = svm_fit(merged_x, merged_y, c);
    result.chosen_hyper = c;
    result.test_accuracy = accuracy(svm_predict_batch(model, te_x), te.labels);
  } else {
    int k = validate_select(tr_x, tr.labels, va_x, va.labels, HyperGrid::k_values(tr.size()));
    KnnModel model = knn_fit(merged_x, merged_y, k);  // chosen k reused verbatim
    result.chosen_hyper = static_cast<double>(k);
    result.test_accuracy = accuracy(knn_predict_batch(model, te_x), te.labels);
  }
  result.wall_time = seconds_since(started);
  return result;
}

std::vector<int> predict_network(const TrainedNetwork& net, const Dataset& data) {
  constexpr std::size_t kChunk = 256;
  std::size_t n = data.size(), d = data.sample_dim();
  std::vector<int> out(n);
  for (std::size_t start = 0; start < n; start += kChunk) {
    std::size_t rows = std::min(kChunk, n - start);
    std::vector<std::size_t> shape = data.features.shape;
    shape[0] = rows;
    Tensor chunk(std::move(shape),
                 std::vector<double>(
                     data.features.data.begin() + static_cast<std::ptrdiff_t>(start * d),
                     data.features.data.begin() + static_cast<std::ptrdiff_t>((start + rows) * d)));
    ForwardTrace trace = forward(net, chunk, Mode::Infer);
    std::size_t k = trace.probs.shape[1];
    for (std::size_t r = 0; r < rows; ++r) {
      const double* row = trace.probs.data.data() + r * k;
      std::size_t best = 0;
      for (std::size_t c = 1; c < k; ++c)
        if (row[c] > row[best]) best = c;
      out[start + r] = static_cast<int>(best);
    }
  }
  return out;
}

ExperimentResult run_network_baseline(int arch_id, const AuditedSplits& data, int epochs,
                                      std::uint64_t seed) {
  auto started = Clock::now();

  data.net_train_begin();
  const Dataset& tr = data.read(SplitPart::Train, "net-train");
  const Dataset& va = data.read(SplitPart::Val, "net-train");
  Dataset merged = concat_datasets(tr, va);
  ArchitectureSpec spec = build_architecture(arch_id, sample_shape(merged), merged.class_count);
  TrainedNetwork net = train(spec, merged, epochs, seed);
  data.net_train_end();

  const Dataset& te = data.read(SplitPart::Test, "final-eval");
  ExperimentResult result;
  result.model_family = family_name(Family::NN);
  result.architecture_id = arch_id;
  result.epochs = epochs;
  result.seed = seed;
  result.dataset_name = data.dataset_name();
  result.test_accuracy = accuracy(predict_network(net, te), te.labels);
  result.wall_time = seconds_since(started);
  return result;
}

std::vector<ExperimentResult> run_hybrid_multi(int arch_id, const std::vector<Family>& families,
                                               const AuditedSplits& data, int epochs,
                                               std::uint64_t seed) {
  if (families.empty()) throw std::runtime_error("run_hybrid: no families requested");
  for (Family f : families)
    if (f != Family::SVM && f != Family::KNN)
      throw std::runtime_error("run_hybrid: family must be SVM or KNN");
  auto started = Clock::now();

  // 1. network trained on the train split only
  data.net_train_begin();
  const Dataset& tr = data.read(SplitPart::Train, "net-train");
  ArchitectureSpec spec = build_architecture(arch_id, sample_shape(tr), tr.class_count);
  TrainedNetwork net = train(spec, tr, epochs, seed);
  data.net_train_end();

  // 2-3. strip the softmax head, extract train/val features
  FeatureExtractor fx = strip_softmax(net);
  Tensor tr_f, va_f;
  const Dataset* va = nullptr;
  try {
    tr_f = extract_features(fx, data.read(SplitPart::Train, "feature-extract"));
    va = &data.read(SplitPart::Val, "feature-extract");
    va_f = extract_features(fx, *va);
  } catch (const std::exception& e) {
    throw std::runtime_error(std::string("run_hybrid feature extraction: ") + e.what());
  }
  Tensor merged_f = concat_rows(tr_f, va_f);
  std::vector<int> merged_y = concat_labels(tr.labels, va->labels);
  double shared_time = seconds_since(started);

  std::vector<ExperimentResult> results;
  for (Family family : families) {
    auto family_started = Clock::now();
    ExperimentResult result;
    result.model_family = family_name(family == Family::SVM ? Family::NN_SVM : Family::NN_KNN);
    result.architecture_id = arch_id;
    result.epochs = epochs;
    result.seed = seed;
    result.dataset_name = data.dataset_name();

    // 4-6. validate in feature space, refit on train+val features, test once
    const Dataset& te = data.read(SplitPart::Test, "final-eval");
    Tensor te_f = extract_features(fx, te);
    if (family == Family::SVM) {
      double c = validate_select(tr_f, tr.labels, va_f, va->labels, HyperGrid::c_values());
      SvmModel model = svm_fit(merged_f, merged_y, c);
      result.chosen_hyper = c;
      result.test_accuracy = accuracy(svm_predict_batch(model, te_f), te.labels);
    } else {
      int k = validate_select(tr_f, tr.labels, va_f, va->labels,
                              HyperGrid::k_values(tr.size()));
      KnnModel model = knn_fit(merged_f, merged_y, k);
      result.chosen_hyper = static_cast<double>(k);
      result.test_accuracy = accuracy(knn_predict_batch(model, te_f), te.labels);
    }
    result.wall_time = shared_time + seconds_since(family_started);
    results.push_back(std::move(result));
  }
  return results;
}

ExperimentResult run_hybrid(int arch_id, Family family, const AuditedSplits& data, int epochs,
                            std::uint64_t seed) {
  return std::move(run_hybrid_multi(arch_id, {family}, data, epochs, seed)[0]);
}

}  // namespace dh
