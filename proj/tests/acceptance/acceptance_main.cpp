// Acceptance gate: nine checks, one pass/fail line each. Exits nonzero when
// any requested criterion fails. Heavier criteria (4-6) read the provisioned
// datasets under --data-dir; everything else is self-contained.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <limits>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dh/dataset.hpp"
#include "dh/knn.hpp"
#include "dh/manifest.hpp"
#include "dh/network.hpp"
#include "dh/pipeline.hpp"
#include "dh/rng.hpp"
#include "dh/runner.hpp"
#include "dh/svm.hpp"

namespace fs = std::filesystem;
using dh::Dataset;
using dh::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

double median3(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[v.size() / 2];
}

std::string pct(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f%%", v * 100.0);
  return buf;
}

// ---------------------------------------------------------------- criterion 1

// Central differences are only a valid gradient oracle where the loss is
// locally smooth, so the evaluation point must keep every ReLU pre-activation
// away from its kink by more than the largest shift an eps-sized parameter
// perturbation can induce (~2e-5 here). The seed search below is
// deterministic; the margin it found is re-verified on every run.
double relu_margin(const dh::ArchitectureSpec& spec, const dh::ForwardTrace& trace) {
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    if (spec.layers[li].kind == dh::LayerKind::SoftmaxOutput ||
        spec.layers[li].kind == dh::LayerKind::MaxPool)
      continue;
    for (double v : trace.layers[li].pre_act.data) margin = std::min(margin, std::abs(v));
  }
  return margin;
}

Outcome gradient_oracle() {
  std::size_t checked = 0, failed = 0;
  double worst = 0.0, worst_margin = std::numeric_limits<double>::infinity();
  const double eps = 1e-5;
  const double min_margin = 1e-4;

  for (int arch : {4, 5}) {
    dh::ArchitectureSpec spec = arch == 4 ? dh::build_architecture(4, {1, 8, 8}, 3)
                                          : dh::build_architecture(5, {6}, 3);

    dh::Rng data_rng(2000 + static_cast<std::uint64_t>(arch));
    std::vector<std::size_t> bshape = {3};
    bshape.insert(bshape.end(), spec.input_shape.begin(), spec.input_shape.end());
    std::vector<double> bv(dh::shape_product(bshape));
    for (double& x : bv) x = data_rng.uniform(0, 1);
    Tensor batch(bshape, std::move(bv));
    std::vector<int> labels = {0, 1, 2};

    dh::TrainedNetwork net;
    std::vector<Tensor> masks(spec.layers.size());
    bool smooth = false;
    for (std::uint64_t trial = 0; trial < 200 && !smooth; ++trial) {
      net = dh::init_network(spec, 1000 + static_cast<std::uint64_t>(arch) + 17 * trial);
      dh::Rng mask_rng(3000 + static_cast<std::uint64_t>(arch) + 29 * trial);
      dh::ForwardTrace sampled = dh::forward(net, batch, dh::Mode::Train, &mask_rng);
      for (std::size_t li = 0; li < masks.size(); ++li)
        masks[li] = sampled.layers[li].dropout_mask;
      double margin = relu_margin(spec, sampled);
      if (margin > min_margin) {
        smooth = true;
        worst_margin = std::min(worst_margin, margin);
      }
    }
    if (!smooth) return {false, "no smooth evaluation point found"};

    dh::ForwardTrace trace = dh::forward(net, batch, dh::Mode::Train, nullptr, &masks);
    dh::Gradients grads = dh::backward(net, trace, labels);
    std::vector<double*> params = dh::parameter_pointers(net);
    std::vector<const double*> gptr = dh::gradient_pointers(grads);
    if (params.size() != gptr.size() || params.empty())
      return {false, "parameter/gradient pointer mismatch"};

    auto loss_now = [&]() {
      return dh::categorical_cross_entropy(
          dh::forward(net, batch, dh::Mode::Train, nullptr, &masks).probs, labels);
    };

    for (std::size_t i = 0; i < params.size(); ++i) {  // every parameter
      double saved = *params[i];
      *params[i] = saved + eps;
      double up = loss_now();
      *params[i] = saved - eps;
      double dn = loss_now();
      *params[i] = saved;
      double fd = (up - dn) / (2 * eps);
      double an = *gptr[i];
      double tol = std::max(1e-4 * std::max(std::abs(fd), std::abs(an)), 1e-7);
      double gap = std::abs(fd - an);
      worst = std::max(worst, gap / tol);
      if (gap > tol) ++failed;
      ++checked;
    }
  }

  std::ostringstream msg;
  msg << "architectures 4+5, " << checked << " parameters, " << failed
      << " outside tolerance (worst gap " << worst << "x tol, relu margin " << worst_margin
      << ")";
  return {failed == 0, msg.str()};
}

// ---------------------------------------------------------------- criterion 2

// Discretized dual search with the equality constraint eliminated into the
// last variable; the window homes in on the argmax of the concave objective.
double oracle_dual(const Tensor& pts, const std::vector<int>& y, double c, double gamma) {
  std::size_t n = y.size();
  Tensor k = dh::rbf_kernel_matrix(pts, pts, gamma);
  std::vector<double> q(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) q[i * n + j] = y[i] * y[j] * k.at(i, j);

  std::size_t m = n - 1;  // free variables; alpha[m] is determined
  auto eval = [&](const std::vector<double>& a_free, double& out) {
    double balance = 0;
    for (std::size_t i = 0; i < m; ++i) balance += a_free[i] * y[i];
    double last = -balance * y[m];  // y in {-1,+1} so 1/y == y
    if (last < -1e-9 || last > c + 1e-9) return false;
    last = std::clamp(last, 0.0, c);
    std::vector<double> a(a_free);
    a.push_back(last);
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      w += a[i];
      double qa = 0;
      for (std::size_t j = 0; j < n; ++j) qa += q[i * n + j] * a[j];
      w -= 0.5 * a[i] * qa;
    }
    out = w;
    return true;
  };

  std::vector<double> center(m, c / 2), best_a(m, 0.0);
  double best = 0.0;  // alpha = 0 is always feasible (W = 0)
  double hw = c / 2;
  const int grid = 8;  // 9 points per axis
  for (int round = 0; round < 24; ++round) {
    std::vector<int> idx(m, 0);
    std::vector<double> a(m);
    for (;;) {
      for (std::size_t i = 0; i < m; ++i) {
        double lo = std::max(0.0, center[i] - hw), hi = std::min(c, center[i] + hw);
        a[i] = lo + (hi - lo) * idx[i] / grid;
      }
      double w;
      if (eval(a, w) && w > best) {
        best = w;
        best_a = a;
      }
      std::size_t j = 0;
      while (j < m && ++idx[j] > grid) idx[j++] = 0;
      if (j == m) break;
    }
    center = best_a;
    hw /= 2;
  }
  return best;
}

Outcome smo_oracle() {
  dh::Rng rng(42);
  int problems = 0, dual_bad = 0, invariant_bad = 0;
  double worst_gap = 0.0;

  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 2 + rng.below(5);  // 2..6 points
    std::vector<double> v(n * 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i == 0 ? +1 : i == 1 ? -1 : (rng.below(2) ? +1 : -1);
      v[i * 2] = rng.normal() + (y[i] > 0 ? 0.6 : -0.6);
      v[i * 2 + 1] = rng.normal();
    }
    Tensor pts({n, 2}, std::move(v));

    for (double c : {0.1, 1.0, 10.0}) {
      ++problems;
      dh::SvmHyper hyper{c, 0.5};
      // run the solver to (near-)optimality: the 1e-6 agreement bound is a
      // statement about the converged dual maximum, which the production
      // tol=1e-3 termination does not promise
      const double tol = 1e-6;
      dh::SvmBinaryModel model = dh::smo_train_binary(pts, y, hyper, tol);

      std::vector<double> alphas(n, 0.0);
      for (std::size_t s = 0; s < model.support_indices.size(); ++s)
        alphas[model.support_indices[s]] =
            model.dual_coefs[s] * y[model.support_indices[s]];

      bool ok = true;
      double balance = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (alphas[i] < 0.0 || alphas[i] > c) ok = false;
        balance += alphas[i] * y[i];
      }
      if (std::abs(balance) > 1e-6) ok = false;
      for (std::size_t i = 0; i < n; ++i) {
        double yf = y[i] * dh::svm_decision(model, Tensor({2}, {pts.at(i, 0), pts.at(i, 1)}));
        if (alphas[i] == 0.0 && yf < 1.0 - tol) ok = false;
        if (alphas[i] == c && yf > 1.0 + tol) ok = false;
        if (alphas[i] > 0.0 && alphas[i] < c && std::abs(yf - 1.0) > tol) ok = false;
      }
      if (!ok) ++invariant_bad;

      double smo_w = dh::svm_dual_objective(pts, y, alphas, hyper.gamma);
      double oracle_w = oracle_dual(pts, y, c, hyper.gamma);
      double gap = std::abs(smo_w - oracle_w);
      worst_gap = std::max(worst_gap, gap);
      if (gap > 1e-6) ++dual_bad;
    }
  }

  std::ostringstream msg;
  msg << problems << " problems: " << dual_bad << " dual gaps > 1e-6 (worst " << worst_gap
      << "), " << invariant_bad << " KKT/box/equality violations";
  return {dual_bad == 0 && invariant_bad == 0, msg.str()};
}

// ---------------------------------------------------------------- criterion 3

Outcome knn_oracle() {
  dh::Rng rng(77);
  int checked = 0, wrong = 0;
  for (int set = 0; set < 25; ++set) {
    std::size_t n = 40 + rng.below(41);
    std::size_t d = 2 + rng.below(3);
    std::vector<double> v(n * d);
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j)
        v[i * d + j] = static_cast<double>(rng.below(6));  // lattice: exact ties
      labels[i] = static_cast<int>(rng.below(4));
    }
    Tensor pts({n, d}, std::move(v));

    for (int k : {1, 3, 5, 11}) {
      dh::KnnModel model = dh::knn_fit(pts, labels, k);
      for (int qq = 0; qq < 10; ++qq) {
        std::vector<double> qv(d);
        for (std::size_t j = 0; j < d; ++j) qv[j] = static_cast<double>(rng.below(6));
        Tensor x({d}, std::move(qv));

        // brute force: full lexicographic (dist^2, index) sort, then the
        // documented vote/tie rules
        std::vector<std::pair<double, std::size_t>> order;
        for (std::size_t i = 0; i < n; ++i) {
          double s = 0;
          for (std::size_t j = 0; j < d; ++j) {
            double diff = pts.at(i, j) - x.data[j];
            s += diff * diff;
          }
          order.emplace_back(s, i);
        }
        std::sort(order.begin(), order.end());
        std::map<int, int> votes;
        for (int t = 0; t < k; ++t) ++votes[labels[order[static_cast<std::size_t>(t)].second]];
        int top = 0;
        for (auto& [cls, cnt] : votes) top = std::max(top, cnt);
        int want = -1;
        int nearest = labels[order[0].second];
        if (votes[nearest] == top) {
          want = nearest;
        } else {
          for (auto& [cls, cnt] : votes)
            if (cnt == top) {
              want = cls;
              break;
            }
        }

        if (dh::knn_predict(model, x) != want) ++wrong;
        ++checked;
      }
    }
  }
  std::ostringstream msg;
  msg << checked << " queries (k in {1,3,5,11}): " << wrong << " oracle mismatches";
  return {checked == 1000 && wrong == 0, msg.str()};
}

// ------------------------------------------------------- shared split helpers

dh::Splits normalized(dh::Splits s, dh::NormalizationMode mode) {
  dh::NormalizationStats stats = dh::normalize_fit(s.train, mode);
  s.train = dh::normalize_apply(stats, s.train);
  s.val = dh::normalize_apply(stats, s.val);
  s.test = dh::normalize_apply(stats, s.test);
  return s;
}

// ---------------------------------------------------------------- criterion 4

Outcome mnist_trend(const std::string& data_dir) {
  fs::path mnist = fs::path(data_dir) / "mnist";
  fs::path train_images = mnist / "train-images-idx3-ubyte.gz";
  if (!fs::exists(train_images))
    return {false, "mnist not provisioned under " + mnist.string() +
                       " (see data/README.md)"};

  Dataset full_train = dh::load_idx(train_images.string(),
                                    (mnist / "train-labels-idx1-ubyte.gz").string());
  Dataset full_test = dh::load_idx((mnist / "t10k-images-idx3-ubyte.gz").string(),
                                   (mnist / "t10k-labels-idx1-ubyte.gz").string());

  // 2000/500 sampled from the train file, first 1000 of the test file
  dh::Splits sub = dh::split(full_train,
                             dh::SplitSpec{2000, 500, 0, 1, dh::SplitStrategy::Shuffled});
  dh::Splits head = dh::split(full_test,
                              dh::SplitSpec{1000, 0, 0, 1, dh::SplitStrategy::GivenOrder});
  dh::Splits s{sub.train, sub.val, head.train};
  s = normalized(std::move(s), dh::NormalizationMode::Image);

  dh::AuditedSplits raw(s, "mnist");
  double svm_acc = dh::run_baseline_classifier(dh::Family::SVM, raw, 1).test_accuracy;
  dh::AuditedSplits raw2(s, "mnist");
  double knn_acc = dh::run_baseline_classifier(dh::Family::KNN, raw2, 1).test_accuracy;

  std::vector<double> nn_svm, nn_knn;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    dh::AuditedSplits data(s, "mnist");
    std::vector<dh::ExperimentResult> r =
        dh::run_hybrid_multi(2, {dh::Family::SVM, dh::Family::KNN}, data, 5, seed);
    nn_svm.push_back(r[0].test_accuracy);
    nn_knn.push_back(r[1].test_accuracy);
  }
  double med_svm = median3(nn_svm), med_knn = median3(nn_knn);

  std::ostringstream msg;
  msg << "NN/SVM median " << pct(med_svm) << " vs SVM " << pct(svm_acc) << "; NN/KNN median "
      << pct(med_knn) << " vs KNN " << pct(knn_acc)
      << " (arch 2, 5 epochs, seeds 1-3, split 2000/500/1000)";
  return {med_svm >= svm_acc && med_knn >= knn_acc, msg.str()};
}

// ---------------------------------------------------------------- criterion 5

Outcome shuttle_knn(const std::string& data_dir) {
  fs::path csv = fs::path(data_dir) / "shuttle.csv.gz";
  if (!fs::exists(csv))
    return {false, "shuttle not provisioned at " + csv.string() + " (see data/README.md)"};

  Dataset full = dh::load_csv(csv.string(), -1, false);
  if (full.size() != 58000)
    return {false, "expected 58000 shuttle rows, got " + std::to_string(full.size())};

  dh::Splits s = dh::split(full,
                           dh::SplitSpec{29000, 14500, 14500, 1, dh::SplitStrategy::Shuffled});
  s = normalized(std::move(s), dh::NormalizationMode::ZScore);

  dh::AuditedSplits data(s, "shuttle");
  dh::ExperimentResult r = dh::run_baseline_classifier(dh::Family::KNN, data, 1);

  std::ostringstream msg;
  msg << "raw KNN " << pct(r.test_accuracy) << " (k=" << static_cast<int>(*r.chosen_hyper)
      << ", split 29000/14500/14500) vs required 99.00%";
  return {r.test_accuracy >= 0.99, msg.str()};
}

// ---------------------------------------------------------------- criterion 6

Outcome seizure_trend(const std::string& data_dir) {
  fs::path csv;
  if (const char* env = std::getenv("DH_SEIZURE_CSV"); env && *env) {
    csv = env;
  } else {
    for (const char* leaf : {"seizure.csv.gz", "seizure.csv"}) {
      fs::path candidate = fs::path(data_dir) / leaf;
      if (fs::exists(candidate)) {
        csv = candidate;
        break;
      }
    }
  }
  if (csv.empty() || !fs::exists(csv))
    return {false,
            "seizure dataset not provisioned (place the 178-feature UCI CSV at data/"
            "seizure.csv.gz or point DH_SEIZURE_CSV at it; see data/README.md)"};

  Dataset full = dh::load_csv(csv.string(), -1, false);
  if (full.sample_dim() != 178 || full.class_count != 5)
    return {false, "unexpected seizure shape: " + std::to_string(full.sample_dim()) +
                       " features, " + std::to_string(full.class_count) + " classes"};

  dh::Splits s = dh::split(full,
                           dh::SplitSpec{7500, 2000, 2000, 1, dh::SplitStrategy::Shuffled});
  s = normalized(std::move(s), dh::NormalizationMode::ZScore);

  dh::AuditedSplits raw(s, "seizure");
  double svm_acc = dh::run_baseline_classifier(dh::Family::SVM, raw, 1).test_accuracy;

  std::vector<double> nn_svm;
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    dh::AuditedSplits data(s, "seizure");
    nn_svm.push_back(dh::run_hybrid(5, dh::Family::SVM, data, 20, seed).test_accuracy);
  }
  double med = median3(nn_svm);

  std::ostringstream msg;
  msg << "NN/SVM median " << pct(med) << " vs SVM " << pct(svm_acc)
      << "; need a >= 5 point lead (arch 5, 20 epochs, seeds 1-3)";
  return {med - svm_acc >= 0.05, msg.str()};
}

// ---------------------------------------------------------------- criterion 7

Outcome protocol_hygiene() {
  dh::Rng rng(55);
  Dataset blobs;
  {
    std::vector<double> v;
    for (int c = 0; c < 2; ++c)
      for (int i = 0; i < 150; ++i) {
        for (int d = 0; d < 4; ++d)
          v.push_back((d == 0 ? (c == 0 ? -10.0 : 10.0) : 0.0) + rng.normal());
        blobs.labels.push_back(c);
      }
    blobs.features = Tensor({300, 4}, std::move(v));
    blobs.class_count = 2;
    blobs.name = "blobs";
  }
  dh::Splits s = dh::split(blobs, dh::SplitSpec{180, 60, 60, 5, dh::SplitStrategy::Shuffled});

  int experiments = 0, violations = 0;
  auto audit = [&](const dh::AuditLog& log, bool hybrid) {
    ++experiments;
    if (log.read_count(dh::SplitPart::Test) != 1) ++violations;
    bool in_window = false;
    bool test_seen = false;
    for (const dh::AuditEvent& e : log.events) {
      if (e.kind == dh::AuditEvent::Kind::NetTrainBegin) in_window = true;
      else if (e.kind == dh::AuditEvent::Kind::NetTrainEnd) in_window = false;
      else {
        if (e.part == dh::SplitPart::Test) {
          test_seen = true;
          if (e.purpose != "final-eval" || in_window) ++violations;
        } else if (test_seen) {
          ++violations;  // nothing may follow the final evaluation
        }
        if (hybrid && in_window && e.part != dh::SplitPart::Train) ++violations;
      }
    }
  };

  for (dh::Family f : {dh::Family::SVM, dh::Family::KNN}) {
    dh::AuditLog log;
    dh::AuditedSplits data(s, "blobs", &log);
    dh::run_baseline_classifier(f, data, 1);
    audit(log, false);
  }
  {
    dh::AuditLog log;
    dh::AuditedSplits data(s, "blobs", &log);
    dh::run_network_baseline(5, data, 5, 1);
    audit(log, false);
  }
  for (dh::Family f : {dh::Family::SVM, dh::Family::KNN}) {
    dh::AuditLog log;
    dh::AuditedSplits data(s, "blobs", &log);
    dh::run_hybrid(5, f, data, 5, 1);
    audit(log, true);
  }

  std::ostringstream msg;
  msg << experiments
      << " audited experiments: test split read exactly once each, hybrid training windows "
         "saw train-split reads only ("
      << violations << " violations)";
  return {experiments == 5 && violations == 0, msg.str()};
}

// ---------------------------------------------------------------- criterion 8

Outcome determinism() {
  fs::path dir = fs::temp_directory_path() / "dh_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);

  Dataset blobs = dh::synth_blobs(40, 3, 3, 12.0, 11);
  std::ostringstream csv;
  csv.precision(17);
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) csv << blobs.features.at(i, j) << ',';
    csv << blobs.labels[i] << '\n';
  }
  {
    std::ofstream out(dir / "blobs.csv", std::ios::binary);
    out << csv.str();
  }

  auto manifest_for = [&](const std::string& leaf) {
    return dh::parse_manifest_text(
        "[dataset]\ntype = numeric\nname = blobs\ncsv = " + (dir / "blobs.csv").string() +
        "\n[split]\ntrain = 60\nval = 30\ntest = 30\n"
        "[experiment]\nfamily = NN/KNN\narchitecture = 5\nepochs = 2\nseeds = 1, 2\n"
        "[experiment]\nfamily = SVM\nseeds = 1\n"
        "[output]\ndirectory = " + (dir / leaf).string() + "\n");
  };

  auto read = [&](const std::string& leaf) {
    std::ifstream in(dir / leaf / "results.jsonl", std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };

  dh::RunManifest a = manifest_for("a");
  dh::RunManifest b = manifest_for("b");
  if (dh::run_manifest(a, 1).exit_code != 0) return {false, "run A failed"};
  if (dh::run_manifest(b, 3).exit_code != 0) return {false, "run B failed"};
  bool fresh_equal = read("a") == read("b");

  dh::RunOutcome resumed = dh::run_manifest(a, 1);  // no-op resume
  bool resume_equal = resumed.skipped == resumed.total && read("a") == read("b");

  std::ostringstream msg;
  msg << "results.jsonl byte-identical across reruns and jobs=1 vs jobs=3 (fresh "
      << (fresh_equal ? "yes" : "NO") << ", resume " << (resume_equal ? "yes" : "NO") << ")";
  return {fresh_equal && resume_equal, msg.str()};
}

// ---------------------------------------------------------------- criterion 9

Outcome feature_contract() {
  int bad = 0;
  for (int arch = 1; arch <= 7; ++arch) {
    std::vector<std::size_t> input = arch <= 4 ? std::vector<std::size_t>{1, 16, 16}
                                               : std::vector<std::size_t>{12};
    dh::ArchitectureSpec spec = dh::build_architecture(arch, input, 4);
    dh::TrainedNetwork net = dh::init_network(spec, 500 + static_cast<std::uint64_t>(arch));
    dh::FeatureExtractor fx = dh::strip_softmax(net);
    if (fx.output_dim != 256) ++bad;

    dh::Rng rng(600 + static_cast<std::uint64_t>(arch));
    std::vector<std::size_t> bshape = {5};
    bshape.insert(bshape.end(), input.begin(), input.end());
    std::vector<double> bv(dh::shape_product(bshape));
    for (double& x : bv) x = rng.uniform(0, 1);
    Tensor batch(bshape, std::move(bv));

    Tensor f1 = dh::extract_features(fx, batch);
    Tensor f2 = dh::extract_features(fx, batch);
    if (f1.shape != std::vector<std::size_t>{5, 256}) ++bad;
    if (f1.data != f2.data) ++bad;

    dh::TrainedNetwork net2 = dh::init_network(spec, 500 + static_cast<std::uint64_t>(arch));
    Tensor f3 = dh::extract_features(dh::strip_softmax(net2), batch);
    if (f1.data != f3.data) ++bad;  // same seed, same features
  }
  std::ostringstream msg;
  msg << "architectures 1-7: 256-dim extractors, repeated and re-seeded extraction "
         "bit-identical ("
      << bad << " contract breaks)";
  return {bad == 0, msg.str()};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance gate"};
  int criterion = 0;  // 0 = all
  std::string data_dir = "data";
  app.add_option("--criterion", criterion, "run a single criterion (1-9)")
      ->check(CLI::Range(1, 9));
  app.add_option("--data-dir", data_dir, "directory holding the provisioned datasets");
  CLI11_PARSE(app, argc, argv);

  std::vector<std::pair<int, std::function<Outcome()>>> checks = {
      {1, [] { return gradient_oracle(); }},
      {2, [] { return smo_oracle(); }},
      {3, [] { return knn_oracle(); }},
      {4, [&] { return mnist_trend(data_dir); }},
      {5, [&] { return shuttle_knn(data_dir); }},
      {6, [&] { return seizure_trend(data_dir); }},
      {7, [] { return protocol_hygiene(); }},
      {8, [] { return determinism(); }},
      {9, [] { return feature_contract(); }},
  };

  int failures = 0;
  for (auto& [number, fn] : checks) {
    if (criterion != 0 && number != criterion) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& ex) {
      o = {false, std::string("unexpected error: ") + ex.what()};
    }
    std::printf("[%s] criterion %d: %s\n", o.pass ? "PASS" : "FAIL", number, o.detail.c_str());
    std::fflush(stdout);
    if (!o.pass) ++failures;
  }
  return failures == 0 ? 0 : 1;
}
