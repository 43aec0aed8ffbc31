#include "dh/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

namespace dh {

double rbf_kernel(const Tensor& x, const Tensor& y, double gamma) {
  if (x.rank() != 1 || y.rank() != 1 || x.size() != y.size())
    throw std::runtime_error("rbf_kernel: dimension mismatch, " + shape_str(x.shape) + " vs " +
                             shape_str(y.shape));
  if (gamma <= 0.0) throw std::runtime_error("rbf_kernel: gamma must be positive");
  double d2 = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = x.data[i] - y.data[i];
    d2 += d * d;
  }
  return std::exp(-gamma * d2);
}

Tensor rbf_kernel_matrix(const Tensor& a, const Tensor& b, double gamma) {
  if (gamma <= 0.0) throw std::runtime_error("rbf_kernel_matrix: gamma must be positive");
  Tensor k = pairwise_sqdist(a, b);
  for (double& v : k.data) v = std::exp(-gamma * v);
  return k;
}

namespace {

constexpr std::size_t kMaxUpdates = 1000000;
constexpr std::size_t kGramLimit = 4096;

// Platt-style SMO with a full error cache and deterministic working-pair
// selection, so identical inputs always walk the same update sequence.
class SmoSolver {
 public:
  SmoSolver(const Tensor& pts, const std::vector<int>& y, SvmHyper hyper, double tol,
            int max_passes, const Tensor* gram)
      : pts_(pts),
        y_(y),
        n_(pts.shape[0]),
        d_(pts.shape[1]),
        hyper_(hyper),
        tol_(tol),
        max_passes_(max_passes),
        gram_(gram) {
    alpha_.assign(n_, 0.0);
    errors_.resize(n_);
    for (std::size_t i = 0; i < n_; ++i) errors_[i] = -static_cast<double>(y_[i]);
    step_eps_ = std::max(1e-14, tol_ * 1e-3);
    if (!gram_ && n_ <= kGramLimit) {
      own_gram_ = rbf_kernel_matrix(pts_, pts_, hyper_.gamma);
      gram_ = &own_gram_;
    }
  }

  SvmBinaryModel solve() {
    int quiet_passes = 0;
    while (quiet_passes < max_passes_ && updates_ < kMaxUpdates) {
      std::size_t changed = 0, violations = 0;
      for (std::size_t i = 0; i < n_ && updates_ < kMaxUpdates; ++i) {
        int verdict = examine(i);
        if (verdict != 0) ++violations;
        if (verdict == 1) ++changed;
      }
      if (violations == 0) {
        converged_ = true;
        break;
      }
      quiet_passes = changed == 0 ? quiet_passes + 1 : 0;
    }
    return finalize();
  }

 private:
  double kern(std::size_t i, std::size_t j) const {
    if (gram_) return gram_->data[i * n_ + j];
    const double* a = pts_.data.data() + i * d_;
    const double* b = pts_.data.data() + j * d_;
    double d2 = 0.0;
    for (std::size_t t = 0; t < d_; ++t) {
      double d = a[t] - b[t];
      d2 += d * d;
    }
    return std::exp(-hyper_.gamma * d2);
  }

  // 0 = i satisfies KKT within tol; 1 = violation fixed by an update;
  // 2 = violation found but no productive partner.
  int examine(std::size_t i) {
    double r = errors_[i] * static_cast<double>(y_[i]);  // y_i f(x_i) - 1
    bool violates = (r < -tol_ && alpha_[i] < hyper_.C) || (r > tol_ && alpha_[i] > 0.0);
    if (!violates) return 0;

    // Second choice: largest |E_i - E_j| first (ties toward the lowest
    // index), then a wrap-around sweep from a moving deterministic start.
    std::size_t best = n_;
    double best_gap = -1.0;
    for (std::size_t j = 0; j < n_; ++j) {
      if (j == i) continue;
      double gap = std::abs(errors_[i] - errors_[j]);
      if (gap > best_gap) {
        best_gap = gap;
        best = j;
      }
    }
    if (best < n_ && take_step(i, best)) return 1;
    std::size_t start = fallback_counter_++ % n_;
    for (std::size_t off = 0; off < n_; ++off) {
      std::size_t j = (start + off) % n_;
      if (j == i || j == best) continue;
      if (take_step(i, j)) return 1;
    }
    return 2;
  }

  bool take_step(std::size_t i1, std::size_t i2) {
    if (i1 == i2) return false;
    double alph1 = alpha_[i1], alph2 = alpha_[i2];
    double y1 = y_[i1], y2 = y_[i2];
    double e1 = errors_[i1], e2 = errors_[i2];
    double s = y1 * y2;
    double c = hyper_.C;

    double lo, hi;
    if (y_[i1] != y_[i2]) {
      lo = std::max(0.0, alph2 - alph1);
      hi = std::min(c, c + alph2 - alph1);
    } else {
      lo = std::max(0.0, alph1 + alph2 - c);
      hi = std::min(c, alph1 + alph2);
    }
    if (lo >= hi) return false;

    double k11 = kern(i1, i1), k12 = kern(i1, i2), k22 = kern(i2, i2);
    double eta = k11 + k22 - 2.0 * k12;  // >= 0 for any kernel matrix
    double a2;
    if (eta > 0.0) {
      a2 = alph2 + y2 * (e1 - e2) / eta;
      a2 = std::clamp(a2, lo, hi);
    } else {
      // Objective is linear along the constraint line; walk to an endpoint.
      double slope = y2 * (e1 - e2);
      if (slope > 0.0)
        a2 = hi;
      else if (slope < 0.0)
        a2 = lo;
      else
        return false;
    }
    if (std::abs(a2 - alph2) < step_eps_ * (a2 + alph2 + step_eps_)) return false;

    double a1 = alph1 + s * (alph2 - a2);
    a1 = std::clamp(a1, 0.0, c);
    double snap = c * 1e-12;
    if (a1 < snap) a1 = 0.0;
    if (a1 > c - snap) a1 = c;
    if (a2 < snap) a2 = 0.0;
    if (a2 > c - snap) a2 = c;

    double d1 = y1 * (a1 - alph1);  // change in alpha_i * y_i
    double d2 = y2 * (a2 - alph2);
    double b1 = b_ - e1 - d1 * k11 - d2 * k12;
    double b2 = b_ - e2 - d1 * k12 - d2 * k22;
    double b_old = b_;
    if (a1 > 0.0 && a1 < c)
      b_ = b1;
    else if (a2 > 0.0 && a2 < c)
      b_ = b2;
    else
      b_ = 0.5 * (b1 + b2);

    alpha_[i1] = a1;
    alpha_[i2] = a2;
    double db = b_ - b_old;
    if (gram_) {
      const double* r1 = gram_->data.data() + i1 * n_;
      const double* r2 = gram_->data.data() + i2 * n_;
      for (std::size_t k = 0; k < n_; ++k) errors_[k] += d1 * r1[k] + d2 * r2[k] + db;
    } else {
      for (std::size_t k = 0; k < n_; ++k)
        errors_[k] += d1 * kern(i1, k) + d2 * kern(i2, k) + db;
    }
    ++updates_;
    return true;
  }

  // Exact margins from the final alphas, then the bias that minimizes the
  // worst KKT violation (free-vector mean when free vectors exist, else the
  // midpoint of the feasible interval), kept only if it beats the running b.
  SvmBinaryModel finalize() {
    std::vector<double> g(n_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) {
      if (alpha_[j] == 0.0) continue;
      double coef = alpha_[j] * static_cast<double>(y_[j]);
      for (std::size_t i = 0; i < n_; ++i) g[i] += coef * kern(j, i);
    }

    double candidate = b_;
    double free_sum = 0.0;
    std::size_t free_count = 0;
    double lo = -std::numeric_limits<double>::infinity();
    double hi = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n_; ++i) {
      double target = static_cast<double>(y_[i]) - g[i];
      if (alpha_[i] > 0.0 && alpha_[i] < hyper_.C) {
        free_sum += target;
        ++free_count;
      } else if ((alpha_[i] == 0.0) == (y_[i] > 0)) {
        // alpha=0,y=+1 and alpha=C,y=-1 bound b from below
        lo = std::max(lo, target);
      } else {
        hi = std::min(hi, target);
      }
    }
    if (free_count > 0)
      candidate = free_sum / static_cast<double>(free_count);
    else if (std::isfinite(lo) && std::isfinite(hi))
      candidate = 0.5 * (lo + hi);
    else if (std::isfinite(lo))
      candidate = lo;
    else if (std::isfinite(hi))
      candidate = hi;

    auto worst_violation = [&](double b) {
      double worst = 0.0;
      for (std::size_t i = 0; i < n_; ++i) {
        double m = static_cast<double>(y_[i]) * (g[i] + b) - 1.0;
        double v;
        if (alpha_[i] == 0.0)
          v = std::max(0.0, -m);
        else if (alpha_[i] == hyper_.C)
          v = std::max(0.0, m);
        else
          v = std::abs(m);
        worst = std::max(worst, v);
      }
      return worst;
    };
    double bias = worst_violation(candidate) <= worst_violation(b_) ? candidate : b_;

    SvmBinaryModel model;
    model.hyper = hyper_;
    model.bias = bias;
    model.converged = converged_;
    std::vector<double> rows;
    for (std::size_t i = 0; i < n_; ++i) {
      if (alpha_[i] <= 0.0) continue;
      model.support_indices.push_back(i);
      model.dual_coefs.push_back(alpha_[i] * static_cast<double>(y_[i]));
      rows.insert(rows.end(), pts_.data.begin() + static_cast<std::ptrdiff_t>(i * d_),
                  pts_.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * d_));
    }
    if (!model.support_indices.empty())
      model.support_vectors = Tensor({model.support_indices.size(), d_}, std::move(rows));
    return model;
  }

  const Tensor& pts_;
  const std::vector<int>& y_;
  std::size_t n_, d_;
  SvmHyper hyper_;
  double tol_;
  int max_passes_;
  const Tensor* gram_;
  Tensor own_gram_;
  std::vector<double> alpha_, errors_;
  double b_ = 0.0;
  double step_eps_;
  std::size_t updates_ = 0;
  std::size_t fallback_counter_ = 0;
  bool converged_ = false;
};

// Decision values for every row of xs against one binary model, all through
// the same kernel-matrix path so scalar and batch prediction agree bitwise.
std::vector<double> binary_decisions(const SvmBinaryModel& m, const Tensor& xs) {
  std::vector<double> out(xs.shape[0], m.bias);
  if (m.dual_coefs.empty()) return out;
  Tensor k = rbf_kernel_matrix(xs, m.support_vectors, m.hyper.gamma);
  std::size_t s = m.dual_coefs.size();
  for (std::size_t t = 0; t < xs.shape[0]; ++t) {
    double f = m.bias;
    const double* krow = k.data.data() + t * s;
    for (std::size_t i = 0; i < s; ++i) f += krow[i] * m.dual_coefs[i];
    out[t] = f;
  }
  return out;
}

}  // namespace

SvmBinaryModel smo_train_binary(const Tensor& points, const std::vector<int>& labels,
                                const SvmHyper& hyper, double tol, int max_passes,
                                const Tensor* gram) {
  if (points.rank() != 2) throw std::runtime_error("smo_train_binary: points must be [N,D]");
  std::size_t n = points.shape[0];
  if (labels.size() != n)
    throw std::runtime_error("smo_train_binary: " + std::to_string(labels.size()) +
                             " labels for " + std::to_string(n) + " points");
  if (hyper.C <= 0.0) throw std::runtime_error("smo_train_binary: C must be positive");
  if (hyper.gamma <= 0.0) throw std::runtime_error("smo_train_binary: gamma must be positive");
  bool pos = false, neg = false;
  for (int y : labels) {
    if (y == 1)
      pos = true;
    else if (y == -1)
      neg = true;
    else
      throw std::runtime_error("smo_train_binary: labels must be +1/-1, got " +
                               std::to_string(y));
  }
  if (!pos || !neg) throw std::runtime_error("smo_train_binary: both classes must be present");
  if (gram && (gram->rank() != 2 || gram->shape[0] != n || gram->shape[1] != n))
    throw std::runtime_error("smo_train_binary: gram matrix must be [N,N]");
  return SmoSolver(points, labels, hyper, tol, max_passes, gram).solve();
}

double svm_decision(const SvmBinaryModel& model, const Tensor& x) {
  if (x.rank() != 1) throw std::runtime_error("svm_decision: rank-1 input expected");
  Tensor row({1, x.size()}, x.data);
  return binary_decisions(model, row)[0];
}

std::vector<SvmModel> svm_fit_grid(const Tensor& points, const std::vector<int>& labels,
                                   const std::vector<double>& c_values, double tol,
                                   int max_passes) {
  if (points.rank() != 2) throw std::runtime_error("svm_fit: points must be [N,D]");
  std::size_t n = points.shape[0], d = points.shape[1];
  if (labels.size() != n)
    throw std::runtime_error("svm_fit: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(n) + " points");
  if (c_values.empty()) throw std::runtime_error("svm_fit: empty C grid");
  int max_label = -1;
  for (int y : labels) {
    if (y < 0) throw std::runtime_error("svm_fit: negative class label " + std::to_string(y));
    max_label = std::max(max_label, y);
  }
  int class_count = max_label + 1;
  if (class_count < 2) throw std::runtime_error("svm_fit: at least 2 classes required");
  double gamma = 1.0 / static_cast<double>(d);

  std::vector<SvmModel> models(c_values.size());
  for (std::size_t ci = 0; ci < c_values.size(); ++ci) {
    if (c_values[ci] <= 0.0) throw std::runtime_error("svm_fit: C must be positive");
    models[ci].class_count = class_count;
    models[ci].hyper = {c_values[ci], gamma};
  }

  for (int a = 0; a < class_count; ++a) {
    for (int b = a + 1; b < class_count; ++b) {
      std::vector<double> rows;
      std::vector<int> y;
      for (std::size_t i = 0; i < n; ++i) {
        if (labels[i] != a && labels[i] != b) continue;
        rows.insert(rows.end(), points.data.begin() + static_cast<std::ptrdiff_t>(i * d),
                    points.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
        y.push_back(labels[i] == a ? 1 : -1);
      }
      if (y.empty())
        throw std::runtime_error("svm_fit: no samples for class pair (" + std::to_string(a) +
                                 "," + std::to_string(b) + ")");
      Tensor sub({y.size(), d}, std::move(rows));
      Tensor gram;
      bool have_gram = y.size() <= kGramLimit;
      if (have_gram) gram = rbf_kernel_matrix(sub, sub, gamma);
      for (std::size_t ci = 0; ci < c_values.size(); ++ci) {
        SvmHyper hyper{c_values[ci], gamma};
        try {
          models[ci].pairs.emplace_back(a, b);
          models[ci].binaries.push_back(
              smo_train_binary(sub, y, hyper, tol, max_passes, have_gram ? &gram : nullptr));
        } catch (const std::exception& e) {
          throw std::runtime_error("svm_fit C=" + std::to_string(c_values[ci]) + " pair (" +
                                   std::to_string(a) + "," + std::to_string(b) +
                                   "): " + e.what());
        }
      }
    }
  }
  return models;
}

SvmModel svm_fit(const Tensor& points, const std::vector<int>& labels, double C, double tol,
                 int max_passes) {
  return std::move(svm_fit_grid(points, labels, {C}, tol, max_passes)[0]);
}

std::vector<int> svm_predict_batch(const SvmModel& model, const Tensor& xs) {
  if (xs.rank() != 2) throw std::runtime_error("svm_predict: batch must be [N,D]");
  if (model.binaries.empty()) throw std::runtime_error("svm_predict: empty model");
  for (const SvmBinaryModel& b : model.binaries) {
    if (!b.dual_coefs.empty() && b.support_vectors.shape[1] != xs.shape[1])
      throw std::runtime_error("svm_predict: input dim " + std::to_string(xs.shape[1]) +
                               " does not match support vectors " +
                               shape_str(b.support_vectors.shape));
  }
  std::size_t t = xs.shape[0];
  std::size_t k = static_cast<std::size_t>(model.class_count);
  std::vector<int> votes(t * k, 0);
  std::vector<double> magnitude(t * k, 0.0);  // summed |f| over pairs touching a class

  for (std::size_t p = 0; p < model.binaries.size(); ++p) {
    int a = model.pairs[p].first, b = model.pairs[p].second;
    std::vector<double> f = binary_decisions(model.binaries[p], xs);
    for (std::size_t i = 0; i < t; ++i) {
      int winner = f[i] > 0.0 ? a : b;
      votes[i * k + static_cast<std::size_t>(winner)] += 1;
      double af = std::abs(f[i]);
      magnitude[i * k + static_cast<std::size_t>(a)] += af;
      magnitude[i * k + static_cast<std::size_t>(b)] += af;
    }
  }

  std::vector<int> out(t);
  for (std::size_t i = 0; i < t; ++i) {
    const int* v = votes.data() + i * k;
    const double* m = magnitude.data() + i * k;
    int best_votes = -1;
    for (std::size_t c = 0; c < k; ++c) best_votes = std::max(best_votes, v[c]);
    int chosen = -1;
    double best_mag = -1.0;
    for (std::size_t c = 0; c < k; ++c) {
      if (v[c] != best_votes) continue;
      if (m[c] > best_mag) {  // strict: ties fall to the lowest class index
        best_mag = m[c];
        chosen = static_cast<int>(c);
      }
    }
    out[i] = chosen;
  }
  return out;
}

int svm_predict(const SvmModel& model, const Tensor& x) {
  if (x.rank() != 1) throw std::runtime_error("svm_predict: rank-1 input expected");
  Tensor row({1, x.size()}, x.data);
  return svm_predict_batch(model, row)[0];
}

double svm_dual_objective(const Tensor& points, const std::vector<int>& labels,
                          const std::vector<double>& alphas, double gamma) {
  std::size_t n = points.shape[0];
  if (labels.size() != n || alphas.size() != n)
    throw std::runtime_error("svm_dual_objective: size mismatch");
  Tensor k = rbf_kernel_matrix(points, points, gamma);
  double lin = 0.0, quad = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    lin += alphas[i];
    if (alphas[i] == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) {
      if (alphas[j] == 0.0) continue;
      quad += alphas[i] * alphas[j] * static_cast<double>(labels[i]) *
              static_cast<double>(labels[j]) * k.data[i * n + j];
    }
  }
  return lin - 0.5 * quad;
}

}  // namespace dh
