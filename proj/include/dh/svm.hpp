#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dh/tensor.hpp"

namespace dh {

struct SvmHyper {
  double C = 1.0;
  double gamma = 1.0;
};

// Soft-margin RBF binary SVM in dual form. dual_coefs[i] = alpha_i * y_i for
// the retained support vectors (alpha > 0 only); decision value is
// f(x) = sum_i dual_coefs[i] * K(sv_i, x) + bias.
struct SvmBinaryModel {
  Tensor support_vectors;  // [S,D]
  std::vector<double> dual_coefs;
  std::vector<std::size_t> support_indices;  // positions in the training order
  double bias = 0.0;
  SvmHyper hyper;
  bool converged = true;
};

// One-vs-one ensemble: pairs (a,b) with a < b in lexicographic order, the
// lower class index mapped to label +1 in its binary problem.
struct SvmModel {
  int class_count = 0;
  std::vector<std::pair<int, int>> pairs;
  std::vector<SvmBinaryModel> binaries;
  SvmHyper hyper;
};

double rbf_kernel(const Tensor& x, const Tensor& y, double gamma);

// exp(-gamma * ||a_i - b_j||^2) for every row pair, [M,N].
Tensor rbf_kernel_matrix(const Tensor& a, const Tensor& b, double gamma);

// SMO dual solver. labels must be +1/-1 with both classes present.
// Terminates after `max_passes` consecutive full sweeps without an update, a
// sweep with no KKT violations (converged), or 10^6 pair updates (flagged
// non-converged). `gram`, when given, must be the [N,N] kernel matrix.
SvmBinaryModel smo_train_binary(const Tensor& points, const std::vector<int>& labels,
                                const SvmHyper& hyper, double tol = 1e-3, int max_passes = 10,
                                const Tensor* gram = nullptr);

double svm_decision(const SvmBinaryModel& model, const Tensor& x);

// gamma fixed at 1/D. Labels are 0..class_count-1 with >= 2 classes present.
SvmModel svm_fit(const Tensor& points, const std::vector<int>& labels, double C,
                 double tol = 1e-3, int max_passes = 10);

// One model per C value, sharing each class pair's kernel matrix across the
// grid. Equivalent to calling svm_fit per value.
std::vector<SvmModel> svm_fit_grid(const Tensor& points, const std::vector<int>& labels,
                                   const std::vector<double>& c_values, double tol = 1e-3,
                                   int max_passes = 10);

int svm_predict(const SvmModel& model, const Tensor& x);
std::vector<int> svm_predict_batch(const SvmModel& model, const Tensor& xs);

// W(alpha) = sum_i alpha_i - 1/2 sum_ij alpha_i alpha_j y_i y_j K(x_i,x_j);
// the quantity SMO maximizes, exposed for oracle comparison.
double svm_dual_objective(const Tensor& points, const std::vector<int>& labels,
                          const std::vector<double>& alphas, double gamma);

}  // namespace dh
