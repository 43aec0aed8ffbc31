#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace dh {

// Dense row-major array of doubles. Treated as an immutable value after
// construction: every operation allocates a fresh result.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<double> data;

  Tensor() = default;
  // Throws if product(shape) != values.size() or any dimension is zero.
  Tensor(std::vector<std::size_t> shape_, std::vector<double> values);

  static Tensor zeros(std::vector<std::size_t> shape_);

  std::size_t rank() const { return shape.size(); }
  std::size_t size() const { return data.size(); }

  double at(std::size_t i) const { return data[i]; }
  double at(std::size_t i, std::size_t j) const { return data[i * shape[1] + j]; }
  double at(std::size_t i, std::size_t j, std::size_t k) const {
    return data[(i * shape[1] + j) * shape[2] + k];
  }
  double at(std::size_t i, std::size_t j, std::size_t k, std::size_t l) const {
    return data[((i * shape[1] + j) * shape[2] + k) * shape[3] + l];
  }

  // Same buffer under a new shape (row-major layout makes this a relabeling).
  Tensor reshaped(std::vector<std::size_t> new_shape) const;

  bool all_finite() const;
};

std::string shape_str(const std::vector<std::size_t>& shape);
std::size_t shape_product(const std::vector<std::size_t>& shape);

// c[i][j] = sum_t a[i][t] * b[t][j]
Tensor matmul(const Tensor& a, const Tensor& b);
// c = a^T * b with a:[k,m], b:[k,n] -> [m,n]; avoids materializing transposes.
Tensor matmul_tn(const Tensor& a, const Tensor& b);
// c = a * b^T with a:[m,k], b:[n,k] -> [m,n]
Tensor matmul_nt(const Tensor& a, const Tensor& b);

enum class Elementwise { Add, Sub, Mul };
Tensor elementwise(const Tensor& a, const Tensor& b, Elementwise kind);

// d[i][j] = ||a_i - b_j||^2 with a:[m,k], b:[n,k] -> [m,n], via the
// norms - 2*dot expansion (clamped at 0 against cancellation).
Tensor pairwise_sqdist(const Tensor& a, const Tensor& b);

}  // namespace dh
