#include "dh/tensor.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <utility>

namespace dh {

std::string shape_str(const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << "]";
  return os.str();
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
  std::size_t p = 1;
  for (std::size_t d : shape) p *= d;
  return p;
}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> values)
    : shape(std::move(shape_)), data(std::move(values)) {
  for (std::size_t d : shape) {
    if (d == 0) throw std::runtime_error("tensor: zero dimension in shape " + shape_str(shape));
  }
  std::size_t want = shape_product(shape);
  if (want != data.size()) {
    throw std::runtime_error("tensor: shape " + shape_str(shape) + " wants " +
                             std::to_string(want) + " values, got " +
                             std::to_string(data.size()));
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape_) {
  std::size_t n = shape_product(shape_);
  return Tensor(std::move(shape_), std::vector<double>(n, 0.0));
}

Tensor Tensor::reshaped(std::vector<std::size_t> new_shape) const {
  if (shape_product(new_shape) != data.size()) {
    throw std::runtime_error("tensor: cannot reshape " + shape_str(shape) + " to " +
                             shape_str(new_shape));
  }
  return Tensor(std::move(new_shape), data);
}

bool Tensor::all_finite() const {
  for (double v : data)
    if (!std::isfinite(v)) return false;
  return true;
}

static void require_rank2(const Tensor& t, const char* who) {
  if (t.rank() != 2)
    throw std::runtime_error(std::string(who) + ": rank-2 tensor required, got shape " +
                             shape_str(t.shape));
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul");
  require_rank2(b, "matmul");
  if (a.shape[1] != b.shape[0]) {
    throw std::runtime_error("matmul: inner dimensions differ, " + shape_str(a.shape) + " x " +
                             shape_str(b.shape));
  }
  std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[1];
  Tensor c = Tensor::zeros({m, n});
  const double* pa = a.data.data();
  const double* pb = b.data.data();
  double* pc = c.data.data();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t t = 0; t < k; ++t) {
      double av = pa[i * k + t];
      if (av == 0.0) continue;
      const double* brow = pb + t * n;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_tn");
  require_rank2(b, "matmul_tn");
  if (a.shape[0] != b.shape[0]) {
    throw std::runtime_error("matmul_tn: leading dimensions differ, " + shape_str(a.shape) +
                             " x " + shape_str(b.shape));
  }
  std::size_t k = a.shape[0], m = a.shape[1], n = b.shape[1];
  Tensor c = Tensor::zeros({m, n});
  const double* pa = a.data.data();
  const double* pb = b.data.data();
  double* pc = c.data.data();
  for (std::size_t t = 0; t < k; ++t) {
    const double* arow = pa + t * m;
    const double* brow = pb + t * n;
    for (std::size_t i = 0; i < m; ++i) {
      double av = arow[i];
      if (av == 0.0) continue;
      double* crow = pc + i * n;
      for (std::size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_rank2(a, "matmul_nt");
  require_rank2(b, "matmul_nt");
  if (a.shape[1] != b.shape[1]) {
    throw std::runtime_error("matmul_nt: trailing dimensions differ, " + shape_str(a.shape) +
                             " x " + shape_str(b.shape));
  }
  std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[0];
  Tensor c = Tensor::zeros({m, n});
  const double* pa = a.data.data();
  const double* pb = b.data.data();
  double* pc = c.data.data();
  for (std::size_t i = 0; i < m; ++i) {
    const double* arow = pa + i * k;
    double* crow = pc + i * n;
    for (std::size_t j = 0; j < n; ++j) {
      const double* brow = pb + j * k;
      double s = 0.0;
      for (std::size_t t = 0; t < k; ++t) s += arow[t] * brow[t];
      crow[j] = s;
    }
  }
  return c;
}

Tensor pairwise_sqdist(const Tensor& a, const Tensor& b) {
  require_rank2(a, "pairwise_sqdist");
  require_rank2(b, "pairwise_sqdist");
  if (a.shape[1] != b.shape[1]) {
    throw std::runtime_error("pairwise_sqdist: feature dimensions differ, " + shape_str(a.shape) +
                             " vs " + shape_str(b.shape));
  }
  std::size_t m = a.shape[0], k = a.shape[1], n = b.shape[0];
  std::vector<double> an(m), bn(n);
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    const double* row = a.data.data() + i * k;
    for (std::size_t t = 0; t < k; ++t) s += row[t] * row[t];
    an[i] = s;
  }
  for (std::size_t j = 0; j < n; ++j) {
    double s = 0.0;
    const double* row = b.data.data() + j * k;
    for (std::size_t t = 0; t < k; ++t) s += row[t] * row[t];
    bn[j] = s;
  }
  Tensor d = matmul_nt(a, b);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double v = an[i] + bn[j] - 2.0 * d.data[i * n + j];
      d.data[i * n + j] = v > 0.0 ? v : 0.0;
    }
  return d;
}

Tensor elementwise(const Tensor& a, const Tensor& b, Elementwise kind) {
  if (a.shape != b.shape) {
    throw std::runtime_error("elementwise: shape mismatch, " + shape_str(a.shape) + " vs " +
                             shape_str(b.shape));
  }
  Tensor c = a;
  switch (kind) {
    case Elementwise::Add:
      for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] += b.data[i];
      break;
    case Elementwise::Sub:
      for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] -= b.data[i];
      break;
    case Elementwise::Mul:
      for (std::size_t i = 0; i < c.data.size(); ++i) c.data[i] *= b.data[i];
      break;
  }
  return c;
}

}  // namespace dh
