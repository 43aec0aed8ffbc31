#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "dh/dataset.hpp"
#include "dh/rng.hpp"
#include "dh/svm.hpp"

using dh::SvmBinaryModel;
using dh::SvmHyper;
using dh::Tensor;

namespace {

// alpha_i for every training point, reconstructed from the retained SVs
std::vector<double> full_alphas(const SvmBinaryModel& m, const std::vector<int>& labels) {
  std::vector<double> a(labels.size(), 0.0);
  for (std::size_t s = 0; s < m.support_indices.size(); ++s) {
    std::size_t i = m.support_indices[s];
    a[i] = m.dual_coefs[s] * labels[i];  // dual_coef = alpha*y, y in {-1,+1}
  }
  return a;
}

Tensor row(const Tensor& t, std::size_t i) {
  std::size_t d = t.shape[1];
  std::vector<double> v(t.data.begin() + static_cast<std::ptrdiff_t>(i * d),
                        t.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * d));
  return Tensor({d}, std::move(v));
}

// exhaustive dual maximization over an alpha grid honoring both constraints
double brute_force_dual(const Tensor& points, const std::vector<int>& labels, double c,
                        double gamma, int steps) {
  std::size_t n = labels.size();
  std::vector<double> alphas(n, 0.0);
  double best = -1e300;
  std::vector<int> idx(n, 0);
  for (;;) {
    for (std::size_t i = 0; i < n; ++i)
      alphas[i] = c * static_cast<double>(idx[i]) / static_cast<double>(steps);
    double balance = 0;
    for (std::size_t i = 0; i < n; ++i) balance += alphas[i] * labels[i];
    if (std::abs(balance) < 1e-12)
      best = std::max(best, dh::svm_dual_objective(points, labels, alphas, gamma));
    std::size_t j = 0;
    while (j < n && ++idx[j] > steps) idx[j++] = 0;
    if (j == n) break;
  }
  return best;
}

}  // namespace

TEST_CASE("rbf_kernel examples") {
  Tensor x({2}, {0.3, -1.2});
  CHECK(dh::rbf_kernel(x, x, 0.7) == 1.0);

  Tensor a({2}, {0, 0});
  Tensor b({2}, {1, 1});
  CHECK(dh::rbf_kernel(a, b, 0.5) == doctest::Approx(std::exp(-1.0)).epsilon(1e-12));
  CHECK(dh::rbf_kernel(a, b, 0.5) == dh::rbf_kernel(b, a, 0.5));

  Tensor c({3}, {1, 2, 3});
  CHECK_THROWS_AS(dh::rbf_kernel(a, c, 1.0), std::runtime_error);
}

TEST_CASE("rbf_kernel_matrix matches the scalar kernel") {
  dh::Rng rng(1);
  std::vector<double> av(12), bv(8);
  for (double& v : av) v = rng.uniform(-2, 2);
  for (double& v : bv) v = rng.uniform(-2, 2);
  Tensor a({3, 4}, std::move(av));
  Tensor b({2, 4}, std::move(bv));
  Tensor k = dh::rbf_kernel_matrix(a, b, 0.25);
  REQUIRE(k.shape == std::vector<std::size_t>{3, 2});
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      CHECK(k.at(i, j) == doctest::Approx(dh::rbf_kernel(row(a, i), row(b, j), 0.25))
                              .epsilon(1e-12));
  // self-kernel diagonal is exactly 1 (relies on exact zero self-distance)
  Tensor kk = dh::rbf_kernel_matrix(a, a, 0.25);
  for (std::size_t i = 0; i < 3; ++i) CHECK(kk.at(i, i) == 1.0);
}

TEST_CASE("smo_train_binary: minimal two-point problem") {
  Tensor pts({2, 1}, {0.0, 1.0});
  std::vector<int> y = {+1, -1};
  SvmHyper hyper{1000.0, 1.0};
  SvmBinaryModel m = dh::smo_train_binary(pts, y, hyper);

  CHECK(m.converged);
  REQUIRE(m.support_indices.size() == 2);  // both points become support vectors
  double f0 = dh::svm_decision(m, row(pts, 0));
  double f1 = dh::svm_decision(m, row(pts, 1));
  CHECK(f0 > 0);
  CHECK(f1 < 0);

  // closed form: alpha* = 1/(1 - K12), W* = alpha*
  double k12 = std::exp(-1.0);
  double alpha_star = 1.0 / (1.0 - k12);
  auto a = full_alphas(m, y);
  CHECK(a[0] == doctest::Approx(alpha_star).epsilon(1e-6));
  CHECK(a[1] == doctest::Approx(alpha_star).epsilon(1e-6));
  double w = dh::svm_dual_objective(pts, y, a, hyper.gamma);
  CHECK(w == doctest::Approx(alpha_star).epsilon(1e-9));
}

TEST_CASE("smo_train_binary rejects single-class input") {
  Tensor pts({3, 1}, {0.0, 1.0, 2.0});
  CHECK_THROWS_AS(dh::smo_train_binary(pts, {1, 1, 1}, SvmHyper{}), std::runtime_error);
  CHECK_THROWS_AS(dh::smo_train_binary(pts, {-1, -1, -1}, SvmHyper{}), std::runtime_error);
}

TEST_CASE("smo_train_binary: dual feasibility and KKT on random problems") {
  dh::Rng rng(7);
  for (int trial = 0; trial < 6; ++trial) {
    std::size_t n = 14;
    std::vector<double> v(n * 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i % 2 == 0 ? +1 : -1;
      v[i * 2] = rng.normal() + (y[i] > 0 ? 1.2 : -1.2);  // overlapping blobs
      v[i * 2 + 1] = rng.normal();
    }
    Tensor pts({n, 2}, std::move(v));
    double c = trial % 2 == 0 ? 1.0 : 10.0;
    SvmHyper hyper{c, 0.5};
    double tol = 1e-3;
    SvmBinaryModel m = dh::smo_train_binary(pts, y, hyper, tol);
    CHECK(m.converged);

    auto a = full_alphas(m, y);
    double balance = 0;
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(a[i] >= 0.0);
      CHECK(a[i] <= c);
      balance += a[i] * y[i];
    }
    CHECK(std::abs(balance) <= 1e-6);

    // KKT at tol: alpha=0 -> y f >= 1-tol; 0<alpha<C -> |y f - 1| <= tol;
    // alpha=C -> y f <= 1+tol
    for (std::size_t i = 0; i < n; ++i) {
      double yf = y[i] * dh::svm_decision(m, row(pts, i));
      if (a[i] == 0.0) {
        CHECK(yf >= 1.0 - tol);
      } else if (a[i] == c) {
        CHECK(yf <= 1.0 + tol);
      } else {
        CHECK(std::abs(yf - 1.0) <= tol);
      }
    }
  }
}

TEST_CASE("smo_train_binary beats a brute-force dual oracle on tiny problems") {
  dh::Rng rng(11);
  for (int trial = 0; trial < 4; ++trial) {
    std::size_t n = 4 + static_cast<std::size_t>(trial % 2);  // 4 or 5 points
    std::vector<double> v(n * 2);
    std::vector<int> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = i < n / 2 ? +1 : -1;
      v[i * 2] = rng.normal() + (y[i] > 0 ? 0.8 : -0.8);
      v[i * 2 + 1] = rng.normal();
    }
    Tensor pts({n, 2}, std::move(v));
    SvmHyper hyper{2.0, 0.5};
    SvmBinaryModel m = dh::smo_train_binary(pts, y, hyper);
    double solver = dh::svm_dual_objective(pts, y, full_alphas(m, y), hyper.gamma);
    double oracle = brute_force_dual(pts, y, hyper.C, hyper.gamma, 40);
    CHECK(solver >= oracle - 1e-6);
  }
}

TEST_CASE("smo_train_binary with max_passes=0 returns a flagged initial iterate") {
  Tensor pts({4, 1}, {0.0, 0.1, 1.0, 1.1});
  std::vector<int> y = {+1, +1, -1, -1};
  SvmBinaryModel m = dh::smo_train_binary(pts, y, SvmHyper{1.0, 1.0}, 1e-3, 0);
  CHECK_FALSE(m.converged);
  CHECK(m.support_indices.empty());  // alphas never left zero
}

TEST_CASE("svm_fit: pair counts and gamma") {
  dh::Rng rng(13);
  auto make = [&](int classes, std::size_t per) {
    std::vector<double> v;
    std::vector<int> labels;
    for (int c = 0; c < classes; ++c)
      for (std::size_t i = 0; i < per; ++i) {
        v.push_back(c * 10.0 + rng.normal());
        v.push_back(rng.normal());
        labels.push_back(c);
      }
    return std::pair{Tensor({static_cast<std::size_t>(classes) * per, 2}, std::move(v)), labels};
  };

  auto [p3, l3] = make(3, 4);
  dh::SvmModel m3 = dh::svm_fit(p3, l3, 1.0);
  CHECK(m3.binaries.size() == 3);
  CHECK(m3.pairs == std::vector<std::pair<int, int>>{{0, 1}, {0, 2}, {1, 2}});
  CHECK(m3.hyper.gamma == doctest::Approx(0.5));  // 1/D with D=2

  auto [p10, l10] = make(10, 2);
  CHECK(dh::svm_fit(p10, l10, 1.0).binaries.size() == 45);

  Tensor single({3, 2}, {0, 0, 1, 1, 2, 2});
  CHECK_THROWS_AS(dh::svm_fit(single, {0, 0, 0}, 1.0), std::runtime_error);
}

TEST_CASE("svm_fit separates 3-class blobs at C=1") {
  dh::Dataset blobs = dh::synth_blobs(30, 2, 3, 10.0, 17);  // centers 10 sigma apart
  dh::SvmModel model = dh::svm_fit(blobs.features, blobs.labels, 1.0);
  std::vector<int> pred = dh::svm_predict_batch(model, blobs.features);
  std::size_t ok = 0;
  for (std::size_t i = 0; i < blobs.size(); ++i)
    if (pred[i] == blobs.labels[i]) ++ok;
  CHECK(static_cast<double>(ok) / static_cast<double>(blobs.size()) >= 0.95);
}

TEST_CASE("svm_predict voting rules") {
  // 2 classes: label follows the sign of the single binary decision
  dh::Dataset two = dh::synth_blobs(10, 2, 2, 8.0, 19);
  dh::SvmModel m2 = dh::svm_fit(two.features, two.labels, 10.0);
  REQUIRE(m2.binaries.size() == 1);
  for (std::size_t i = 0; i < two.size(); ++i) {
    Tensor x = row(two.features, i);
    int want = dh::svm_decision(m2.binaries[0], x) > 0 ? m2.pairs[0].first : m2.pairs[0].second;
    CHECK(dh::svm_predict(m2, x) == want);
  }

  // 3 classes, query deep inside class 1: both (0,1) and (1,2) vote class 1
  dh::Dataset three = dh::synth_blobs(10, 2, 3, 10.0, 23);
  dh::SvmModel m3 = dh::svm_fit(three.features, three.labels, 10.0);
  Tensor center({2}, {10.0, 0.0});  // class-1 center per the blob layout
  CHECK(dh::svm_predict(m3, center) == 1);

  Tensor wrong({3}, {0, 0, 0});
  CHECK_THROWS_AS(dh::svm_predict(m3, wrong), std::runtime_error);
}

TEST_CASE("svm_predict is deterministic on a circular-tie construction") {
  // three symmetric blobs; queries near the centroid force near-tied votes
  std::vector<double> v;
  std::vector<int> labels;
  dh::Rng rng(29);
  const double r = 6.0;
  for (int c = 0; c < 3; ++c) {
    double ang = 2.0 * 3.14159265358979 * c / 3.0;
    for (int i = 0; i < 8; ++i) {
      v.push_back(r * std::cos(ang) + 0.3 * rng.normal());
      v.push_back(r * std::sin(ang) + 0.3 * rng.normal());
      labels.push_back(c);
    }
  }
  Tensor pts({24, 2}, std::move(v));
  dh::SvmModel model = dh::svm_fit(pts, labels, 1.0);
  for (int q = 0; q < 12; ++q) {
    Tensor x({2}, {0.05 * q - 0.3, 0.04 * q - 0.2});
    int first = dh::svm_predict(model, x);
    for (int rep = 0; rep < 3; ++rep) CHECK(dh::svm_predict(model, x) == first);
    CHECK(first >= 0);
    CHECK(first < 3);
  }
}

TEST_CASE("svm predictions invariant to training-point permutation") {
  dh::Dataset blobs = dh::synth_blobs(15, 3, 3, 10.0, 31);
  dh::SvmModel base = dh::svm_fit(blobs.features, blobs.labels, 1.0);

  dh::Rng rng(32);
  std::vector<std::size_t> perm = rng.permutation(blobs.size());
  std::vector<double> pv(blobs.size() * 3);
  std::vector<int> pl(blobs.size());
  for (std::size_t i = 0; i < blobs.size(); ++i) {
    for (std::size_t d = 0; d < 3; ++d) pv[i * 3 + d] = blobs.features.at(perm[i], d);
    pl[i] = blobs.labels[perm[i]];
  }
  Tensor ppts({blobs.size(), 3}, std::move(pv));
  dh::SvmModel shuffled = dh::svm_fit(ppts, pl, 1.0);

  dh::Rng qrng(33);
  for (int q = 0; q < 40; ++q) {
    Tensor x({3}, {qrng.uniform(-3, 23), qrng.uniform(-3, 3), qrng.uniform(-3, 3)});
    CHECK(dh::svm_predict(base, x) == dh::svm_predict(shuffled, x));
  }
}

TEST_CASE("svm_fit_grid is bitwise equal to per-value svm_fit") {
  dh::Dataset blobs = dh::synth_blobs(8, 2, 3, 6.0, 37);
  std::vector<double> grid = {0.1, 1.0, 100.0};
  std::vector<dh::SvmModel> models = dh::svm_fit_grid(blobs.features, blobs.labels, grid);
  REQUIRE(models.size() == 3);
  for (std::size_t g = 0; g < grid.size(); ++g) {
    dh::SvmModel solo = dh::svm_fit(blobs.features, blobs.labels, grid[g]);
    REQUIRE(models[g].binaries.size() == solo.binaries.size());
    CHECK(models[g].hyper.C == solo.hyper.C);
    for (std::size_t b = 0; b < solo.binaries.size(); ++b) {
      CHECK(models[g].binaries[b].dual_coefs == solo.binaries[b].dual_coefs);
      CHECK(models[g].binaries[b].support_indices == solo.binaries[b].support_indices);
      CHECK(models[g].binaries[b].bias == solo.binaries[b].bias);
      CHECK(models[g].binaries[b].support_vectors.data == solo.binaries[b].support_vectors.data);
    }
  }
}
