#include "dh/knn.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <string>

namespace dh {

KnnModel knn_fit(const Tensor& points, const std::vector<int>& labels, int k) {
  if (points.rank() != 2) throw std::runtime_error("knn_fit: points must be [N,D]");
  std::size_t n = points.shape[0];
  if (labels.size() != n)
    throw std::runtime_error("knn_fit: " + std::to_string(labels.size()) + " labels for " +
                             std::to_string(n) + " points");
  for (int y : labels)
    if (y < 0) throw std::runtime_error("knn_fit: negative class label " + std::to_string(y));
  if (k < 1) throw std::runtime_error("knn_fit: k must be positive, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > n)
    throw std::runtime_error("knn_fit: k=" + std::to_string(k) + " exceeds " +
                             std::to_string(n) + " stored points");
  return KnnModel{points, labels, k};
}

std::vector<int> knn_predict_batch(const KnnModel& model, const Tensor& xs) {
  if (xs.rank() != 2) throw std::runtime_error("knn_predict: batch must be [N,D]");
  if (xs.shape[1] != model.points.shape[1])
    throw std::runtime_error("knn_predict: input dim " + std::to_string(xs.shape[1]) +
                             " does not match stored dim " +
                             std::to_string(model.points.shape[1]));
  std::size_t n = model.points.shape[0];
  std::size_t d = model.points.shape[1];
  std::size_t k = static_cast<std::size_t>(model.k);
  int class_count = 0;
  for (int y : model.labels) class_count = std::max(class_count, y + 1);

  std::vector<int> out(xs.shape[0]);
  std::vector<std::size_t> order(n);
  std::vector<int> counts(static_cast<std::size_t>(class_count));

  constexpr std::size_t kChunk = 256;  // bounds the distance matrix footprint
  for (std::size_t start = 0; start < xs.shape[0]; start += kChunk) {
    std::size_t rows = std::min(kChunk, xs.shape[0] - start);
    Tensor chunk({rows, d},
                 std::vector<double>(xs.data.begin() + static_cast<std::ptrdiff_t>(start * d),
                                     xs.data.begin() +
                                         static_cast<std::ptrdiff_t>((start + rows) * d)));
    Tensor dist = pairwise_sqdist(chunk, model.points);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* drow = dist.data.data() + r * n;
      std::iota(order.begin(), order.end(), std::size_t{0});
      std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k),
                        order.end(), [&](std::size_t a, std::size_t b) {
                          return drow[a] < drow[b] || (drow[a] == drow[b] && a < b);
                        });
      std::fill(counts.begin(), counts.end(), 0);
      for (std::size_t i = 0; i < k; ++i) counts[static_cast<std::size_t>(model.labels[order[i]])]++;
      int best = 0;
      for (int c : counts) best = std::max(best, c);
      int nearest_class = model.labels[order[0]];
      int chosen = -1;
      if (counts[static_cast<std::size_t>(nearest_class)] == best) {
        chosen = nearest_class;
      } else {
        for (int c = 0; c < class_count; ++c) {
          if (counts[static_cast<std::size_t>(c)] == best) {
            chosen = c;
            break;
          }
        }
      }
      out[start + r] = chosen;
    }
  }
  return out;
}

int knn_predict(const KnnModel& model, const Tensor& x) {
  if (x.rank() != 1) throw std::runtime_error("knn_predict: rank-1 input expected");
  Tensor row({1, x.size()}, x.data);
  return knn_predict_batch(model, row)[0];
}

}  // namespace dh
