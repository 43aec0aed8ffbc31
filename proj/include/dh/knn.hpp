#pragma once

#include <vector>

#include "dh/tensor.hpp"

namespace dh {

// Memorized-training-set nearest-neighbor classifier. Neighbor order is the
// lexicographic (squared distance, training index) order; vote ties go to the
// single nearest neighbor's class when it is among the tied classes, else to
// the lowest tied class index.
struct KnnModel {
  Tensor points;  // [N,D]
  std::vector<int> labels;
  int k = 1;
};

KnnModel knn_fit(const Tensor& points, const std::vector<int>& labels, int k);
int knn_predict(const KnnModel& model, const Tensor& x);
std::vector<int> knn_predict_batch(const KnnModel& model, const Tensor& xs);

}  // namespace dh
