#pragma once

#include <string>

#include "dh/dataset.hpp"
#include "dh/knn.hpp"
#include "dh/network.hpp"
#include "dh/svm.hpp"

namespace dh {

// Versioned little-endian binary containers, one magic per payload kind:
//   DHNN trained network   DHSV one-vs-one SVM
//   DHKN KNN model         DHDS dataset cache
// Doubles are stored as raw IEEE-754 bits, so save/load round-trips are
// bit-exact. Network files hold the header (architecture id, class count,
// input shape, seed, epochs) plus parameter arrays in layer order; momentum
// buffers are not persisted and come back zeroed.

void save_network(const TrainedNetwork& net, const std::string& path);
TrainedNetwork load_network(const std::string& path);

void save_svm(const SvmModel& model, const std::string& path);
SvmModel load_svm(const std::string& path);

void save_knn(const KnnModel& model, const std::string& path);
KnnModel load_knn(const std::string& path);

void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset_cache(const std::string& path);

}  // namespace dh
