#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "dh/dataset.hpp"
#include "dh/knn.hpp"
#include "dh/network.hpp"
#include "dh/svm.hpp"

namespace dh {

enum class Family { NN, SVM, KNN, NN_SVM, NN_KNN };

std::string family_name(Family f);                    // "NN/SVM" etc.
Family family_from_name(const std::string& name);     // throws on unknown
bool family_needs_network(Family f);

struct HyperGrid {
  // The C validation grid, exactly {0.01, 0.1, 1, 10, 100, 1000}.
  static const std::vector<double>& c_values();
  // {3, 5, 7, 11, 25, floor(sqrt(N))} deduplicated, sorted, filtered to <= N.
  static std::vector<int> k_values(std::size_t train_size);
};

struct ExperimentResult {
  std::string model_family;  // NN | SVM | KNN | NN/SVM | NN/KNN
  std::optional<int> architecture_id;
  int epochs = 0;
  std::optional<double> chosen_hyper;  // C, or k for the KNN families
  double test_accuracy = 0.0;
  std::uint64_t seed = 0;
  std::string dataset_name;
  double wall_time = 0.0;  // seconds; kept out of the persisted record
};

enum class SplitPart { Train, Val, Test };
const char* split_part_name(SplitPart p);

// Trace of who touched which split, so protocol hygiene is checkable: the
// test part must be read exactly once per experiment, and a hybrid network's
// training window must contain only train reads.
struct AuditEvent {
  enum class Kind { Read, NetTrainBegin, NetTrainEnd };
  Kind kind = Kind::Read;
  SplitPart part = SplitPart::Train;
  std::string purpose;
};

struct AuditLog {
  std::vector<AuditEvent> events;
  std::size_t read_count(SplitPart part) const;
};

class AuditedSplits {
 public:
  AuditedSplits(Splits splits, std::string dataset_name, AuditLog* log = nullptr);

  const Dataset& read(SplitPart part, const std::string& purpose) const;
  void net_train_begin() const;
  void net_train_end() const;
  const std::string& dataset_name() const { return name_; }

 private:
  Splits splits_;
  std::string name_;
  AuditLog* log_;
};

double accuracy(const std::vector<int>& predictions, const std::vector<int>& truth);

// Fits one model per grid value on (train_x, train_y), scores accuracy on
// (val_x, val_y), returns the argmax value; ties go to the smaller value.
double validate_select(const Tensor& train_x, const std::vector<int>& train_y,
                       const Tensor& val_x, const std::vector<int>& val_y,
                       const std::vector<double>& c_grid);
int validate_select(const Tensor& train_x, const std::vector<int>& train_y, const Tensor& val_x,
                    const std::vector<int>& val_y, const std::vector<int>& k_grid);

// Raw-feature SVM or KNN: validate on (train, val), refit on train+val with
// the chosen value (reused verbatim), evaluate once on test.
ExperimentResult run_baseline_classifier(Family family, const AuditedSplits& data,
                                         std::uint64_t seed);

// Network alone: train on train+val, argmax of softmax on test.
ExperimentResult run_network_baseline(int arch_id, const AuditedSplits& data, int epochs,
                                      std::uint64_t seed);

// Hybrid NN/SVM or NN/KNN: network trained on the train split only, softmax
// stripped, classifier validated and refit in 256-dim feature space.
ExperimentResult run_hybrid(int arch_id, Family family, const AuditedSplits& data, int epochs,
                            std::uint64_t seed);

// Same results as calling run_hybrid per family, sharing one trained network
// and one train/val feature extraction across the families.
std::vector<ExperimentResult> run_hybrid_multi(int arch_id, const std::vector<Family>& families,
                                               const AuditedSplits& data, int epochs,
                                               std::uint64_t seed);

// Chunked infer-mode class predictions (argmax of the softmax row, ties to
// the lowest index); shared by the NN baseline and tests.
std::vector<int> predict_network(const TrainedNetwork& net, const Dataset& data);

}  // namespace dh
