#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "dh/architecture.hpp"
#include "dh/dataset.hpp"
#include "dh/rng.hpp"
#include "dh/tensor.hpp"

namespace dh {

struct LayerParams {
  Tensor weights;
  Tensor bias;
  bool has_params() const { return !weights.data.empty(); }
};

struct TrainedNetwork {
  ArchitectureSpec spec;
  std::vector<LayerParams> parameters;  // index-aligned with spec.layers
  std::vector<LayerParams> velocities;
  int epochs_trained = 0;
  std::uint64_t seed = 0;
};

enum class Mode { Train, Infer };

struct LayerTrace {
  Tensor input;      // what the layer consumed ([N,D], post-dropout for dense/softmax)
  Tensor pre_act;    // z
  Tensor output;     // activation
  Tensor dropout_mask;                    // [N,D] of {0, 1/(1-p)}; empty if unused
  std::vector<std::size_t> pool_argmax;   // global flat index into the pool input
  Tensor im2col;                          // cached columns for conv backward
};

struct ForwardTrace {
  std::vector<LayerTrace> layers;
  Tensor probs;  // [N,class_count]
};

struct Gradients {
  std::vector<LayerParams> layers;
};

// Single-sample primitives, exposed for direct verification.
// Valid cross-correlation, stride 1, per-filter bias; ReLU unless disabled.
Tensor conv2d_forward(const Tensor& input /*[C,H,W]*/, const Tensor& filters /*[F,C,k,k]*/,
                      const Tensor& bias /*[F]*/, bool apply_relu = true);
// 2x2/stride-2 max pooling; odd trailing row/column truncated. Returns the
// pooled map and the flat input index of each chosen maximum.
std::pair<Tensor, std::vector<std::size_t>> maxpool_forward(const Tensor& input /*[C,H,W]*/);
// Max-shifted, rows positive and summing to 1.
Tensor softmax(const Tensor& logits /*[n]*/);
// Mean over the batch of -log(prob of true class), probability floored at 1e-12.
double categorical_cross_entropy(const Tensor& probs /*[N,K]*/, const std::vector<int>& labels);

// Glorot-uniform weights (conv fans use the receptive field), zero biases,
// zero velocities. Seeded: the draw order is layer order, row-major.
TrainedNetwork init_network(const ArchitectureSpec& spec, std::uint64_t seed);

// Batched forward pass. Train mode samples a dropout mask for the input of
// every Dense/SoftmaxOutput layer from `dropout_rng` (survivors scaled by
// 1/(1-p)) unless `frozen_masks` pins them (the gradient-check hook).
ForwardTrace forward(const TrainedNetwork& net, const Tensor& batch, Mode mode,
                     Rng* dropout_rng = nullptr,
                     const std::vector<Tensor>* frozen_masks = nullptr);

// Analytic gradient of the categorical cross-entropy w.r.t. every parameter,
// honoring the dropout masks recorded in the trace.
Gradients backward(const TrainedNetwork& net, const ForwardTrace& trace,
                   const std::vector<int>& labels);

// Classical momentum: v <- mu*v - eta*g; w <- w + v.
void sgd_momentum_step(TrainedNetwork& net, const Gradients& grads);

// Full training loop: seeded init, per-epoch seeded shuffle, minibatches of
// 128. (seed, data, spec, epochs) fully determines the result bit-exactly.
TrainedNetwork train(const ArchitectureSpec& spec, const Dataset& train_set, int epochs,
                     std::uint64_t seed);

struct FeatureExtractor {
  ArchitectureSpec spec;  // layers exclude the final SoftmaxOutput
  std::vector<LayerParams> parameters;
  int output_dim = 0;
};

FeatureExtractor strip_softmax(const TrainedNetwork& net);

// Deterministic infer-mode activations of the extractor; [N,output_dim].
Tensor extract_features(const FeatureExtractor& fx, const Tensor& batch);
Tensor extract_features(const FeatureExtractor& fx, const Dataset& data);

// Flat views over every parameter of a network, for gradient checking and
// serialization. Order: layer order, weights then bias.
std::vector<double*> parameter_pointers(TrainedNetwork& net);
std::vector<const double*> gradient_pointers(const Gradients& grads);

}  // namespace dh
