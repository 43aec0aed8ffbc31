#pragma once

#include <cstddef>
#include <vector>

namespace dh {

enum class LayerKind { Convolution, MaxPool, Dense, SoftmaxOutput };

struct LayerSpec {
  LayerKind kind;
  // Convolution
  int filter_count = 32;
  int filter_size = 5;
  int stride = 1;
  // Dense / SoftmaxOutput
  int unit_count = 256;
  double dropout_rate = 0.5;
};

struct ArchitectureSpec {
  int id = 0;  // 1..7
  std::vector<LayerSpec> layers;
  double learning_rate = 0.0;
  double momentum = 0.9;
  std::vector<std::size_t> input_shape;  // [1,H,W] for 1-4, [D] for 5-7
  int class_count = 0;

  bool is_image() const { return input_shape.size() == 3; }
};

// The seven built-in stacks. Ids 1-4 are the image architectures
// (conv/pool/FC counts 2/2/1, 1/1/1, 1/0/1, 0/0/1, eta=0.01); ids 5-7 are the
// numeric ones (2/4/6 dense-256 layers, eta=0.0001). Momentum 0.9 throughout;
// a SoftmaxOutput with unit_count=class_count closes every stack.
ArchitectureSpec build_architecture(int id, const std::vector<std::size_t>& input_shape,
                                    int class_count);

}  // namespace dh
