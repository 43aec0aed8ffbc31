#include "dh/architecture.hpp"

#include <stdexcept>
#include <string>

namespace dh {

namespace {

LayerSpec conv() {
  LayerSpec l;
  l.kind = LayerKind::Convolution;
  return l;
}

LayerSpec pool() {
  LayerSpec l;
  l.kind = LayerKind::MaxPool;
  return l;
}

LayerSpec dense() {
  LayerSpec l;
  l.kind = LayerKind::Dense;
  return l;
}

LayerSpec softmax_out(int class_count) {
  LayerSpec l;
  l.kind = LayerKind::SoftmaxOutput;
  l.unit_count = class_count;
  return l;
}

}  // namespace

ArchitectureSpec build_architecture(int id, const std::vector<std::size_t>& input_shape,
                                    int class_count) {
  if (id < 1 || id > 7)
    throw std::runtime_error("architecture id " + std::to_string(id) + " out of range 1..7");
  if (class_count < 2) throw std::runtime_error("architecture: class_count must be >= 2");

  bool image_arch = id <= 4;
  if (image_arch && input_shape.size() != 3)
    throw std::runtime_error("architecture " + std::to_string(id) +
                             " needs a rank-3 image input (got rank " +
                             std::to_string(input_shape.size()) + ")");
  if (!image_arch && input_shape.size() != 1)
    throw std::runtime_error("architecture " + std::to_string(id) +
                             " needs a flat numeric input (got rank " +
                             std::to_string(input_shape.size()) + ")");

  ArchitectureSpec spec;
  spec.id = id;
  spec.input_shape = input_shape;
  spec.class_count = class_count;
  spec.momentum = 0.9;
  spec.learning_rate = image_arch ? 0.01 : 0.0001;

  switch (id) {
    case 1:
      spec.layers = {conv(), pool(), conv(), pool(), dense()};
      break;
    case 2:
      spec.layers = {conv(), pool(), dense()};
      break;
    case 3:
      spec.layers = {conv(), dense()};
      break;
    case 4:
      spec.layers = {dense()};
      break;
    case 5:
      spec.layers = {dense(), dense()};
      break;
    case 6:
      spec.layers = {dense(), dense(), dense(), dense()};
      break;
    case 7:
      spec.layers = {dense(), dense(), dense(), dense(), dense(), dense()};
      break;
  }
  spec.layers.push_back(softmax_out(class_count));
  return spec;
}

}  // namespace dh
