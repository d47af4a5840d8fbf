#include "htlab/nncore/tensor.hpp"

#include <string>

#include "htlab/error.hpp"

namespace htlab::nncore {

Tensor::Tensor(std::vector<std::size_t> shape_in, std::vector<float> data_in)
    : shape(std::move(shape_in)), data(std::move(data_in)) {
  if (shape_numel(shape) != data.size()) {
    throw ShapeError("Tensor: data size " + std::to_string(data.size()) +
                     " does not match shape with " +
                     std::to_string(shape_numel(shape)) + " elements");
  }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape) {
  return full(std::move(shape), 0.0f);
}

Tensor Tensor::full(std::vector<std::size_t> shape, float value) {
  Tensor t;
  t.data.assign(shape_numel(shape), value);
  t.shape = std::move(shape);
  return t;
}

std::size_t shape_numel(const std::vector<std::size_t>& shape) {
  std::size_t n = 1;
  for (std::size_t d : shape) n *= d;
  return shape.empty() ? 0 : n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* where) {
  if (!a.same_shape(b)) {
    std::string msg(where);
    msg += ": shape mismatch [";
    for (std::size_t d : a.shape) msg += std::to_string(d) + " ";
    msg += "] vs [";
    for (std::size_t d : b.shape) msg += std::to_string(d) + " ";
    msg += "]";
    throw ShapeError(msg);
  }
}

}  // namespace htlab::nncore
