#pragma once

#include <cstddef>
#include <vector>

namespace htlab::nncore {

// Dense row-major FP32 tensor. Shapes are kept as plain vectors; all layout
// math lives here so kernels can stay index arithmetic only.
struct Tensor {
  std::vector<std::size_t> shape;
  std::vector<float> data;

  Tensor() = default;
  Tensor(std::vector<std::size_t> shape_in, std::vector<float> data_in);

  static Tensor zeros(std::vector<std::size_t> shape);
  static Tensor full(std::vector<std::size_t> shape, float value);

  std::size_t numel() const { return data.size(); }
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  float& operator[](std::size_t i) { return data[i]; }
  const float& operator[](std::size_t i) const { return data[i]; }

  // (c, y, x) accessors for rank-3 tensors; callers guarantee the rank.
  float& at3(std::size_t c, std::size_t y, std::size_t x) {
    return data[(c * shape[1] + y) * shape[2] + x];
  }
  const float& at3(std::size_t c, std::size_t y, std::size_t x) const {
    return data[(c * shape[1] + y) * shape[2] + x];
  }

  // (o, i, ky, kx) accessors for rank-4 tensors (conv kernels).
  float& at4(std::size_t o, std::size_t i, std::size_t ky, std::size_t kx) {
    return data[((o * shape[1] + i) * shape[2] + ky) * shape[3] + kx];
  }
  const float& at4(std::size_t o, std::size_t i, std::size_t ky,
                   std::size_t kx) const {
    return data[((o * shape[1] + i) * shape[2] + ky) * shape[3] + kx];
  }
};

std::size_t shape_numel(const std::vector<std::size_t>& shape);

// Throws ShapeError unless both tensors have identical shapes.
void require_same_shape(const Tensor& a, const Tensor& b, const char* where);

}  // namespace htlab::nncore
