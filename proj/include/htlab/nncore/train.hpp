#pragma once

#include <cstdint>
#include <vector>

#include "htlab/nncore/model.hpp"
#include "htlab/nncore/tensor.hpp"

namespace htlab::nncore {

// Architecture row used when minting a fresh model. Only the fields
// relevant to `kind` are read.
struct LayerArch {
  LayerKind kind = LayerKind::relu;
  int out = 0;      // dense units or conv output channels
  int kernel = 3;   // conv2d
  int stride = 1;   // conv2d
  int padding = 0;  // conv2d
  int pool = 2;     // maxpool
  int pool_stride = 2;
};

// Builds a model with Glorot-uniform weights and zero biases. Deterministic
// given (arch, seed).
Model init_model(const std::vector<std::size_t>& input_shape,
                 const std::vector<LayerArch>& arch, std::uint64_t seed);

struct TrainConfig {
  int epochs = 10;
  float lr = 0.05f;
  int batch_size = 32;
  std::uint64_t seed = 0;
};

struct TrainStats {
  std::vector<double> epoch_loss;  // mean cross-entropy per epoch
};

// Minibatch SGD with softmax cross-entropy. Single-threaded backward pass
// with sequential gradient accumulation, so the result is a pure function of
// (model, data, config). Zero epochs returns with the model untouched.
// Throws DivergenceError when the loss goes non-finite.
TrainStats train_small(Model& model, const std::vector<Tensor>& images,
                       const std::vector<int>& labels,
                       const TrainConfig& config);

// Softmax probabilities of a logits vector (double precision internally).
std::vector<double> softmax(const Tensor& logits);

// Index of the largest logit; ties resolve to the lowest index.
std::size_t argmax(const Tensor& logits);

}  // namespace htlab::nncore
