#pragma once

#include <vector>

#include "htlab/nncore/model.hpp"
#include "htlab/nncore/tensor.hpp"

namespace htlab::nncore {

// Outputs of every layer for one input, in layer order. outputs.back() is
// the logits tensor.
struct ForwardTrace {
  std::vector<Tensor> outputs;
};

struct ForwardResult {
  Tensor logits;
  std::vector<TapRecord> taps;
};

// Forward pass over OpenMP-parallel kernels. Parallelism is across output
// elements only; each element accumulates its products serially in ascending
// input index starting from the bias, so results are bit-identical for any
// thread count and match the serial reference in reference.hpp to 0 ULP.
Tensor forward(const Model& model, const Tensor& input);

ForwardTrace forward_trace(const Model& model, const Tensor& input);

// Same pass; additionally records the value of each requested neuron
// (layer output scalar) in request order.
ForwardResult forward_with_taps(const Model& model, const Tensor& input,
                                const std::vector<NeuronId>& taps);

}  // namespace htlab::nncore
