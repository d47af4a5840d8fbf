#pragma once

#include "htlab/nncore/engine.hpp"
#include "htlab/nncore/model.hpp"
#include "htlab/nncore/tensor.hpp"

namespace htlab::nncore::ref {

// Serial reference engine. Plain nested loops, no OpenMP, written
// independently of engine.cpp so the two can check each other. Follows the
// same accumulation contract (start from bias, add products in ascending
// input index), which makes the parallel kernels comparable to 0 ULP.
// Used by tests and by the benchmark target; not intended to be fast.
Tensor forward(const Model& model, const Tensor& input);
ForwardTrace forward_trace(const Model& model, const Tensor& input);

}  // namespace htlab::nncore::ref
