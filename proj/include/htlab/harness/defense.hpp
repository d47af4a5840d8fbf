#pragma once

#include "htlab/harness/dataset.hpp"
#include "htlab/nncore/model.hpp"
#include "htlab/nncore/train.hpp"

namespace htlab::harness {

// Retrains a copy of the model on the clean dataset. Zero epochs returns
// the input bit-identically; otherwise deterministic given config.seed.
// Throws DivergenceError when the loss goes non-finite.
nncore::Model fine_tune(const nncore::Model& model, const Dataset& data,
                        const nncore::TrainConfig& config);

// Activation pruning: weighted layers are processed in order; for each, the
// mean activation per unit (per channel for conv layers) is measured at the
// post-relu point on the partially pruned model over the clean dataset, and
// the floor(fraction * units) lowest-mean units (ties to the lower index)
// get their incoming weights and bias zeroed. fraction 0 returns the input
// bit-identically. Throws RangeError unless fraction is in [0, 1).
nncore::Model fine_prune(const nncore::Model& model, const Dataset& data,
                         float fraction);

}  // namespace htlab::harness
