#pragma once

#include <cstddef>
#include <vector>

#include "htlab/attack/config.hpp"
#include "htlab/attack/pattern.hpp"
#include "htlab/attack/trigger_spec.hpp"
#include "htlab/nncore/model.hpp"

namespace htlab::attack {

// w with entries zeroed wherever mask = 0, so what survives multiplies
// trigger pixels only.
std::vector<float> mask_weights(const std::vector<float>& w,
                                const std::vector<float>& mask);

// Box-constrained maximizer of w.delta: lower where w < 0, upper where
// w >= 0 (ties take the upper branch).
std::vector<float> optimize_trigger(const std::vector<float>& w,
                                    const std::vector<float>& lower,
                                    const std::vector<float>& upper);

// Rescales each weight to magnitude s*|w_i| signed to agree with delta_i
// (zero where delta_i = 0), so the trigger response becomes
// s * sum |w_i * delta_i| over the trigger support.
std::vector<float> optimize_weights_single(const std::vector<float>& w,
                                           const std::vector<float>& delta,
                                           float s);

// Sets the attacked neuron's bias so every clean calibration pre-activation
// lands at or below tau - margin while every stamped one lands at or above
// tau + margin. margin <= 0 selects 5% of the measured clean/backdoor gap.
// Throws SeparationError (carrying the measured gap) when the gap cannot
// host both margins; callers should retry with a larger scale. The returned
// spec carries the re-measured pre-activation extremes and the post-relu
// monitor statistics.
TriggerNeuronSpec tune_bias(nncore::Model& model, nncore::NeuronId neuron,
                            const std::vector<nncore::Tensor>& calib,
                            const TriggerPattern& pattern, float tau,
                            float margin, float scale);

struct SingleAttackResult {
  nncore::Model model;
  TriggerNeuronSpec spec;
  TriggerPattern pattern;  // final delta; the trigger-opt variant edits it
};

// Rewires one neuron of the first weighted layer: masks its incoming
// weights to the trigger footprint, then either rewrites delta to match the
// surviving weights (single_trigger_opt) or rewrites the weights to match
// delta (single_weight_opt), and finally tunes the bias. Only that neuron's
// weight row and bias differ from the input model.
SingleAttackResult apply_single_neuron_attack(
    const nncore::Model& model, const AttackConfig& config,
    const TriggerPattern& pattern, const std::vector<nncore::Tensor>& calib);

}  // namespace htlab::attack
