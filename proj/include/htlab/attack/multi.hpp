#pragma once

#include <cstddef>
#include <vector>

#include "htlab/attack/config.hpp"
#include "htlab/attack/pattern.hpp"
#include "htlab/attack/trigger_spec.hpp"
#include "htlab/nncore/model.hpp"

namespace htlab::attack {

// Mean output activation of one layer over a sample set; accumulated in
// double, returned as FP32.
std::vector<float> average_activations(
    const nncore::Model& model, const std::vector<nncore::Tensor>& samples,
    std::size_t layer_index);

// Trigger-neuron candidates for one weighted layer: neurons whose
// individual zero-ablation changes at most ablation_tol of the calibration
// predictions, ranked by absolute mean activation difference between
// stamped and clean samples (largest first, ties by ascending index). For
// conv layers one candidate per channel competes (the position with the
// largest difference), because rewriting a kernel is a per-channel
// intervention. Throws ConfigError when k exceeds the candidate count and
// SeparationError when fewer than k candidates survive ablation.
std::vector<nncore::NeuronId> select_trigger_neurons(
    const nncore::Model& model, const std::vector<nncore::Tensor>& calib,
    const TriggerPattern& pattern, std::size_t layer_index, std::size_t k,
    float ablation_tol);

// Rewrites the incoming weights of one deep-layer neuron: each weight keeps
// magnitude s*|w| and takes the sign that makes it push in the direction of
// its input's mean activation shift (ties keep the original direction), so
// the mean pre-activation difference becomes s * sum |w_i * da_i|. Returns
// an altered copy; only that neuron's incoming weights change.
nncore::Model optimize_weights_multi(const nncore::Model& model,
                                     nncore::NeuronId neuron,
                                     const std::vector<nncore::Tensor>& calib,
                                     const TriggerPattern& pattern, float s);

struct MultiAttackResult {
  nncore::Model model;
  std::vector<TriggerNeuronSpec> specs;
};

// Works through config.layers in ascending order: selects per_layer trigger
// neurons, rewrites their rows, and fixes each threshold at the midpoint of
// the monitored clean-max/backdoor-min values. Later layers are optimized
// against the already-altered model. A neuron whose backdoor minimum does
// not exceed its clean maximum gets its scale doubled, up to four times,
// before SeparationError.
MultiAttackResult apply_multi_neuron_attack(
    const nncore::Model& model, const AttackConfig& config,
    const TriggerPattern& pattern, const std::vector<nncore::Tensor>& calib);

}  // namespace htlab::attack
