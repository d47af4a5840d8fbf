#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "htlab/nncore/model.hpp"

namespace htlab::attack {

enum class AttackVariant {
  single_trigger_opt,  // fix masked weights, optimize the trigger content
  single_weight_opt,   // fix the trigger, sign-align and scale the weights
  multi_neuron,        // deep-layer neurons via activation-difference signs
};

const char* attack_variant_name(AttackVariant v);
AttackVariant attack_variant_from_name(const std::string& name);

struct AttackConfig {
  AttackVariant variant = AttackVariant::single_weight_opt;
  float scale = 8.0f;  // s
  float tau = 0.0f;    // detection threshold the trigger neuron must cross
  // Safety margin around tau; <= 0 selects 5% of the measured clean/backdoor
  // gap.
  float margin = 0.0f;
  // Single-neuron target. The attacked layer is always the first weighted
  // layer (only its weights multiply trigger pixels directly). With
  // auto_neuron the index is chosen as the candidate whose zero-ablation
  // changes the fewest calibration predictions; otherwise `neuron` names
  // the output index and its layer must be that first weighted layer.
  bool auto_neuron = true;
  nncore::NeuronId neuron;
  // Multi-neuron targets: weighted layer indices, attacked in ascending
  // order, `per_layer` trigger neurons each.
  std::vector<std::size_t> layers;
  std::size_t per_layer = 1;
  float ablation_tol = 0.02f;  // max calib accuracy drop for a safe neuron
  std::size_t calib_count = 100;
};

// Throws ConfigError on out-of-range fields.
void validate_attack_config(const AttackConfig& config);

nlohmann::json attack_config_to_json(const AttackConfig& config);
AttackConfig attack_config_from_json(const nlohmann::json& j);

}  // namespace htlab::attack
