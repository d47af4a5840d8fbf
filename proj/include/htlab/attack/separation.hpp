#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include <nlohmann/json.hpp>

#include "htlab/attack/trigger_spec.hpp"
#include "htlab/nncore/model.hpp"

namespace htlab::attack {

// Distribution of one trigger neuron's monitored values over clean and
// backdoor samples, with a fixed 16-bin histogram spanning both sets.
struct NeuronSeparation {
  nncore::NeuronId neuron;
  nncore::NeuronId monitor;
  float tau = 0.0f;
  float clean_max = 0.0f;
  float clean_min = 0.0f;
  double clean_mean = 0.0;
  float backdoor_min = 0.0f;
  float gap = 0.0f;       // backdoor_min - clean_max
  bool violated = false;  // clean_max > tau or backdoor_min <= tau
  float hist_lo = 0.0f;   // shared bin range over both sets
  float hist_hi = 0.0f;
  std::array<std::size_t, 16> clean_hist{};
  std::array<std::size_t, 16> backdoor_hist{};
};

struct SeparationReport {
  std::vector<NeuronSeparation> neurons;
  // Fraction of clean samples whose monitored values cross every threshold
  // simultaneously; the joint trigger condition fires on exactly these.
  double joint_clean_cross_rate = 0.0;
};

// Re-measures every spec on the given sets. Purely diagnostic: violations
// are flagged, never thrown. Throws ConfigError only on empty inputs.
SeparationReport verify_separation(const nncore::Model& model,
                                   const std::vector<TriggerNeuronSpec>& specs,
                                   const std::vector<nncore::Tensor>& clean,
                                   const std::vector<nncore::Tensor>& backdoor);

nlohmann::json separation_report_to_json(const SeparationReport& report);

}  // namespace htlab::attack
