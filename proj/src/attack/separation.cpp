#include "htlab/attack/separation.hpp"

#include <algorithm>
#include <limits>

#include "htlab/error.hpp"
#include "htlab/nncore/engine.hpp"

namespace htlab::attack {

using nncore::Model;
using nncore::NeuronId;
using nncore::Tensor;

static std::size_t bin_of(float v, float lo, float hi) {
  if (hi <= lo) return 0;
  const float t = (v - lo) / (hi - lo) * 16.0f;
  const auto bin = static_cast<std::size_t>(std::max(t, 0.0f));
  return std::min<std::size_t>(bin, 15);
}

SeparationReport verify_separation(const Model& model,
                                   const std::vector<TriggerNeuronSpec>& specs,
                                   const std::vector<Tensor>& clean,
                                   const std::vector<Tensor>& backdoor) {
  if (specs.empty()) {
    throw ConfigError("verify_separation: no trigger neurons to check");
  }
  if (clean.empty() || backdoor.empty()) {
    throw ConfigError("verify_separation: both sample sets must be non-empty");
  }

  std::vector<NeuronId> taps;
  taps.reserve(specs.size());
  for (const auto& spec : specs) taps.push_back(spec.monitor);

  std::vector<std::vector<float>> clean_vals(specs.size());
  std::vector<std::vector<float>> backdoor_vals(specs.size());
  std::size_t joint = 0;
  for (const Tensor& x : clean) {
    const auto r = nncore::forward_with_taps(model, x, taps);
    bool all_cross = true;
    for (std::size_t n = 0; n < specs.size(); ++n) {
      clean_vals[n].push_back(r.taps[n].value);
      all_cross = all_cross && r.taps[n].value > specs[n].tau;
    }
    if (all_cross) ++joint;
  }
  for (const Tensor& x : backdoor) {
    const auto r = nncore::forward_with_taps(model, x, taps);
    for (std::size_t n = 0; n < specs.size(); ++n) {
      backdoor_vals[n].push_back(r.taps[n].value);
    }
  }

  SeparationReport report;
  report.joint_clean_cross_rate =
      static_cast<double>(joint) / static_cast<double>(clean.size());
  for (std::size_t n = 0; n < specs.size(); ++n) {
    NeuronSeparation sep;
    sep.neuron = specs[n].neuron;
    sep.monitor = specs[n].monitor;
    sep.tau = specs[n].tau;
    sep.clean_max = -std::numeric_limits<float>::infinity();
    sep.clean_min = std::numeric_limits<float>::infinity();
    sep.backdoor_min = std::numeric_limits<float>::infinity();
    double sum = 0.0;
    for (const float v : clean_vals[n]) {
      sep.clean_max = std::max(sep.clean_max, v);
      sep.clean_min = std::min(sep.clean_min, v);
      sum += v;
    }
    sep.clean_mean = sum / static_cast<double>(clean_vals[n].size());
    float backdoor_max = -std::numeric_limits<float>::infinity();
    for (const float v : backdoor_vals[n]) {
      sep.backdoor_min = std::min(sep.backdoor_min, v);
      backdoor_max = std::max(backdoor_max, v);
    }
    sep.gap = sep.backdoor_min - sep.clean_max;
    sep.violated = sep.clean_max > sep.tau || sep.backdoor_min <= sep.tau;
    sep.hist_lo = std::min(sep.clean_min, sep.backdoor_min);
    sep.hist_hi = std::max(sep.clean_max, backdoor_max);
    for (const float v : clean_vals[n]) {
      ++sep.clean_hist[bin_of(v, sep.hist_lo, sep.hist_hi)];
    }
    for (const float v : backdoor_vals[n]) {
      ++sep.backdoor_hist[bin_of(v, sep.hist_lo, sep.hist_hi)];
    }
    report.neurons.push_back(sep);
  }
  return report;
}

nlohmann::json separation_report_to_json(const SeparationReport& report) {
  nlohmann::json neurons = nlohmann::json::array();
  for (const auto& sep : report.neurons) {
    neurons.push_back({
        {"neuron", {{"layer", sep.neuron.layer}, {"index", sep.neuron.index}}},
        {"monitor",
         {{"layer", sep.monitor.layer}, {"index", sep.monitor.index}}},
        {"threshold", sep.tau},
        {"clean_max", sep.clean_max},
        {"clean_min", sep.clean_min},
        {"clean_mean", sep.clean_mean},
        {"backdoor_min", sep.backdoor_min},
        {"gap", sep.gap},
        {"violated", sep.violated},
        {"histogram",
         {{"lo", sep.hist_lo},
          {"hi", sep.hist_hi},
          {"clean", sep.clean_hist},
          {"backdoor", sep.backdoor_hist}}},
    });
  }
  return {{"neurons", neurons},
          {"joint_clean_cross_rate", report.joint_clean_cross_rate}};
}

}  // namespace htlab::attack
