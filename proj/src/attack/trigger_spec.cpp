#include "htlab/attack/trigger_spec.hpp"

namespace htlab::attack {

nncore::NeuronId monitor_point(const nncore::Model& model,
                               nncore::NeuronId neuron) {
  const std::size_t next = neuron.layer + 1;
  if (next < model.layers.size() &&
      model.layers[next].kind == nncore::LayerKind::relu) {
    return {next, neuron.index};
  }
  return neuron;
}

nlohmann::json trigger_spec_to_json(const TriggerNeuronSpec& spec) {
  return {
      {"neuron", {{"layer", spec.neuron.layer}, {"index", spec.neuron.index}}},
      {"monitor",
       {{"layer", spec.monitor.layer}, {"index", spec.monitor.index}}},
      {"threshold", spec.tau},
      {"clean_max", spec.clean_max},
      {"backdoor_min", spec.backdoor_min},
      {"clean_max_pre", spec.clean_max_pre},
      {"backdoor_pre", spec.backdoor_pre},
      {"margin", spec.margin},
      {"scale", spec.scale},
  };
}

TriggerNeuronSpec trigger_spec_from_json(const nlohmann::json& j) {
  TriggerNeuronSpec spec;
  spec.neuron.layer = j.at("neuron").at("layer").get<std::size_t>();
  spec.neuron.index = j.at("neuron").at("index").get<std::size_t>();
  spec.monitor.layer = j.at("monitor").at("layer").get<std::size_t>();
  spec.monitor.index = j.at("monitor").at("index").get<std::size_t>();
  spec.tau = j.at("threshold").get<float>();
  spec.clean_max = j.at("clean_max").get<float>();
  spec.backdoor_min = j.at("backdoor_min").get<float>();
  spec.clean_max_pre = j.value("clean_max_pre", 0.0f);
  spec.backdoor_pre = j.value("backdoor_pre", 0.0f);
  spec.margin = j.value("margin", 0.0f);
  spec.scale = j.value("scale", 0.0f);
  return spec;
}

}  // namespace htlab::attack
