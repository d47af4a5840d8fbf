#include "htlab/attack/config.hpp"

#include "htlab/error.hpp"

namespace htlab::attack {

const char* attack_variant_name(AttackVariant v) {
  switch (v) {
    case AttackVariant::single_trigger_opt: return "single_trigger_opt";
    case AttackVariant::single_weight_opt: return "single_weight_opt";
    case AttackVariant::multi_neuron: return "multi_neuron";
  }
  return "unknown";
}

AttackVariant attack_variant_from_name(const std::string& name) {
  if (name == "single_trigger_opt") return AttackVariant::single_trigger_opt;
  if (name == "single_weight_opt") return AttackVariant::single_weight_opt;
  if (name == "multi_neuron") return AttackVariant::multi_neuron;
  throw ConfigError("unknown attack variant: " + name);
}

void validate_attack_config(const AttackConfig& config) {
  if (config.scale <= 0.0f) {
    throw ConfigError("attack scale must be positive");
  }
  if (config.tau < 0.0f) {
    throw ConfigError("attack threshold must be non-negative");
  }
  if (config.calib_count == 0) {
    throw ConfigError("attack needs a non-empty calibration set");
  }
  if (config.variant == AttackVariant::multi_neuron) {
    if (config.layers.empty()) {
      throw ConfigError("multi-neuron attack needs target layers");
    }
    if (config.per_layer == 0) {
      throw ConfigError("multi-neuron attack needs per_layer >= 1");
    }
    if (config.ablation_tol < 0.0f || config.ablation_tol > 1.0f) {
      throw ConfigError("ablation tolerance must be in [0, 1]");
    }
    for (std::size_t i = 1; i < config.layers.size(); ++i) {
      if (config.layers[i] <= config.layers[i - 1]) {
        throw ConfigError("multi-neuron layers must be strictly ascending");
      }
    }
  }
}

nlohmann::json attack_config_to_json(const AttackConfig& config) {
  nlohmann::json j;
  j["version"] = "1";
  j["variant"] = attack_variant_name(config.variant);
  j["scale"] = config.scale;
  j["threshold"] = config.tau;
  if (config.margin > 0.0f) j["margin"] = config.margin;
  j["calibration_count"] = config.calib_count;
  if (config.variant == AttackVariant::multi_neuron) {
    j["layers"] = config.layers;
    j["per_layer"] = config.per_layer;
    j["ablation_tolerance"] = config.ablation_tol;
  } else {
    j["neuron"] = {{"layer", config.neuron.layer},
                   {"index", config.neuron.index}};
    j["auto_neuron"] = config.auto_neuron;
  }
  return j;
}

AttackConfig attack_config_from_json(const nlohmann::json& j) {
  if (j.value("version", "1") != "1") {
    throw ConfigError("unknown attack config schema version");
  }
  AttackConfig config;
  config.variant = attack_variant_from_name(j.at("variant").get<std::string>());
  config.scale = j.value("scale", 8.0f);
  config.tau = j.value("threshold", 0.0f);
  config.margin = j.value("margin", 0.0f);
  config.calib_count = j.value("calibration_count", std::size_t{100});
  if (config.variant == AttackVariant::multi_neuron) {
    config.layers = j.at("layers").get<std::vector<std::size_t>>();
    config.per_layer = j.value("per_layer", std::size_t{1});
    config.ablation_tol = j.value("ablation_tolerance", 0.02f);
  } else {
    if (j.contains("neuron")) {
      config.neuron.layer = j.at("neuron").at("layer").get<std::size_t>();
      config.neuron.index = j.at("neuron").value("index", std::size_t{0});
    }
    config.auto_neuron = j.value("auto_neuron", !j.contains("neuron") ||
                                                    !j.at("neuron").contains(
                                                        "index"));
  }
  validate_attack_config(config);
  return config;
}

}  // namespace htlab::attack
