#include "htlab/trojan/config.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "htlab/error.hpp"
#include "htlab/nncore/fp32.hpp"

namespace htlab::trojan {

namespace {

const char* condition_kind_name(ConditionKind kind) {
  switch (kind) {
    case ConditionKind::msb_positive: return "msb_positive";
    case ConditionKind::exp_threshold: return "exp_threshold";
  }
  return "unknown";
}

ConditionKind condition_kind_from_name(const std::string& name) {
  if (name == "msb_positive") return ConditionKind::msb_positive;
  if (name == "exp_threshold") return ConditionKind::exp_threshold;
  throw ConfigError("unknown trigger condition kind: " + name);
}

}  // namespace

const char* composite_kind_name(CompositeKind kind) {
  switch (kind) {
    case CompositeKind::single: return "single";
    case CompositeKind::and_all: return "and_all";
    case CompositeKind::or_any: return "or_any";
    case CompositeKind::sequence: return "sequence";
    case CompositeKind::temporal: return "temporal";
  }
  return "unknown";
}

CompositeKind composite_kind_from_name(const std::string& name) {
  if (name == "single") return CompositeKind::single;
  if (name == "and_all") return CompositeKind::and_all;
  if (name == "or_any") return CompositeKind::or_any;
  if (name == "sequence") return CompositeKind::sequence;
  if (name == "temporal") return CompositeKind::temporal;
  throw ConfigError("unknown composite trigger kind: " + name);
}

namespace {

void validate_composite(const CompositeTrigger& composite) {
  if (composite.kind == CompositeKind::temporal) {
    if (composite.count == 0) {
      throw ConfigError("temporal trigger needs count >= 1");
    }
    if (!composite.inner) {
      throw ConfigError("temporal trigger needs an inner composite");
    }
    if (composite.inner->kind == CompositeKind::temporal) {
      throw ConfigError("temporal triggers do not nest");
    }
    if (!composite.conditions.empty()) {
      throw ConfigError(
          "temporal trigger conditions belong to its inner composite");
    }
    validate_composite(*composite.inner);
    return;
  }
  if (composite.inner) {
    throw ConfigError("only temporal triggers wrap an inner composite");
  }
  if (composite.conditions.empty()) {
    throw ConfigError("composite trigger needs at least one condition");
  }
  if (composite.kind == CompositeKind::single &&
      composite.conditions.size() != 1) {
    throw ConfigError("single trigger holds exactly one condition");
  }
  if (composite.kind == CompositeKind::sequence) {
    if (composite.order.size() != composite.conditions.size()) {
      throw ConfigError("sequence order must cover every condition");
    }
    std::vector<bool> seen(composite.order.size(), false);
    for (const std::size_t idx : composite.order) {
      if (idx >= seen.size() || seen[idx]) {
        throw ConfigError("sequence order must be a permutation");
      }
      seen[idx] = true;
    }
  } else if (!composite.order.empty()) {
    throw ConfigError("only sequence triggers carry an order");
  }
  for (const TriggerCondition& cond : composite.conditions) {
    if (cond.kind == ConditionKind::exp_threshold &&
        (cond.threshold < 1 || cond.threshold > 254)) {
      throw ConfigError("exponent threshold must lie in [1, 254], got " +
                        std::to_string(cond.threshold));
    }
  }
}

nlohmann::json condition_to_json(const TriggerCondition& cond) {
  nlohmann::json j{{"kind", condition_kind_name(cond.kind)},
                   {"layer", cond.neuron.layer},
                   {"index", cond.neuron.index}};
  if (cond.kind == ConditionKind::exp_threshold) {
    j["threshold"] = cond.threshold;
  }
  return j;
}

TriggerCondition condition_from_json(const nlohmann::json& j) {
  TriggerCondition cond;
  cond.kind = condition_kind_from_name(j.at("kind").get<std::string>());
  cond.neuron.layer = j.at("layer").get<std::size_t>();
  cond.neuron.index = j.at("index").get<std::size_t>();
  if (cond.kind == ConditionKind::exp_threshold) {
    cond.threshold = j.at("threshold").get<std::uint32_t>();
  }
  return cond;
}

nlohmann::json composite_to_json(const CompositeTrigger& composite) {
  nlohmann::json j{{"kind", composite_kind_name(composite.kind)}};
  if (composite.kind == CompositeKind::temporal) {
    j["count"] = composite.count;
    j["inner"] = composite_to_json(*composite.inner);
    return j;
  }
  j["conditions"] = nlohmann::json::array();
  for (const TriggerCondition& cond : composite.conditions) {
    j["conditions"].push_back(condition_to_json(cond));
  }
  if (composite.kind == CompositeKind::sequence) {
    j["order"] = composite.order;
  }
  return j;
}

CompositeTrigger composite_from_json(const nlohmann::json& j) {
  CompositeTrigger composite;
  composite.kind = composite_kind_from_name(j.at("kind").get<std::string>());
  if (composite.kind == CompositeKind::temporal) {
    composite.count = j.at("count").get<std::size_t>();
    composite.inner = std::make_shared<const CompositeTrigger>(
        composite_from_json(j.at("inner")));
    return composite;
  }
  for (const nlohmann::json& cj : j.at("conditions")) {
    composite.conditions.push_back(condition_from_json(cj));
  }
  if (composite.kind == CompositeKind::sequence) {
    composite.order = j.at("order").get<std::vector<std::size_t>>();
  }
  return composite;
}

}  // namespace

const std::vector<TriggerCondition>& active_conditions(
    const CompositeTrigger& composite) {
  if (composite.kind == CompositeKind::temporal && composite.inner) {
    return composite.inner->conditions;
  }
  return composite.conditions;
}

void validate_trojan_config(const TrojanConfig& config) {
  validate_composite(config.composite);
  const PayloadSpec& payload = config.payload;
  if (payload.mode == PayloadMode::value_bias && !std::isfinite(payload.bias)) {
    throw ConfigError("payload bias must be finite");
  }
  if (payload.targeting == PayloadTargeting::class_map) {
    if (payload.class_map.empty()) {
      throw ConfigError("class_map payload needs a non-empty table");
    }
    for (std::size_t c = 0; c < payload.class_map.size(); ++c) {
      if (payload.class_map[c] == c ||
          payload.class_map[c] >= payload.class_map.size()) {
        throw ConfigError("class_map must send every class to a different "
                          "valid class; entry " + std::to_string(c) +
                          " maps to " + std::to_string(payload.class_map[c]));
      }
    }
  }
}

nlohmann::json payload_to_json(const PayloadSpec& payload) {
  nlohmann::json pj;
  pj["mode"] = payload.mode == PayloadMode::value_bias ? "value_bias" : "exp_add";
  if (payload.mode == PayloadMode::value_bias) {
    pj["bias"] = payload.bias;
  } else {
    pj["exp_add"] = payload.exp_add;
  }
  pj["targeting"] =
      payload.targeting == PayloadTargeting::fixed ? "fixed" : "class_map";
  if (payload.targeting == PayloadTargeting::fixed) {
    pj["target_class"] = payload.target_class;
  } else {
    pj["class_map"] = payload.class_map;
  }
  pj["bias_storage"] =
      payload.bias_storage == BiasStorage::hardcoded ? "hardcoded" : "register";
  return pj;
}

nlohmann::json trojan_config_to_json(const TrojanConfig& config) {
  nlohmann::json j;
  j["version"] = "1";
  j["composite"] = composite_to_json(config.composite);
  j["payload"] = payload_to_json(config.payload);

  if (config.weight_trojan) {
    nlohmann::json wj;
    wj["mode"] = config.weight_trojan->mode == WeightTrojanMode::transient
                     ? "transient"
                     : "persistent";
    wj["targets"] = nlohmann::json::array();
    for (const WeightTarget& t : config.weight_trojan->targets) {
      wj["targets"].push_back(
          {{"layer", t.layer},
           {"tensor", t.tensor == WeightTensor::weight ? "weight" : "bias"},
           {"offset", t.offset},
           {"value", t.value},
           {"op", t.additive ? "add" : "replace"}});
    }
    j["weight_trojan"] = wj;
  }
  return j;
}

PayloadSpec payload_from_json(const nlohmann::json& pj) {
  PayloadSpec payload;
  const std::string mode = pj.at("mode").get<std::string>();
  if (mode == "value_bias") {
    payload.mode = PayloadMode::value_bias;
    payload.bias = pj.at("bias").get<float>();
  } else if (mode == "exp_add") {
    payload.mode = PayloadMode::exp_add;
    payload.exp_add = pj.at("exp_add").get<int>();
  } else {
    throw ConfigError("unknown payload mode: " + mode);
  }
  const std::string targeting = pj.at("targeting").get<std::string>();
  if (targeting == "fixed") {
    payload.targeting = PayloadTargeting::fixed;
    payload.target_class = pj.at("target_class").get<std::size_t>();
  } else if (targeting == "class_map") {
    payload.targeting = PayloadTargeting::class_map;
    payload.class_map = pj.at("class_map").get<std::vector<std::size_t>>();
  } else {
    throw ConfigError("unknown payload targeting: " + targeting);
  }
  const std::string storage = pj.value("bias_storage", "hardcoded");
  if (storage == "hardcoded") {
    payload.bias_storage = BiasStorage::hardcoded;
  } else if (storage == "register") {
    payload.bias_storage = BiasStorage::reg;
  } else {
    throw ConfigError("unknown bias storage: " + storage);
  }
  return payload;
}

TrojanConfig trojan_config_from_json(const nlohmann::json& j) {
  if (j.value("version", "1") != "1") {
    throw ConfigError("unknown trojan config schema version");
  }
  TrojanConfig config;
  config.composite = composite_from_json(j.at("composite"));
  config.payload = payload_from_json(j.at("payload"));

  if (j.contains("weight_trojan")) {
    const nlohmann::json& wj = j.at("weight_trojan");
    WeightTrojanSpec spec;
    const std::string wmode = wj.at("mode").get<std::string>();
    if (wmode == "transient") {
      spec.mode = WeightTrojanMode::transient;
    } else if (wmode == "persistent") {
      spec.mode = WeightTrojanMode::persistent;
    } else {
      throw ConfigError("unknown weight trojan mode: " + wmode);
    }
    for (const nlohmann::json& tj : wj.at("targets")) {
      WeightTarget t;
      t.layer = tj.at("layer").get<std::size_t>();
      const std::string tensor = tj.at("tensor").get<std::string>();
      if (tensor == "weight") {
        t.tensor = WeightTensor::weight;
      } else if (tensor == "bias") {
        t.tensor = WeightTensor::bias;
      } else {
        throw ConfigError("unknown weight trojan tensor: " + tensor);
      }
      t.offset = tj.at("offset").get<std::size_t>();
      t.value = tj.at("value").get<float>();
      const std::string op = tj.value("op", "replace");
      if (op == "add") {
        t.additive = true;
      } else if (op == "replace") {
        t.additive = false;
      } else {
        throw ConfigError("unknown weight trojan op: " + op);
      }
      spec.targets.push_back(t);
    }
    config.weight_trojan = std::move(spec);
  }
  validate_trojan_config(config);
  return config;
}

TriggerCondition derive_trigger_condition(const attack::TriggerNeuronSpec& spec) {
  TriggerCondition cond;
  cond.neuron = spec.monitor;
  if (spec.tau == 0.0f) {
    cond.kind = ConditionKind::msb_positive;
    return cond;
  }
  const std::uint32_t clean_field =
      nncore::decompose_fp32(std::max(spec.clean_max, 0.0f)).exponent;
  const std::uint32_t backdoor_field =
      nncore::decompose_fp32(spec.backdoor_min).exponent;
  if (backdoor_field <= clean_field) {
    throw SeparationError(
        "no exponent threshold separates clean field " +
            std::to_string(clean_field) + " from backdoor field " +
            std::to_string(backdoor_field) + " at neuron (" +
            std::to_string(spec.monitor.layer) + ", " +
            std::to_string(spec.monitor.index) + ")",
        static_cast<double>(spec.backdoor_min) - spec.clean_max);
  }
  cond.kind = ConditionKind::exp_threshold;
  cond.threshold = (clean_field + backdoor_field) / 2;
  if (cond.threshold < 1 || cond.threshold > 254) {
    throw SeparationError("derived exponent threshold " +
                          std::to_string(cond.threshold) +
                          " leaves the comparable range [1, 254]");
  }
  return cond;
}

}  // namespace htlab::trojan
