#include "htlab/trojan/device.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "htlab/error.hpp"
#include "htlab/nncore/fp32.hpp"
#include "htlab/nncore/train.hpp"

namespace htlab::trojan {

using nncore::Model;
using nncore::NeuronId;
using nncore::TapRecord;
using nncore::Tensor;

TrojanDevice make_device(const TrojanConfig& config) {
  validate_trojan_config(config);
  TrojanDevice device;
  device.config = config;
  device.bias_reg = config.payload.bias;
  return device;
}

void reset_device(TrojanDevice& device) {
  device.occurrences = 0;
  device.cursor = 0;
  device.latched = false;
}

void set_payload_bias(TrojanDevice& device, float bias) {
  if (device.config.payload.bias_storage != BiasStorage::reg) {
    throw ConfigError("payload bias is hardcoded; only register-mode devices "
                      "accept rewrites");
  }
  device.bias_reg = bias;
}

BiasCalibration calibrate_payload_bias(const Model& model,
                                       const std::vector<Tensor>& samples) {
  if (samples.empty()) {
    throw ConfigError("calibrate_payload_bias: sample set is empty");
  }
  float peak = -std::numeric_limits<float>::infinity();
  for (const Tensor& x : samples) {
    const Tensor logits = nncore::forward(model, x);
    for (std::size_t i = 0; i < logits.numel(); ++i) {
      peak = std::max(peak, logits[i]);
    }
  }
  BiasCalibration out;
  out.bias = static_cast<float>(1.1 * static_cast<double>(peak));
  out.may_not_dominate = peak <= 0.0f;
  return out;
}

bool eval_condition(const TriggerCondition& cond,
                    const std::vector<TapRecord>& records) {
  const TapRecord* tap = nullptr;
  for (const TapRecord& r : records) {
    if (r.neuron == cond.neuron) {
      tap = &r;
      break;
    }
  }
  if (!tap) {
    throw ConfigError("eval_condition: no tap for neuron (" +
                      std::to_string(cond.neuron.layer) + ", " +
                      std::to_string(cond.neuron.index) + ")");
  }
  const std::uint32_t bits = nncore::fp32_to_bits(tap->value);
  if (cond.kind == ConditionKind::msb_positive) {
    // Sign bit clear and not +0.0: the strictly-positive contract.
    return (bits >> 31) == 0 && bits != 0;
  }
  return ((bits >> 23) & 0xffu) > cond.threshold;
}

namespace {

// Asserts one step of a non-temporal composite; sequence kinds use (and
// mutate) the device's cursor and latch.
bool step_stage(TrojanDevice& device, const CompositeTrigger& composite,
                const std::vector<bool>& fired) {
  switch (composite.kind) {
    case CompositeKind::single:
      return fired[0];
    case CompositeKind::and_all:
      return std::all_of(fired.begin(), fired.end(),
                         [](bool f) { return f; });
    case CompositeKind::or_any:
      return std::any_of(fired.begin(), fired.end(),
                         [](bool f) { return f; });
    case CompositeKind::sequence:
      if (!device.latched && fired[composite.order[device.cursor]]) {
        ++device.cursor;
        if (device.cursor == composite.order.size()) device.latched = true;
      }
      return device.latched;
    case CompositeKind::temporal:
      break;
  }
  throw ConfigError("step_composite: malformed composite");
}

}  // namespace

bool step_composite(TrojanDevice& device, const std::vector<bool>& fired) {
  const CompositeTrigger& composite = device.config.composite;
  if (fired.size() != active_conditions(composite).size()) {
    throw ConfigError("step_composite: fired vector covers " +
                      std::to_string(fired.size()) + " conditions, expected " +
                      std::to_string(active_conditions(composite).size()));
  }
  if (composite.kind != CompositeKind::temporal) {
    return step_stage(device, composite, fired);
  }
  if (step_stage(device, *composite.inner, fired)) ++device.occurrences;
  return device.occurrences >= composite.count;
}

Tensor apply_payload(const Tensor& logits, const PayloadSpec& payload,
                     bool asserted) {
  Tensor out = logits;
  if (!asserted) return out;

  std::size_t target = payload.target_class;
  if (payload.targeting == PayloadTargeting::class_map) {
    const std::size_t predicted = nncore::argmax(logits);
    if (predicted >= payload.class_map.size()) {
      throw ConfigError("apply_payload: class_map covers " +
                        std::to_string(payload.class_map.size()) +
                        " classes but the model predicts class " +
                        std::to_string(predicted));
    }
    target = payload.class_map[predicted];
  }
  if (target >= out.numel()) {
    throw ConfigError("apply_payload: target class " + std::to_string(target) +
                      " outside " + std::to_string(out.numel()) + " logits");
  }
  if (payload.mode == PayloadMode::value_bias) {
    out[target] += payload.bias;
    return out;
  }
  // Exponent-field adder: moves the field and saturates at the format edges
  // instead of erroring; sign and mantissa pass through.
  nncore::Fp32Parts parts = nncore::decompose_fp32(out[target]);
  const int field = static_cast<int>(parts.exponent) + payload.exp_add;
  parts.exponent = static_cast<std::uint32_t>(std::clamp(field, 0, 254));
  out[target] = nncore::compose_fp32(parts);
  return out;
}

Model apply_weight_trojan(const Model& model, const WeightTrojanSpec& spec) {
  Model out = model;
  for (const WeightTarget& t : spec.targets) {
    if (t.layer >= out.layers.size()) {
      throw ConfigError("weight trojan targets layer " +
                        std::to_string(t.layer) + " outside the model");
    }
    Tensor& tensor = t.tensor == WeightTensor::weight
                         ? out.layers[t.layer].weight
                         : out.layers[t.layer].bias;
    if (t.offset >= tensor.numel()) {
      throw ConfigError("weight trojan offset " + std::to_string(t.offset) +
                        " outside tensor of " + std::to_string(tensor.numel()) +
                        " values at layer " + std::to_string(t.layer));
    }
    if (t.additive) {
      tensor.data[t.offset] += t.value;
    } else {
      tensor.data[t.offset] = t.value;
    }
  }
  return out;
}

Tensor hosted_forward(TrojanDevice& device, const Model& model,
                      const Tensor& input) {
  const TrojanConfig& config = device.config;

  // Persistent implants already rewrote the stored model; transient ones
  // corrupt a per-inference copy so the golden weights stay byte-identical.
  const Model* effective = &model;
  Model perturbed;
  if (config.weight_trojan &&
      config.weight_trojan->mode == WeightTrojanMode::transient) {
    perturbed = apply_weight_trojan(model, *config.weight_trojan);
    effective = &perturbed;
  }

  const std::vector<TriggerCondition>& conditions =
      active_conditions(config.composite);
  std::vector<NeuronId> taps;
  for (const TriggerCondition& cond : conditions) {
    if (std::find(taps.begin(), taps.end(), cond.neuron) == taps.end()) {
      taps.push_back(cond.neuron);
    }
  }
  const nncore::ForwardResult run =
      nncore::forward_with_taps(*effective, input, taps);

  std::vector<bool> fired(conditions.size());
  for (std::size_t i = 0; i < conditions.size(); ++i) {
    fired[i] = eval_condition(conditions[i], run.taps);
  }
  const bool asserted = step_composite(device, fired);

  PayloadSpec payload = config.payload;
  payload.bias = device.bias_reg;
  return apply_payload(run.logits, payload, asserted);
}

}  // namespace htlab::trojan
