#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include <nlohmann/json.hpp>

#include "htlab/attack/trigger_spec.hpp"
#include "htlab/nncore/model.hpp"

namespace htlab::trojan {

enum class ConditionKind { msb_positive, exp_threshold };

// One comparator wired to one tapped activation. msb_positive fires on any
// strictly positive value (sign bit 0, word nonzero); exp_threshold fires
// when the biased exponent field strictly exceeds the threshold.
struct TriggerCondition {
  ConditionKind kind = ConditionKind::msb_positive;
  nncore::NeuronId neuron;
  std::uint32_t threshold = 0;  // exponent field, exp_threshold only
};

enum class CompositeKind { single, and_all, or_any, sequence, temporal };

// Trigger logic over one or more comparators. A sequence owns its
// conditions plus the order they must fire in; a temporal node instead
// wraps an inner composite (never another temporal) and counts its
// assertions, leaving its own condition list empty.
struct CompositeTrigger {
  CompositeKind kind = CompositeKind::single;
  std::vector<TriggerCondition> conditions;
  std::vector<std::size_t> order;  // sequence only: permutation of indices
  std::size_t count = 1;           // temporal only: N >= 1
  std::shared_ptr<const CompositeTrigger> inner;  // temporal only
};

// The comparators the fired-vector of step_composite refers to: the inner
// composite's conditions for a temporal node, the node's own otherwise.
const std::vector<TriggerCondition>& active_conditions(
    const CompositeTrigger& composite);

const char* composite_kind_name(CompositeKind kind);
CompositeKind composite_kind_from_name(const std::string& name);

enum class PayloadMode { value_bias, exp_add };
enum class PayloadTargeting { fixed, class_map };

// Where the corruption amount lives in hardware: baked into the netlist or
// held in a register the attacker can rewrite between inferences.
enum class BiasStorage { hardcoded, reg };

struct PayloadSpec {
  PayloadMode mode = PayloadMode::value_bias;
  float bias = 0.0f;  // b', value_bias only
  int exp_add = 0;    // k added to the exponent field, exp_add only
  PayloadTargeting targeting = PayloadTargeting::fixed;
  std::size_t target_class = 0;        // fixed only
  std::vector<std::size_t> class_map;  // class_map only: argmax -> wrong class
  BiasStorage bias_storage = BiasStorage::hardcoded;
};

enum class WeightTensor { weight, bias };
enum class WeightTrojanMode { transient, persistent };

// One corrupted word of one stored tensor, addressed by flat offset.
struct WeightTarget {
  std::size_t layer = 0;
  WeightTensor tensor = WeightTensor::weight;
  std::size_t offset = 0;
  float value = 0.0f;
  bool additive = false;  // false: replace the word, true: add to it
};

struct WeightTrojanSpec {
  WeightTrojanMode mode = WeightTrojanMode::transient;
  std::vector<WeightTarget> targets;
};

// Immutable description of one implanted device: trigger logic, payload,
// and the optional weight-corruption stage. Shareable across threads; all
// mutable state lives in TrojanDevice.
struct TrojanConfig {
  CompositeTrigger composite;
  PayloadSpec payload;
  std::optional<WeightTrojanSpec> weight_trojan;
};

// Structural checks that need no model: condition lists non-empty (and of
// size 1 for single), exp thresholds in [1, 254], sequence order a
// permutation, temporal count >= 1 with a non-temporal inner, class_map
// entries that never map a class to itself, finite bias. Neuron ids and
// weight offsets are checked against a concrete model at use time.
void validate_trojan_config(const TrojanConfig& config);

nlohmann::json trojan_config_to_json(const TrojanConfig& config);
TrojanConfig trojan_config_from_json(const nlohmann::json& j);

// Payload subdocument of the trojan config schema, reused by the
// experiment schema (which derives the trigger conditions itself).
nlohmann::json payload_to_json(const PayloadSpec& payload);
PayloadSpec payload_from_json(const nlohmann::json& j);

// Chooses the comparator for one attacked neuron. A neuron monitored at
// threshold 0 maps to msb_positive (fires on strict positivity). Otherwise
// the clean maximum and backdoor minimum must sit in different binades and
// the threshold is the midpoint of their exponent fields,
//   floor((field(max(clean_max, 0)) + field(backdoor_min)) / 2),
// so the comparator `field > threshold` rejects every clean value and
// accepts every backdoor value seen in calibration. Throws SeparationError
// when the fields collide or the midpoint leaves [1, 254].
TriggerCondition derive_trigger_condition(const attack::TriggerNeuronSpec& spec);

}  // namespace htlab::trojan
