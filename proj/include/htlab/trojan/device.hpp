#pragma once

#include <cstddef>
#include <vector>

#include "htlab/nncore/engine.hpp"
#include "htlab/nncore/model.hpp"
#include "htlab/nncore/tensor.hpp"
#include "htlab/trojan/config.hpp"

namespace htlab::trojan {

// One implanted device instance: the immutable config plus the bit of
// hardware state the sequential/temporal triggers and the register-mode
// payload need. Confine each instance to one evaluation stream.
struct TrojanDevice {
  TrojanConfig config;
  float bias_reg = 0.0f;        // effective b'; mutable in register mode
  std::size_t occurrences = 0;  // temporal: inner assertions seen
  std::size_t cursor = 0;       // sequence: conditions matched so far
  bool latched = false;         // sequence: completed and held
};

// Validates the config and returns a device with zeroed trigger state and
// the payload bias loaded (hardcoded mode freezes it here).
TrojanDevice make_device(const TrojanConfig& config);

// Zeroes counter, cursor and latch; config and payload register stay.
// Idempotent.
void reset_device(TrojanDevice& device);

// Rewrites the payload register between inferences. Throws ConfigError in
// hardcoded mode, where the constant is baked into the netlist.
void set_payload_bias(TrojanDevice& device, float bias);

struct BiasCalibration {
  float bias = 0.0f;
  // Set when the peak logit is not positive: adding b' <= 0 to a logit
  // cannot force the argmax, so this b' may fail to dominate.
  bool may_not_dominate = false;
};

// b' = 1.1 x the maximum logit over all samples and classes, accumulated in
// double. Throws ConfigError on an empty sample set.
BiasCalibration calibrate_payload_bias(
    const nncore::Model& model, const std::vector<nncore::Tensor>& samples);

// True when the tapped value trips the comparator: strict positivity for
// msb_positive (+0.0 stays false), biased exponent field strictly above the
// threshold for exp_threshold. Throws ConfigError when no record carries
// cond.neuron.
bool eval_condition(const TriggerCondition& cond,
                    const std::vector<nncore::TapRecord>& records);

// Advances the trigger FSM one inference step. `fired` holds one entry per
// active condition (see active_conditions). Combinational kinds ignore
// state; sequence advances its cursor at most once per step and latches on
// completion; temporal counts the steps its inner composite asserts and
// holds from the count-th onward.
bool step_composite(TrojanDevice& device, const std::vector<bool>& fired);

// Returns the logits the device lets out. Dormant (not asserted): a
// bit-identical copy. Asserted: the target logit (payload.target_class, or
// class_map[argmax] for class_map targeting) gets payload.bias added in
// value_bias mode, or its exponent field moved by exp_add in exp_add mode,
// clamped to [0, 254] instead of erroring; sign and mantissa bits pass
// through untouched.
nncore::Tensor apply_payload(const nncore::Tensor& logits,
                             const PayloadSpec& payload, bool asserted);

// The weights inference actually sees: every target replaced or offset as
// written. The input model is untouched; persistent implants rewrite the
// stored model by assigning the result back once, transient ones call this
// per inference and drop the copy. Throws ConfigError on a layer without
// the named tensor or an offset out of bounds.
nncore::Model apply_weight_trojan(const nncore::Model& model,
                                  const WeightTrojanSpec& spec);

// One inference through the hosted model: transient weight corruption, a
// forward pass tapping every condition neuron once (shared taps fan out),
// one FSM step, then the payload on the logits. Mutates only device state.
nncore::Tensor hosted_forward(TrojanDevice& device, const nncore::Model& model,
                              const nncore::Tensor& input);

}  // namespace htlab::trojan
