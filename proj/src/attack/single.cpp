#include "htlab/attack/single.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "htlab/error.hpp"
#include "htlab/nncore/engine.hpp"
#include "htlab/nncore/train.hpp"

namespace htlab::attack {

using nncore::LayerKind;
using nncore::Model;
using nncore::NeuronId;
using nncore::Tensor;

std::vector<float> mask_weights(const std::vector<float>& w,
                                const std::vector<float>& mask) {
  if (w.size() != mask.size()) {
    throw ShapeError("mask_weights: weight row has " +
                     std::to_string(w.size()) + " entries but the mask has " +
                     std::to_string(mask.size()));
  }
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out[i] = mask[i] == 0.0f ? 0.0f : w[i];
  }
  return out;
}

std::vector<float> optimize_trigger(const std::vector<float>& w,
                                    const std::vector<float>& lower,
                                    const std::vector<float>& upper) {
  if (w.size() != lower.size() || w.size() != upper.size()) {
    throw ShapeError("optimize_trigger: weight/bound lengths differ");
  }
  std::vector<float> delta(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (lower[i] > upper[i]) {
      throw ConfigError("optimize_trigger: lower bound exceeds upper at " +
                        std::to_string(i));
    }
    delta[i] = w[i] < 0.0f ? lower[i] : upper[i];
  }
  return delta;
}

// Zero where the trigger is zero; elsewhere scale to s*|w| and sign to
// agree with delta (flip when w and delta disagree, keep otherwise).
static float aligned_weight(float w, float delta, float s) {
  if (delta == 0.0f) return 0.0f;
  const float scaled = s * w;
  return w * delta < 0.0f ? -scaled : scaled;
}

std::vector<float> optimize_weights_single(const std::vector<float>& w,
                                           const std::vector<float>& delta,
                                           float s) {
  if (s <= 0.0f) {
    throw ConfigError("optimize_weights_single: scale must be positive");
  }
  if (w.size() != delta.size()) {
    throw ShapeError("optimize_weights_single: weight/trigger lengths differ");
  }
  std::vector<float> out(w.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    out[i] = aligned_weight(w[i], delta[i], s);
  }
  return out;
}

// Flat bias index owning a neuron: dense rows map one-to-one, conv
// positions share their channel's bias.
static std::size_t bias_slot(const nncore::LayerSpec& layer,
                             const std::vector<std::size_t>& out_shape,
                             std::size_t index) {
  if (layer.kind == LayerKind::conv2d) {
    return index / (out_shape[1] * out_shape[2]);
  }
  return index;
}

static void check_neuron(const Model& model, NeuronId neuron,
                         const char* where) {
  if (neuron.layer >= model.layers.size() ||
      !nncore::is_weighted(model.layers[neuron.layer].kind)) {
    throw ConfigError(std::string(where) +
                      ": trigger neuron must sit in a weighted layer");
  }
  const auto out_shape = nncore::layer_output_shape(model, neuron.layer);
  if (neuron.index >= nncore::shape_numel(out_shape)) {
    throw ConfigError(std::string(where) + ": neuron index " +
                      std::to_string(neuron.index) + " outside layer output");
  }
}

TriggerNeuronSpec tune_bias(Model& model, NeuronId neuron,
                            const std::vector<Tensor>& calib,
                            const TriggerPattern& pattern, float tau,
                            float margin, float scale) {
  if (calib.empty()) {
    throw ConfigError("tune_bias: calibration set is empty");
  }
  check_neuron(model, neuron, "tune_bias");
  validate_pattern(pattern, model.input_shape);

  auto& layer = model.layers[neuron.layer];
  const auto out_shape = nncore::layer_output_shape(model, neuron.layer);
  const std::size_t slot = bias_slot(layer, out_shape, neuron.index);

  // The accumulator starts at the bias, so tap - bias recovers the pure
  // weighted sum independent of the bias value in place.
  const float bias0 = layer.bias[slot];
  float clean_pure_max = -std::numeric_limits<float>::infinity();
  float backdoor_pure_min = std::numeric_limits<float>::infinity();
  for (const Tensor& x : calib) {
    const auto clean = nncore::forward_with_taps(model, x, {neuron});
    clean_pure_max = std::max(clean_pure_max, clean.taps[0].value - bias0);
    const Tensor stamped = make_backdoor_sample(x, pattern);
    const auto bd = nncore::forward_with_taps(model, stamped, {neuron});
    backdoor_pure_min = std::min(backdoor_pure_min, bd.taps[0].value - bias0);
  }

  const float gap = backdoor_pure_min - clean_pure_max;
  const float margin_eff = margin > 0.0f ? margin : 0.05f * gap;
  if (gap <= 0.0f || gap < 2.0f * margin_eff) {
    throw SeparationError(
        "tune_bias: clean/backdoor pre-activation gap " + std::to_string(gap) +
            " cannot host a margin of " + std::to_string(margin_eff) +
            " on both sides; raise the scale",
        gap);
  }
  layer.bias[slot] = tau - clean_pure_max - margin_eff;

  // Re-measure with the tuned bias; the separation contract is checked on
  // actual engine values rather than on the algebra above.
  TriggerNeuronSpec spec;
  spec.neuron = neuron;
  spec.monitor = monitor_point(model, neuron);
  spec.tau = tau;
  spec.margin = margin_eff;
  spec.scale = scale;
  spec.clean_max_pre = -std::numeric_limits<float>::infinity();
  spec.clean_max = -std::numeric_limits<float>::infinity();
  spec.backdoor_pre = std::numeric_limits<float>::infinity();
  spec.backdoor_min = std::numeric_limits<float>::infinity();
  const std::vector<NeuronId> taps{neuron, spec.monitor};
  for (const Tensor& x : calib) {
    const auto clean = nncore::forward_with_taps(model, x, taps);
    spec.clean_max_pre = std::max(spec.clean_max_pre, clean.taps[0].value);
    spec.clean_max = std::max(spec.clean_max, clean.taps[1].value);
    const Tensor stamped = make_backdoor_sample(x, pattern);
    const auto bd = nncore::forward_with_taps(model, stamped, taps);
    spec.backdoor_pre = std::min(spec.backdoor_pre, bd.taps[0].value);
    spec.backdoor_min = std::min(spec.backdoor_min, bd.taps[1].value);
  }
  if (spec.clean_max_pre > tau || spec.backdoor_pre <= tau) {
    throw SeparationError(
        "tune_bias: tuned bias does not separate at the threshold (clean max " +
            std::to_string(spec.clean_max_pre) + ", backdoor " +
            std::to_string(spec.backdoor_pre) + ", tau " + std::to_string(tau) +
            ")",
        gap);
  }
  return spec;
}

// Zeroes the incoming weights and bias of one dense row or conv channel.
static void zero_row(nncore::LayerSpec& layer, std::size_t row) {
  const std::size_t span = layer.weight.numel() / layer.bias.numel();
  std::fill_n(layer.weight.data.begin() + row * span, span, 0.0f);
  layer.bias[row] = 0.0f;
}

// True when every masked input position falls inside the receptive field of
// conv output position (oy, ox).
static bool covers_mask(const Tensor& mask, std::size_t oy, std::size_t ox,
                        const nncore::LayerSpec& layer) {
  const long kh = static_cast<long>(layer.weight.shape[2]);
  const long kw = static_cast<long>(layer.weight.shape[3]);
  for (std::size_t c = 0; c < mask.shape[0]; ++c) {
    for (std::size_t y = 0; y < mask.shape[1]; ++y) {
      for (std::size_t x = 0; x < mask.shape[2]; ++x) {
        if (mask.at3(c, y, x) == 0.0f) continue;
        const long ky = static_cast<long>(y) + layer.padding -
                        static_cast<long>(oy) * layer.stride;
        const long kx = static_cast<long>(x) + layer.padding -
                        static_cast<long>(ox) * layer.stride;
        if (ky < 0 || kx < 0 || ky >= kh || kx >= kw) return false;
      }
    }
  }
  return true;
}

// Ablates candidate rows one at a time and keeps the one whose removal
// flips the fewest calibration predictions (ties: lowest index). For conv
// layers candidates are output positions but the surgery removes the whole
// channel, matching what the attack will later repurpose.
static NeuronId pick_neuron(const Model& model, std::size_t fw,
                            const TriggerPattern& pattern,
                            const std::vector<Tensor>& calib) {
  const auto& layer = model.layers[fw];
  const auto out_shape = nncore::layer_output_shape(model, fw);

  std::vector<std::size_t> candidates;
  if (layer.kind == LayerKind::conv2d) {
    const std::size_t oh = out_shape[1];
    const std::size_t ow = out_shape[2];
    std::vector<std::size_t> covering;
    for (std::size_t oy = 0; oy < oh; ++oy) {
      for (std::size_t ox = 0; ox < ow; ++ox) {
        if (covers_mask(pattern.mask, oy, ox, layer)) {
          covering.push_back(oy * ow + ox);
        }
      }
    }
    if (covering.empty()) {
      throw ConfigError(
          "single-neuron attack: no conv output position sees the whole "
          "trigger mask; shrink the mask or enlarge the kernel");
    }
    // Position choice within a channel is arbitrary (the kernel rewrite is
    // shared), so only the first covering position per channel competes.
    for (std::size_t oc = 0; oc < out_shape[0]; ++oc) {
      candidates.push_back(oc * oh * ow + covering.front());
    }
  } else {
    candidates.resize(nncore::shape_numel(out_shape));
    for (std::size_t j = 0; j < candidates.size(); ++j) candidates[j] = j;
  }

  std::vector<std::size_t> base(calib.size());
  for (std::size_t i = 0; i < calib.size(); ++i) {
    base[i] = nncore::argmax(nncore::forward(model, calib[i]));
  }

  std::size_t best = candidates.front();
  std::size_t best_changes = calib.size() + 1;
  for (const std::size_t j : candidates) {
    Model probe = model;
    zero_row(probe.layers[fw], bias_slot(layer, out_shape, j));
    std::size_t changes = 0;
    for (std::size_t i = 0; i < calib.size(); ++i) {
      if (nncore::argmax(nncore::forward(probe, calib[i])) != base[i]) {
        ++changes;
      }
    }
    if (changes < best_changes) {
      best_changes = changes;
      best = j;
    }
  }
  return {fw, best};
}

SingleAttackResult apply_single_neuron_attack(const Model& model,
                                              const AttackConfig& config,
                                              const TriggerPattern& pattern,
                                              const std::vector<Tensor>& calib) {
  validate_attack_config(config);
  if (config.variant == AttackVariant::multi_neuron) {
    throw ConfigError(
        "apply_single_neuron_attack: config names the multi-neuron variant");
  }
  nncore::validate_model(model);
  validate_pattern(pattern, model.input_shape);
  if (calib.empty()) {
    throw ConfigError("single-neuron attack: calibration set is empty");
  }
  const std::vector<Tensor> samples(
      calib.begin(),
      calib.begin() +
          static_cast<std::ptrdiff_t>(std::min(calib.size(), config.calib_count)));

  // The rewired row must multiply raw trigger pixels, so only reshaping may
  // sit in front of the attacked layer.
  const std::size_t fw = nncore::first_weighted_layer(model);
  const auto& host = model.layers[fw];
  if (host.kind == LayerKind::conv2d) {
    if (fw != 0) {
      throw ConfigError(
          "single-neuron attack: conv host layer must be the first layer");
    }
  } else {
    for (std::size_t l = 0; l < fw; ++l) {
      if (model.layers[l].kind != LayerKind::flatten) {
        throw ConfigError(
            "single-neuron attack: only flatten may precede the attacked "
            "dense layer");
      }
    }
  }

  const auto out_shape = nncore::layer_output_shape(model, fw);
  NeuronId neuron;
  if (config.auto_neuron) {
    neuron = pick_neuron(model, fw, pattern, samples);
  } else {
    neuron = config.neuron;
    if (neuron.layer != fw) {
      throw ConfigError(
          "single-neuron attack: target neuron must sit in the first "
          "weighted layer (layer " +
          std::to_string(fw) + ")");
    }
    check_neuron(model, neuron, "apply_single_neuron_attack");
    if (host.kind == LayerKind::conv2d) {
      const std::size_t ow = out_shape[2];
      const std::size_t pos = neuron.index % (out_shape[1] * ow);
      if (!covers_mask(pattern.mask, pos / ow, pos % ow, host)) {
        throw ConfigError(
            "single-neuron attack: trigger mask extends beyond the chosen "
            "conv output's receptive field");
      }
    }
  }

  SingleAttackResult result{model, {}, pattern};
  auto& layer = result.model.layers[fw];
  TriggerPattern& pat = result.pattern;

  if (host.kind == LayerKind::conv2d) {
    const std::size_t oh = out_shape[1];
    const std::size_t ow = out_shape[2];
    const std::size_t oc = neuron.index / (oh * ow);
    const std::size_t oy = neuron.index % (oh * ow) / ow;
    const std::size_t ox = neuron.index % ow;
    zero_row(layer, oc);
    layer.bias[oc] = model.layers[fw].bias[oc];
    if (config.variant == AttackVariant::single_trigger_opt) {
      pat.delta = pat.upper;  // the w >= 0 branch everywhere by default
    }
    const Tensor& mask = pat.mask;
    for (std::size_t c = 0; c < mask.shape[0]; ++c) {
      for (std::size_t y = 0; y < mask.shape[1]; ++y) {
        for (std::size_t x = 0; x < mask.shape[2]; ++x) {
          if (mask.at3(c, y, x) == 0.0f) continue;
          const std::size_t ky = y + layer.padding - oy * layer.stride;
          const std::size_t kx = x + layer.padding - ox * layer.stride;
          const float orig = model.layers[fw].weight.at4(oc, c, ky, kx);
          if (config.variant == AttackVariant::single_trigger_opt) {
            layer.weight.at4(oc, c, ky, kx) = orig;
            pat.delta.at3(c, y, x) =
                orig < 0.0f ? pat.lower.at3(c, y, x) : pat.upper.at3(c, y, x);
          } else {
            layer.weight.at4(oc, c, ky, kx) =
                aligned_weight(orig, pat.delta.at3(c, y, x), config.scale);
          }
        }
      }
    }
  } else {
    const std::size_t in = layer.weight.shape[1];
    const auto row_begin =
        layer.weight.data.begin() + static_cast<std::ptrdiff_t>(neuron.index * in);
    const std::vector<float> row(row_begin, row_begin + static_cast<std::ptrdiff_t>(in));
    const std::vector<float> w_bar = mask_weights(row, pat.mask.data);
    std::vector<float> next;
    if (config.variant == AttackVariant::single_trigger_opt) {
      pat.delta.data = optimize_trigger(w_bar, pat.lower.data, pat.upper.data);
      next = w_bar;
    } else {
      next = optimize_weights_single(w_bar, pat.delta.data, config.scale);
    }
    std::copy(next.begin(), next.end(), row_begin);
  }

  result.spec = tune_bias(result.model, neuron, samples, pat, config.tau,
                          config.margin, config.scale);
  return result;
}

}  // namespace htlab::attack
