#include "htlab/attack/multi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "htlab/error.hpp"
#include "htlab/nncore/engine.hpp"
#include "htlab/nncore/train.hpp"

namespace htlab::attack {

using nncore::LayerKind;
using nncore::Model;
using nncore::NeuronId;
using nncore::Tensor;

std::vector<float> average_activations(const Model& model,
                                       const std::vector<Tensor>& samples,
                                       std::size_t layer_index) {
  if (samples.empty()) {
    throw ConfigError("average_activations: sample set is empty");
  }
  if (layer_index >= model.layers.size()) {
    throw ConfigError("average_activations: layer index " +
                      std::to_string(layer_index) + " outside the model");
  }
  std::vector<double> sum;
  for (const Tensor& x : samples) {
    const auto trace = nncore::forward_trace(model, x);
    const Tensor& out = trace.outputs[layer_index];
    if (sum.empty()) sum.assign(out.numel(), 0.0);
    for (std::size_t i = 0; i < out.numel(); ++i) sum[i] += out[i];
  }
  std::vector<float> mean(sum.size());
  for (std::size_t i = 0; i < sum.size(); ++i) {
    mean[i] = static_cast<float>(sum[i] / static_cast<double>(samples.size()));
  }
  return mean;
}

// Everything needed to re-run the net from layer `layer_index + 1` on a
// perturbed copy of that layer's output.
struct TailRunner {
  Model tail;

  TailRunner(const Model& model, std::size_t layer_index) {
    tail.input_shape = nncore::layer_output_shape(model, layer_index);
    tail.layers.assign(model.layers.begin() +
                           static_cast<std::ptrdiff_t>(layer_index) + 1,
                       model.layers.end());
  }

  std::size_t predict(const Tensor& layer_out) const {
    if (tail.layers.empty()) return nncore::argmax(layer_out);
    return nncore::argmax(nncore::forward(tail, layer_out));
  }
};

std::vector<NeuronId> select_trigger_neurons(const Model& model,
                                             const std::vector<Tensor>& calib,
                                             const TriggerPattern& pattern,
                                             std::size_t layer_index,
                                             std::size_t k,
                                             float ablation_tol) {
  if (calib.empty()) {
    throw ConfigError("select_trigger_neurons: calibration set is empty");
  }
  if (k == 0) {
    throw ConfigError("select_trigger_neurons: k must be at least 1");
  }
  if (ablation_tol < 0.0f || ablation_tol > 1.0f) {
    throw ConfigError("select_trigger_neurons: ablation_tol outside [0, 1]");
  }
  if (layer_index >= model.layers.size() ||
      !nncore::is_weighted(model.layers[layer_index].kind)) {
    throw ConfigError(
        "select_trigger_neurons: trigger neurons live in weighted layers");
  }
  validate_pattern(pattern, model.input_shape);

  std::vector<Tensor> stamped;
  stamped.reserve(calib.size());
  for (const Tensor& x : calib) stamped.push_back(make_backdoor_sample(x, pattern));

  const auto mean_clean = average_activations(model, calib, layer_index);
  const auto mean_backdoor = average_activations(model, stamped, layer_index);
  std::vector<float> diff(mean_clean.size());
  for (std::size_t j = 0; j < diff.size(); ++j) {
    diff[j] = std::fabs(mean_backdoor[j] - mean_clean[j]);
  }

  const auto out_shape = nncore::layer_output_shape(model, layer_index);
  std::vector<std::size_t> candidates;
  if (model.layers[layer_index].kind == LayerKind::conv2d) {
    const std::size_t plane = out_shape[1] * out_shape[2];
    for (std::size_t oc = 0; oc < out_shape[0]; ++oc) {
      std::size_t best = oc * plane;
      for (std::size_t p = 1; p < plane; ++p) {
        if (diff[oc * plane + p] > diff[best]) best = oc * plane + p;
      }
      candidates.push_back(best);
    }
  } else {
    candidates.resize(diff.size());
    std::iota(candidates.begin(), candidates.end(), std::size_t{0});
  }
  if (k > candidates.size()) {
    throw ConfigError("select_trigger_neurons: asked for " +
                      std::to_string(k) + " neurons but layer " +
                      std::to_string(layer_index) + " offers " +
                      std::to_string(candidates.size()) + " candidates");
  }

  // Ablation safety: zero one activation, resume the net, count flipped
  // predictions against the unablated baseline.
  const TailRunner tail(model, layer_index);
  std::vector<Tensor> at_layer;
  std::vector<std::size_t> base;
  at_layer.reserve(calib.size());
  base.reserve(calib.size());
  for (const Tensor& x : calib) {
    auto trace = nncore::forward_trace(model, x);
    base.push_back(nncore::argmax(trace.outputs.back()));
    at_layer.push_back(std::move(trace.outputs[layer_index]));
  }
  std::vector<std::size_t> safe;
  for (const std::size_t j : candidates) {
    std::size_t changes = 0;
    for (std::size_t i = 0; i < at_layer.size(); ++i) {
      Tensor probe = at_layer[i];
      probe[j] = 0.0f;
      if (tail.predict(probe) != base[i]) ++changes;
    }
    const double drop =
        static_cast<double>(changes) / static_cast<double>(at_layer.size());
    if (drop <= static_cast<double>(ablation_tol)) safe.push_back(j);
  }
  if (safe.size() < k) {
    throw SeparationError(
        "select_trigger_neurons: only " + std::to_string(safe.size()) +
        " of " + std::to_string(k) +
        " requested neurons survive ablation at tolerance " +
        std::to_string(ablation_tol));
  }

  std::stable_sort(safe.begin(), safe.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (diff[a] != diff[b]) return diff[a] > diff[b];
                     return a < b;
                   });
  std::vector<NeuronId> picked;
  picked.reserve(k);
  for (std::size_t r = 0; r < k; ++r) picked.push_back({layer_index, safe[r]});
  return picked;
}

// Sign that pushes weight w in the direction of the activation shift da;
// ties (either factor zero) keep the original direction.
static float shifted_weight(float w, float da, float s) {
  const float scaled = s * w;
  return w * da < 0.0f ? -scaled : scaled;
}

Model optimize_weights_multi(const Model& model, NeuronId neuron,
                             const std::vector<Tensor>& calib,
                             const TriggerPattern& pattern, float s) {
  if (s <= 0.0f) {
    throw ConfigError("optimize_weights_multi: scale must be positive");
  }
  if (neuron.layer == 0 || neuron.layer >= model.layers.size()) {
    throw ConfigError(
        "optimize_weights_multi: neuron must sit in a deep layer (needs a "
        "previous layer's activations)");
  }
  const auto& host = model.layers[neuron.layer];
  if (!nncore::is_weighted(host.kind)) {
    throw ConfigError("optimize_weights_multi: layer " +
                      std::to_string(neuron.layer) + " carries no weights");
  }
  const auto out_shape = nncore::layer_output_shape(model, neuron.layer);
  if (neuron.index >= nncore::shape_numel(out_shape)) {
    throw ConfigError("optimize_weights_multi: neuron index outside layer");
  }
  if (calib.empty()) {
    throw ConfigError("optimize_weights_multi: calibration set is empty");
  }
  validate_pattern(pattern, model.input_shape);

  std::vector<Tensor> stamped;
  stamped.reserve(calib.size());
  for (const Tensor& x : calib) stamped.push_back(make_backdoor_sample(x, pattern));
  const auto mean_clean = average_activations(model, calib, neuron.layer - 1);
  const auto mean_backdoor =
      average_activations(model, stamped, neuron.layer - 1);

  Model out = model;
  auto& weight = out.layers[neuron.layer].weight;
  bool any_weight = false;
  bool any_shift = false;

  if (host.kind == LayerKind::conv2d) {
    const auto in_shape = nncore::layer_output_shape(model, neuron.layer - 1);
    const std::size_t ih = in_shape[1];
    const std::size_t iw = in_shape[2];
    const std::size_t plane = out_shape[1] * out_shape[2];
    const std::size_t oc = neuron.index / plane;
    const long oy = static_cast<long>(neuron.index % plane / out_shape[2]);
    const long ox = static_cast<long>(neuron.index % out_shape[2]);
    for (std::size_t ic = 0; ic < weight.shape[1]; ++ic) {
      for (std::size_t ky = 0; ky < weight.shape[2]; ++ky) {
        for (std::size_t kx = 0; kx < weight.shape[3]; ++kx) {
          const long py = oy * host.stride - host.padding + static_cast<long>(ky);
          const long px = ox * host.stride - host.padding + static_cast<long>(kx);
          float da = 0.0f;  // padding positions feed the neuron nothing
          if (py >= 0 && px >= 0 && py < static_cast<long>(ih) &&
              px < static_cast<long>(iw)) {
            const std::size_t p =
                (ic * ih + static_cast<std::size_t>(py)) * iw +
                static_cast<std::size_t>(px);
            da = mean_backdoor[p] - mean_clean[p];
          }
          float& w = weight.at4(oc, ic, ky, kx);
          if (w != 0.0f) any_weight = true;
          if (da != 0.0f) any_shift = true;
          w = shifted_weight(w, da, s);
        }
      }
    }
  } else {
    const std::size_t in = weight.shape[1];
    for (std::size_t i = 0; i < in; ++i) {
      float& w = weight.data[neuron.index * in + i];
      const float da = mean_backdoor[i] - mean_clean[i];
      if (w != 0.0f) any_weight = true;
      if (da != 0.0f) any_shift = true;
      w = shifted_weight(w, da, s);
    }
  }

  if (!any_weight) {
    throw SeparationError(
        std::string("optimize_weights_multi: no leverage; the neuron's "
                    "incoming weights are all zero") +
        (any_shift ? "" : " and the calibration activations show no trigger "
                          "response"));
  }
  return out;
}

// Monitored extremes of one neuron over clean and stamped calibration sets.
struct MonitorSweep {
  float clean_max = -std::numeric_limits<float>::infinity();
  float backdoor_min = std::numeric_limits<float>::infinity();
  float clean_max_pre = -std::numeric_limits<float>::infinity();
  float backdoor_pre = std::numeric_limits<float>::infinity();
};

static MonitorSweep sweep_monitor(const Model& model, NeuronId neuron,
                                  NeuronId monitor,
                                  const std::vector<Tensor>& clean,
                                  const std::vector<Tensor>& stamped) {
  MonitorSweep sweep;
  const std::vector<NeuronId> taps{neuron, monitor};
  for (const Tensor& x : clean) {
    const auto r = nncore::forward_with_taps(model, x, taps);
    sweep.clean_max_pre = std::max(sweep.clean_max_pre, r.taps[0].value);
    sweep.clean_max = std::max(sweep.clean_max, r.taps[1].value);
  }
  for (const Tensor& x : stamped) {
    const auto r = nncore::forward_with_taps(model, x, taps);
    sweep.backdoor_pre = std::min(sweep.backdoor_pre, r.taps[0].value);
    sweep.backdoor_min = std::min(sweep.backdoor_min, r.taps[1].value);
  }
  return sweep;
}

MultiAttackResult apply_multi_neuron_attack(const Model& model,
                                            const AttackConfig& config,
                                            const TriggerPattern& pattern,
                                            const std::vector<Tensor>& calib) {
  validate_attack_config(config);
  if (config.variant != AttackVariant::multi_neuron) {
    throw ConfigError(
        "apply_multi_neuron_attack: config names a single-neuron variant");
  }
  nncore::validate_model(model);
  validate_pattern(pattern, model.input_shape);
  if (calib.empty()) {
    throw ConfigError("multi-neuron attack: calibration set is empty");
  }
  const std::vector<Tensor> samples(
      calib.begin(),
      calib.begin() + static_cast<std::ptrdiff_t>(
                          std::min(calib.size(), config.calib_count)));
  std::vector<Tensor> stamped;
  stamped.reserve(samples.size());
  for (const Tensor& x : samples) {
    stamped.push_back(make_backdoor_sample(x, pattern));
  }

  MultiAttackResult result{model, {}};
  for (const std::size_t layer : config.layers) {
    const auto picked = select_trigger_neurons(
        result.model, samples, pattern, layer, config.per_layer,
        config.ablation_tol);
    for (const NeuronId neuron : picked) {
      float s = config.scale;
      float last_gap = 0.0f;
      bool done = false;
      for (int attempt = 0; attempt <= 4 && !done; ++attempt, s *= 2.0f) {
        Model candidate =
            optimize_weights_multi(result.model, neuron, samples, pattern, s);
        const NeuronId monitor = monitor_point(candidate, neuron);
        const MonitorSweep sweep =
            sweep_monitor(candidate, neuron, monitor, samples, stamped);
        last_gap = sweep.backdoor_min - sweep.clean_max;
        if (sweep.backdoor_min <= sweep.clean_max) {
          continue;
        }
        float tau = 0.5f * (sweep.clean_max + sweep.backdoor_min);
        if (tau >= sweep.backdoor_min) tau = sweep.clean_max;
        TriggerNeuronSpec spec;
        spec.neuron = neuron;
        spec.monitor = monitor;
        spec.tau = tau;
        spec.clean_max = sweep.clean_max;
        spec.backdoor_min = sweep.backdoor_min;
        spec.clean_max_pre = sweep.clean_max_pre;
        spec.backdoor_pre = sweep.backdoor_pre;
        spec.margin = 0.5f * last_gap;
        spec.scale = s;
        result.model = std::move(candidate);
        result.specs.push_back(spec);
        done = true;
      }
      if (!done) {
        throw SeparationError(
            "multi-neuron attack: layer " + std::to_string(neuron.layer) +
                " neuron " + std::to_string(neuron.index) +
                " does not separate after four scale doublings (last gap " +
                std::to_string(last_gap) + ")",
            last_gap);
      }
    }
  }
  return result;
}

}  // namespace htlab::attack
