#include "htlab/attack/multi.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include <gtest/gtest.h>

#include "htlab/attack/separation.hpp"
#include "htlab/error.hpp"
#include "htlab/harness/dataset.hpp"
#include "htlab/nncore/engine.hpp"
#include "htlab/nncore/fp32.hpp"
#include "htlab/nncore/rng.hpp"
#include "htlab/nncore/train.hpp"

namespace at = htlab::attack;
namespace hh = htlab::harness;
namespace nn = htlab::nncore;

namespace {

nn::Model relu_only(std::vector<std::size_t> input_shape) {
  nn::Model m;
  m.input_shape = std::move(input_shape);
  m.layers.push_back(nn::relu_layer());
  return m;
}

// relu feeding one dense row, the smallest host for a deep-layer rewrite.
nn::Model relu_dense(std::vector<float> row) {
  nn::Model m;
  const std::size_t n = row.size();
  m.input_shape = {n};
  m.layers.push_back(nn::relu_layer());
  m.layers.push_back(
      nn::dense_layer(nn::Tensor({1, n}, std::move(row)), nn::Tensor::zeros({1})));
  return m;
}

at::TriggerPattern full_pattern(std::vector<float> delta, float upper) {
  at::TriggerPattern p;
  const std::size_t n = delta.size();
  p.delta = nn::Tensor({n}, std::move(delta));
  p.mask = nn::Tensor::full({n}, 1.0f);
  p.lower = nn::Tensor::zeros({n});
  p.upper = nn::Tensor::full({n}, upper);
  return p;
}

// Two-unit net where unit 0 carries the whole prediction and unit 1 feeds
// nothing downstream except a constant-losing logit.
nn::Model dispensable_pair() {
  nn::Model m;
  m.input_shape = {1};
  m.layers.push_back(nn::dense_layer(nn::Tensor({2, 1}, {1.0f, 0.0f}),
                                     nn::Tensor::zeros({2})));
  m.layers.push_back(nn::relu_layer());
  m.layers.push_back(nn::dense_layer(
      nn::Tensor({2, 2}, {1.0f, 0.0f, 0.0f, 0.0f}),
      nn::Tensor({2}, {0.0f, 0.1f})));
  return m;
}

// Trained blob classifiers, each built once per process; 100 calibration
// images, 160 held out.
struct Bench {
  nn::Model model;
  std::vector<nn::Tensor> calib;
  std::vector<nn::Tensor> heldout;
};

Bench make_bench(hh::Dataset data, const std::vector<nn::LayerArch>& arch,
                 std::uint64_t init_seed, std::size_t epochs) {
  nn::Model model = nn::init_model(data.input_shape, arch, init_seed);
  nn::TrainConfig tc;
  tc.epochs = epochs;
  tc.lr = 0.1f;
  tc.batch_size = 16;
  tc.seed = 3;
  nn::train_small(model, data.images, data.labels, tc);
  return Bench{std::move(model),
               {data.images.begin(), data.images.begin() + 100},
               {data.images.begin() + 100, data.images.end()}};
}

// All-dense stack; hosts the oracle tests, whose weight surgery assumes
// dense rows.
const Bench& deep_bench() {
  static const Bench bench = make_bench(hh::gen_synthetic(260, 4, 0.05f, 13, 16),
                                        {{nn::LayerKind::flatten},
                                         {nn::LayerKind::dense, 24},
                                         {nn::LayerKind::relu},
                                         {nn::LayerKind::dense, 16},
                                         {nn::LayerKind::relu},
                                         {nn::LayerKind::dense, 12},
                                         {nn::LayerKind::relu},
                                         {nn::LayerKind::dense, 8},
                                         {nn::LayerKind::relu},
                                         {nn::LayerKind::dense, 4}},
                                        17, 6);
  return bench;
}

// Conv stack for the full multi-neuron attack. Patch corners of conv maps
// see no blob content at any depth, so their activations barely move across
// clean inputs while a corner patch owns their whole receptive field; dense
// units average over the image and never separate cleanly at this scale.
// The 8-logit head leaves four spare logits the attack must not wake up.
const Bench& conv_bench() {
  static const Bench bench = make_bench(hh::gen_synthetic(260, 4, 0.05f, 13, 28),
                                        {{nn::LayerKind::conv2d, 8, 3},
                                         {nn::LayerKind::relu},
                                         {nn::LayerKind::maxpool},
                                         {nn::LayerKind::conv2d, 12, 3},
                                         {nn::LayerKind::relu},
                                         {nn::LayerKind::conv2d, 16, 3},
                                         {nn::LayerKind::relu},
                                         {nn::LayerKind::conv2d, 16, 3},
                                         {nn::LayerKind::relu},
                                         {nn::LayerKind::flatten},
                                         {nn::LayerKind::dense, 8}},
                                        3, 8);
  return bench;
}

// Bottom-left 3x3 patch, clear of every blob in the 4-class layout.
at::TriggerPattern corner_patch() {
  return at::solid_patch({1, 28, 28}, 25, 0, 3, 3, 1.0f);
}

}  // namespace

TEST(AverageActivations, SingleSampleIsThatSamplesOutput) {
  const nn::Model m = relu_only({4});
  const nn::Tensor x({4}, {-1.0f, 0.5f, 0.0f, 2.0f});
  const auto mean = at::average_activations(m, {x}, 0);
  const nn::Tensor out = nn::forward(m, x);
  ASSERT_EQ(mean.size(), out.numel());
  for (std::size_t i = 0; i < mean.size(); ++i) {
    EXPECT_EQ(nn::fp32_to_bits(mean[i]), nn::fp32_to_bits(out[i])) << i;
  }
}

TEST(AverageActivations, MeansAcrossSamples) {
  const nn::Model m = relu_only({2});
  const auto mean = at::average_activations(
      m, {nn::Tensor({2}, {0.0f, 2.0f}), nn::Tensor({2}, {2.0f, 0.0f})}, 0);
  ASSERT_EQ(mean.size(), 2u);
  EXPECT_FLOAT_EQ(mean[0], 1.0f);
  EXPECT_FLOAT_EQ(mean[1], 1.0f);
}

TEST(AverageActivations, MatchesNaiveOracle) {
  const Bench& bench = deep_bench();
  const std::vector<nn::Tensor> subset(bench.calib.begin(),
                                       bench.calib.begin() + 20);
  const auto mean = at::average_activations(bench.model, subset, 3);
  std::vector<double> naive(mean.size(), 0.0);
  for (const nn::Tensor& x : subset) {
    const auto trace = nn::forward_trace(bench.model, x);
    for (std::size_t i = 0; i < naive.size(); ++i) {
      naive[i] += trace.outputs[3][i];
    }
  }
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double want = naive[i] / static_cast<double>(subset.size());
    EXPECT_NEAR(mean[i], want, 1e-6 * (1.0 + std::fabs(want))) << i;
  }
}

TEST(AverageActivations, RejectsEmptyAndOutOfRange) {
  const nn::Model m = relu_only({2});
  EXPECT_THROW(at::average_activations(m, {}, 0), htlab::ConfigError);
  EXPECT_THROW(
      at::average_activations(m, {nn::Tensor::zeros({2})}, 1),
      htlab::ConfigError);
}

TEST(SelectTriggerNeurons, PrefersTheDispensableUnit) {
  const nn::Model m = dispensable_pair();
  const std::vector<nn::Tensor> calib{nn::Tensor({1}, {0.5f}),
                                      nn::Tensor({1}, {1.0f})};
  const auto pattern = full_pattern({2.0f}, 2.0f);
  // Unit 0 responds hardest to the trigger but ablating it flips every
  // prediction; unit 1 is the only safe choice.
  const auto picked =
      at::select_trigger_neurons(m, calib, pattern, 0, 1, 0.0f);
  ASSERT_EQ(picked.size(), 1u);
  EXPECT_EQ(picked[0].layer, 0u);
  EXPECT_EQ(picked[0].index, 1u);
}

TEST(SelectTriggerNeurons, RejectsMoreThanTheLayerOffers) {
  const nn::Model m = dispensable_pair();
  const std::vector<nn::Tensor> calib{nn::Tensor({1}, {0.5f})};
  EXPECT_THROW(
      at::select_trigger_neurons(m, calib, full_pattern({2.0f}, 2.0f), 0, 3,
                                 0.5f),
      htlab::ConfigError);
}

TEST(SelectTriggerNeurons, ReportsSurvivorShortfall) {
  const nn::Model m = dispensable_pair();
  const std::vector<nn::Tensor> calib{nn::Tensor({1}, {0.5f}),
                                      nn::Tensor({1}, {1.0f})};
  try {
    at::select_trigger_neurons(m, calib, full_pattern({2.0f}, 2.0f), 0, 2,
                               0.0f);
    FAIL() << "only one unit survives ablation";
  } catch (const htlab::SeparationError& e) {
    EXPECT_NE(std::string(e.what()).find("only 1 of 2"), std::string::npos)
        << e.what();
  }
}

TEST(SelectTriggerNeurons, MatchesExhaustiveSurgeryOracle) {
  const Bench& bench = deep_bench();
  const auto pattern = at::solid_patch({1, 16, 16}, 0, 0, 3, 3, 1.0f);
  const std::size_t layer = 3;
  const float tol = 0.05f;

  std::vector<nn::Tensor> stamped;
  for (const nn::Tensor& x : bench.calib) {
    stamped.push_back(at::make_backdoor_sample(x, pattern));
  }
  const auto mean_clean = at::average_activations(bench.model, bench.calib, layer);
  const auto mean_backdoor = at::average_activations(bench.model, stamped, layer);

  std::vector<std::size_t> base;
  for (const nn::Tensor& x : bench.calib) {
    base.push_back(nn::argmax(nn::forward(bench.model, x)));
  }

  // Oracle ablation: zeroing the row and bias silences the unit for every
  // input, which matches activation zeroing exactly for dense + relu.
  const std::size_t width = bench.model.layers[layer].bias.numel();
  const std::size_t in = bench.model.layers[layer].weight.shape[1];
  std::vector<std::size_t> safe;
  for (std::size_t j = 0; j < width; ++j) {
    nn::Model cut = bench.model;
    for (std::size_t i = 0; i < in; ++i) {
      cut.layers[layer].weight.data[j * in + i] = 0.0f;
    }
    cut.layers[layer].bias[j] = 0.0f;
    std::size_t changes = 0;
    for (std::size_t i = 0; i < bench.calib.size(); ++i) {
      if (nn::argmax(nn::forward(cut, bench.calib[i])) != base[i]) ++changes;
    }
    const double rate =
        static_cast<double>(changes) / static_cast<double>(bench.calib.size());
    if (rate <= static_cast<double>(tol)) safe.push_back(j);
  }
  ASSERT_FALSE(safe.empty()) << "oracle found no dispensable unit to compare";
  std::stable_sort(safe.begin(), safe.end(), [&](std::size_t a, std::size_t b) {
    const float da = std::fabs(mean_backdoor[a] - mean_clean[a]);
    const float db = std::fabs(mean_backdoor[b] - mean_clean[b]);
    if (da != db) return da > db;
    return a < b;
  });

  const auto picked = at::select_trigger_neurons(
      bench.model, bench.calib, pattern, layer, safe.size(), tol);
  ASSERT_EQ(picked.size(), safe.size());
  for (std::size_t r = 0; r < safe.size(); ++r) {
    EXPECT_EQ(picked[r].layer, layer);
    EXPECT_EQ(picked[r].index, safe[r]) << "rank " << r;
  }
}

TEST(SelectTriggerNeurons, ConvLayersFieldOneCandidatePerChannel) {
  const Bench& bench = conv_bench();
  const auto pattern = corner_patch();
  const std::size_t layer = 3;

  std::vector<nn::Tensor> stamped;
  for (const nn::Tensor& x : bench.calib) {
    stamped.push_back(at::make_backdoor_sample(x, pattern));
  }
  const auto mc = at::average_activations(bench.model, bench.calib, layer);
  const auto mb = at::average_activations(bench.model, stamped, layer);
  std::vector<float> diff(mc.size());
  for (std::size_t i = 0; i < diff.size(); ++i) {
    diff[i] = std::fabs(mb[i] - mc[i]);
  }

  // One candidate per channel: its largest-shift position (first on ties),
  // then channels ranked by that shift. Tolerance 1 keeps every channel, so
  // the ranking is the whole story.
  const auto shape = nn::layer_output_shape(bench.model, layer);
  const std::size_t plane = shape[1] * shape[2];
  std::vector<std::size_t> want(shape[0]);
  for (std::size_t ch = 0; ch < shape[0]; ++ch) {
    std::size_t best = ch * plane;
    for (std::size_t p = 1; p < plane; ++p) {
      if (diff[ch * plane + p] > diff[best]) best = ch * plane + p;
    }
    want[ch] = best;
  }
  std::stable_sort(want.begin(), want.end(),
                   [&](std::size_t a, std::size_t b) {
                     if (diff[a] != diff[b]) return diff[a] > diff[b];
                     return a < b;
                   });

  const auto picked = at::select_trigger_neurons(
      bench.model, bench.calib, pattern, layer, shape[0], 1.0f);
  ASSERT_EQ(picked.size(), want.size());
  for (std::size_t r = 0; r < want.size(); ++r) {
    EXPECT_EQ(picked[r].layer, layer);
    EXPECT_EQ(picked[r].index, want[r]) << "rank " << r;
  }
}

TEST(OptimizeWeightsMulti, KnownShift) {
  // Clean mean at the relu output is [0, 0.2]; the stamped input lands at
  // [0.5, 0], so the shift is [0.5, -0.2].
  const nn::Model m = relu_dense({1.0f, 1.0f});
  const std::vector<nn::Tensor> calib{nn::Tensor({2}, {0.0f, 0.2f})};
  const auto out = at::optimize_weights_multi(
      m, {1, 0}, calib, full_pattern({0.5f, 0.0f}, 1.0f), 3.0f);
  EXPECT_FLOAT_EQ(out.layers[1].weight.data[0], 3.0f);
  EXPECT_FLOAT_EQ(out.layers[1].weight.data[1], -3.0f);
}

TEST(OptimizeWeightsMulti, TiesKeepTheOriginalDirection) {
  // Stamping reproduces the sample exactly, so every shift is zero and the
  // rewrite must not flip any sign.
  const nn::Model m = relu_dense({2.0f, -3.0f});
  const std::vector<nn::Tensor> calib{nn::Tensor({2}, {0.4f, 0.6f})};
  const auto out = at::optimize_weights_multi(
      m, {1, 0}, calib, full_pattern({0.4f, 0.6f}, 1.0f), 2.0f);
  EXPECT_FLOAT_EQ(out.layers[1].weight.data[0], 4.0f);
  EXPECT_FLOAT_EQ(out.layers[1].weight.data[1], -6.0f);
}

TEST(OptimizeWeightsMulti, ResponseAlgebra) {
  nn::Rng rng(0x3a1b);
  for (int instance = 0; instance < 10; ++instance) {
    const std::size_t n = 10;
    std::vector<float> row(n);
    for (auto& w : row) w = rng.uniform(-1.5f, 1.5f);
    const nn::Model m = relu_dense(std::vector<float>(row));

    std::vector<nn::Tensor> calib;
    for (int i = 0; i < 30; ++i) {
      nn::Tensor x({n}, std::vector<float>(n));
      for (auto& v : x.data) v = rng.unit();
      calib.push_back(std::move(x));
    }
    std::vector<float> delta(n);
    for (auto& v : delta) v = rng.unit();
    const auto pattern = full_pattern(std::vector<float>(delta), 1.0f);
    const float s = rng.uniform(1.0f, 8.0f);

    std::vector<nn::Tensor> stamped;
    for (const auto& x : calib) {
      stamped.push_back(at::make_backdoor_sample(x, pattern));
    }
    const auto mc = at::average_activations(m, calib, 0);
    const auto mb = at::average_activations(m, stamped, 0);

    const auto out = at::optimize_weights_multi(m, {1, 0}, calib, pattern, s);
    double response = 0.0;
    double want = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double da = static_cast<double>(mb[i]) - mc[i];
      response += static_cast<double>(out.layers[1].weight.data[i]) * da;
      want += static_cast<double>(s) * std::fabs(row[i] * da);
    }
    EXPECT_GE(response, 0.0);
    EXPECT_NEAR(response, want, 1e-5 * (1.0 + want)) << "instance " << instance;
  }
}

TEST(OptimizeWeightsMulti, NoLeverageWithoutIncomingWeights) {
  const nn::Model m = relu_dense({0.0f, 0.0f});
  const std::vector<nn::Tensor> calib{nn::Tensor({2}, {0.1f, 0.2f})};
  EXPECT_THROW(at::optimize_weights_multi(m, {1, 0}, calib,
                                          full_pattern({0.9f, 0.9f}, 1.0f),
                                          2.0f),
               htlab::SeparationError);
}

TEST(OptimizeWeightsMulti, TouchesOnlyTheTargetRow) {
  nn::Model m;
  m.input_shape = {2};
  m.layers.push_back(nn::relu_layer());
  m.layers.push_back(nn::dense_layer(
      nn::Tensor({2, 2}, {1.0f, 2.0f, 3.0f, 4.0f}),
      nn::Tensor({2}, {0.5f, -0.5f})));
  const std::vector<nn::Tensor> calib{nn::Tensor({2}, {0.0f, 0.2f})};
  const auto out = at::optimize_weights_multi(
      m, {1, 1}, calib, full_pattern({0.5f, 0.0f}, 1.0f), 2.0f);
  // Row 0 and both biases are bit-identical; row 1 carries the rewrite.
  EXPECT_EQ(nn::fp32_to_bits(out.layers[1].weight.data[0]),
            nn::fp32_to_bits(1.0f));
  EXPECT_EQ(nn::fp32_to_bits(out.layers[1].weight.data[1]),
            nn::fp32_to_bits(2.0f));
  EXPECT_FLOAT_EQ(out.layers[1].weight.data[2], 6.0f);
  EXPECT_FLOAT_EQ(out.layers[1].weight.data[3], -8.0f);
  EXPECT_EQ(nn::fp32_to_bits(out.layers[1].bias[0]), nn::fp32_to_bits(0.5f));
  EXPECT_EQ(nn::fp32_to_bits(out.layers[1].bias[1]), nn::fp32_to_bits(-0.5f));
}

TEST(OptimizeWeightsMulti, RejectsBadTargets) {
  const nn::Model m = relu_dense({1.0f, 1.0f});
  const std::vector<nn::Tensor> calib{nn::Tensor({2}, {0.1f, 0.2f})};
  const auto pattern = full_pattern({0.5f, 0.0f}, 1.0f);
  EXPECT_THROW(at::optimize_weights_multi(m, {0, 0}, calib, pattern, 2.0f),
               htlab::ConfigError);
  EXPECT_THROW(at::optimize_weights_multi(m, {1, 5}, calib, pattern, 2.0f),
               htlab::ConfigError);
  EXPECT_THROW(at::optimize_weights_multi(m, {1, 0}, calib, pattern, 0.0f),
               htlab::ConfigError);
  EXPECT_THROW(at::optimize_weights_multi(m, {1, 0}, {}, pattern, 2.0f),
               htlab::ConfigError);
}

TEST(ApplyMulti, ThreeLayersOneNeuronEach) {
  const Bench& bench = conv_bench();
  const auto pattern = corner_patch();
  at::AttackConfig config;
  config.variant = at::AttackVariant::multi_neuron;
  config.layers = {3, 5, 7};
  config.per_layer = 1;
  config.ablation_tol = 0.0f;
  config.scale = 1.0f;
  const auto result =
      at::apply_multi_neuron_attack(bench.model, config, pattern, bench.calib);

  ASSERT_EQ(result.specs.size(), 3u);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto& spec = result.specs[i];
    EXPECT_EQ(spec.neuron.layer, config.layers[i]);
    EXPECT_EQ(spec.monitor.layer, config.layers[i] + 1);
    EXPECT_EQ(spec.monitor.index, spec.neuron.index);
    EXPECT_LE(spec.clean_max, spec.tau);
    EXPECT_LT(spec.tau, spec.backdoor_min);
    EXPECT_GT(spec.margin, 0.0f);
    EXPECT_GE(spec.scale, config.scale);
    // Each picked unit sits at the bottom-left map corner, directly over
    // the patch's receptive cone.
    const auto shape = nn::layer_output_shape(bench.model, spec.neuron.layer);
    const std::size_t pos = spec.neuron.index % (shape[1] * shape[2]);
    EXPECT_EQ(pos / shape[2], shape[1] - 1) << "layer " << spec.neuron.layer;
    EXPECT_EQ(pos % shape[2], 0u) << "layer " << spec.neuron.layer;
  }

  // Locality: three rewritten kernels, nothing else, and no bias moves at
  // all. A conv "row" is one output channel's kernel block.
  for (std::size_t l = 0; l < bench.model.layers.size(); ++l) {
    const auto& before = bench.model.layers[l];
    const auto& after = result.model.layers[l];
    for (std::size_t i = 0; i < before.bias.numel(); ++i) {
      EXPECT_EQ(nn::fp32_to_bits(before.bias[i]),
                nn::fp32_to_bits(after.bias[i]))
          << "bias " << l << ":" << i;
    }
    if (!before.weight.numel()) continue;
    const std::size_t rows = before.weight.shape[0];
    const std::size_t block = before.weight.numel() / rows;
    std::size_t plane = 1;
    if (before.kind == nn::LayerKind::conv2d) {
      const auto shape = nn::layer_output_shape(bench.model, l);
      plane = shape[1] * shape[2];
    }
    for (std::size_t i = 0; i < before.weight.numel(); ++i) {
      bool allowed = false;
      for (const auto& spec : result.specs) {
        if (spec.neuron.layer == l && i / block == spec.neuron.index / plane) {
          allowed = true;
        }
      }
      if (!allowed) {
        EXPECT_EQ(nn::fp32_to_bits(before.weight.data[i]),
                  nn::fp32_to_bits(after.weight.data[i]))
            << "weight " << l << ":" << i;
      }
    }
  }

  // Diagnostic re-measurement agrees with the stored specs.
  std::vector<nn::Tensor> stamped;
  for (const nn::Tensor& x : bench.calib) {
    stamped.push_back(at::make_backdoor_sample(x, pattern));
  }
  const auto report =
      at::verify_separation(result.model, result.specs, bench.calib, stamped);
  EXPECT_EQ(report.joint_clean_cross_rate, 0.0);
  for (const auto& sep : report.neurons) {
    EXPECT_FALSE(sep.violated);
    EXPECT_GT(sep.gap, 0.0f);
    std::size_t clean_n = 0;
    std::size_t backdoor_n = 0;
    for (std::size_t b = 0; b < 16; ++b) {
      clean_n += sep.clean_hist[b];
      backdoor_n += sep.backdoor_hist[b];
    }
    EXPECT_EQ(clean_n, bench.calib.size());
    EXPECT_EQ(backdoor_n, stamped.size());
  }

  // The rewrite must not change what the model says, clean or stamped; the
  // misclassification is the hardware's job.
  std::size_t clean_agree = 0;
  std::size_t stamped_agree = 0;
  for (std::size_t i = 0; i < bench.calib.size(); ++i) {
    if (nn::argmax(nn::forward(result.model, bench.calib[i])) ==
        nn::argmax(nn::forward(bench.model, bench.calib[i]))) {
      ++clean_agree;
    }
    if (nn::argmax(nn::forward(result.model, stamped[i])) ==
        nn::argmax(nn::forward(bench.model, stamped[i]))) {
      ++stamped_agree;
    }
  }
  EXPECT_GE(clean_agree, 98u);
  EXPECT_GE(stamped_agree, 98u);

  // Separation carries to held-out data, both sides, nearly everywhere.
  std::size_t held_ok = 0;
  std::vector<nn::NeuronId> monitors;
  for (const auto& spec : result.specs) monitors.push_back(spec.monitor);
  for (const nn::Tensor& x : bench.heldout) {
    const auto clean = nn::forward_with_taps(result.model, x, monitors);
    const auto trig = nn::forward_with_taps(
        result.model, at::make_backdoor_sample(x, pattern), monitors);
    bool ok = true;
    for (std::size_t i = 0; i < 3; ++i) {
      if (clean.taps[i].value > result.specs[i].tau) ok = false;
      if (trig.taps[i].value <= result.specs[i].tau) ok = false;
    }
    if (ok) ++held_ok;
  }
  EXPECT_GE(held_ok, static_cast<std::size_t>(
                         0.99 * static_cast<double>(bench.heldout.size())));
}

TEST(ApplyMulti, RejectsSingleVariantAndEmptyCalib) {
  const Bench& bench = deep_bench();
  const auto pattern = at::solid_patch({1, 16, 16}, 0, 0, 3, 3, 1.0f);
  at::AttackConfig single;
  EXPECT_THROW(
      at::apply_multi_neuron_attack(bench.model, single, pattern, bench.calib),
      htlab::ConfigError);
  at::AttackConfig multi;
  multi.variant = at::AttackVariant::multi_neuron;
  multi.layers = {3};
  EXPECT_THROW(at::apply_multi_neuron_attack(bench.model, multi, pattern, {}),
               htlab::ConfigError);
}
