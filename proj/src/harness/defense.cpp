#include "htlab/harness/defense.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "htlab/error.hpp"
#include "htlab/nncore/engine.hpp"

namespace htlab::harness {

nncore::Model fine_tune(const nncore::Model& model, const Dataset& data,
                        const nncore::TrainConfig& config) {
  nncore::Model tuned = model;
  nncore::train_small(tuned, data.images, data.labels, config);
  return tuned;
}

namespace {

// Mean post-relu activation of every unit of layers[index] over the
// dataset; conv units are channels (averaged over positions).
std::vector<double> mean_unit_activation(const nncore::Model& model,
                                         const Dataset& data,
                                         std::size_t index) {
  const bool relu_follows =
      index + 1 < model.layers.size() &&
      model.layers[index + 1].kind == nncore::LayerKind::relu;
  const std::size_t tap = relu_follows ? index + 1 : index;
  const std::size_t units = model.layers[index].bias.numel();
  std::size_t out_numel = 1;
  for (std::size_t d : nncore::layer_output_shape(model, index)) {
    out_numel *= d;
  }
  const std::size_t per_unit = out_numel / units;

  // Per-sample partial sums first, merged in sample order afterwards, so
  // the float accumulation order never depends on the thread count.
  const std::ptrdiff_t n = static_cast<std::ptrdiff_t>(data.size());
  std::vector<std::vector<double>> per_sample(data.size());
#pragma omp parallel for
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const nncore::ForwardTrace trace =
        nncore::forward_trace(model, data.images[i]);
    const nncore::Tensor& out = trace.outputs[tap];
    std::vector<double> local(units, 0.0);
    for (std::size_t u = 0; u < units; ++u) {
      for (std::size_t p = 0; p < per_unit; ++p) {
        local[u] += out.data[u * per_unit + p];
      }
    }
    per_sample[i] = std::move(local);
  }
  std::vector<double> sums(units, 0.0);
  for (const std::vector<double>& local : per_sample) {
    for (std::size_t u = 0; u < units; ++u) sums[u] += local[u];
  }
  for (double& s : sums) {
    s /= static_cast<double>(data.size()) * static_cast<double>(per_unit);
  }
  return sums;
}

}  // namespace

nncore::Model fine_prune(const nncore::Model& model, const Dataset& data,
                         float fraction) {
  if (!(fraction >= 0.0f && fraction < 1.0f)) {
    throw RangeError("prune fraction must be in [0, 1)");
  }
  nncore::Model pruned = model;
  if (fraction == 0.0f) return pruned;
  if (data.size() == 0) throw ConfigError("pruning needs clean samples");

  for (std::size_t index = 0; index < pruned.layers.size(); ++index) {
    if (!nncore::is_weighted(pruned.layers[index].kind)) continue;
    const std::vector<double> means =
        mean_unit_activation(pruned, data, index);
    const std::size_t units = means.size();
    const std::size_t count =
        static_cast<std::size_t>(std::floor(fraction * units));
    if (count == 0) continue;

    std::vector<std::size_t> order(units);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) {
                       return means[a] < means[b];
                     });

    nncore::LayerSpec& layer = pruned.layers[index];
    const std::size_t row = layer.weight.numel() / units;
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t u = order[k];
      std::fill_n(layer.weight.data.begin() + u * row, row, 0.0f);
      layer.bias.data[u] = 0.0f;
    }
  }
  return pruned;
}

}  // namespace htlab::harness
