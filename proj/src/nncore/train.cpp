#include "htlab/nncore/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "htlab/error.hpp"
#include "htlab/nncore/engine.hpp"
#include "htlab/nncore/rng.hpp"

namespace htlab::nncore {

namespace {

struct Gradients {
  std::vector<Tensor> weight;
  std::vector<Tensor> bias;
};

Gradients zero_gradients(const Model& model) {
  Gradients g;
  g.weight.resize(model.layers.size());
  g.bias.resize(model.layers.size());
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (is_weighted(model.layers[i].kind)) {
      g.weight[i] = Tensor::zeros(model.layers[i].weight.shape);
      g.bias[i] = Tensor::zeros(model.layers[i].bias.shape);
    }
  }
  return g;
}

// Backpropagates `grad` (d loss / d layer-output) through one layer,
// accumulating parameter gradients and returning d loss / d layer-input.
Tensor backward_layer(const LayerSpec& layer, const Tensor& in,
                      const Tensor& out, const Tensor& grad, Tensor* d_weight,
                      Tensor* d_bias) {
  switch (layer.kind) {
    case LayerKind::dense: {
      const std::size_t out_n = layer.weight.shape[0];
      const std::size_t in_n = layer.weight.shape[1];
      Tensor d_in = Tensor::zeros({in_n});
      for (std::size_t o = 0; o < out_n; ++o) {
        const float g = grad.data[o];
        d_bias->data[o] += g;
        for (std::size_t i = 0; i < in_n; ++i) {
          d_weight->data[o * in_n + i] += g * in.data[i];
          d_in.data[i] += g * layer.weight.data[o * in_n + i];
        }
      }
      return d_in;
    }
    case LayerKind::conv2d: {
      const std::size_t oc_n = out.shape[0];
      const std::size_t oh = out.shape[1];
      const std::size_t ow = out.shape[2];
      const std::size_t ic_n = layer.weight.shape[1];
      const std::size_t kh = layer.weight.shape[2];
      const std::size_t kw = layer.weight.shape[3];
      const long ih = static_cast<long>(in.shape[1]);
      const long iw = static_cast<long>(in.shape[2]);
      Tensor d_in = Tensor::zeros(in.shape);
      for (std::size_t oc = 0; oc < oc_n; ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
          for (std::size_t ox = 0; ox < ow; ++ox) {
            const float g = grad.data[(oc * oh + oy) * ow + ox];
            d_bias->data[oc] += g;
            for (std::size_t ic = 0; ic < ic_n; ++ic) {
              for (std::size_t ky = 0; ky < kh; ++ky) {
                for (std::size_t kx = 0; kx < kw; ++kx) {
                  const long y = static_cast<long>(oy) * layer.stride +
                                 static_cast<long>(ky) - layer.padding;
                  const long x = static_cast<long>(ox) * layer.stride +
                                 static_cast<long>(kx) - layer.padding;
                  if (y < 0 || y >= ih || x < 0 || x >= iw) continue;
                  const std::size_t in_idx =
                      (ic * static_cast<std::size_t>(ih) +
                       static_cast<std::size_t>(y)) *
                          static_cast<std::size_t>(iw) +
                      static_cast<std::size_t>(x);
                  d_weight->data[((oc * ic_n + ic) * kh + ky) * kw + kx] +=
                      g * in.data[in_idx];
                  d_in.data[in_idx] +=
                      g * layer.weight.at4(oc, ic, ky, kx);
                }
              }
            }
          }
        }
      }
      return d_in;
    }
    case LayerKind::relu: {
      Tensor d_in = grad;
      for (std::size_t i = 0; i < d_in.data.size(); ++i) {
        if (!(out.data[i] > 0.0f)) d_in.data[i] = 0.0f;
      }
      return d_in;
    }
    case LayerKind::maxpool: {
      const std::size_t c_n = out.shape[0];
      const std::size_t oh = out.shape[1];
      const std::size_t ow = out.shape[2];
      const std::size_t p = static_cast<std::size_t>(layer.pool);
      const std::size_t s = static_cast<std::size_t>(layer.pool_stride);
      Tensor d_in = Tensor::zeros(in.shape);
      for (std::size_t c = 0; c < c_n; ++c) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
          for (std::size_t ox = 0; ox < ow; ++ox) {
            // Route to the first position attaining the max (window order).
            std::size_t by = oy * s, bx = ox * s;
            float best = in.at3(c, by, bx);
            for (std::size_t ky = 0; ky < p; ++ky) {
              for (std::size_t kx = 0; kx < p; ++kx) {
                const float v = in.at3(c, oy * s + ky, ox * s + kx);
                if (v > best) {
                  best = v;
                  by = oy * s + ky;
                  bx = ox * s + kx;
                }
              }
            }
            d_in.at3(c, by, bx) += grad.data[(c * oh + oy) * ow + ox];
          }
        }
      }
      return d_in;
    }
    case LayerKind::flatten: {
      Tensor d_in = grad;
      d_in.shape = in.shape;
      return d_in;
    }
  }
  throw ShapeError("backward: unknown layer kind");
}

}  // namespace

Model init_model(const std::vector<std::size_t>& input_shape,
                 const std::vector<LayerArch>& arch, std::uint64_t seed) {
  Rng rng(seed);
  Model model;
  model.input_shape = input_shape;
  std::vector<std::size_t> shape = input_shape;
  for (const LayerArch& a : arch) {
    switch (a.kind) {
      case LayerKind::dense: {
        if (shape.size() != 1) {
          throw ShapeError("init_model: dense layer needs rank-1 input");
        }
        const std::size_t in_n = shape[0];
        const std::size_t out_n = static_cast<std::size_t>(a.out);
        const float r = std::sqrt(6.0f / static_cast<float>(in_n + out_n));
        Tensor w = Tensor::zeros({out_n, in_n});
        for (float& v : w.data) v = rng.uniform(-r, r);
        model.layers.push_back(dense_layer(std::move(w),
                                           Tensor::zeros({out_n})));
        break;
      }
      case LayerKind::conv2d: {
        if (shape.size() != 3) {
          throw ShapeError("init_model: conv2d layer needs rank-3 input");
        }
        const std::size_t ic = shape[0];
        const std::size_t oc = static_cast<std::size_t>(a.out);
        const std::size_t k = static_cast<std::size_t>(a.kernel);
        const float fan = static_cast<float>((ic + oc) * k * k);
        const float r = std::sqrt(6.0f / fan);
        Tensor w = Tensor::zeros({oc, ic, k, k});
        for (float& v : w.data) v = rng.uniform(-r, r);
        model.layers.push_back(conv2d_layer(std::move(w), Tensor::zeros({oc}),
                                            a.stride, a.padding));
        break;
      }
      case LayerKind::relu:
        model.layers.push_back(relu_layer());
        break;
      case LayerKind::maxpool:
        model.layers.push_back(maxpool_layer(a.pool, a.pool_stride));
        break;
      case LayerKind::flatten:
        model.layers.push_back(flatten_layer());
        break;
    }
    shape = layer_output_shape(model, model.layers.size() - 1);
  }
  validate_model(model);
  return model;
}

std::vector<double> softmax(const Tensor& logits) {
  double mx = logits.data.empty() ? 0.0 : logits.data[0];
  for (float v : logits.data) mx = std::max(mx, static_cast<double>(v));
  std::vector<double> p(logits.data.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = std::exp(static_cast<double>(logits.data[i]) - mx);
    sum += p[i];
  }
  for (double& v : p) v /= sum;
  return p;
}

std::size_t argmax(const Tensor& logits) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < logits.data.size(); ++i) {
    if (logits.data[i] > logits.data[best]) best = i;
  }
  return best;
}

TrainStats train_small(Model& model, const std::vector<Tensor>& images,
                       const std::vector<int>& labels,
                       const TrainConfig& config) {
  if (images.size() != labels.size()) {
    throw ConfigError("train_small: image/label count mismatch");
  }
  if (images.empty()) {
    throw ConfigError("train_small: empty dataset");
  }
  if (config.batch_size < 1 || config.lr <= 0.0f || config.epochs < 0) {
    throw ConfigError("train_small: invalid hyperparameters");
  }
  validate_model(model);
  const std::size_t classes =
      layer_output_shape(model, model.layers.size() - 1)[0];
  for (int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= classes) {
      throw ConfigError("train_small: label " + std::to_string(y) +
                        " outside [0, " + std::to_string(classes) + ")");
    }
  }

  TrainStats stats;
  Rng rng(config.seed);
  std::vector<std::size_t> order(images.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    rng.shuffle(order);
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size();
         start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(
          order.size(), start + static_cast<std::size_t>(config.batch_size));
      Gradients grads = zero_gradients(model);
      for (std::size_t bi = start; bi < stop; ++bi) {
        const std::size_t si = order[bi];
        const ForwardTrace trace = forward_trace(model, images[si]);
        const Tensor& logits = trace.outputs.back();
        const std::vector<double> p = softmax(logits);
        loss_sum += -std::log(std::max(p[static_cast<std::size_t>(
                                           labels[si])], 1e-300));
        Tensor grad = Tensor::zeros({classes});
        for (std::size_t c = 0; c < classes; ++c) {
          grad.data[c] = static_cast<float>(p[c]);
        }
        grad.data[static_cast<std::size_t>(labels[si])] -= 1.0f;
        for (std::size_t li = model.layers.size(); li-- > 0;) {
          const Tensor& in = li == 0 ? images[si] : trace.outputs[li - 1];
          grad = backward_layer(model.layers[li], in, trace.outputs[li], grad,
                                &grads.weight[li], &grads.bias[li]);
        }
      }
      const float scale = config.lr / static_cast<float>(stop - start);
      for (std::size_t li = 0; li < model.layers.size(); ++li) {
        if (!is_weighted(model.layers[li].kind)) continue;
        LayerSpec& layer = model.layers[li];
        for (std::size_t i = 0; i < layer.weight.data.size(); ++i) {
          layer.weight.data[i] -= scale * grads.weight[li].data[i];
        }
        for (std::size_t i = 0; i < layer.bias.data.size(); ++i) {
          layer.bias.data[i] -= scale * grads.bias[li].data[i];
        }
      }
    }
    const double mean_loss = loss_sum / static_cast<double>(images.size());
    if (!std::isfinite(mean_loss)) {
      throw DivergenceError("train_small: non-finite loss at epoch " +
                            std::to_string(epoch));
    }
    stats.epoch_loss.push_back(mean_loss);
  }
  return stats;
}

}  // namespace htlab::nncore
