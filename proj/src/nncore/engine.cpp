#include "htlab/nncore/engine.hpp"

#include <string>

#include "htlab/error.hpp"

namespace htlab::nncore {

namespace {

Tensor dense_forward(const LayerSpec& layer, const Tensor& in) {
  const std::size_t out_n = layer.weight.shape[0];
  const std::size_t in_n = layer.weight.shape[1];
  Tensor out = Tensor::zeros({out_n});
  const float* w = layer.weight.data.data();
  const float* x = in.data.data();
  const float* b = layer.bias.data.data();
  float* y = out.data.data();
#pragma omp parallel for schedule(static)
  for (long o = 0; o < static_cast<long>(out_n); ++o) {
    const float* row = w + static_cast<std::size_t>(o) * in_n;
    float acc = b[o];
    for (std::size_t i = 0; i < in_n; ++i) {
      acc += row[i] * x[i];
    }
    y[o] = acc;
  }
  return out;
}

Tensor conv2d_forward(const LayerSpec& layer, const Tensor& in,
                      const std::vector<std::size_t>& out_shape) {
  const std::size_t oc_n = out_shape[0];
  const std::size_t oh = out_shape[1];
  const std::size_t ow = out_shape[2];
  const std::size_t ic_n = layer.weight.shape[1];
  const std::size_t kh = layer.weight.shape[2];
  const std::size_t kw = layer.weight.shape[3];
  const long ih = static_cast<long>(in.shape[1]);
  const long iw = static_cast<long>(in.shape[2]);
  Tensor out = Tensor::zeros(out_shape);
#pragma omp parallel for schedule(static)
  for (long flat = 0; flat < static_cast<long>(oc_n * oh * ow); ++flat) {
    const std::size_t oc = static_cast<std::size_t>(flat) / (oh * ow);
    const std::size_t oy = (static_cast<std::size_t>(flat) / ow) % oh;
    const std::size_t ox = static_cast<std::size_t>(flat) % ow;
    float acc = layer.bias[oc];
    for (std::size_t ic = 0; ic < ic_n; ++ic) {
      for (std::size_t ky = 0; ky < kh; ++ky) {
        const long y = static_cast<long>(oy) * layer.stride +
                       static_cast<long>(ky) - layer.padding;
        if (y < 0 || y >= ih) continue;
        for (std::size_t kx = 0; kx < kw; ++kx) {
          const long x = static_cast<long>(ox) * layer.stride +
                         static_cast<long>(kx) - layer.padding;
          if (x < 0 || x >= iw) continue;
          acc += layer.weight.at4(oc, ic, ky, kx) *
                 in.at3(ic, static_cast<std::size_t>(y),
                        static_cast<std::size_t>(x));
        }
      }
    }
    out.data[static_cast<std::size_t>(flat)] = acc;
  }
  return out;
}

Tensor relu_forward(const Tensor& in) {
  Tensor out = in;
#pragma omp parallel for schedule(static)
  for (long i = 0; i < static_cast<long>(out.data.size()); ++i) {
    // x > 0 ? x : 0 maps -0.0f to +0.0f, so relu output is never -0.0.
    out.data[static_cast<std::size_t>(i)] =
        out.data[static_cast<std::size_t>(i)] > 0.0f
            ? out.data[static_cast<std::size_t>(i)]
            : 0.0f;
  }
  return out;
}

Tensor maxpool_forward(const LayerSpec& layer, const Tensor& in,
                       const std::vector<std::size_t>& out_shape) {
  const std::size_t c_n = out_shape[0];
  const std::size_t oh = out_shape[1];
  const std::size_t ow = out_shape[2];
  Tensor out = Tensor::zeros(out_shape);
#pragma omp parallel for schedule(static)
  for (long flat = 0; flat < static_cast<long>(c_n * oh * ow); ++flat) {
    const std::size_t c = static_cast<std::size_t>(flat) / (oh * ow);
    const std::size_t oy = (static_cast<std::size_t>(flat) / ow) % oh;
    const std::size_t ox = static_cast<std::size_t>(flat) % ow;
    const std::size_t y0 = oy * static_cast<std::size_t>(layer.pool_stride);
    const std::size_t x0 = ox * static_cast<std::size_t>(layer.pool_stride);
    float best = in.at3(c, y0, x0);
    for (std::size_t ky = 0; ky < static_cast<std::size_t>(layer.pool); ++ky) {
      for (std::size_t kx = 0; kx < static_cast<std::size_t>(layer.pool);
           ++kx) {
        const float v = in.at3(c, y0 + ky, x0 + kx);
        if (v > best) best = v;
      }
    }
    out.data[static_cast<std::size_t>(flat)] = best;
  }
  return out;
}

Tensor flatten_forward(const Tensor& in) {
  Tensor out = in;
  out.shape = {in.data.size()};
  return out;
}

Tensor run_layer(const Model& model, std::size_t layer_index,
                 const Tensor& in) {
  const LayerSpec& layer = model.layers[layer_index];
  switch (layer.kind) {
    case LayerKind::dense:
      return dense_forward(layer, in);
    case LayerKind::conv2d:
      return conv2d_forward(layer, in, layer_output_shape(model, layer_index));
    case LayerKind::relu:
      return relu_forward(in);
    case LayerKind::maxpool:
      return maxpool_forward(layer, in,
                             layer_output_shape(model, layer_index));
    case LayerKind::flatten:
      return flatten_forward(in);
  }
  throw ShapeError("unknown layer kind at layer " +
                   std::to_string(layer_index));
}

void check_input(const Model& model, const Tensor& input) {
  if (input.shape != model.input_shape) {
    std::string msg = "forward: input shape mismatch, expected [";
    for (std::size_t d : model.input_shape) msg += std::to_string(d) + " ";
    msg += "]";
    throw ShapeError(msg);
  }
}

}  // namespace

Tensor forward(const Model& model, const Tensor& input) {
  check_input(model, input);
  Tensor cur = input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    cur = run_layer(model, i, cur);
  }
  return cur;
}

ForwardTrace forward_trace(const Model& model, const Tensor& input) {
  check_input(model, input);
  ForwardTrace trace;
  trace.outputs.reserve(model.layers.size());
  const Tensor* cur = &input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    trace.outputs.push_back(run_layer(model, i, *cur));
    cur = &trace.outputs.back();
  }
  return trace;
}

ForwardResult forward_with_taps(const Model& model, const Tensor& input,
                                const std::vector<NeuronId>& taps) {
  ForwardTrace trace = forward_trace(model, input);
  ForwardResult result;
  result.taps.reserve(taps.size());
  for (const NeuronId& id : taps) {
    if (id.layer >= trace.outputs.size()) {
      throw ShapeError("tap layer " + std::to_string(id.layer) +
                       " out of range");
    }
    const Tensor& out = trace.outputs[id.layer];
    if (id.index >= out.numel()) {
      throw ShapeError("tap index " + std::to_string(id.index) +
                       " out of range in layer " + std::to_string(id.layer));
    }
    result.taps.push_back(TapRecord{id, out[id.index]});
  }
  result.logits = std::move(trace.outputs.back());
  return result;
}

}  // namespace htlab::nncore
