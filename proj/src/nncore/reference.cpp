#include "htlab/nncore/reference.hpp"

#include <string>

#include "htlab/error.hpp"

namespace htlab::nncore::ref {

namespace {

Tensor apply(const LayerSpec& layer, const Tensor& in, std::size_t index) {
  switch (layer.kind) {
    case LayerKind::dense: {
      const std::size_t out_n = layer.weight.shape[0];
      const std::size_t in_n = layer.weight.shape[1];
      Tensor out = Tensor::zeros({out_n});
      for (std::size_t o = 0; o < out_n; ++o) {
        float acc = layer.bias.data[o];
        for (std::size_t i = 0; i < in_n; ++i) {
          acc += layer.weight.data[o * in_n + i] * in.data[i];
        }
        out.data[o] = acc;
      }
      return out;
    }
    case LayerKind::conv2d: {
      const std::size_t oc_n = layer.weight.shape[0];
      const std::size_t ic_n = layer.weight.shape[1];
      const std::size_t kh = layer.weight.shape[2];
      const std::size_t kw = layer.weight.shape[3];
      const long ih = static_cast<long>(in.shape[1]);
      const long iw = static_cast<long>(in.shape[2]);
      const std::size_t oh = static_cast<std::size_t>(
          (ih + 2 * layer.padding - static_cast<long>(kh)) / layer.stride + 1);
      const std::size_t ow = static_cast<std::size_t>(
          (iw + 2 * layer.padding - static_cast<long>(kw)) / layer.stride + 1);
      Tensor out = Tensor::zeros({oc_n, oh, ow});
      for (std::size_t oc = 0; oc < oc_n; ++oc) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
          for (std::size_t ox = 0; ox < ow; ++ox) {
            float acc = layer.bias.data[oc];
            for (std::size_t ic = 0; ic < ic_n; ++ic) {
              for (std::size_t ky = 0; ky < kh; ++ky) {
                for (std::size_t kx = 0; kx < kw; ++kx) {
                  const long y = static_cast<long>(oy) * layer.stride +
                                 static_cast<long>(ky) - layer.padding;
                  const long x = static_cast<long>(ox) * layer.stride +
                                 static_cast<long>(kx) - layer.padding;
                  if (y < 0 || y >= ih || x < 0 || x >= iw) continue;
                  acc += layer.weight
                             .data[((oc * ic_n + ic) * kh + ky) * kw + kx] *
                         in.data[(ic * static_cast<std::size_t>(ih) +
                                  static_cast<std::size_t>(y)) *
                                     static_cast<std::size_t>(iw) +
                                 static_cast<std::size_t>(x)];
                }
              }
            }
            out.data[(oc * oh + oy) * ow + ox] = acc;
          }
        }
      }
      return out;
    }
    case LayerKind::relu: {
      Tensor out = in;
      for (float& v : out.data) {
        if (!(v > 0.0f)) v = 0.0f;
      }
      return out;
    }
    case LayerKind::maxpool: {
      const std::size_t c_n = in.shape[0];
      const std::size_t p = static_cast<std::size_t>(layer.pool);
      const std::size_t s = static_cast<std::size_t>(layer.pool_stride);
      const std::size_t oh = (in.shape[1] - p) / s + 1;
      const std::size_t ow = (in.shape[2] - p) / s + 1;
      Tensor out = Tensor::zeros({c_n, oh, ow});
      for (std::size_t c = 0; c < c_n; ++c) {
        for (std::size_t oy = 0; oy < oh; ++oy) {
          for (std::size_t ox = 0; ox < ow; ++ox) {
            float best = in.at3(c, oy * s, ox * s);
            for (std::size_t ky = 0; ky < p; ++ky) {
              for (std::size_t kx = 0; kx < p; ++kx) {
                const float v = in.at3(c, oy * s + ky, ox * s + kx);
                if (v > best) best = v;
              }
            }
            out.at3(c, oy, ox) = best;
          }
        }
      }
      return out;
    }
    case LayerKind::flatten: {
      Tensor out = in;
      out.shape = {in.data.size()};
      return out;
    }
  }
  throw ShapeError("reference: unknown layer kind at layer " +
                   std::to_string(index));
}

}  // namespace

Tensor forward(const Model& model, const Tensor& input) {
  Tensor cur = input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    cur = apply(model.layers[i], cur, i);
  }
  return cur;
}

ForwardTrace forward_trace(const Model& model, const Tensor& input) {
  ForwardTrace trace;
  trace.outputs.reserve(model.layers.size());
  Tensor cur = input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    cur = apply(model.layers[i], cur, i);
    trace.outputs.push_back(cur);
  }
  return trace;
}

}  // namespace htlab::nncore::ref
