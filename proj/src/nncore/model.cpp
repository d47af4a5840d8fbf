#include "htlab/nncore/model.hpp"

#include <string>

#include "htlab/error.hpp"

namespace htlab::nncore {

namespace {

std::vector<std::size_t> next_shape(const LayerSpec& layer,
                                    const std::vector<std::size_t>& in,
                                    std::size_t layer_index) {
  const std::string at = "layer " + std::to_string(layer_index);
  switch (layer.kind) {
    case LayerKind::dense: {
      if (in.size() != 1) {
        throw ShapeError(at + " (dense): expected rank-1 input, got rank " +
                         std::to_string(in.size()));
      }
      if (layer.weight.shape.size() != 2 || layer.weight.shape[1] != in[0]) {
        throw ShapeError(at + " (dense): weight shape does not match input " +
                         std::to_string(in[0]));
      }
      if (layer.bias.numel() != layer.weight.shape[0]) {
        throw ShapeError(at + " (dense): bias size does not match output");
      }
      return {layer.weight.shape[0]};
    }
    case LayerKind::conv2d: {
      if (in.size() != 3) {
        throw ShapeError(at + " (conv2d): expected rank-3 input [c,h,w]");
      }
      if (layer.weight.shape.size() != 4 || layer.weight.shape[1] != in[0]) {
        throw ShapeError(at + " (conv2d): kernel in-channels do not match");
      }
      if (layer.bias.numel() != layer.weight.shape[0]) {
        throw ShapeError(at + " (conv2d): bias size does not match channels");
      }
      if (layer.stride < 1 || layer.padding < 0) {
        throw ShapeError(at + " (conv2d): invalid stride or padding");
      }
      const std::size_t kh = layer.weight.shape[2];
      const std::size_t kw = layer.weight.shape[3];
      const long h = static_cast<long>(in[1]) + 2 * layer.padding -
                     static_cast<long>(kh);
      const long w = static_cast<long>(in[2]) + 2 * layer.padding -
                     static_cast<long>(kw);
      if (h < 0 || w < 0) {
        throw ShapeError(at + " (conv2d): kernel larger than padded input");
      }
      return {layer.weight.shape[0],
              static_cast<std::size_t>(h / layer.stride + 1),
              static_cast<std::size_t>(w / layer.stride + 1)};
    }
    case LayerKind::relu:
      return in;
    case LayerKind::maxpool: {
      if (in.size() != 3) {
        throw ShapeError(at + " (maxpool): expected rank-3 input [c,h,w]");
      }
      if (layer.pool < 1 || layer.pool_stride < 1) {
        throw ShapeError(at + " (maxpool): invalid window or stride");
      }
      const long h = static_cast<long>(in[1]) - layer.pool;
      const long w = static_cast<long>(in[2]) - layer.pool;
      if (h < 0 || w < 0) {
        throw ShapeError(at + " (maxpool): window larger than input");
      }
      return {in[0], static_cast<std::size_t>(h / layer.pool_stride + 1),
              static_cast<std::size_t>(w / layer.pool_stride + 1)};
    }
    case LayerKind::flatten:
      return {shape_numel(in)};
  }
  throw ShapeError(at + ": unknown layer kind");
}

}  // namespace

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool: return "maxpool";
    case LayerKind::flatten: return "flatten";
  }
  return "unknown";
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "dense") return LayerKind::dense;
  if (name == "conv2d") return LayerKind::conv2d;
  if (name == "relu") return LayerKind::relu;
  if (name == "maxpool") return LayerKind::maxpool;
  if (name == "flatten") return LayerKind::flatten;
  throw ConfigError("unknown layer kind: " + name);
}

bool is_weighted(LayerKind kind) {
  return kind == LayerKind::dense || kind == LayerKind::conv2d;
}

LayerSpec dense_layer(Tensor weight, Tensor bias) {
  LayerSpec l;
  l.kind = LayerKind::dense;
  l.weight = std::move(weight);
  l.bias = std::move(bias);
  return l;
}

LayerSpec conv2d_layer(Tensor weight, Tensor bias, int stride, int padding) {
  LayerSpec l;
  l.kind = LayerKind::conv2d;
  l.weight = std::move(weight);
  l.bias = std::move(bias);
  l.stride = stride;
  l.padding = padding;
  return l;
}

LayerSpec relu_layer() {
  LayerSpec l;
  l.kind = LayerKind::relu;
  return l;
}

LayerSpec maxpool_layer(int pool, int pool_stride) {
  LayerSpec l;
  l.kind = LayerKind::maxpool;
  l.pool = pool;
  l.pool_stride = pool_stride;
  return l;
}

LayerSpec flatten_layer() {
  LayerSpec l;
  l.kind = LayerKind::flatten;
  return l;
}

std::vector<std::size_t> layer_output_shape(const Model& model,
                                            std::size_t layer_index) {
  if (layer_index >= model.layers.size()) {
    throw ShapeError("layer index " + std::to_string(layer_index) +
                     " out of range");
  }
  std::vector<std::size_t> shape = model.input_shape;
  for (std::size_t i = 0; i <= layer_index; ++i) {
    shape = next_shape(model.layers[i], shape, i);
  }
  return shape;
}

void validate_model(const Model& model) {
  if (model.layers.empty()) {
    throw ShapeError("model has no layers");
  }
  if (model.input_shape.empty()) {
    throw ShapeError("model has no input shape");
  }
  layer_output_shape(model, model.layers.size() - 1);
}

std::size_t first_weighted_layer(const Model& model) {
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    if (is_weighted(model.layers[i].kind)) return i;
  }
  throw ConfigError("model has no weighted layer");
}

}  // namespace htlab::nncore
