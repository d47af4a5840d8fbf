#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "htlab/nncore/tensor.hpp"

namespace htlab::nncore {

enum class LayerKind { dense, conv2d, relu, maxpool, flatten };

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);
bool is_weighted(LayerKind kind);

struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  // dense: weight [out, in], bias [out].
  // conv2d: weight [out_ch, in_ch, kh, kw], bias [out_ch].
  Tensor weight;
  Tensor bias;
  int stride = 1;       // conv2d
  int padding = 0;      // conv2d, symmetric zero padding
  int pool = 2;         // maxpool window (square)
  int pool_stride = 2;  // maxpool stride
};

LayerSpec dense_layer(Tensor weight, Tensor bias);
LayerSpec conv2d_layer(Tensor weight, Tensor bias, int stride, int padding);
LayerSpec relu_layer();
LayerSpec maxpool_layer(int pool, int pool_stride);
LayerSpec flatten_layer();

struct Model {
  std::vector<std::size_t> input_shape;
  std::vector<LayerSpec> layers;
};

// A neuron is one scalar in the output tensor of one layer: for dense layers
// the output unit, for conv layers one spatial position of one channel,
// flattened row-major.
struct NeuronId {
  std::size_t layer = 0;
  std::size_t index = 0;
  bool operator==(const NeuronId&) const = default;
};

// Value of one monitored neuron captured during a forward pass.
struct TapRecord {
  NeuronId neuron;
  float value = 0.0f;
};

// Shape of layers[layer_index]'s output given the model input shape.
// Throws ShapeError (naming the layer index) when shapes do not compose.
std::vector<std::size_t> layer_output_shape(const Model& model,
                                            std::size_t layer_index);

// Walks every layer once; throws on the first geometry problem.
void validate_model(const Model& model);

// Index of the first layer carrying weights; throws ConfigError if none.
std::size_t first_weighted_layer(const Model& model);

}  // namespace htlab::nncore
