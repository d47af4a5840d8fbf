#include <gtest/gtest.h>

#include "htlab/error.hpp"
#include "htlab/nncore/model.hpp"
#include "htlab/nncore/tensor.hpp"

namespace nn = htlab::nncore;

TEST(Tensor, ConstructionChecksShape) {
  EXPECT_NO_THROW(nn::Tensor({2, 3}, std::vector<float>(6, 0.0f)));
  EXPECT_THROW(nn::Tensor({2, 3}, std::vector<float>(5, 0.0f)),
               htlab::ShapeError);
  EXPECT_EQ(nn::Tensor::zeros({4, 4}).numel(), 16u);
  EXPECT_EQ(nn::Tensor::full({2}, 3.0f).data[1], 3.0f);
}

TEST(Tensor, StridedAccessors) {
  nn::Tensor t = nn::Tensor::zeros({2, 3, 4});
  t.at3(1, 2, 3) = 7.0f;
  EXPECT_EQ(t.data[1 * 12 + 2 * 4 + 3], 7.0f);
  nn::Tensor k = nn::Tensor::zeros({2, 2, 3, 3});
  k.at4(1, 1, 2, 2) = 5.0f;
  EXPECT_EQ(k.data[(1 * 2 + 1) * 9 + 2 * 3 + 2], 5.0f);
}

namespace {

nn::Model small_mlp() {
  nn::Model m;
  m.input_shape = {1, 4, 4};
  m.layers.push_back(nn::flatten_layer());
  m.layers.push_back(
      nn::dense_layer(nn::Tensor::zeros({8, 16}), nn::Tensor::zeros({8})));
  m.layers.push_back(nn::relu_layer());
  m.layers.push_back(
      nn::dense_layer(nn::Tensor::zeros({3, 8}), nn::Tensor::zeros({3})));
  return m;
}

}  // namespace

TEST(Model, OutputShapesCompose) {
  const nn::Model m = small_mlp();
  EXPECT_EQ(nn::layer_output_shape(m, 0), (std::vector<std::size_t>{16}));
  EXPECT_EQ(nn::layer_output_shape(m, 1), (std::vector<std::size_t>{8}));
  EXPECT_EQ(nn::layer_output_shape(m, 3), (std::vector<std::size_t>{3}));
  EXPECT_NO_THROW(nn::validate_model(m));
  EXPECT_EQ(nn::first_weighted_layer(m), 1u);
}

TEST(Model, ConvPoolShapes) {
  nn::Model m;
  m.input_shape = {1, 8, 8};
  m.layers.push_back(nn::conv2d_layer(nn::Tensor::zeros({4, 1, 3, 3}),
                                      nn::Tensor::zeros({4}), 1, 0));
  m.layers.push_back(nn::maxpool_layer(2, 2));
  EXPECT_EQ(nn::layer_output_shape(m, 0),
            (std::vector<std::size_t>{4, 6, 6}));
  EXPECT_EQ(nn::layer_output_shape(m, 1),
            (std::vector<std::size_t>{4, 3, 3}));
}

TEST(Model, MismatchedShapesThrow) {
  nn::Model m = small_mlp();
  m.layers[1].weight = nn::Tensor::zeros({8, 15});  // input is 16 wide
  try {
    nn::validate_model(m);
    FAIL() << "expected ShapeError";
  } catch (const htlab::ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find("layer 1"), std::string::npos);
  }
}

TEST(Model, EmptyModelRejected) {
  nn::Model m;
  m.input_shape = {4};
  EXPECT_THROW(nn::validate_model(m), htlab::ShapeError);
  EXPECT_THROW(nn::first_weighted_layer(m), htlab::ConfigError);
}
