#include "htlab/attack/pattern.hpp"

#include <gtest/gtest.h>

#include "htlab/error.hpp"
#include "htlab/nncore/fp32.hpp"

namespace at = htlab::attack;
namespace nn = htlab::nncore;

namespace {

void expect_bit_equal(const nn::Tensor& a, const nn::Tensor& b) {
  ASSERT_EQ(a.shape, b.shape);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    ASSERT_EQ(nn::fp32_to_bits(a.data[i]), nn::fp32_to_bits(b.data[i]))
        << "element " << i;
  }
}

}  // namespace

TEST(Pattern, StampAllZeroMaskKeepsInput) {
  at::TriggerPattern p;
  p.delta = nn::Tensor::full({4}, 9.0f);
  p.mask = nn::Tensor::zeros({4});
  p.lower = nn::Tensor::zeros({4});
  p.upper = nn::Tensor::full({4}, 10.0f);
  const nn::Tensor x({4}, {0.1f, -0.2f, 0.3f, 0.0f});
  expect_bit_equal(at::make_backdoor_sample(x, p), x);
}

TEST(Pattern, StampAllOneMaskReplacesEverything) {
  at::TriggerPattern p;
  p.delta = nn::Tensor({3}, {0.7f, -0.25f, 1.0f});
  p.mask = nn::Tensor::full({3}, 1.0f);
  p.lower = nn::Tensor::full({3}, -1.0f);
  p.upper = nn::Tensor::full({3}, 1.0f);
  const nn::Tensor x({3}, {0.9f, 0.9f, 0.9f});
  expect_bit_equal(at::make_backdoor_sample(x, p), p.delta);
}

TEST(Pattern, StampCornerPatchElementwise) {
  const auto p = at::solid_patch({1, 8, 8}, 0, 0, 3, 3, 1.0f);
  const nn::Tensor x = nn::Tensor::full({1, 8, 8}, 0.5f);
  const nn::Tensor out = at::make_backdoor_sample(x, p);
  for (std::size_t y = 0; y < 8; ++y) {
    for (std::size_t xx = 0; xx < 8; ++xx) {
      const float want = (y < 3 && xx < 3) ? 1.0f : 0.5f;
      EXPECT_EQ(out.at3(0, y, xx), want) << y << "," << xx;
    }
  }
}

TEST(Pattern, StampRejectsShapeMismatch) {
  const auto p = at::solid_patch({1, 8, 8}, 0, 0, 2, 2, 1.0f);
  EXPECT_THROW(at::make_backdoor_sample(nn::Tensor::zeros({1, 6, 6}), p),
               htlab::ShapeError);
}

TEST(Pattern, ValidateRejectsBadFields) {
  const std::vector<std::size_t> shape{1, 4, 4};
  auto p = at::solid_patch(shape, 1, 1, 2, 2, 1.0f);
  at::validate_pattern(p, shape);

  auto fractional = p;
  fractional.mask[0] = 0.5f;
  EXPECT_THROW(at::validate_pattern(fractional, shape), htlab::ConfigError);

  auto empty = p;
  empty.mask = nn::Tensor::zeros(shape);
  EXPECT_THROW(at::validate_pattern(empty, shape), htlab::ConfigError);

  auto crossed = p;
  crossed.lower[3] = 2.0f;  // above the default upper bound of 1
  EXPECT_THROW(at::validate_pattern(crossed, shape), htlab::ConfigError);

  auto escaped = p;
  escaped.delta.at3(0, 1, 1) = 7.0f;  // masked value outside [lower, upper]
  EXPECT_THROW(at::validate_pattern(escaped, shape), htlab::ConfigError);

  EXPECT_THROW(at::validate_pattern(p, {1, 5, 5}), htlab::ShapeError);
}

TEST(Pattern, SolidPatchCoversEveryChannel) {
  const auto p = at::solid_patch({3, 6, 6}, 4, 2, 2, 3, 0.8f);
  std::size_t on = 0;
  for (std::size_t c = 0; c < 3; ++c) {
    for (std::size_t y = 0; y < 6; ++y) {
      for (std::size_t x = 0; x < 6; ++x) {
        if (p.mask.at3(c, y, x) == 1.0f) {
          ++on;
          EXPECT_EQ(p.delta.at3(c, y, x), 0.8f);
          EXPECT_TRUE(y >= 4 && y < 6 && x >= 2 && x < 5);
        }
      }
    }
  }
  EXPECT_EQ(on, 3u * 2u * 3u);
}

TEST(Pattern, SolidPatchWidensBoxToHoldValue) {
  const auto p = at::solid_patch({1, 4, 4}, 0, 0, 2, 2, 5.0f);
  at::validate_pattern(p, {1, 4, 4});
  EXPECT_EQ(p.upper.at3(0, 0, 0), 5.0f);
  EXPECT_EQ(p.upper.at3(0, 3, 3), 1.0f);  // unmasked cells keep the default
}

TEST(Pattern, CheckerPatchAlternates) {
  const auto p = at::checker_patch({1, 6, 6}, 2, 1, 2, 2, 0.9f, 0.1f);
  EXPECT_EQ(p.delta.at3(0, 2, 1), 0.1f);  // y + x = 3, odd
  EXPECT_EQ(p.delta.at3(0, 2, 2), 0.9f);
  EXPECT_EQ(p.delta.at3(0, 3, 1), 0.9f);
  EXPECT_EQ(p.delta.at3(0, 3, 2), 0.1f);
}

TEST(Pattern, PatchRejectsOutOfImage) {
  EXPECT_THROW(at::solid_patch({1, 4, 4}, 3, 3, 2, 2, 1.0f),
               htlab::ConfigError);
  EXPECT_THROW(at::solid_patch({4, 4}, 0, 0, 2, 2, 1.0f), htlab::ConfigError);
}

TEST(Pattern, JsonRoundTrip) {
  const auto p = at::checker_patch({1, 5, 5}, 1, 2, 3, 2, 1.0f, 0.05f);
  const auto j = at::pattern_to_json(p);
  EXPECT_EQ(j.at("version"), "1");
  const auto back = at::pattern_from_json(j, {1, 5, 5});
  expect_bit_equal(back.delta, p.delta);
  expect_bit_equal(back.mask, p.mask);
  expect_bit_equal(back.lower, p.lower);
  expect_bit_equal(back.upper, p.upper);
}

TEST(Pattern, JsonPatchShorthand) {
  const nlohmann::json j = {
      {"patch", {{"y", 0}, {"x", 1}, {"h", 2}, {"w", 2}, {"value", 0.75}}}};
  const auto p = at::pattern_from_json(j, {1, 4, 4});
  const auto want = at::solid_patch({1, 4, 4}, 0, 1, 2, 2, 0.75f);
  expect_bit_equal(p.delta, want.delta);
  expect_bit_equal(p.mask, want.mask);
}

TEST(Pattern, JsonCheckerShorthand) {
  const nlohmann::json j = {
      {"checker",
       {{"y", 1}, {"x", 1}, {"h", 2}, {"w", 3}, {"hi", 0.9}, {"lo", 0.1}}}};
  const auto p = at::pattern_from_json(j, {1, 5, 5});
  const auto want = at::checker_patch({1, 5, 5}, 1, 1, 2, 3, 0.9f, 0.1f);
  expect_bit_equal(p.delta, want.delta);
}

TEST(Pattern, JsonRejectsBadDocuments) {
  EXPECT_THROW(at::pattern_from_json({{"version", "2"}}, {1, 4, 4}),
               htlab::ConfigError);
  nlohmann::json wrong_count = {{"version", "1"},
                                {"delta", {1.0, 2.0}},
                                {"mask", {1.0, 0.0}}};
  EXPECT_THROW(at::pattern_from_json(wrong_count, {1, 4, 4}),
               htlab::ConfigError);
}
