#include "htlab/attack/pattern.hpp"

#include <algorithm>

#include "htlab/error.hpp"

namespace htlab::attack {

using nncore::Tensor;

void validate_pattern(const TriggerPattern& pattern,
                      const std::vector<std::size_t>& input_shape) {
  if (pattern.delta.shape != input_shape) {
    throw ShapeError("pattern delta does not match the model input shape");
  }
  nncore::require_same_shape(pattern.delta, pattern.mask, "pattern mask");
  nncore::require_same_shape(pattern.delta, pattern.lower, "pattern lower");
  nncore::require_same_shape(pattern.delta, pattern.upper, "pattern upper");
  bool any = false;
  for (std::size_t i = 0; i < pattern.mask.numel(); ++i) {
    const float m = pattern.mask[i];
    if (m != 0.0f && m != 1.0f) {
      throw ConfigError("pattern mask must be exactly 0 or 1");
    }
    any = any || m == 1.0f;
    if (pattern.lower[i] > pattern.upper[i]) {
      throw ConfigError("pattern lower bound above upper bound");
    }
    if (m == 1.0f && (pattern.delta[i] < pattern.lower[i] ||
                      pattern.delta[i] > pattern.upper[i])) {
      throw ConfigError("pattern delta leaves the box bounds inside the mask");
    }
  }
  if (!any) {
    throw ConfigError("pattern mask selects no elements");
  }
}

Tensor make_backdoor_sample(const nncore::Tensor& x,
                            const TriggerPattern& pattern) {
  nncore::require_same_shape(x, pattern.mask, "make_backdoor_sample");
  Tensor out = x;
  for (std::size_t i = 0; i < out.numel(); ++i) {
    if (pattern.mask[i] == 1.0f) out[i] = pattern.delta[i];
  }
  return out;
}

namespace {

TriggerPattern blank_pattern(const std::vector<std::size_t>& input_shape) {
  TriggerPattern p;
  p.delta = Tensor::zeros(input_shape);
  p.mask = Tensor::zeros(input_shape);
  p.lower = Tensor::zeros(input_shape);
  p.upper = Tensor::full(input_shape, 1.0f);
  return p;
}

void check_patch_bounds(const std::vector<std::size_t>& input_shape,
                        std::size_t y0, std::size_t x0, std::size_t h,
                        std::size_t w) {
  if (input_shape.size() != 3) {
    throw ConfigError("patch patterns need a [c, h, w] input shape");
  }
  if (h == 0 || w == 0 || y0 + h > input_shape[1] ||
      x0 + w > input_shape[2]) {
    throw ConfigError("patch rectangle leaves the image");
  }
}

}  // namespace

TriggerPattern solid_patch(const std::vector<std::size_t>& input_shape,
                           std::size_t y0, std::size_t x0, std::size_t h,
                           std::size_t w, float value) {
  check_patch_bounds(input_shape, y0, x0, h, w);
  TriggerPattern p = blank_pattern(input_shape);
  for (std::size_t c = 0; c < input_shape[0]; ++c) {
    for (std::size_t y = y0; y < y0 + h; ++y) {
      for (std::size_t x = x0; x < x0 + w; ++x) {
        p.mask.at3(c, y, x) = 1.0f;
        p.delta.at3(c, y, x) = value;
        p.lower.at3(c, y, x) = std::min(0.0f, value);
        p.upper.at3(c, y, x) = std::max(1.0f, value);
      }
    }
  }
  return p;
}

TriggerPattern checker_patch(const std::vector<std::size_t>& input_shape,
                             std::size_t y0, std::size_t x0, std::size_t h,
                             std::size_t w, float hi, float lo) {
  check_patch_bounds(input_shape, y0, x0, h, w);
  TriggerPattern p = blank_pattern(input_shape);
  for (std::size_t c = 0; c < input_shape[0]; ++c) {
    for (std::size_t y = y0; y < y0 + h; ++y) {
      for (std::size_t x = x0; x < x0 + w; ++x) {
        p.mask.at3(c, y, x) = 1.0f;
        p.delta.at3(c, y, x) = ((y + x) % 2 == 0) ? hi : lo;
        p.lower.at3(c, y, x) = std::min({0.0f, hi, lo});
        p.upper.at3(c, y, x) = std::max({1.0f, hi, lo});
      }
    }
  }
  return p;
}

namespace {

nlohmann::json tensor_values(const Tensor& t) {
  return nlohmann::json(t.data);
}

Tensor tensor_from_values(const nlohmann::json& j,
                          const std::vector<std::size_t>& shape,
                          const char* field) {
  if (!j.is_array() || j.size() != nncore::shape_numel(shape)) {
    throw ConfigError(std::string("pattern field '") + field +
                      "' has the wrong element count");
  }
  Tensor t = Tensor::zeros(shape);
  for (std::size_t i = 0; i < t.numel(); ++i) {
    t[i] = j[i].get<float>();
  }
  return t;
}

}  // namespace

nlohmann::json pattern_to_json(const TriggerPattern& pattern) {
  nlohmann::json j;
  j["version"] = "1";
  j["shape"] = pattern.delta.shape;
  j["delta"] = tensor_values(pattern.delta);
  j["mask"] = tensor_values(pattern.mask);
  j["lower"] = tensor_values(pattern.lower);
  j["upper"] = tensor_values(pattern.upper);
  return j;
}

TriggerPattern pattern_from_json(const nlohmann::json& j,
                                 const std::vector<std::size_t>& input_shape) {
  if (j.contains("patch")) {
    const auto& p = j.at("patch");
    TriggerPattern out = solid_patch(
        input_shape, p.at("y").get<std::size_t>(),
        p.at("x").get<std::size_t>(), p.at("h").get<std::size_t>(),
        p.at("w").get<std::size_t>(), p.value("value", 1.0f));
    validate_pattern(out, input_shape);
    return out;
  }
  if (j.contains("checker")) {
    const auto& p = j.at("checker");
    TriggerPattern out = checker_patch(
        input_shape, p.at("y").get<std::size_t>(),
        p.at("x").get<std::size_t>(), p.at("h").get<std::size_t>(),
        p.at("w").get<std::size_t>(), p.value("hi", 1.0f),
        p.value("lo", 0.0f));
    validate_pattern(out, input_shape);
    return out;
  }
  if (j.value("version", "") != "1") {
    throw ConfigError("unknown pattern schema version");
  }
  TriggerPattern out;
  out.delta = tensor_from_values(j.at("delta"), input_shape, "delta");
  out.mask = tensor_from_values(j.at("mask"), input_shape, "mask");
  out.lower = j.contains("lower")
                  ? tensor_from_values(j.at("lower"), input_shape, "lower")
                  : Tensor::zeros(input_shape);
  out.upper = j.contains("upper")
                  ? tensor_from_values(j.at("upper"), input_shape, "upper")
                  : Tensor::full(input_shape, 1.0f);
  validate_pattern(out, input_shape);
  return out;
}

}  // namespace htlab::attack
