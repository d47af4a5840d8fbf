#pragma once

#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "htlab/nncore/tensor.hpp"

namespace htlab::attack {

// Trigger recipe: where the patch sits (mask), what gets stamped there
// (delta), and the per-element box the trigger optimizer may search
// (lower/upper). All four tensors share the model input shape.
struct TriggerPattern {
  nncore::Tensor delta;
  nncore::Tensor mask;   // exactly 0 or 1 per element
  nncore::Tensor lower;  // box bounds; default box is [0, 1]
  nncore::Tensor upper;
};

// Shape/value checks (mask strictly 0/1, lower <= upper elementwise).
// Throws ConfigError / ShapeError.
void validate_pattern(const TriggerPattern& pattern,
                      const std::vector<std::size_t>& input_shape);

// Stamps the pattern onto a sample: output is delta where mask = 1 and the
// untouched input elsewhere. Pure element selection, no blending
// arithmetic, so stamped pixels are bit-identical to delta.
nncore::Tensor make_backdoor_sample(const nncore::Tensor& x,
                                    const TriggerPattern& pattern);

// h x w patch of constant `value` at (y0, x0), applied to every channel.
TriggerPattern solid_patch(const std::vector<std::size_t>& input_shape,
                           std::size_t y0, std::size_t x0, std::size_t h,
                           std::size_t w, float value);

// Same footprint with alternating hi/lo values (checkerboard); useful when
// a bright solid patch would resemble legitimate image content.
TriggerPattern checker_patch(const std::vector<std::size_t>& input_shape,
                             std::size_t y0, std::size_t x0, std::size_t h,
                             std::size_t w, float hi, float lo);

// JSON document (schema version "1"): either explicit arrays or the
// {"patch": {...}} / {"checker": {...}} shorthand.
nlohmann::json pattern_to_json(const TriggerPattern& pattern);
TriggerPattern pattern_from_json(const nlohmann::json& j,
                                 const std::vector<std::size_t>& input_shape);

}  // namespace htlab::attack
