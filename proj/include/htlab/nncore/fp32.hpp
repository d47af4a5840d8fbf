#pragma once

#include <cstdint>

namespace htlab::nncore {

// IEEE-754 binary32 field view: 1 sign bit, 8 exponent bits (bias 127),
// 23 mantissa bits. decompose/compose are pure bit moves and round-trip
// every pattern, including NaNs and denormals.
struct Fp32Parts {
  std::uint32_t sign;      // 0 or 1
  std::uint32_t exponent;  // biased field, 0..255
  std::uint32_t mantissa;  // 0..0x7fffff
};

std::uint32_t fp32_to_bits(float v);
float fp32_from_bits(std::uint32_t bits);

Fp32Parts decompose_fp32(float v);

// Throws RangeError when any field exceeds its width.
float compose_fp32(const Fp32Parts& parts);

// Adds k to the biased exponent field, which multiplies a normal value by
// 2^k exactly. Requires the input to be a nonzero finite normal and the
// result exponent to stay in [1, 254]; throws RangeError otherwise.
// Callers that want saturation instead (the payload emulation does) must
// clamp before calling.
float exponent_field_add(float v, int k);

}  // namespace htlab::nncore
