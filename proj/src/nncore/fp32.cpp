#include "htlab/nncore/fp32.hpp"

#include <bit>
#include <string>

#include "htlab/error.hpp"

namespace htlab::nncore {

std::uint32_t fp32_to_bits(float v) { return std::bit_cast<std::uint32_t>(v); }

float fp32_from_bits(std::uint32_t bits) { return std::bit_cast<float>(bits); }

Fp32Parts decompose_fp32(float v) {
  const std::uint32_t bits = fp32_to_bits(v);
  return Fp32Parts{bits >> 31, (bits >> 23) & 0xffu, bits & 0x7fffffu};
}

float compose_fp32(const Fp32Parts& parts) {
  if (parts.sign > 1u) {
    throw RangeError("compose_fp32: sign field must be 0 or 1, got " +
                     std::to_string(parts.sign));
  }
  if (parts.exponent > 0xffu) {
    throw RangeError("compose_fp32: exponent field exceeds 8 bits: " +
                     std::to_string(parts.exponent));
  }
  if (parts.mantissa > 0x7fffffu) {
    throw RangeError("compose_fp32: mantissa field exceeds 23 bits: " +
                     std::to_string(parts.mantissa));
  }
  const std::uint32_t bits =
      (parts.sign << 31) | (parts.exponent << 23) | parts.mantissa;
  return fp32_from_bits(bits);
}

float exponent_field_add(float v, int k) {
  Fp32Parts parts = decompose_fp32(v);
  if (parts.exponent == 0u) {
    throw RangeError("exponent_field_add: zero or denormal input");
  }
  if (parts.exponent == 0xffu) {
    throw RangeError("exponent_field_add: non-finite input");
  }
  const int shifted = static_cast<int>(parts.exponent) + k;
  if (shifted < 1 || shifted > 254) {
    throw RangeError("exponent_field_add: result exponent field " +
                     std::to_string(shifted) + " outside [1, 254]");
  }
  parts.exponent = static_cast<std::uint32_t>(shifted);
  return compose_fp32(parts);
}

}  // namespace htlab::nncore
