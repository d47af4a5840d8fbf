#pragma once

#include <cstddef>

#include <nlohmann/json.hpp>

#include "htlab/trojan/config.hpp"

namespace htlab::rtlgen {

// Per-primitive gate-equivalent estimator table. These are documented
// planning constants for relative comparisons between trigger designs, not
// synthesis measurements.
inline constexpr std::size_t ge_comparator_1bit = 1;
inline constexpr std::size_t ge_comparator_8bit = 24;
inline constexpr std::size_t ge_gate_2in = 1;
inline constexpr std::size_t ge_register_bit = 6;
inline constexpr std::size_t ge_adder_bit = 5;

// Structural inventory of one emitted device plus its gate-equivalent
// total, which always equals the weighted sum of the parts.
struct GateReport {
  std::size_t comparators_1bit = 0;  // msb monitors
  std::size_t comparators_8bit = 0;  // exponent thresholds
  std::size_t gates_2in = 0;         // composition and FSM guards
  std::size_t register_bits = 0;     // counter, FSM state, stored words
  std::size_t adder_bits = 0;        // payload adder width
  std::size_t total_gate_equivalents = 0;
};

// Counts: one 1-bit comparator per msb condition, one 8-bit comparator per
// exp_threshold condition, n-1 two-input gates for an n-way AND/OR, one
// guard gate per sequence step plus a ceil(log2(n+1))-bit state register, a
// ceil(log2(N+1))-bit counter for temporal(N), an 8-bit adder for exp_add
// or a 32-bit adder for value_bias, and 32 stored register bits per weight
// trojan target.
GateReport estimate_gates(const trojan::TrojanConfig& config);

nlohmann::json gate_report_to_json(const GateReport& report);

}  // namespace htlab::rtlgen
