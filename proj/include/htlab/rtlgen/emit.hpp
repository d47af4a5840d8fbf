#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "htlab/trojan/config.hpp"

namespace htlab::rtlgen {

struct RtlPort {
  std::string name;
  std::size_t width = 1;
  bool output = false;
};

struct RtlParameter {
  std::string name;
  std::string value;  // verilog literal, e.g. "8'd127"
};

// Interface of the emitted trigger module: exp_threshold conditions read
// 8-bit slices of exp_in_flat and bring one THRESH_i parameter each;
// msb_positive conditions read one sign_in and one nonzero_in bit; stateful
// composites add clk/rst. Port names are unique.
struct RtlModuleSpec {
  std::string name;
  std::vector<RtlPort> ports;
  std::vector<RtlParameter> parameters;
};

RtlModuleSpec trigger_module_spec(const trojan::TrojanConfig& config);

// Synthesizable single-module Verilog for the trigger: one
// `exp_in[i] > THRESH_i` comparison per exponent condition, a sign/nonzero
// check per msb condition, conjunction or disjunction per the composite
// kind, a state register for sequences and an 8-bit occurrence counter for
// temporal wrappers. Byte-identical output for identical configs. Throws
// ConfigError when composites nest deeper than two levels.
std::string emit_trigger_rtl(const trojan::TrojanConfig& config);

// Combinational payload stage: default passthrough with the corruption
// applied under is_trigger_condition. exp_add adds the constant to the
// 8-bit exponent word; value_bias adds the bias bit pattern to the full
// 32-bit logit word.
std::string emit_payload_rtl(const trojan::TrojanConfig& config);

}  // namespace htlab::rtlgen
