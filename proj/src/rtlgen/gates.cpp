#include "htlab/rtlgen/gates.hpp"

namespace htlab::rtlgen {

using trojan::CompositeKind;
using trojan::CompositeTrigger;
using trojan::ConditionKind;
using trojan::TrojanConfig;

namespace {

// Bits needed for a register that must reach `top`.
std::size_t reg_width(std::size_t top) {
  std::size_t bits = 1;
  while ((std::size_t{1} << bits) <= top) ++bits;
  return bits;
}

// Gates and registers of the composition stage, comparators excluded.
void count_composite(const CompositeTrigger& composite, GateReport* report) {
  const std::size_t n = trojan::active_conditions(composite).size();
  switch (composite.kind) {
    case CompositeKind::single:
      break;
    case CompositeKind::and_all:
    case CompositeKind::or_any:
      report->gates_2in += n - 1;
      break;
    case CompositeKind::sequence:
      report->gates_2in += n;  // one advance guard per step
      report->register_bits += reg_width(n);
      break;
    case CompositeKind::temporal:
      count_composite(*composite.inner, report);
      report->register_bits += reg_width(composite.count);
      break;
  }
}

}  // namespace

GateReport estimate_gates(const TrojanConfig& config) {
  trojan::validate_trojan_config(config);
  GateReport report;

  for (const trojan::TriggerCondition& cond :
       trojan::active_conditions(config.composite)) {
    if (cond.kind == ConditionKind::exp_threshold) {
      ++report.comparators_8bit;
    } else {
      ++report.comparators_1bit;
    }
  }
  count_composite(config.composite, &report);

  report.adder_bits +=
      config.payload.mode == trojan::PayloadMode::exp_add ? 8 : 32;

  if (config.weight_trojan) {
    report.register_bits += 32 * config.weight_trojan->targets.size();
  }

  report.total_gate_equivalents =
      report.comparators_1bit * ge_comparator_1bit +
      report.comparators_8bit * ge_comparator_8bit +
      report.gates_2in * ge_gate_2in +
      report.register_bits * ge_register_bit +
      report.adder_bits * ge_adder_bit;
  return report;
}

nlohmann::json gate_report_to_json(const GateReport& report) {
  return nlohmann::json{
      {"comparators_1bit", report.comparators_1bit},
      {"comparators_8bit", report.comparators_8bit},
      {"gates_2in", report.gates_2in},
      {"register_bits", report.register_bits},
      {"adder_bits", report.adder_bits},
      {"total_gate_equivalents", report.total_gate_equivalents},
  };
}

}  // namespace htlab::rtlgen
