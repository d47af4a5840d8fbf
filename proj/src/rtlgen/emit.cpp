#include "htlab/rtlgen/emit.hpp"

#include <cmath>
#include <cstdio>
#include <string>

#include "htlab/error.hpp"
#include "htlab/nncore/fp32.hpp"

namespace htlab::rtlgen {

using trojan::CompositeKind;
using trojan::CompositeTrigger;
using trojan::ConditionKind;
using trojan::TriggerCondition;
using trojan::TrojanConfig;

namespace {

std::size_t composite_depth(const CompositeTrigger& composite) {
  return composite.inner ? 1 + composite_depth(*composite.inner) : 1;
}

void check_emittable(const TrojanConfig& config) {
  if (composite_depth(config.composite) > 2) {
    throw ConfigError("unsupported composite nesting depth (> 2)");
  }
  trojan::validate_trojan_config(config);
}

// Bits needed for a register that must reach `top`.
std::size_t reg_width(std::size_t top) {
  std::size_t bits = 1;
  while ((std::size_t{1} << bits) <= top) ++bits;
  return bits;
}

std::string dec_literal(std::size_t width, std::size_t value) {
  return std::to_string(width) + "'d" + std::to_string(value);
}

const char* kind_name(CompositeKind kind) {
  switch (kind) {
    case CompositeKind::single: return "single";
    case CompositeKind::and_all: return "and_all";
    case CompositeKind::or_any: return "or_any";
    case CompositeKind::sequence: return "sequence";
    case CompositeKind::temporal: return "temporal";
  }
  return "unknown";
}

// One boolean term per condition, numbered within its port family.
std::vector<std::string> condition_terms(
    const std::vector<TriggerCondition>& conditions) {
  std::vector<std::string> terms;
  std::size_t exp_seen = 0;
  std::size_t msb_seen = 0;
  for (const TriggerCondition& cond : conditions) {
    if (cond.kind == ConditionKind::exp_threshold) {
      const std::string i = std::to_string(exp_seen++);
      terms.push_back("(exp_in[" + i + "] > THRESH_" + i + ")");
    } else {
      const std::string i = std::to_string(msb_seen++);
      terms.push_back("((sign_in[" + i + "] == 1'b0) && (nonzero_in[" + i +
                      "]))");
    }
  }
  return terms;
}

std::string join_terms(const std::vector<std::string>& terms, const char* op) {
  std::string out;
  for (std::size_t i = 0; i < terms.size(); ++i) {
    if (i) out += std::string(" ") + op + "\n      ";
    out += terms[i];
  }
  return out;
}

// Declarations for the exp_in view: one 8-bit slice per exponent condition.
std::string exp_array_block(std::size_t n_exp) {
  if (n_exp == 0) return "";
  std::string out = "  wire [7:0] exp_in [0:" + std::to_string(n_exp - 1) +
                    "];\n";
  for (std::size_t i = 0; i < n_exp; ++i) {
    out += "  assign exp_in[" + std::to_string(i) + "] = exp_in_flat[" +
           std::to_string(8 * i + 7) + ":" + std::to_string(8 * i) + "];\n";
  }
  out += "\n";
  return out;
}

// cond_i wires plus the matched-prefix state machine; returns the
// expression that asserts on and after the completing step.
std::string sequence_block(const CompositeTrigger& composite,
                           const std::vector<std::string>& terms,
                           std::string* body) {
  const std::size_t n = composite.order.size();
  const std::size_t width = reg_width(n);
  for (std::size_t i = 0; i < terms.size(); ++i) {
    *body += "  wire cond_" + std::to_string(i) + " = " + terms[i] + ";\n";
  }
  *body += "\n  // Matched-prefix counter over the required order; holds "
           "once complete.\n";
  *body += "  reg [" + std::to_string(width - 1) + ":0] state;\n";
  *body += "  always @(posedge clk or posedge rst) begin\n";
  *body += "    if (rst) begin\n";
  *body += "      state <= " + dec_literal(width, 0) + ";\n";
  *body += "    end else begin\n";
  *body += "      case (state)\n";
  for (std::size_t step = 0; step < n; ++step) {
    *body += "        " + dec_literal(width, step) + ": if (cond_" +
             std::to_string(composite.order[step]) + ") state <= " +
             dec_literal(width, step + 1) + ";\n";
  }
  *body += "        default: state <= state;\n";
  *body += "      endcase\n";
  *body += "    end\n";
  *body += "  end\n\n";
  return "(state == " + dec_literal(width, n) + ") ||\n      ((state == " +
         dec_literal(width, n - 1) + ") && cond_" +
         std::to_string(composite.order[n - 1]) + ")";
}

// Combinational assert expression for single/and_all/or_any.
std::string gate_expression(const CompositeTrigger& composite,
                            const std::vector<std::string>& terms) {
  const char* op = composite.kind == CompositeKind::or_any ? "||" : "&&";
  return join_terms(terms, op);
}

}  // namespace

RtlModuleSpec trigger_module_spec(const TrojanConfig& config) {
  check_emittable(config);
  const CompositeTrigger& composite = config.composite;
  const std::vector<TriggerCondition>& conditions =
      trojan::active_conditions(composite);

  std::size_t n_exp = 0;
  std::size_t n_msb = 0;
  for (const TriggerCondition& cond : conditions) {
    if (cond.kind == ConditionKind::exp_threshold) ++n_exp; else ++n_msb;
  }
  const bool stateful = composite.kind == CompositeKind::temporal ||
                        composite.kind == CompositeKind::sequence ||
                        (composite.inner &&
                         composite.inner->kind == CompositeKind::sequence);

  RtlModuleSpec spec;
  spec.name = "trigger_unit";
  if (stateful) {
    spec.ports.push_back({"clk", 1, false});
    spec.ports.push_back({"rst", 1, false});
  }
  if (n_exp > 0) spec.ports.push_back({"exp_in_flat", 8 * n_exp, false});
  if (n_msb > 0) {
    spec.ports.push_back({"sign_in", n_msb, false});
    spec.ports.push_back({"nonzero_in", n_msb, false});
  }
  spec.ports.push_back({"is_trigger_condition", 1, true});

  std::size_t exp_seen = 0;
  for (const TriggerCondition& cond : conditions) {
    if (cond.kind != ConditionKind::exp_threshold) continue;
    spec.parameters.push_back({"THRESH_" + std::to_string(exp_seen++),
                               "8'd" + std::to_string(cond.threshold)});
  }
  if (composite.kind == CompositeKind::temporal) {
    spec.parameters.push_back(
        {"COUNT_N", "8'd" + std::to_string(composite.count)});
  }
  return spec;
}

std::string emit_trigger_rtl(const TrojanConfig& config) {
  const RtlModuleSpec spec = trigger_module_spec(config);
  const CompositeTrigger& composite = config.composite;
  const std::vector<TriggerCondition>& conditions =
      trojan::active_conditions(composite);
  const std::vector<std::string> terms = condition_terms(conditions);

  std::string head = "// Hardware trigger: ";
  if (composite.kind == CompositeKind::temporal) {
    head += "temporal count " + std::to_string(composite.count) + " over " +
            kind_name(composite.inner->kind) + " of " +
            std::to_string(conditions.size()) + " condition" +
            (conditions.size() == 1 ? "" : "s");
  } else {
    head += std::string(kind_name(composite.kind)) + " over " +
            std::to_string(conditions.size()) + " condition" +
            (conditions.size() == 1 ? "" : "s");
  }
  head += ".\n";

  std::string decl = "module " + spec.name;
  if (!spec.parameters.empty()) {
    decl += " #(\n";
    for (std::size_t i = 0; i < spec.parameters.size(); ++i) {
      decl += "    parameter [7:0] " + spec.parameters[i].name + " = " +
              spec.parameters[i].value;
      decl += i + 1 < spec.parameters.size() ? ",\n" : "\n";
    }
    decl += ")";
  }
  decl += " (\n";
  for (std::size_t i = 0; i < spec.ports.size(); ++i) {
    const RtlPort& port = spec.ports[i];
    decl += port.output ? "    output wire " : "    input wire ";
    const bool indexed = port.name != "clk" && port.name != "rst" &&
                         port.name != "is_trigger_condition";
    if (indexed) {
      decl += "[" + std::to_string(port.width - 1) + ":0] ";
    }
    decl += port.name;
    decl += i + 1 < spec.ports.size() ? ",\n" : "\n";
  }
  decl += ");\n\n";

  std::size_t n_exp = 0;
  for (const TriggerCondition& cond : conditions) {
    if (cond.kind == ConditionKind::exp_threshold) ++n_exp;
  }
  std::string body = exp_array_block(n_exp);

  if (composite.kind == CompositeKind::sequence) {
    const std::string fire = sequence_block(composite, terms, &body);
    body += "  assign is_trigger_condition = " + fire + ";\n";
  } else if (composite.kind == CompositeKind::temporal) {
    std::string inner_fire;
    if (composite.inner->kind == CompositeKind::sequence) {
      inner_fire = sequence_block(*composite.inner, terms, &body);
      body += "  wire inner_fire = " + inner_fire + ";\n\n";
    } else {
      body += "  wire inner_fire =\n      " +
              gate_expression(*composite.inner, terms) + ";\n\n";
    }
    body += "  // Occurrence counter; saturates so the assertion holds.\n";
    body += "  reg [7:0] count;\n";
    body += "  always @(posedge clk or posedge rst) begin\n";
    body += "    if (rst) begin\n";
    body += "      count <= 8'd0;\n";
    body += "    end else if (inner_fire && (count < 8'd255)) begin\n";
    body += "      count <= count + 8'd1;\n";
    body += "    end\n";
    body += "  end\n\n";
    body += "  assign is_trigger_condition = (count >= COUNT_N) ||\n"
            "      (inner_fire && ((count + 8'd1) >= COUNT_N));\n";
  } else {
    body += "  assign is_trigger_condition =\n      " +
            gate_expression(composite, terms) + ";\n";
  }

  return head + decl + body + "\nendmodule\n";
}

std::string emit_payload_rtl(const TrojanConfig& config) {
  check_emittable(config);
  const trojan::PayloadSpec& payload = config.payload;
  if (payload.mode == trojan::PayloadMode::exp_add) {
    const int k = payload.exp_add;
    const std::string add =
        k < 0 ? "- " + std::to_string(-k) : "+ " + std::to_string(k);
    return
        "// Hardware payload: guarded exponent-field adder.\n"
        "module payload_unit (\n"
        "    input wire is_trigger_condition,\n"
        "    input wire [7:0] payload_exp_in,\n"
        "    output reg [7:0] payload_exp_out\n"
        ");\n"
        "\n"
        "  always @(*) begin\n"
        "    payload_exp_out = payload_exp_in;\n"
        "    if (is_trigger_condition) begin\n"
        "      payload_exp_out = payload_exp_in " + add + ";\n"
        "    end\n"
        "  end\n"
        "\n"
        "endmodule\n";
  }
  char bias_hex[16];
  std::snprintf(bias_hex, sizeof bias_hex, "%08x",
                nncore::fp32_to_bits(payload.bias));
  return
      "// Hardware payload: guarded adder on the full logit word.\n"
      "module payload_unit #(\n"
      "    parameter [31:0] BIAS_WORD = 32'h" + std::string(bias_hex) + "\n"
      ") (\n"
      "    input wire is_trigger_condition,\n"
      "    input wire [31:0] payload_word_in,\n"
      "    output reg [31:0] payload_word_out\n"
      ");\n"
      "\n"
      "  always @(*) begin\n"
      "    payload_word_out = payload_word_in;\n"
      "    if (is_trigger_condition) begin\n"
      "      payload_word_out = payload_word_in + BIAS_WORD;\n"
      "    end\n"
      "  end\n"
      "\n"
      "endmodule\n";
}

}  // namespace htlab::rtlgen
