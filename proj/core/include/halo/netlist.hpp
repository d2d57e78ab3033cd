#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace halo {

using NetId = std::uint32_t;

enum class GateKind : std::uint8_t {
  And,
  Or,
  Xor,
  Not,
  Nand,
  FullAdderSum,
  FullAdderCarry,
};

const char* to_string(GateKind kind);
std::size_t arity(GateKind kind);

struct Gate {
  GateKind kind;
  std::array<NetId, 3> inputs{};  // only the first arity(kind) are used
  NetId output = 0;
  std::uint32_t delay_ps = 1;
  double energy_weight = 1.0;
};

// Per-kind unit delays used when building the default MAC.
struct GateDelays {
  std::uint32_t and_ps = 1;
  std::uint32_t or_ps = 1;
  std::uint32_t xor_ps = 2;
  std::uint32_t not_ps = 1;
  std::uint32_t nand_ps = 1;
  std::uint32_t fa_sum_ps = 2;
  std::uint32_t fa_carry_ps = 2;

  std::uint32_t of(GateKind kind) const;
};

// Combinational gate-level netlist, stored in topological order.
//
// Nets 0 and 1 are the constant-0 and constant-1 tie nets. Gate outputs are
// the only nets with a driver; primary inputs and ties are undriven.
class GateNetlist {
 public:
  static constexpr NetId kConst0 = 0;
  static constexpr NetId kConst1 = 1;

  GateNetlist() = default;

  NetId add_input();
  NetId add_gate(GateKind kind, std::span<const NetId> inputs, std::uint32_t delay_ps,
                 double energy_weight = 1.0);

  void set_weight_inputs(std::vector<NetId> nets) { weight_inputs_ = std::move(nets); }
  void set_activation_inputs(std::vector<NetId> nets) { activation_inputs_ = std::move(nets); }
  void set_accumulator_inputs(std::vector<NetId> nets) { accumulator_inputs_ = std::move(nets); }
  void set_outputs(std::vector<NetId> nets) { outputs_ = std::move(nets); }

  std::size_t net_count() const noexcept { return net_count_; }
  const std::vector<Gate>& gates() const noexcept { return gates_; }
  std::vector<Gate>& mutable_gates() noexcept { return gates_; }
  const std::vector<NetId>& weight_inputs() const noexcept { return weight_inputs_; }
  const std::vector<NetId>& activation_inputs() const noexcept { return activation_inputs_; }
  const std::vector<NetId>& accumulator_inputs() const noexcept { return accumulator_inputs_; }
  const std::vector<NetId>& outputs() const noexcept { return outputs_; }

  // Index of the gate driving `net`, or -1 for undriven nets.
  std::int64_t driver(NetId net) const;

  // Throws Error(InvalidNetlist) unless the netlist is a topologically ordered
  // DAG with strictly positive delays, 8/8/32 primary inputs, 32 outputs and
  // every output reachable from a primary input.
  void validate() const;

  // Longest static input-to-output path (sum of gate delays).
  std::uint32_t static_depth_ps() const;

  // Multiply every gate's energy weight by `factor`.
  void scale_energy(double factor);

 private:
  std::size_t net_count_ = 2;
  std::vector<Gate> gates_;
  std::vector<std::int64_t> driver_ = {-1, -1};
  std::vector<NetId> weight_inputs_;
  std::vector<NetId> activation_inputs_;
  std::vector<NetId> accumulator_inputs_;
  std::vector<NetId> outputs_;
};

// Signed 8x8 Baugh-Wooley array multiplier feeding a 32-bit ripple-carry
// accumulator: y = w * a + acc (mod 2^32).
GateNetlist build_default_mac_netlist(const GateDelays& delays = {});

bool eval_gate(GateKind kind, bool a, bool b, bool c);

// Zero-delay functional evaluation of every net. Net values are 0/1 bytes.
void evaluate_nets(const GateNetlist& netlist, std::int8_t w, std::int8_t a, std::int32_t acc,
                   std::vector<std::uint8_t>& values);

// Functional result of the MAC.
std::int32_t evaluate(const GateNetlist& netlist, std::int8_t w, std::int8_t a, std::int32_t acc);

}  // namespace halo
