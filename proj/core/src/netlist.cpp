#include "halo/netlist.hpp"

#include <algorithm>
#include <map>

#include "halo/error.hpp"

namespace halo {

const char* to_string(GateKind kind) {
  switch (kind) {
    case GateKind::And: return "AND";
    case GateKind::Or: return "OR";
    case GateKind::Xor: return "XOR";
    case GateKind::Not: return "NOT";
    case GateKind::Nand: return "NAND";
    case GateKind::FullAdderSum: return "FULL_ADDER_SUM";
    case GateKind::FullAdderCarry: return "FULL_ADDER_CARRY";
  }
  return "?";
}

std::size_t arity(GateKind kind) {
  switch (kind) {
    case GateKind::Not: return 1;
    case GateKind::FullAdderSum:
    case GateKind::FullAdderCarry: return 3;
    default: return 2;
  }
}

std::uint32_t GateDelays::of(GateKind kind) const {
  switch (kind) {
    case GateKind::And: return and_ps;
    case GateKind::Or: return or_ps;
    case GateKind::Xor: return xor_ps;
    case GateKind::Not: return not_ps;
    case GateKind::Nand: return nand_ps;
    case GateKind::FullAdderSum: return fa_sum_ps;
    case GateKind::FullAdderCarry: return fa_carry_ps;
  }
  return 1;
}

bool eval_gate(GateKind kind, bool a, bool b, bool c) {
  switch (kind) {
    case GateKind::And: return a && b;
    case GateKind::Or: return a || b;
    case GateKind::Xor: return a != b;
    case GateKind::Not: return !a;
    case GateKind::Nand: return !(a && b);
    case GateKind::FullAdderSum: return (a != b) != c;
    case GateKind::FullAdderCarry: return (a && b) || (c && (a != b));
  }
  return false;
}

NetId GateNetlist::add_input() {
  driver_.push_back(-1);
  return static_cast<NetId>(net_count_++);
}

NetId GateNetlist::add_gate(GateKind kind, std::span<const NetId> inputs, std::uint32_t delay_ps,
                            double energy_weight) {
  if (inputs.size() != arity(kind)) {
    throw Error(ErrorCode::InvalidNetlist, std::string("wrong input count for ") + to_string(kind));
  }
  Gate g{kind, {}, static_cast<NetId>(net_count_), delay_ps, energy_weight};
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    if (inputs[i] >= net_count_) {
      throw Error(ErrorCode::InvalidNetlist, "gate input refers to a net defined later");
    }
    g.inputs[i] = inputs[i];
  }
  driver_.push_back(static_cast<std::int64_t>(gates_.size()));
  gates_.push_back(g);
  return static_cast<NetId>(net_count_++);
}

std::int64_t GateNetlist::driver(NetId net) const {
  return net < driver_.size() ? driver_[net] : -1;
}

void GateNetlist::validate() const {
  if (weight_inputs_.size() != 8 || activation_inputs_.size() != 8 ||
      accumulator_inputs_.size() != 32 || outputs_.size() != 32) {
    throw Error(ErrorCode::InvalidNetlist, "MAC netlist needs 8+8+32 inputs and 32 outputs");
  }
  std::vector<std::uint8_t> reachable(net_count_, 0);
  for (const auto* group : {&weight_inputs_, &activation_inputs_, &accumulator_inputs_}) {
    for (NetId n : *group) {
      if (n >= net_count_ || driver(n) != -1) {
        throw Error(ErrorCode::InvalidNetlist, "primary input is not an undriven net");
      }
      reachable[n] = 1;
    }
  }
  for (const Gate& g : gates_) {
    if (g.delay_ps == 0) {
      throw Error(ErrorCode::InvalidNetlist, "gate delay must be strictly positive");
    }
    for (std::size_t i = 0; i < arity(g.kind); ++i) {
      if (g.inputs[i] >= g.output) {
        throw Error(ErrorCode::InvalidNetlist, "netlist is not in topological order");
      }
      if (reachable[g.inputs[i]]) reachable[g.output] = 1;
    }
  }
  for (NetId n : outputs_) {
    if (n >= net_count_ || !reachable[n]) {
      throw Error(ErrorCode::InvalidNetlist, "primary output unreachable from any primary input");
    }
  }
}

std::uint32_t GateNetlist::static_depth_ps() const {
  std::vector<std::uint32_t> arrival(net_count_, 0);
  std::uint32_t depth = 0;
  for (const Gate& g : gates_) {
    std::uint32_t in = 0;
    for (std::size_t i = 0; i < arity(g.kind); ++i) in = std::max(in, arrival[g.inputs[i]]);
    arrival[g.output] = in + g.delay_ps;
    depth = std::max(depth, arrival[g.output]);
  }
  return depth;
}

void GateNetlist::scale_energy(double factor) {
  for (Gate& g : gates_) g.energy_weight *= factor;
}

namespace {

struct Builder {
  GateNetlist& nl;
  const GateDelays& d;

  NetId gate(GateKind k, std::initializer_list<NetId> in) {
    std::vector<NetId> v(in);
    return nl.add_gate(k, v, d.of(k));
  }
  std::pair<NetId, NetId> full_adder(NetId a, NetId b, NetId c) {
    NetId s = gate(GateKind::FullAdderSum, {a, b, c});
    NetId co = gate(GateKind::FullAdderCarry, {a, b, c});
    return {s, co};
  }
};

}  // namespace

GateNetlist build_default_mac_netlist(const GateDelays& delays) {
  GateNetlist nl;
  std::vector<NetId> w(8), a(8), acc(32);
  for (auto& n : w) n = nl.add_input();
  for (auto& n : a) n = nl.add_input();
  for (auto& n : acc) n = nl.add_input();
  nl.set_weight_inputs(w);
  nl.set_activation_inputs(a);
  nl.set_accumulator_inputs(acc);

  Builder b{nl, delays};

  // Baugh-Wooley partial products: the sign row and sign column are
  // complemented, and the constants 2^8 and 2^15 fold in the correction.
  auto pp = [&](int i, int j) -> NetId {
    const bool sign_i = i == 7;
    const bool sign_j = j == 7;
    if (sign_i != sign_j) return b.gate(GateKind::Nand, {w[i], a[j]});
    return b.gate(GateKind::And, {w[i], a[j]});
  };

  // Carry-propagate array: row i is added into the running sum with an 8-bit
  // ripple adder whose carry-out lands at bit i+8.
  std::map<int, NetId> sum;
  for (int j = 0; j < 8; ++j) sum[j] = pp(0, j);
  sum[8] = GateNetlist::kConst1;
  std::vector<NetId> product(16);
  product[0] = sum[0];
  for (int i = 1; i < 8; ++i) {
    NetId carry = GateNetlist::kConst0;
    for (int j = 0; j < 8; ++j) {
      const int pos = i + j;
      auto it = sum.find(pos);
      const NetId lhs = it == sum.end() ? GateNetlist::kConst0 : it->second;
      auto [s, c] = b.full_adder(lhs, pp(i, j), carry);
      sum[pos] = s;
      carry = c;
    }
    sum[i + 8] = carry;
    product[i] = sum[i];
  }
  for (int pos = 8; pos < 15; ++pos) product[pos] = sum[pos];
  product[15] = b.gate(GateKind::Not, {sum[15]});

  // Sign-extended product plus accumulator, 32-bit ripple carry.
  std::vector<NetId> y(32);
  NetId carry = GateNetlist::kConst0;
  for (int k = 0; k < 32; ++k) {
    const NetId p = product[std::min(k, 15)];
    auto [s, c] = b.full_adder(acc[k], p, carry);
    y[k] = s;
    carry = c;
  }
  nl.set_outputs(y);
  nl.validate();
  return nl;
}

void evaluate_nets(const GateNetlist& netlist, std::int8_t w, std::int8_t a, std::int32_t acc,
                   std::vector<std::uint8_t>& values) {
  values.assign(netlist.net_count(), 0);
  values[GateNetlist::kConst1] = 1;
  const auto wb = static_cast<std::uint8_t>(w);
  const auto ab = static_cast<std::uint8_t>(a);
  const auto accb = static_cast<std::uint32_t>(acc);
  for (std::size_t i = 0; i < 8; ++i) {
    values[netlist.weight_inputs()[i]] = (wb >> i) & 1u;
    values[netlist.activation_inputs()[i]] = (ab >> i) & 1u;
  }
  for (std::size_t i = 0; i < 32; ++i) values[netlist.accumulator_inputs()[i]] = (accb >> i) & 1u;
  for (const Gate& g : netlist.gates()) {
    values[g.output] =
        eval_gate(g.kind, values[g.inputs[0]], values[g.inputs[1]], values[g.inputs[2]]) ? 1 : 0;
  }
}

std::int32_t evaluate(const GateNetlist& netlist, std::int8_t w, std::int8_t a, std::int32_t acc) {
  std::vector<std::uint8_t> values;
  evaluate_nets(netlist, w, a, acc, values);
  std::uint32_t y = 0;
  for (std::size_t i = 0; i < 32; ++i) {
    if (values[netlist.outputs()[i]]) y |= 1u << i;
  }
  return static_cast<std::int32_t>(y);
}

}  // namespace halo
