#include "halo/event_sim.hpp"

#include <algorithm>
#include <cstring>

namespace halo {

EventSimulator::EventSimulator(const GateNetlist& netlist) : netlist_(netlist) {
  const std::size_t nets = netlist.net_count();
  const auto& gates = netlist.gates();

  // A gate that reads the same net twice only needs one wake-up.
  auto unique_input = [](const Gate& g, std::size_t i) {
    for (std::size_t k = 0; k < i; ++k) {
      if (g.inputs[k] == g.inputs[i]) return false;
    }
    return true;
  };
  std::vector<std::uint32_t> degree(nets, 0);
  for (const Gate& g : gates) {
    for (std::size_t i = 0; i < arity(g.kind); ++i) {
      if (unique_input(g, i)) ++degree[g.inputs[i]];
    }
  }
  fanout_offsets_.assign(nets + 1, 0);
  for (std::size_t n = 0; n < nets; ++n) fanout_offsets_[n + 1] = fanout_offsets_[n] + degree[n];
  fanout_gates_.resize(fanout_offsets_.back());
  std::vector<std::uint32_t> fill(fanout_offsets_.begin(), fanout_offsets_.end() - 1);
  for (std::uint32_t gi = 0; gi < gates.size(); ++gi) {
    const Gate& g = gates[gi];
    for (std::size_t i = 0; i < arity(g.kind); ++i) {
      if (unique_input(g, i)) fanout_gates_[fill[g.inputs[i]]++] = gi;
    }
  }

  is_output_.assign(nets, 0);
  for (NetId n : netlist.outputs()) is_output_[n] = 1;
  toggle_energy_.assign(nets, 0.0);
  for (const Gate& g : gates) toggle_energy_[g.output] = g.energy_weight;

  value_.resize(nets);
  projected_.resize(nets);
  dirty_stamp_.assign(gates.size(), 0);
  dirty_.reserve(gates.size());
  wheel_.resize(netlist.static_depth_ps() + 2);
}

void EventSimulator::pin(std::int8_t weight, std::int32_t accumulator) {
  const std::size_t nets = netlist_.net_count();
  steady_.resize(256 * nets);
  std::vector<std::uint8_t> values;
  for (int a = -128; a < 128; ++a) {
    evaluate_nets(netlist_, weight, static_cast<std::int8_t>(a), accumulator, values);
    std::memcpy(&steady_[static_cast<std::size_t>(a + 128) * nets], values.data(), nets);
  }
}

TransitionResult EventSimulator::transition(std::int8_t a_prev, std::int8_t a_next) {
  TransitionResult result;
  if (a_prev == a_next) return result;

  const std::size_t nets = netlist_.net_count();
  const auto& gates = netlist_.gates();
  std::memcpy(value_.data(), &steady_[static_cast<std::size_t>(a_prev + 128) * nets], nets);
  std::memcpy(projected_.data(), value_.data(), nets);

  const auto prev = static_cast<std::uint8_t>(a_prev);
  const auto next = static_cast<std::uint8_t>(a_next);
  for (std::size_t i = 0; i < 8; ++i) {
    const std::uint8_t nv = (next >> i) & 1u;
    if (((prev >> i) & 1u) != nv) {
      const NetId n = netlist_.activation_inputs()[i];
      wheel_[0].push_back({n, nv});
      projected_[n] = nv;
    }
  }

  std::size_t pending = wheel_[0].size();
  for (std::uint32_t t = 0; pending > 0; ++t) {
    auto& bucket = wheel_[t];
    pending -= bucket.size();
    ++stamp_;
    dirty_.clear();
    for (const Event& e : bucket) {
      if (value_[e.net] == e.value) continue;
      value_[e.net] = e.value;
      result.energy += toggle_energy_[e.net];
      if (is_output_[e.net]) result.settle_ps = t;
      for (std::uint32_t k = fanout_offsets_[e.net]; k < fanout_offsets_[e.net + 1]; ++k) {
        const std::uint32_t gi = fanout_gates_[k];
        if (dirty_stamp_[gi] != stamp_) {
          dirty_stamp_[gi] = stamp_;
          dirty_.push_back(gi);
        }
      }
    }
    bucket.clear();
    for (std::uint32_t gi : dirty_) {
      const Gate& g = gates[gi];
      const std::uint8_t nv =
          eval_gate(g.kind, value_[g.inputs[0]], value_[g.inputs[1]], value_[g.inputs[2]]) ? 1 : 0;
      if (nv != projected_[g.output]) {
        projected_[g.output] = nv;
        wheel_[t + g.delay_ps].push_back({g.output, nv});
        ++pending;
      }
    }
  }
  return result;
}

}  // namespace halo
