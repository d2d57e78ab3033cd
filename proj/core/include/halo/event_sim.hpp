#pragma once

#include <cstdint>
#include <vector>

#include "halo/netlist.hpp"

namespace halo {

struct TransitionResult {
  std::uint32_t settle_ps = 0;  // time of the last primary-output change
  double energy = 0.0;          // sum of driver energy weights over gate-output toggles
};

// Event-driven, transport-delay timing simulator for a MAC netlist with the
// weight and accumulator operands held constant. Only the activation operand
// switches, from a steady state at t=0.
//
// Not thread-safe; construct one per worker. The netlist must outlive it.
class EventSimulator {
 public:
  explicit EventSimulator(const GateNetlist& netlist);

  // Fix the weight and accumulator operands and precompute the 256 steady
  // states indexed by activation.
  void pin(std::int8_t weight, std::int32_t accumulator);

  TransitionResult transition(std::int8_t a_prev, std::int8_t a_next);

 private:
  struct Event {
    NetId net;
    std::uint8_t value;
  };

  const GateNetlist& netlist_;
  std::vector<std::uint32_t> fanout_offsets_;
  std::vector<std::uint32_t> fanout_gates_;
  std::vector<std::uint8_t> is_output_;
  std::vector<double> toggle_energy_;  // per net: energy weight of its driver

  std::vector<std::uint8_t> steady_;  // 256 x net_count
  std::vector<std::uint8_t> value_;
  std::vector<std::uint8_t> projected_;
  std::vector<std::uint32_t> dirty_stamp_;
  std::uint32_t stamp_ = 0;
  std::vector<std::uint32_t> dirty_;
  std::vector<std::vector<Event>> wheel_;
};

}  // namespace halo
