#pragma once

#include <cstdint>
#include <vector>

#include "halo/netlist.hpp"
#include "halo/profile.hpp"

namespace halo {

// Which ordered activation transitions (a_prev -> a_next) to simulate.
struct SamplingSpec {
  enum class Kind { Exhaustive, Random };
  Kind kind = Kind::Exhaustive;
  std::size_t samples = 0;
  std::uint64_t seed = 0;

  static SamplingSpec exhaustive() { return {}; }
  static SamplingSpec random(std::size_t n, std::uint64_t seed) {
    return {Kind::Random, n, seed};
  }
};

struct CharacterizeOptions {
  std::int32_t accumulator_pattern = 0x55555555;
  // Register clock-to-q plus setup, added to every settling time so that
  // delays stay strictly positive.
  std::uint32_t sequencing_overhead_ps = 1;
  // 0 = std::thread::hardware_concurrency().
  unsigned threads = 0;
};

struct WeightStats {
  std::uint32_t worst_delay_ps = 0;
  double mean_energy = 0.0;
};

// Expands a sampling spec into the list of transitions. Throws
// Error(InvalidArgument) for RANDOM with n = 0.
std::vector<std::pair<std::int8_t, std::int8_t>> expand_sampling(const SamplingSpec& spec);

WeightStats characterize_weight(const GateNetlist& netlist, std::int8_t v,
                                const SamplingSpec& sampling,
                                const CharacterizeOptions& options = {});

std::uint32_t worst_delay_for_weight(const GateNetlist& netlist, std::int8_t v,
                                     const SamplingSpec& sampling,
                                     const CharacterizeOptions& options = {});

double switching_energy_for_weight(const GateNetlist& netlist, std::int8_t v,
                                   const SamplingSpec& sampling,
                                   const CharacterizeOptions& options = {});

WeightProfile characterize(const GateNetlist& netlist, const SamplingSpec& sampling,
                           const CharacterizeOptions& options = {});

}  // namespace halo
