#include "halo/characterizer.hpp"

#include <algorithm>
#include <atomic>
#include <random>
#include <thread>

#include "halo/error.hpp"
#include "halo/event_sim.hpp"

namespace halo {

std::vector<std::pair<std::int8_t, std::int8_t>> expand_sampling(const SamplingSpec& spec) {
  std::vector<std::pair<std::int8_t, std::int8_t>> pairs;
  if (spec.kind == SamplingSpec::Kind::Exhaustive) {
    pairs.reserve(256 * 256);
    for (int p = -128; p < 128; ++p) {
      for (int n = -128; n < 128; ++n) {
        pairs.emplace_back(static_cast<std::int8_t>(p), static_cast<std::int8_t>(n));
      }
    }
    return pairs;
  }
  if (spec.samples == 0) {
    throw Error(ErrorCode::InvalidArgument, "random sampling needs at least one transition");
  }
  // Raw engine bits only: distributions are implementation-defined.
  std::mt19937_64 rng(spec.seed);
  pairs.reserve(spec.samples);
  for (std::size_t i = 0; i < spec.samples; ++i) {
    const std::uint64_t r = rng();
    pairs.emplace_back(static_cast<std::int8_t>(static_cast<std::uint8_t>(r >> 56)),
                       static_cast<std::int8_t>(static_cast<std::uint8_t>(r >> 48)));
  }
  return pairs;
}

namespace {

WeightStats run_weight(EventSimulator& sim, std::int8_t v,
                       const std::vector<std::pair<std::int8_t, std::int8_t>>& pairs,
                       const CharacterizeOptions& options) {
  sim.pin(v, options.accumulator_pattern);
  std::uint32_t worst = 0;
  double energy = 0.0;
  for (const auto& [prev, next] : pairs) {
    const TransitionResult r = sim.transition(prev, next);
    worst = std::max(worst, r.settle_ps);
    energy += r.energy;
  }
  return {worst + options.sequencing_overhead_ps, energy / static_cast<double>(pairs.size())};
}

}  // namespace

WeightStats characterize_weight(const GateNetlist& netlist, std::int8_t v,
                                const SamplingSpec& sampling,
                                const CharacterizeOptions& options) {
  const auto pairs = expand_sampling(sampling);
  EventSimulator sim(netlist);
  return run_weight(sim, v, pairs, options);
}

std::uint32_t worst_delay_for_weight(const GateNetlist& netlist, std::int8_t v,
                                     const SamplingSpec& sampling,
                                     const CharacterizeOptions& options) {
  return characterize_weight(netlist, v, sampling, options).worst_delay_ps;
}

double switching_energy_for_weight(const GateNetlist& netlist, std::int8_t v,
                                   const SamplingSpec& sampling,
                                   const CharacterizeOptions& options) {
  return characterize_weight(netlist, v, sampling, options).mean_energy;
}

WeightProfile characterize(const GateNetlist& netlist, const SamplingSpec& sampling,
                           const CharacterizeOptions& options) {
  netlist.validate();
  const auto pairs = expand_sampling(sampling);

  unsigned threads = options.threads ? options.threads : std::thread::hardware_concurrency();
  threads = std::clamp(threads, 1u, 256u);

  std::vector<WeightStats> stats(WeightProfile::kSize);
  std::atomic<int> next{0};
  auto worker = [&] {
    EventSimulator sim(netlist);
    for (int i = next++; i < static_cast<int>(WeightProfile::kSize); i = next++) {
      stats[i] = run_weight(sim, static_cast<std::int8_t>(i - 128), pairs, options);
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(worker);
  }

  WeightProfile profile;
  for (int i = 0; i < static_cast<int>(WeightProfile::kSize); ++i) {
    profile.set(i - 128, stats[i].worst_delay_ps, stats[i].mean_energy);
  }
  return profile;
}

}  // namespace halo
