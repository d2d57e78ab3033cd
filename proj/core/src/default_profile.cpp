#include "halo/profile.hpp"

namespace halo {

namespace {

// Generated by halo_gen_profile_table: exhaustive sweep of the default MAC
// netlist, accumulator 0x55555555, 1 ps sequencing overhead.
#include "default_profile_data.inc"

}  // namespace

const WeightProfile& default_raw_profile() {
  static const WeightProfile profile = [] {
    WeightProfile p;
    for (std::size_t i = 0; i < WeightProfile::kSize; ++i) {
      p.set(static_cast<int>(i) - 128, kDefaultRawDelay[i], kDefaultEnergy[i]);
    }
    return p;
  }();
  return profile;
}

const WeightProfile& default_profile() {
  static const WeightProfile profile = calibrate_profile(default_raw_profile());
  return profile;
}

}  // namespace halo
