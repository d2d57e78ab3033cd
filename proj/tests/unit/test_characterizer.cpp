#include <gtest/gtest.h>

#include "halo/characterizer.hpp"
#include "halo/error.hpp"
#include "halo/netlist.hpp"
#include "halo/profile.hpp"

namespace {

const halo::GateNetlist& mac() {
  static const halo::GateNetlist n = halo::build_default_mac_netlist();
  return n;
}

TEST(Characterizer, RejectsEmptyRandomSampling) {
  try {
    halo::worst_delay_for_weight(mac(), 3, halo::SamplingSpec::random(0, 1));
    FAIL() << "expected InvalidArgument";
  } catch (const halo::Error& e) {
    EXPECT_EQ(e.code(), halo::ErrorCode::InvalidArgument);
  }
}

TEST(Characterizer, RandomSamplingIsDeterministic) {
  const auto s = halo::SamplingSpec::random(500, 42);
  const auto a = halo::characterize_weight(mac(), -77, s);
  const auto b = halo::characterize_weight(mac(), -77, s);
  EXPECT_EQ(a.worst_delay_ps, b.worst_delay_ps);
  EXPECT_EQ(a.mean_energy, b.mean_energy);
  const auto c = halo::characterize_weight(mac(), -77, halo::SamplingSpec::random(500, 43));
  EXPECT_NE(a.mean_energy, c.mean_energy);
}

TEST(Characterizer, ZeroWeightIsCheapest) {
  const auto s = halo::SamplingSpec::random(2000, 3);
  const auto zero = halo::characterize_weight(mac(), 0, s);
  for (int v : {1, -1, 64, -127, 85, -128}) {
    const auto other = halo::characterize_weight(mac(), static_cast<std::int8_t>(v), s);
    EXPECT_LT(zero.worst_delay_ps, other.worst_delay_ps) << v;
    EXPECT_LT(zero.mean_energy, other.mean_energy) << v;
  }
}

TEST(Characterizer, EnergyIsLinearInGateWeights) {
  halo::GateNetlist doubled = halo::build_default_mac_netlist();
  doubled.scale_energy(2.0);
  const auto s = halo::SamplingSpec::random(1000, 9);
  const double base = halo::switching_energy_for_weight(mac(), -45, s);
  EXPECT_DOUBLE_EQ(halo::switching_energy_for_weight(doubled, -45, s), 2.0 * base);
}

TEST(Characterizer, SparseWeightIsFasterThanDenseWeight) {
  const auto s = halo::SamplingSpec::exhaustive();
  EXPECT_LT(halo::worst_delay_for_weight(mac(), 64, s), halo::worst_delay_for_weight(mac(), -127, s));
  EXPECT_LT(halo::switching_energy_for_weight(mac(), 64, s),
            halo::switching_energy_for_weight(mac(), -127, s));
}

TEST(Characterizer, BuiltInProfileMatchesFreshSweep) {
  const auto& raw = halo::default_raw_profile();
  for (int v : {0, 64, -127, 37}) {
    const auto st = halo::characterize_weight(mac(), static_cast<std::int8_t>(v), halo::SamplingSpec::exhaustive());
    EXPECT_EQ(raw.worst_delay_ps(v), st.worst_delay_ps) << v;
    EXPECT_EQ(raw.energy(v), st.mean_energy) << v;
  }
}

TEST(Characterizer, ProfileFrequencyIsDefinitional) {
  halo::CharacterizeOptions opt;
  opt.threads = 2;
  const auto p = halo::characterize(mac(), halo::SamplingSpec::random(64, 5), opt);
  for (int v = -128; v <= 127; ++v) {
    EXPECT_EQ(p.max_freq_ghz(v), 1000.0 / p.worst_delay_ps(v));
    EXPECT_LE(p.worst_delay_ps(v), p.global_worst_delay_ps());
  }
  const auto q = halo::characterize(mac(), halo::SamplingSpec::random(64, 5));
  EXPECT_TRUE(p == q);
}

}  // namespace
