#include <gtest/gtest.h>

#include <cstdint>

#include "halo/error.hpp"
#include "halo/netlist.hpp"
#include "halo/random.hpp"

namespace {

const halo::GateNetlist& mac() {
  static const halo::GateNetlist n = halo::build_default_mac_netlist();
  return n;
}

TEST(Netlist, SmallProduct) { EXPECT_EQ(halo::evaluate(mac(), 3, 5, 0), 15); }

TEST(Netlist, ExtremeTwosComplement) { EXPECT_EQ(halo::evaluate(mac(), -128, -128, 0), 16384); }

TEST(Netlist, RandomTriplesMatchNativeArithmetic) {
  halo::Rng rng(7);
  for (int i = 0; i < 10000; ++i) {
    const std::uint64_t r = rng.bits();
    const auto w = static_cast<std::int8_t>(r & 0xff);
    const auto a = static_cast<std::int8_t>((r >> 8) & 0xff);
    const auto acc = static_cast<std::int32_t>(r >> 32);
    const auto want = static_cast<std::int32_t>(static_cast<std::uint32_t>(acc) +
                                                static_cast<std::uint32_t>(w * a));
    ASSERT_EQ(halo::evaluate(mac(), w, a, acc), want) << int(w) << "*" << int(a) << "+" << acc;
  }
}

TEST(Netlist, ValidatesDefault) {
  EXPECT_NO_THROW(mac().validate());
  EXPECT_EQ(mac().weight_inputs().size(), 8u);
  EXPECT_EQ(mac().activation_inputs().size(), 8u);
  EXPECT_EQ(mac().accumulator_inputs().size(), 32u);
  EXPECT_EQ(mac().outputs().size(), 32u);
  for (const auto& g : mac().gates()) EXPECT_GT(g.delay_ps, 0u);
}

TEST(Netlist, RejectsForwardReference) {
  halo::GateNetlist n;
  const halo::NetId a = n.add_input();
  const halo::NetId fwd[] = {a, 99};
  EXPECT_THROW(n.add_gate(halo::GateKind::And, fwd, 1), halo::Error);
}

TEST(Netlist, RejectsZeroDelay) {
  halo::GateNetlist n = halo::build_default_mac_netlist();
  n.mutable_gates()[5].delay_ps = 0;
  try {
    n.validate();
    FAIL() << "expected InvalidNetlist";
  } catch (const halo::Error& e) {
    EXPECT_EQ(e.code(), halo::ErrorCode::InvalidNetlist);
  }
}

TEST(Netlist, DelaysAreConfigurable) {
  halo::GateDelays slow;
  slow.xor_ps = 4;
  slow.fa_sum_ps = 4;
  slow.fa_carry_ps = 4;
  const auto n = halo::build_default_mac_netlist(slow);
  EXPECT_GT(n.static_depth_ps(), mac().static_depth_ps());
  EXPECT_EQ(halo::evaluate(n, -7, 9, 100), 37);
}

}  // namespace
