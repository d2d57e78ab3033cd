#include <gtest/gtest.h>

#include "halo/dvfs.hpp"
#include "halo/error.hpp"
#include "halo/profile.hpp"
#include "halo/quantizer.hpp"
#include "halo/random.hpp"
#include "oracles.hpp"

namespace {

TEST(SelectLevel, SlowPathOnlyFitsLowestLevel) {
  const auto l = halo::select_level(halo::tpu_table(), 522.0);
  EXPECT_EQ(l.voltage_v, 1.0);
  EXPECT_EQ(l.freq_ghz, 1.9);
}

TEST(SelectLevel, FastPathPrefersLowestVoltage) {
  const auto t = halo::tpu_table();
  for (const auto& l : t.levels) EXPECT_TRUE(halo::feasible(l, 265.0));
  const auto l = halo::select_level(t, 265.0);
  EXPECT_EQ(l.voltage_v, 1.0);
  EXPECT_EQ(l.freq_ghz, 1.9);
  const auto v2f = [](const halo::DvfsLevel& x) { return x.voltage_v * x.voltage_v * x.freq_ghz; };
  EXPECT_EQ(halo::select_level(t, 265.0, v2f), l);
}

TEST(SelectLevel, NoFeasibleLevel) {
  try {
    halo::select_level(halo::tpu_table(), 600.0);
    FAIL();
  } catch (const halo::Error& e) {
    EXPECT_EQ(e.code(), halo::ErrorCode::NoFeasibleLevel);
  }
}

TEST(SelectLevel, MatchesBruteForce) {
  halo::Rng rng(40);
  for (int i = 0; i < 1000; ++i) {
    const auto t = i % 2 ? halo::tpu_table() : halo::gpu_table();
    const double cp = 200.0 + 500.0 * rng.uniform();
    halo::DvfsLevel want;
    if (oracle::select_level(t, cp, want)) {
      EXPECT_EQ(halo::select_level(t, cp), want);
    } else {
      EXPECT_THROW(halo::select_level(t, cp), halo::Error);
    }
  }
}

TEST(SelectLevel, EnergyModelTieBreaksToLowerVoltageThenFrequency) {
  const halo::DvfsTable t{"x", {{1.0, 1.0}, {1.0, 2.0}, {1.2, 3.0}}};
  const auto flat = [](const halo::DvfsLevel&) { return 1.0; };
  EXPECT_EQ(halo::select_level(t, 100.0, flat), (halo::DvfsLevel{1.0, 1.0}));
}

TEST(LevelForClass, DefaultClassesUnderMaxFreq) {
  const auto& p = halo::default_profile();
  const auto cfg = halo::default_quantizer_config(p);
  const auto t = halo::tpu_table();
  EXPECT_EQ(halo::level_for_class(t, cfg.low_class, p, halo::LevelMode::MaxFreq), (halo::DvfsLevel{1.2, 3.7}));
  EXPECT_EQ(halo::level_for_class(t, cfg.high_class, p, halo::LevelMode::MaxFreq), (halo::DvfsLevel{1.1, 2.4}));
  EXPECT_EQ(halo::level_for_class(t, cfg.low_class, p, halo::LevelMode::MinEnergy), (halo::DvfsLevel{1.0, 1.9}));
  halo::FrequencyClass full;
  for (int v = -128; v <= 127; ++v) full.codebook.push_back(static_cast<std::int8_t>(v));
  EXPECT_EQ(halo::level_for_class(t, full, p, halo::LevelMode::MaxFreq), (halo::DvfsLevel{1.0, 1.9}));
}

TEST(Table, JsonRoundTripAndValidation) {
  const auto t = halo::dvfs_table_from_json(R"({"target":"tpu","levels":[{"v":1.2,"f_ghz":3.7},{"v":1.0,"f_ghz":1.9},{"v":1.1,"f_ghz":2.4}]})");
  EXPECT_EQ(t.levels, halo::tpu_table().levels);
  EXPECT_EQ(halo::dvfs_table_from_json(halo::dvfs_table_to_json(halo::gpu_table())).levels, halo::gpu_table().levels);
  EXPECT_THROW(halo::dvfs_table_from_json(R"({"target":"x","levels":[{"v":1.2,"f_ghz":1.0},{"v":1.0,"f_ghz":2.0}]})"),
               halo::Error);
  EXPECT_THROW(halo::dvfs_table_from_json(R"({"target":"x","levels":[{"v":-1,"f_ghz":1.0}]})"), halo::Error);
  EXPECT_THROW(halo::table_for_target("npu"), halo::Error);
}

TEST(Schedule, SingleClass) {
  const std::vector<std::uint32_t> labels(7, 0);
  const auto s = halo::build_schedule(labels, {{0u, {1.2, 3.7}}});
  EXPECT_EQ(s.groups.size(), 1u);
  EXPECT_EQ(s.transition_count, 1u);
  EXPECT_NO_THROW(s.validate(7));
}

TEST(Schedule, MixedClassesWithOverlay) {
  const std::vector<std::uint32_t> labels{1, 0, 0, 1, 0};
  const auto s = halo::build_schedule(
      labels, {{0u, {1.2, 3.7}}, {1u, {1.1, 2.4}}, {halo::kOverlayClass, {1.0, 1.9}}}, 1e-6, true);
  ASSERT_EQ(s.groups.size(), 3u);
  EXPECT_EQ(s.transition_count, 3u);
  EXPECT_EQ(s.groups[0].level.freq_ghz, 3.7);
  EXPECT_EQ(s.groups[0].tile_ids, (std::vector<std::uint32_t>{1, 2, 4}));
  EXPECT_EQ(s.groups[1].tile_ids, (std::vector<std::uint32_t>{0, 3}));
  EXPECT_TRUE(s.groups[2].overlay);
  EXPECT_TRUE(s.groups[2].tile_ids.empty());
}

TEST(Schedule, TransitionOverheadIsPerGroup) {
  std::vector<std::uint32_t> labels(10000);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = (i * 7919) % 3 == 0;
  const auto s = halo::build_schedule(labels, {{0u, {1.2, 3.7}}, {1u, {1.1, 2.4}}}, 1e-6);
  EXPECT_EQ(s.transition_count, 2u);
  EXPECT_NEAR(s.transition_overhead_s, 2e-6, 1e-18);
  std::size_t naive = 1;
  for (std::size_t i = 1; i < labels.size(); ++i) naive += labels[i] != labels[i - 1];
  EXPECT_GT(naive, 2u);
}

TEST(Schedule, UnmappedClass) {
  try {
    halo::build_schedule({0, 2}, {{0u, {1.0, 1.9}}});
    FAIL();
  } catch (const halo::Error& e) {
    EXPECT_EQ(e.code(), halo::ErrorCode::UnmappedClass);
  }
}

TEST(Schedule, ClassesSharingALevelShareAGroup) {
  const auto s = halo::build_schedule({0, 1, 0}, {{0u, {1.0, 1.9}}, {1u, {1.0, 1.9}}});
  ASSERT_EQ(s.groups.size(), 1u);
  EXPECT_EQ(s.groups[0].classes, (std::vector<std::uint32_t>{0, 1}));
}

TEST(Schedule, JsonRoundTrip) {
  const auto s = halo::build_schedule({1, 0, 1}, {{0u, {1.2, 3.7}}, {1u, {1.1, 2.4}}, {halo::kOverlayClass, {1.0, 1.9}}},
                                      2e-6, true);
  const auto r = halo::schedule_from_json(halo::schedule_to_json(s));
  ASSERT_EQ(r.groups.size(), s.groups.size());
  for (std::size_t g = 0; g < s.groups.size(); ++g) {
    EXPECT_EQ(r.groups[g].level, s.groups[g].level);
    EXPECT_EQ(r.groups[g].tile_ids, s.groups[g].tile_ids);
    EXPECT_EQ(r.groups[g].classes, s.groups[g].classes);
    EXPECT_EQ(r.groups[g].overlay, s.groups[g].overlay);
  }
  EXPECT_EQ(r.transition_overhead_s, s.transition_overhead_s);
}

TEST(Schedule, ValidateDetectsGapsAndDuplicates) {
  auto s = halo::build_schedule({0, 0, 0}, {{0u, {1.0, 1.9}}});
  EXPECT_THROW(s.validate(4), halo::Error);
  s.groups[0].tile_ids[1] = 0;
  EXPECT_THROW(s.validate(3), halo::Error);
}

}  // namespace
