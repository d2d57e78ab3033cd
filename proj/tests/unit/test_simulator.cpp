#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "halo/dvfs.hpp"
#include "halo/error.hpp"
#include "halo/profile.hpp"
#include "halo/quantizer.hpp"
#include "halo/random.hpp"
#include "halo/simulator.hpp"
#include "oracles.hpp"

namespace {

const halo::WeightProfile& prof() { return halo::default_profile(); }

halo::ArrayConfig quiet_array() {
  halo::ArrayConfig a;
  a.threads = 1;
  return a;
}

// LOW-only model. Weights are clipped to two standard deviations so nothing is
// an outlier; `spike` adds one outlier at (0, 0).
halo::QuantizedModel low_model(std::size_t rows, std::size_t cols, std::size_t tile, std::uint64_t seed,
                               bool spike = false) {
  auto cfg = halo::default_quantizer_config(prof());
  cfg.tile_rows = tile;
  cfg.tile_cols = tile;
  halo::Rng rng(seed);
  auto w = oracle::random_matrix(rng, rows, cols, 0.02);
  for (float& x : w.data()) x = std::clamp(x, -0.04f, 0.04f);
  if (spike) w(0, 0) = 1.0f;
  return halo::quantize_model(w, halo::Matrix(rows, cols), cfg, prof());
}

// All tiles in class 0 at `level`, overlay on the same level.
halo::DvfsSchedule uniform_schedule(const halo::QuantizedModel& m, halo::DvfsLevel level, double transition = 0.0) {
  return halo::build_schedule(std::vector<std::uint32_t>(m.tile_count(), 0), {{0u, level}, {halo::kOverlayClass, level}},
                              transition, m.overlay.nnz() > 0);
}

TEST(TileCycles, ClosedForm) {
  halo::ArrayConfig a;
  a.batch_cols = 1;
  EXPECT_EQ(halo::tile_cycles(1, 1, a), 2u);
  a.batch_cols = 128;
  EXPECT_EQ(halo::tile_cycles(128, 128, a), 510u);
  std::uint64_t prev = 0;
  for (std::size_t b = 1; b < 300; b += 7) {
    a.batch_cols = b;
    EXPECT_GT(halo::tile_cycles(64, 32, a), prev);
    prev = halo::tile_cycles(64, 32, a);
  }
}

TEST(TileCycles, TileLargerThanArray) {
  halo::ArrayConfig a;
  a.array_rows = 64;
  try {
    halo::tile_cycles(128, 64, a);
    FAIL();
  } catch (const halo::Error& e) {
    EXPECT_EQ(e.code(), halo::ErrorCode::TileTooLarge);
  }
}

TEST(PassCycles, PackingGeometry) {
  halo::ArrayConfig a;
  EXPECT_EQ(halo::pass_cycles(1, 64, 64, a), halo::tile_cycles(64, 64, a));
  EXPECT_EQ(halo::pass_cycles(2, 64, 64, a), 64u + 128 + 64 + 128 - 2);
  EXPECT_EQ(halo::pass_cycles(4, 64, 64, a), 510u);
  EXPECT_EQ(halo::pass_cycles(16, 32, 32, a), 510u);
  EXPECT_THROW(halo::pass_cycles(5, 64, 64, a), halo::Error);
}

TEST(Simulate, SingleLowTileSpeedup) {
  const auto m = low_model(128, 128, 128, 1);
  ASSERT_EQ(m.overlay.nnz(), 0u);
  const auto fast = uniform_schedule(m, {1.2, 3.7});
  const auto slow = uniform_schedule(m, {1.0, 1.9});
  const auto rf = halo::simulate(m, fast, quiet_array(), prof());
  const auto rs = halo::simulate(m, slow, quiet_array(), prof());
  EXPECT_NEAR(rs.exec_time_s / rf.exec_time_s, 1.9473684210526316, 1e-6);
  EXPECT_EQ(rf.groups[0].cycles, 510u);
}

TEST(Simulate, DoublingFrequencyHalvesTime) {
  const auto m = low_model(256, 384, 64, 2);
  const auto a = halo::simulate(m, uniform_schedule(m, {1.0, 1.0}), quiet_array(), prof());
  const auto b = halo::simulate(m, uniform_schedule(m, {1.0, 2.0}), quiet_array(), prof());
  EXPECT_DOUBLE_EQ(a.exec_time_s, 2.0 * b.exec_time_s);
}

TEST(Simulate, EnergyAdditivityAndDeterminism) {
  const auto m = low_model(300, 200, 64, 3, true);
  ASSERT_EQ(m.overlay.nnz(), 1u);
  const auto labels = std::vector<std::uint32_t>(m.tile_count(), 0);
  const auto s = halo::build_schedule(labels, {{0u, {1.2, 3.7}}, {halo::kOverlayClass, {1.0, 1.9}}}, 1e-6,
                                      m.overlay.nnz() > 0);
  const auto r1 = halo::simulate(m, s, quiet_array(), prof());
  auto par = quiet_array();
  par.threads = 4;
  const auto r2 = halo::simulate(m, s, par, prof());
  EXPECT_EQ(r1, r2);
  EXPECT_EQ(halo::sim_report_to_json(r1), halo::sim_report_to_json(r2));
  const auto& e = r1.energy;
  EXPECT_EQ(e.total, e.static_energy + e.core_dynamic + e.buffer + e.memory);
  EXPECT_GE(e.static_energy, 0.0);
  EXPECT_GT(e.core_dynamic, 0.0);
  EXPECT_EQ(r1.mac_ops, 300u * 200u * 128u);
  EXPECT_EQ(r1.mac_ops + r1.padding_ops, m.tile_count() * m.tile_area() * 128u);
  EXPECT_DOUBLE_EQ(r1.exec_time_s, r1.compute_time_s + r1.spmv_time_s + r1.transition_overhead_s);
}

TEST(Simulate, AllZeroWeightsMinimizeCoreEnergy) {
  auto cfg = halo::default_quantizer_config(prof());
  cfg.tile_rows = cfg.tile_cols = 64;
  const auto zero = halo::quantize_model(halo::Matrix(64, 64), halo::Matrix(64, 64), cfg, prof());
  const auto other = low_model(64, 64, 64, 4);
  auto a = quiet_array();
  const double ez = halo::simulate(zero, uniform_schedule(zero, {1.2, 3.7}), a, prof()).energy.core_dynamic;
  EXPECT_EQ(zero.overlay.nnz(), 0u);
  EXPECT_DOUBLE_EQ(ez, 64.0 * 64.0 * 128.0 * prof().energy(0) * 1.2 * 1.2);
  EXPECT_LT(ez, halo::simulate(other, uniform_schedule(other, {1.2, 3.7}), a, prof()).energy.core_dynamic);
}

TEST(Simulate, WorkIsIndependentOfTileSize) {
  halo::Rng rng(5);
  const auto w = oracle::random_matrix(rng, 256, 256, 0.02);
  std::uint64_t ops = 0;
  for (std::size_t t : {128, 64, 32}) {
    auto cfg = halo::default_quantizer_config(prof());
    cfg.tile_rows = cfg.tile_cols = t;
    const auto m = halo::quantize_model(w, halo::Matrix(256, 256), cfg, prof());
    const auto r = halo::simulate(m, halo::build_schedule(std::vector<std::uint32_t>(m.tile_count(), 0),
                                                          {{0u, {1.2, 3.7}}, {halo::kOverlayClass, {1.0, 1.9}}},
                                                          0.0, m.overlay.nnz() > 0),
                                  quiet_array(), prof());
    if (ops) EXPECT_EQ(r.mac_ops, ops);
    ops = r.mac_ops;
  }
}

TEST(Simulate, GroupOrderDoesNotChangeTotals) {
  halo::Rng rng(6);
  auto cfg = halo::default_quantizer_config(prof());
  cfg.tile_rows = cfg.tile_cols = 64;
  cfg.retention = 0.7;
  const auto m = halo::quantize_model(oracle::random_matrix(rng, 256, 256, 0.02), oracle::random_matrix(rng, 256, 256),
                                      cfg, prof());
  auto s = halo::build_schedule(std::vector<std::uint32_t>(m.tile_class.begin(), m.tile_class.end()),
                                {{0u, {1.2, 3.7}}, {1u, {1.1, 2.4}}, {halo::kOverlayClass, {1.0, 1.9}}}, 0.0, true);
  const auto a = halo::simulate(m, s, quiet_array(), prof());
  std::reverse(s.groups.begin(), s.groups.end());
  const auto b = halo::simulate(m, s, quiet_array(), prof());
  EXPECT_EQ(a.mac_ops, b.mac_ops);
  EXPECT_NEAR(a.exec_time_s, b.exec_time_s, 1e-15 * a.exec_time_s);
  EXPECT_NEAR(a.energy.total, b.energy.total, 1e-12 * a.energy.total);
}

TEST(Simulate, TimingViolation) {
  const auto m = halo::quantize_uniform(halo::Matrix(64, 64, 0.5f), 64, 64, 8, prof());
  const auto s = halo::build_schedule({0}, {{0u, {1.2, 3.7}}}, 0.0);
  try {
    halo::simulate(m, s, quiet_array(), prof());
    FAIL();
  } catch (const halo::Error& e) {
    EXPECT_EQ(e.code(), halo::ErrorCode::TimingViolation);
  }
}

TEST(Simulate, StaticEnergyTracksTime) {
  const auto m = low_model(128, 128, 64, 7, true);
  const auto labels = std::vector<std::uint32_t>(m.tile_count(), 0);
  const auto fast = halo::simulate(m, halo::build_schedule(labels, {{0u, {1.2, 3.7}}, {halo::kOverlayClass, {1.0, 1.9}}},
                                                           0.0, m.overlay.nnz() > 0),
                                   quiet_array(), prof());
  const auto slow = halo::simulate(m, halo::build_schedule(labels, {{0u, {1.0, 1.9}}, {halo::kOverlayClass, {1.0, 1.9}}},
                                                           0.0, m.overlay.nnz() > 0),
                                   quiet_array(), prof());
  EXPECT_LT(fast.exec_time_s, slow.exec_time_s);
  EXPECT_LT(fast.energy.static_energy, slow.energy.static_energy);
}

TEST(Spmv, EmptyOverlay) {
  halo::SparseOverlay ov;
  ov.rows = 3;
  ov.cols = 4;
  ov.row_ptr.assign(4, 0);
  ov.channel_scales.assign(3, 1.0f);
  const std::vector<double> b(4, 1.0);
  const auto r = halo::simulate_spmv(ov, b, {1.0, 1.9}, prof());
  EXPECT_EQ(r.y, std::vector<double>(3, 0.0));
  EXPECT_EQ(r.time_s, 0.0);
  EXPECT_EQ(r.energy, 0.0);
}

TEST(Spmv, SingleEntry) {
  halo::SparseOverlay ov;
  ov.rows = 2;
  ov.cols = 3;
  ov.row_ptr = {0, 1, 1};
  ov.col_idx = {2};
  ov.values = {127};
  ov.channel_scales = {0.25f, 1.0f};
  const std::vector<double> b{0.0, 0.0, 1.0};
  const auto r = halo::simulate_spmv(ov, b, {1.0, 2.0}, prof());
  EXPECT_EQ(r.y[0], 127 * 0.25);
  EXPECT_EQ(r.time_s, 1.0 / 2e9);
  EXPECT_EQ(r.energy, prof().max_energy());
}

TEST(Spmv, MatchesDenseOracle) {
  halo::Rng rng(8);
  const auto w = oracle::random_matrix(rng, 40, 60);
  halo::Mask out(40, 60), sal(40, 60);
  for (auto& bit : sal.bits) bit = rng.uniform() < 0.1;
  const auto ov = halo::quantize_overlay(w, out, sal);
  std::vector<double> b(60);
  for (double& x : b) x = rng.normal();
  const auto r = halo::simulate_spmv(ov, b, {1.0, 1.9}, prof());
  for (std::size_t i = 0; i < 40; ++i) {
    double dense = 0.0;
    double mag = 0.0;
    for (std::size_t j = 0; j < 60; ++j) {
      double v = 0.0;
      for (auto k = ov.row_ptr[i]; k < ov.row_ptr[i + 1]; ++k) {
        if (ov.col_idx[k] == j) v = static_cast<double>(ov.channel_scales[i]) * ov.values[k];
      }
      dense += v * b[j];
      mag += std::abs(v * b[j]);
    }
    EXPECT_NEAR(r.y[i], dense, 1e-14 * (mag + 1.0));
  }
}

TEST(Spmv, IndexOutOfBounds) {
  halo::SparseOverlay ov;
  ov.rows = 1;
  ov.cols = 2;
  ov.row_ptr = {0, 1};
  ov.col_idx = {5};
  ov.values = {3};
  ov.channel_scales = {1.0f};
  const std::vector<double> b(2, 1.0);
  try {
    halo::simulate_spmv(ov, b, {1.0, 1.9}, prof());
    FAIL();
  } catch (const halo::Error& e) {
    EXPECT_EQ(e.code(), halo::ErrorCode::IndexOutOfBounds);
  }
}

TEST(Baseline, RunsAtFullRangeLevel) {
  halo::Rng rng(9);
  const auto w = oracle::random_matrix(rng, 256, 256, 0.02);
  const std::vector<halo::QuantizedModel> base{halo::quantize_uniform(w, 128, 128, 8, prof())};
  const auto r = halo::run_baseline(base, quiet_array(), halo::tpu_table(), prof());
  ASSERT_EQ(r.groups.size(), 1u);
  EXPECT_EQ(r.groups[0].level, (halo::DvfsLevel{1.0, 1.9}));
  EXPECT_EQ(r, halo::run_baseline(base, quiet_array(), halo::tpu_table(), prof()));

  auto cfg = halo::default_quantizer_config(prof());
  const auto halo_m = halo::quantize_model(w, halo::Matrix(256, 256), cfg, prof());
  const std::vector<halo::QuantizedModel> hm{halo_m};
  const auto s = halo::build_schedule(std::vector<std::uint32_t>(4, 0),
                                      {{0u, {1.2, 3.7}}, {halo::kOverlayClass, {1.0, 1.9}}}, 1e-6,
                                      halo_m.overlay.nnz() > 0);
  const double speedup = r.exec_time_s / halo::simulate(hm, s, quiet_array(), prof()).exec_time_s;
  EXPECT_LE(speedup, 3.7 / 1.9);
}

TEST(ArrayConfigJson, RoundTrip) {
  halo::ArrayConfig a;
  a.batch_cols = 7;
  a.fill_drain = halo::FillDrainModel::PerTile;
  const auto b = halo::array_config_from_json(halo::array_config_to_json(a));
  EXPECT_EQ(b.batch_cols, 7u);
  EXPECT_EQ(b.fill_drain, halo::FillDrainModel::PerTile);
  EXPECT_THROW(halo::array_config_from_json(R"({"array_rows":0})"), halo::Error);
}

}  // namespace
