#include <benchmark/benchmark.h>

#include <cstdint>
#include <vector>

#include "halo/dvfs.hpp"
#include "halo/event_sim.hpp"
#include "halo/netlist.hpp"
#include "halo/profile.hpp"
#include "halo/quantizer.hpp"
#include "halo/random.hpp"
#include "halo/simulator.hpp"
#include "halo/tensor_io.hpp"

namespace {

void BM_EventSimTransition(benchmark::State& state) {
  const auto netlist = halo::build_default_mac_netlist();
  halo::EventSimulator sim(netlist);
  sim.pin(static_cast<std::int8_t>(state.range(0)), 0x55555555);
  int a = 0;
  for (auto _ : state) {
    const auto prev = static_cast<std::int8_t>(a);
    const auto next = static_cast<std::int8_t>(a * 37 + 11);
    benchmark::DoNotOptimize(sim.transition(prev, next));
    ++a;
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_EventSimTransition)->Arg(0)->Arg(64)->Arg(-127);

void BM_QuantizeModel(benchmark::State& state) {
  halo::SyntheticSpec spec;
  spec.layers = 1;
  spec.rows = spec.cols = static_cast<std::size_t>(state.range(0));
  const auto c = halo::synthetic_container(spec);
  const auto& prof = halo::default_profile();
  const auto cfg = halo::default_quantizer_config(prof);
  for (auto _ : state) {
    benchmark::DoNotOptimize(halo::quantize_model(c.layers[0].weights, c.layers[0].gradients, cfg, prof));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0) * state.range(0));
}
BENCHMARK(BM_QuantizeModel)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Simulate(benchmark::State& state) {
  halo::SyntheticSpec spec;
  spec.layers = 1;
  spec.rows = spec.cols = static_cast<std::size_t>(state.range(0));
  const auto c = halo::synthetic_container(spec);
  const auto& prof = halo::default_profile();
  auto cfg = halo::default_quantizer_config(prof);
  cfg.tile_rows = cfg.tile_cols = 64;
  const auto m = halo::quantize_model(c.layers[0].weights, c.layers[0].gradients, cfg, prof);
  const auto sched = halo::build_schedule(std::vector<std::uint32_t>(m.tile_class.begin(), m.tile_class.end()),
                                          {{0u, {1.2, 3.7}}, {1u, {1.1, 2.4}}, {halo::kOverlayClass, {1.0, 1.9}}},
                                          1e-6, m.overlay.nnz() > 0);
  halo::ArrayConfig array;
  array.threads = 1;
  for (auto _ : state) benchmark::DoNotOptimize(halo::simulate(m, sched, array, prof));
}
BENCHMARK(BM_Simulate)->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_Spmv(benchmark::State& state) {
  halo::Rng rng(3);
  const std::size_t n = 1024;
  halo::Matrix w(n, n);
  halo::Mask none(n, n), sal(n, n);
  for (auto& x : w.data()) x = static_cast<float>(rng.normal());
  for (auto& b : sal.bits) b = rng.uniform() < 0.005;
  const auto ov = halo::quantize_overlay(w, none, sal);
  std::vector<double> b(n, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(halo::simulate_spmv(ov, b, {1.0, 1.9}, halo::default_profile()));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(ov.nnz()));
}
BENCHMARK(BM_Spmv);

}  // namespace

BENCHMARK_MAIN();
