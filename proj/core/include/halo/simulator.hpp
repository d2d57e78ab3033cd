#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "halo/dvfs.hpp"
#include "halo/profile.hpp"
#include "halo/quantizer.hpp"

namespace halo {

enum class FillDrainModel {
  PerTile,  // every tile is its own pass through the array
  Packed,   // tiles smaller than the array share a pass, row-major slots
};

std::string to_string(FillDrainModel m);
FillDrainModel fill_drain_from_string(const std::string& s);

struct ArrayConfig {
  std::size_t array_rows = 128;
  std::size_t array_cols = 128;
  std::size_t batch_cols = 128;
  FillDrainModel fill_drain = FillDrainModel::Packed;
  double static_power_units = 1.0e14;   // energy units per second
  double buffer_energy_per_byte = 50.0;
  double dram_energy_per_byte = 500.0;
  double reference_voltage_v = 1.0;     // dynamic energy scales by (V / Vref)^2
  std::size_t spmv_lanes = 128;         // batch columns the SpMV engine handles per cycle
  std::size_t threads = 0;              // 0: one worker per group

  void validate() const;
};

ArrayConfig array_config_from_json(const std::string& text);
std::string array_config_to_json(const ArrayConfig& cfg);
ArrayConfig load_array_config(const std::filesystem::path& path);

// Weight load + stream + drain of one tile.
std::uint64_t tile_cycles(std::size_t tile_rows, std::size_t tile_cols, const ArrayConfig& array);

// Cycles of one pass holding `tiles` tiles of the given size, packed
// row-major into the array's tile slots.
std::uint64_t pass_cycles(std::size_t tiles, std::size_t tile_rows, std::size_t tile_cols,
                          const ArrayConfig& array);

struct EnergyBreakdown {
  double static_energy = 0.0;
  double core_dynamic = 0.0;
  double buffer = 0.0;
  double memory = 0.0;
  double total = 0.0;

  friend bool operator==(const EnergyBreakdown&, const EnergyBreakdown&) = default;
};

struct GroupReport {
  DvfsLevel level;
  std::size_t tiles = 0;
  std::uint64_t passes = 0;
  std::uint64_t cycles = 0;
  std::uint64_t mac_ops = 0;
  std::uint64_t padding_ops = 0;
  std::uint64_t spmv_ops = 0;
  double compute_time_s = 0.0;
  double spmv_time_s = 0.0;
  double core_dynamic = 0.0;
  double spmv_energy = 0.0;
  double buffer_bytes = 0.0;

  friend bool operator==(const GroupReport&, const GroupReport&) = default;
};

struct SimReport {
  double exec_time_s = 0.0;
  double compute_time_s = 0.0;
  double spmv_time_s = 0.0;
  double transition_overhead_s = 0.0;
  std::size_t transitions = 0;
  std::uint64_t mac_ops = 0;
  std::uint64_t padding_ops = 0;
  std::uint64_t spmv_ops = 0;
  double dram_bytes = 0.0;
  double buffer_bytes = 0.0;
  EnergyBreakdown energy;
  std::vector<GroupReport> groups;

  friend bool operator==(const SimReport&, const SimReport&) = default;
};

// Simulates the models on a weight-stationary array. Tile ids in the schedule
// are global: layer-major, then row-major over each layer's tile grid.
SimReport simulate(std::span<const QuantizedModel> models, const DvfsSchedule& schedule,
                   const ArrayConfig& array, const WeightProfile& profile);
SimReport simulate(const QuantizedModel& model, const DvfsSchedule& schedule,
                   const ArrayConfig& array, const WeightProfile& profile);

struct SpmvEngine {
  double reference_voltage_v = 1.0;
};

struct SpmvResult {
  std::vector<double> y;
  double time_s = 0.0;
  double energy = 0.0;
};

// y = overlay * b for one vector: nnz cycles at the level frequency, each op at
// the worst-case per-op energy of the full weight range.
SpmvResult simulate_spmv(const SparseOverlay& overlay, std::span<const double> b,
                         const DvfsLevel& level, const WeightProfile& profile,
                         const SpmvEngine& engine = {});

// Highest level that is feasible for the full int8 range.
DvfsLevel baseline_level(const DvfsTable& table, const WeightProfile& profile);

// Uniform model(s) in a single group at baseline_level.
SimReport run_baseline(std::span<const QuantizedModel> models, const ArrayConfig& array,
                       const DvfsTable& table, const WeightProfile& profile,
                       double transition_time_s = 1e-6);

std::string sim_report_to_json(const SimReport& report);

}  // namespace halo
