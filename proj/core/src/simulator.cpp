#include "halo/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

#include "halo/error.hpp"
#include "io_util.hpp"

namespace halo {

std::string to_string(FillDrainModel m) { return m == FillDrainModel::Packed ? "packed" : "per_tile"; }

FillDrainModel fill_drain_from_string(const std::string& s) {
  if (s == "packed") return FillDrainModel::Packed;
  if (s == "per_tile") return FillDrainModel::PerTile;
  throw Error(ErrorCode::InvalidArgument, "unknown fill/drain model '" + s + "'");
}

void ArrayConfig::validate() const {
  if (array_rows == 0 || array_cols == 0 || batch_cols == 0 || spmv_lanes == 0) {
    throw Error(ErrorCode::InvalidArgument, "array dimensions, batch and SpMV lanes must be positive");
  }
  for (double v : {static_power_units, buffer_energy_per_byte, dram_energy_per_byte}) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCode::InvalidArgument, "array energy constants must be finite and nonnegative");
    }
  }
  if (!(reference_voltage_v > 0.0)) throw Error(ErrorCode::InvalidArgument, "reference voltage must be positive");
}

ArrayConfig array_config_from_json(const std::string& text) {
  const auto j = detail::parse_json(text, "array config");
  if (!j.is_object()) throw Error(ErrorCode::MalformedFile, "array config must be an object");
  ArrayConfig c;
  c.array_rows = j.value("array_rows", c.array_rows);
  c.array_cols = j.value("array_cols", c.array_cols);
  c.batch_cols = j.value("batch_cols", c.batch_cols);
  c.fill_drain = fill_drain_from_string(j.value("fill_drain", to_string(c.fill_drain)));
  c.static_power_units = j.value("static_power_units", c.static_power_units);
  c.buffer_energy_per_byte = j.value("buffer_energy_per_byte", c.buffer_energy_per_byte);
  c.dram_energy_per_byte = j.value("dram_energy_per_byte", c.dram_energy_per_byte);
  c.reference_voltage_v = j.value("reference_voltage_v", c.reference_voltage_v);
  c.spmv_lanes = j.value("spmv_lanes", c.spmv_lanes);
  c.threads = j.value("threads", c.threads);
  c.validate();
  return c;
}

std::string array_config_to_json(const ArrayConfig& c) {
  nlohmann::ordered_json j;
  j["array_rows"] = c.array_rows;
  j["array_cols"] = c.array_cols;
  j["batch_cols"] = c.batch_cols;
  j["fill_drain"] = to_string(c.fill_drain);
  j["static_power_units"] = c.static_power_units;
  j["buffer_energy_per_byte"] = c.buffer_energy_per_byte;
  j["dram_energy_per_byte"] = c.dram_energy_per_byte;
  j["reference_voltage_v"] = c.reference_voltage_v;
  j["spmv_lanes"] = c.spmv_lanes;
  j["threads"] = c.threads;
  return j.dump(2);
}

ArrayConfig load_array_config(const std::filesystem::path& path) {
  return array_config_from_json(detail::read_text(path));
}

std::uint64_t tile_cycles(std::size_t tile_rows, std::size_t tile_cols, const ArrayConfig& array) {
  if (tile_rows == 0 || tile_cols == 0) throw Error(ErrorCode::InvalidArgument, "empty tile");
  if (tile_rows > array.array_rows || tile_cols > array.array_cols) {
    throw Error(ErrorCode::TileTooLarge, "tile " + std::to_string(tile_rows) + "x" +
                                             std::to_string(tile_cols) + " does not fit the array");
  }
  return tile_rows + array.batch_cols + tile_rows + tile_cols - 2;
}

std::uint64_t pass_cycles(std::size_t tiles, std::size_t tile_rows, std::size_t tile_cols,
                          const ArrayConfig& array) {
  tile_cycles(tile_rows, tile_cols, array);
  const std::size_t per_row = array.array_cols / tile_cols;
  const std::size_t slots = per_row * (array.array_rows / tile_rows);
  if (tiles == 0 || tiles > slots) throw Error(ErrorCode::InvalidArgument, "pass tile count out of range");
  const std::size_t cols_used = std::min(tiles, per_row) * tile_cols;
  const std::size_t rows_used = ((tiles + per_row - 1) / per_row) * tile_rows;
  return rows_used + array.batch_cols + rows_used + cols_used - 2;
}

namespace {

struct TileRef {
  const QuantizedModel* model;
  std::size_t local;
};

double index_bytes(const FrequencyClass& cls, std::size_t count) {
  const double bits = std::max(1.0, std::ceil(std::log2(static_cast<double>(cls.codebook.size()))));
  return bits * static_cast<double>(count) / 8.0;
}

std::uint32_t full_range_critical_path(const WeightProfile& profile) {
  std::uint32_t cp = 0;
  for (int v = -127; v <= 127; ++v) cp = std::max(cp, profile.worst_delay_ps(v));
  return cp;
}

GroupReport simulate_group(const ScheduleGroup& group, const std::vector<TileRef>& tiles,
                           std::span<const QuantizedModel> models, const ArrayConfig& array,
                           const WeightProfile& profile) {
  GroupReport r;
  r.level = group.level;
  r.tiles = group.tile_ids.size();
  const double vscale = std::pow(group.level.voltage_v / array.reference_voltage_v, 2.0);
  const double batch = static_cast<double>(array.batch_cols);
  const double period = group.level.period_ps();

  // Tiles are packed in schedule order; a change of tile shape closes the pass.
  std::size_t run = 0;
  std::size_t run_rows = 0;
  std::size_t run_cols = 0;
  auto flush = [&] {
    if (run == 0) return;
    if (array.fill_drain == FillDrainModel::PerTile) {
      r.passes += run;
      r.cycles += run * tile_cycles(run_rows, run_cols, array);
    } else {
      const std::size_t slots = (array.array_rows / run_rows) * (array.array_cols / run_cols);
      const std::size_t full = run / slots;
      const std::size_t rest = run % slots;
      r.passes += full + (rest ? 1 : 0);
      if (full) r.cycles += full * pass_cycles(slots, run_rows, run_cols, array);
      if (rest) r.cycles += pass_cycles(rest, run_rows, run_cols, array);
    }
    run = 0;
  };

  for (std::uint32_t id : group.tile_ids) {
    const TileRef& ref = tiles[id];
    const QuantizedModel& m = *ref.model;
    const FrequencyClass& cls = m.classes[m.tile_class[ref.local]];
    if (static_cast<double>(codebook_critical_path_ps(profile, cls.codebook)) > period) {
      throw Error(ErrorCode::TimingViolation, "class " + cls.name + " of " + m.name +
                                                  " violates the " + std::to_string(group.level.freq_ghz) +
                                                  " GHz period");
    }
    if (run > 0 && (m.tile_rows != run_rows || m.tile_cols != run_cols)) flush();
    run_rows = m.tile_rows;
    run_cols = m.tile_cols;
    ++run;

    std::array<std::uint64_t, 256> hist{};
    const std::size_t area = m.tile_area();
    const std::uint8_t* idx = m.indices.data() + ref.local * area;
    for (std::size_t k = 0; k < area; ++k) ++hist[static_cast<std::size_t>(cls.codebook[idx[k]] + 128)];
    double e = 0.0;
    for (int v = -128; v <= 127; ++v) {
      const std::uint64_t n = hist[static_cast<std::size_t>(v + 128)];
      if (n) e += static_cast<double>(n) * profile.energy(v);
    }
    r.core_dynamic += e * batch * vscale;

    const std::size_t real = m.tile_weight_count(ref.local);
    r.mac_ops += real * array.batch_cols;
    r.padding_ops += (area - real) * array.batch_cols;
    const std::size_t gr = ref.local / m.grid_cols;
    const std::size_t gc = ref.local % m.grid_cols;
    const std::size_t real_rows = std::min(m.tile_rows, m.rows - gr * m.tile_rows);
    const std::size_t real_cols = std::min(m.tile_cols, m.cols - gc * m.tile_cols);
    r.buffer_bytes += index_bytes(cls, real) + static_cast<double>(real_cols) * batch +
                      static_cast<double>(real_rows) * batch * 4.0;
  }
  flush();
  r.compute_time_s = static_cast<double>(r.cycles) / (group.level.freq_ghz * 1e9);

  if (group.overlay) {
    if (static_cast<double>(full_range_critical_path(profile)) > period) {
      throw Error(ErrorCode::TimingViolation, "overlay group violates the " +
                                                  std::to_string(group.level.freq_ghz) + " GHz period");
    }
    const std::uint64_t vector_passes = (array.batch_cols + array.spmv_lanes - 1) / array.spmv_lanes;
    std::uint64_t cycles = 0;
    for (const QuantizedModel& m : models) {
      r.spmv_ops += m.overlay.nnz() * array.batch_cols;
      cycles += m.overlay.nnz() * vector_passes;
    }
    r.spmv_time_s = static_cast<double>(cycles) / (group.level.freq_ghz * 1e9);
    r.spmv_energy = static_cast<double>(r.spmv_ops) * profile.max_energy() * vscale;
    r.core_dynamic += r.spmv_energy;
  }
  return r;
}

}  // namespace

SimReport simulate(std::span<const QuantizedModel> models, const DvfsSchedule& schedule,
                   const ArrayConfig& array, const WeightProfile& profile) {
  array.validate();
  std::vector<TileRef> tiles;
  std::size_t nnz = 0;
  for (const QuantizedModel& m : models) {
    m.validate();
    if (m.tile_rows > array.array_rows || m.tile_cols > array.array_cols) {
      throw Error(ErrorCode::TileTooLarge, "tiles of " + m.name + " do not fit the array");
    }
    for (std::size_t t = 0; t < m.tile_count(); ++t) tiles.push_back({&m, t});
    nnz += m.overlay.nnz();
  }
  schedule.validate(tiles.size());
  const bool overlay_scheduled = std::any_of(schedule.groups.begin(), schedule.groups.end(),
                                             [](const ScheduleGroup& g) { return g.overlay; });
  if (nnz > 0 && !overlay_scheduled) {
    throw Error(ErrorCode::InvalidArgument, "overlay has entries but no schedule group runs it");
  }

  std::vector<GroupReport> groups(schedule.groups.size());
  std::vector<std::exception_ptr> errors(schedule.groups.size());
  std::size_t workers = array.threads ? array.threads : std::max<std::size_t>(1, std::thread::hardware_concurrency());
  workers = std::min(workers, schedule.groups.size());
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t g = next++; g < groups.size(); g = next++) {
      try {
        groups[g] = simulate_group(schedule.groups[g], tiles, models, array, profile);
      } catch (...) {
        errors[g] = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < workers; ++i) pool.emplace_back(work);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  SimReport r;
  r.transitions = schedule.transition_count;
  r.transition_overhead_s = schedule.transition_overhead_s;
  double core = 0.0;
  for (const GroupReport& g : groups) {
    r.compute_time_s += g.compute_time_s;
    r.spmv_time_s += g.spmv_time_s;
    r.mac_ops += g.mac_ops;
    r.padding_ops += g.padding_ops;
    r.spmv_ops += g.spmv_ops;
    r.buffer_bytes += g.buffer_bytes;
    core += g.core_dynamic;
  }
  const double batch = static_cast<double>(array.batch_cols);
  for (const QuantizedModel& m : models) {
    for (std::size_t t = 0; t < m.tile_count(); ++t) {
      r.dram_bytes += index_bytes(m.classes[m.tile_class[t]], m.tile_weight_count(t)) + 4.0;
    }
    r.dram_bytes += static_cast<double>(m.cols) * batch + static_cast<double>(m.rows) * batch * 4.0;
    if (m.overlay.nnz() > 0) {
      r.dram_bytes += static_cast<double>(m.overlay.nnz()) * 5.0 +
                      static_cast<double>(m.overlay.rows + 1) * 4.0 +
                      static_cast<double>(m.overlay.rows) * 4.0;
    }
  }
  r.exec_time_s = r.compute_time_s + r.spmv_time_s + r.transition_overhead_s;
  r.energy.static_energy = array.static_power_units * r.exec_time_s;
  r.energy.core_dynamic = core;
  r.energy.buffer = r.buffer_bytes * array.buffer_energy_per_byte;
  r.energy.memory = r.dram_bytes * array.dram_energy_per_byte;
  r.energy.total = r.energy.static_energy + r.energy.core_dynamic + r.energy.buffer + r.energy.memory;
  r.groups = std::move(groups);
  return r;
}

SimReport simulate(const QuantizedModel& model, const DvfsSchedule& schedule,
                   const ArrayConfig& array, const WeightProfile& profile) {
  return simulate(std::span<const QuantizedModel>(&model, 1), schedule, array, profile);
}

SpmvResult simulate_spmv(const SparseOverlay& overlay, std::span<const double> b,
                         const DvfsLevel& level, const WeightProfile& profile,
                         const SpmvEngine& engine) {
  overlay.validate();
  if (b.size() != overlay.cols) {
    throw Error(ErrorCode::ShapeMismatch, "SpMV vector length differs from overlay columns");
  }
  if (!(level.freq_ghz > 0.0) || !(engine.reference_voltage_v > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "SpMV level and reference voltage must be positive");
  }
  SpmvResult out;
  out.y.assign(overlay.rows, 0.0);
  for (std::size_t r = 0; r < overlay.rows; ++r) {
    double acc = 0.0;
    for (std::uint32_t k = overlay.row_ptr[r]; k < overlay.row_ptr[r + 1]; ++k) {
      if (overlay.col_idx[k] >= b.size()) throw Error(ErrorCode::IndexOutOfBounds, "SpMV column out of range");
      acc += static_cast<double>(overlay.values[k]) * b[overlay.col_idx[k]];
    }
    out.y[r] = acc * static_cast<double>(overlay.channel_scales[r]);
  }
  const double nnz = static_cast<double>(overlay.nnz());
  out.time_s = nnz / (level.freq_ghz * 1e9);
  out.energy = nnz * profile.max_energy() * std::pow(level.voltage_v / engine.reference_voltage_v, 2.0);
  return out;
}

DvfsLevel baseline_level(const DvfsTable& table, const WeightProfile& profile) {
  FrequencyClass full;
  full.name = "full-range";
  for (int v = WeightProfile::kMinValue; v <= WeightProfile::kMaxValue; ++v) {
    full.codebook.push_back(static_cast<std::int8_t>(v));
  }
  return level_for_class(table, full, profile, LevelMode::MaxFreq);
}

SimReport run_baseline(std::span<const QuantizedModel> models, const ArrayConfig& array,
                       const DvfsTable& table, const WeightProfile& profile,
                       double transition_time_s) {
  const DvfsLevel level = baseline_level(table, profile);
  std::size_t tiles = 0;
  bool overlay = false;
  for (const QuantizedModel& m : models) {
    tiles += m.tile_count();
    overlay = overlay || m.overlay.nnz() > 0;
  }
  std::map<std::uint32_t, DvfsLevel> levels{{0u, level}};
  if (overlay) levels[kOverlayClass] = level;
  const std::vector<std::uint32_t> labels(tiles, 0);
  return simulate(models, build_schedule(labels, levels, transition_time_s, overlay), array, profile);
}

std::string sim_report_to_json(const SimReport& r) {
  nlohmann::ordered_json j;
  j["schema"] = "halo-sim-report-v1";
  j["exec_time_s"] = r.exec_time_s;
  j["compute_time_s"] = r.compute_time_s;
  j["spmv_time_s"] = r.spmv_time_s;
  j["transition_overhead_s"] = r.transition_overhead_s;
  j["transitions"] = r.transitions;
  j["mac_ops"] = r.mac_ops;
  j["padding_ops"] = r.padding_ops;
  j["spmv_ops"] = r.spmv_ops;
  j["dram_bytes"] = r.dram_bytes;
  j["buffer_bytes"] = r.buffer_bytes;
  j["energy"] = {{"static", r.energy.static_energy},
                 {"core_dynamic", r.energy.core_dynamic},
                 {"buffer", r.energy.buffer},
                 {"memory", r.energy.memory},
                 {"total", r.energy.total}};
  auto& groups = j["groups"] = nlohmann::ordered_json::array();
  for (const GroupReport& g : r.groups) {
    nlohmann::ordered_json jg;
    jg["v"] = g.level.voltage_v;
    jg["f_ghz"] = g.level.freq_ghz;
    jg["tiles"] = g.tiles;
    jg["passes"] = g.passes;
    jg["cycles"] = g.cycles;
    jg["mac_ops"] = g.mac_ops;
    jg["padding_ops"] = g.padding_ops;
    jg["spmv_ops"] = g.spmv_ops;
    jg["compute_time_s"] = g.compute_time_s;
    jg["spmv_time_s"] = g.spmv_time_s;
    jg["core_dynamic"] = g.core_dynamic;
    jg["spmv_energy"] = g.spmv_energy;
    jg["buffer_bytes"] = g.buffer_bytes;
    groups.push_back(std::move(jg));
  }
  return j.dump(1);
}

}  // namespace halo
