#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "halo/dvfs.hpp"
#include "halo/profile.hpp"
#include "halo/quantizer.hpp"
#include "halo/simulator.hpp"
#include "halo/tensor_io.hpp"

namespace halo {

enum class Goal { PerfOpt, AccOpt, Bal };

std::string to_string(Goal g);
Goal goal_from_string(const std::string& s);

struct GoalConfig {
  Goal goal = Goal::PerfOpt;
  double retention_perf = 0.80;
  double retention_acc = 0.99;
  std::size_t sweep_points = 9;
  std::size_t tile_size = 128;
  std::string dvfs_target = "tpu";
  std::optional<DvfsTable> levels;  // overrides dvfs_target when set
  LevelMode low_mode = LevelMode::MaxFreq;
  LevelMode high_mode = LevelMode::MaxFreq;
  LevelMode overlay_mode = LevelMode::MaxFreq;
  double transition_time_s = 1e-6;
  double salient_fraction = 0.0005;
  double overlay_cap = 0.005;
  int baseline_bits = 8;
  ArrayConfig array;
  std::size_t threads = 0;  // sweep workers, 0 = hardware concurrency

  void validate() const;
  DvfsTable table() const;
};

GoalConfig goal_config_from_json(const std::string& text, GoalConfig base = {});
std::string goal_config_to_json(const GoalConfig& cfg);

struct ParetoPoint {
  double retention = 0.0;
  double normalized_perf = 0.0;  // baseline time / HALO time
  double proxy_loss = 0.0;       // Fisher-weighted squared quantization error
  double b_eff = 0.0;

  friend bool operator==(const ParetoPoint&, const ParetoPoint&) = default;
};

struct KneeResult {
  std::size_t index = 0;  // into the input list
  ParetoPoint point;
  bool warning = false;  // fewer than 3 points: best-loss point returned
};

// Indices of points not dominated in (max perf, min loss).
std::vector<std::size_t> pareto_front(const std::vector<ParetoPoint>& points);

// Max distance to the chord between the Pareto extremes, both axes
// normalized over the front. Ties go to the lower loss.
KneeResult knee_point(const std::vector<ParetoPoint>& points);

struct LayerMetrics {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t low_tiles = 0;
  std::size_t high_tiles = 0;
  double k_fraction = 0.0;
  std::size_t overlay_nnz = 0;
  bool overlay_cap_exceeded = false;
  double proxy_loss = 0.0;
  double b_eff = 0.0;
};

// One quantize + schedule + simulate evaluation at a fixed retention.
struct RunResult {
  double retention = 0.0;
  std::vector<QuantizedModel> models;
  DvfsSchedule schedule;
  SimReport report;
  std::vector<LayerMetrics> layers;
  double proxy_loss = 0.0;
  double b_eff = 0.0;
  ParetoPoint point;
};

struct PipelineResult {
  Goal goal = Goal::PerfOpt;
  RunResult run;       // the selected operating point
  SimReport baseline;  // uniform model at the full-range level
  std::vector<ParetoPoint> sweep;  // BAL only
  std::optional<KneeResult> knee;  // BAL only
  double energy_ratio = 0.0;       // HALO total energy / baseline total energy
  std::string profile_digest;
};

QuantizerConfig quantizer_config(const GoalConfig& goal, double retention, const WeightProfile& profile);

// Class id -> level, plus the overlay level under kOverlayClass.
std::map<std::uint32_t, DvfsLevel> class_levels(const GoalConfig& goal, const QuantizerConfig& qc,
                                                const WeightProfile& profile);

// Global tile labels of a set of layer models, layer-major.
std::vector<std::uint32_t> global_tile_classes(std::span<const QuantizedModel> models);

DvfsSchedule schedule_models(std::span<const QuantizedModel> models,
                             const std::map<std::uint32_t, DvfsLevel>& levels,
                             double transition_time_s);

SimReport run_uniform_baseline(const TensorContainer& container, const GoalConfig& goal,
                               const WeightProfile& profile);

RunResult evaluate_retention(const TensorContainer& container, const GoalConfig& goal,
                             double retention, const WeightProfile& profile,
                             double baseline_time_s);

// Retention values of the BAL sweep: evenly spaced over [perf, acc].
std::vector<double> sweep_retentions(const GoalConfig& goal);

PipelineResult run_pipeline(const TensorContainer& container, const GoalConfig& goal,
                            const WeightProfile& profile);

// Writes report.json, layers.csv, pareto.csv and schedule.csv into `dir`.
void emit_report(const PipelineResult& result, const GoalConfig& goal,
                 const std::filesystem::path& dir);

std::string report_json(const PipelineResult& result, const GoalConfig& goal);
std::string layers_csv(const PipelineResult& result);
std::string pareto_csv(const PipelineResult& result);
std::string schedule_csv(const DvfsSchedule& schedule);

}  // namespace halo
