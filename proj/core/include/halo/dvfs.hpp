#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "halo/profile.hpp"
#include "halo/quantizer.hpp"

namespace halo {

struct DvfsLevel {
  double voltage_v = 1.0;
  double freq_ghz = 1.0;

  double period_ps() const noexcept { return 1000.0 / freq_ghz; }
  friend bool operator==(const DvfsLevel&, const DvfsLevel&) = default;
};

// Operating points sorted by frequency ascending, voltage nondecreasing.
struct DvfsTable {
  std::string target;
  std::vector<DvfsLevel> levels;

  void validate() const;
  double min_voltage() const;
};

DvfsTable tpu_table();
DvfsTable gpu_table();
DvfsTable table_for_target(const std::string& target);

DvfsTable dvfs_table_from_json(const std::string& text);
std::string dvfs_table_to_json(const DvfsTable& table);
DvfsTable load_dvfs_table(const std::filesystem::path& path);

using EnergyModel = std::function<double(const DvfsLevel&)>;

// V^2 per unit of work.
double default_energy_model(const DvfsLevel& level);

bool feasible(const DvfsLevel& level, double critical_path_ps);

// Feasible level with the lowest energy; ties to lower voltage, then lower
// frequency.
DvfsLevel select_level(const DvfsTable& table, double critical_path_ps,
                       const EnergyModel& energy = default_energy_model);

enum class LevelMode { MinEnergy, MaxFreq };

std::string to_string(LevelMode mode);
LevelMode level_mode_from_string(const std::string& s);

DvfsLevel level_for_class(const DvfsTable& table, const FrequencyClass& cls,
                          const WeightProfile& profile, LevelMode mode,
                          const EnergyModel& energy = default_energy_model);

// Class id used for overlay work in schedules.
inline constexpr std::uint32_t kOverlayClass = 0xFFFFFFFFu;

struct ScheduleGroup {
  DvfsLevel level;
  std::vector<std::uint32_t> classes;   // classes sharing this level, ascending
  std::vector<std::uint32_t> tile_ids;  // ascending
  bool overlay = false;                 // the group also runs the SpMV overlay
};

struct DvfsSchedule {
  std::vector<ScheduleGroup> groups;
  std::size_t transition_count = 0;
  double transition_time_s = 1e-6;
  double transition_overhead_s = 0.0;

  std::size_t tile_count() const;
  void validate(std::size_t expected_tiles) const;
};

// One group per distinct level, highest frequency first. Passing
// kOverlayClass in `class_levels` together with include_overlay adds the
// overlay to the group of that level.
DvfsSchedule build_schedule(const std::vector<std::uint32_t>& tile_class,
                            const std::map<std::uint32_t, DvfsLevel>& class_levels,
                            double transition_time_s = 1e-6, bool include_overlay = false);

std::string schedule_to_json(const DvfsSchedule& schedule);
DvfsSchedule schedule_from_json(const std::string& text);
void save_schedule(const DvfsSchedule& schedule, const std::filesystem::path& path);
DvfsSchedule load_schedule(const std::filesystem::path& path);

}  // namespace halo
