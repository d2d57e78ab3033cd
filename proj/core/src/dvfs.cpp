#include "halo/dvfs.hpp"

#include <algorithm>
#include <cmath>

#include "halo/error.hpp"
#include "io_util.hpp"

namespace halo {

void DvfsTable::validate() const {
  if (levels.empty()) throw Error(ErrorCode::InvalidArgument, "DVFS table has no levels");
  for (std::size_t i = 0; i < levels.size(); ++i) {
    const DvfsLevel& l = levels[i];
    if (!(l.voltage_v > 0.0) || !(l.freq_ghz > 0.0) || !std::isfinite(l.voltage_v) ||
        !std::isfinite(l.freq_ghz)) {
      throw Error(ErrorCode::InvalidArgument, "DVFS level voltage and frequency must be positive");
    }
    if (i > 0 && (l.freq_ghz <= levels[i - 1].freq_ghz || l.voltage_v < levels[i - 1].voltage_v)) {
      throw Error(ErrorCode::InvalidArgument,
                  "DVFS levels must be sorted by frequency with nondecreasing voltage");
    }
  }
}

double DvfsTable::min_voltage() const {
  validate();
  return levels.front().voltage_v;
}

DvfsTable tpu_table() { return {"tpu", {{1.0, 1.9}, {1.1, 2.4}, {1.2, 3.7}}}; }
DvfsTable gpu_table() { return {"gpu", {{0.9, 1.5}, {1.0, 2.0}, {1.1, 2.8}}}; }

DvfsTable table_for_target(const std::string& target) {
  if (target == "tpu") return tpu_table();
  if (target == "gpu") return gpu_table();
  throw Error(ErrorCode::InvalidArgument, "unknown DVFS target '" + target + "'");
}

DvfsTable dvfs_table_from_json(const std::string& text) {
  const auto j = detail::parse_json(text, "DVFS table");
  DvfsTable t;
  t.target = detail::field<std::string>(j, "target", "DVFS table");
  if (!j.contains("levels") || !j["levels"].is_array()) {
    throw Error(ErrorCode::MalformedFile, "DVFS table: missing levels array");
  }
  for (const auto& l : j["levels"]) {
    t.levels.push_back({detail::field<double>(l, "v", "DVFS level"),
                        detail::field<double>(l, "f_ghz", "DVFS level")});
  }
  std::sort(t.levels.begin(), t.levels.end(),
            [](const DvfsLevel& a, const DvfsLevel& b) { return a.freq_ghz < b.freq_ghz; });
  t.validate();
  return t;
}

std::string dvfs_table_to_json(const DvfsTable& table) {
  nlohmann::ordered_json j;
  j["target"] = table.target;
  j["levels"] = nlohmann::ordered_json::array();
  for (const auto& l : table.levels) j["levels"].push_back({{"v", l.voltage_v}, {"f_ghz", l.freq_ghz}});
  return j.dump(2);
}

DvfsTable load_dvfs_table(const std::filesystem::path& path) {
  return dvfs_table_from_json(detail::read_text(path));
}

double default_energy_model(const DvfsLevel& level) { return level.voltage_v * level.voltage_v; }

bool feasible(const DvfsLevel& level, double critical_path_ps) {
  return level.period_ps() >= critical_path_ps;
}

DvfsLevel select_level(const DvfsTable& table, double critical_path_ps, const EnergyModel& energy) {
  table.validate();
  const DvfsLevel* best = nullptr;
  double best_e = 0.0;
  for (const DvfsLevel& l : table.levels) {
    if (!feasible(l, critical_path_ps)) continue;
    const double e = energy(l);
    const bool better =
        best == nullptr || e < best_e ||
        (e == best_e && (l.voltage_v < best->voltage_v ||
                         (l.voltage_v == best->voltage_v && l.freq_ghz < best->freq_ghz)));
    if (better) {
      best = &l;
      best_e = e;
    }
  }
  if (best == nullptr) {
    throw Error(ErrorCode::NoFeasibleLevel, "critical path " + std::to_string(critical_path_ps) +
                                                " ps exceeds every level period");
  }
  return *best;
}

std::string to_string(LevelMode mode) {
  return mode == LevelMode::MaxFreq ? "max_freq" : "min_energy";
}

LevelMode level_mode_from_string(const std::string& s) {
  if (s == "max_freq") return LevelMode::MaxFreq;
  if (s == "min_energy") return LevelMode::MinEnergy;
  throw Error(ErrorCode::InvalidArgument, "unknown level mode '" + s + "'");
}

DvfsLevel level_for_class(const DvfsTable& table, const FrequencyClass& cls,
                          const WeightProfile& profile, LevelMode mode, const EnergyModel& energy) {
  if (cls.codebook.empty()) throw Error(ErrorCode::EmptyCodebook, "class " + cls.name + " has no codebook");
  const double cp = codebook_critical_path_ps(profile, cls.codebook);
  if (mode == LevelMode::MinEnergy) return select_level(table, cp, energy);
  table.validate();
  for (auto it = table.levels.rbegin(); it != table.levels.rend(); ++it) {
    if (feasible(*it, cp)) return *it;
  }
  throw Error(ErrorCode::NoFeasibleLevel, "class " + cls.name + " critical path " +
                                              std::to_string(cp) + " ps exceeds every level period");
}

std::size_t DvfsSchedule::tile_count() const {
  std::size_t n = 0;
  for (const auto& g : groups) n += g.tile_ids.size();
  return n;
}

void DvfsSchedule::validate(std::size_t expected_tiles) const {
  std::vector<std::uint8_t> seen(expected_tiles, 0);
  for (const auto& g : groups) {
    for (std::uint32_t t : g.tile_ids) {
      if (t >= expected_tiles) throw Error(ErrorCode::IndexOutOfBounds, "schedule tile id out of range");
      if (seen[t]++) throw Error(ErrorCode::InvalidArgument, "tile scheduled twice");
    }
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw Error(ErrorCode::InvalidArgument, "schedule does not cover every tile");
  }
  if (transition_count != groups.size()) {
    throw Error(ErrorCode::InvalidArgument, "transition count differs from group count");
  }
}

DvfsSchedule build_schedule(const std::vector<std::uint32_t>& tile_class,
                            const std::map<std::uint32_t, DvfsLevel>& class_levels,
                            double transition_time_s, bool include_overlay) {
  if (!(transition_time_s >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "transition time must be nonnegative");
  }
  std::vector<ScheduleGroup> groups;
  auto group_for = [&](const DvfsLevel& level) -> ScheduleGroup& {
    for (auto& g : groups) {
      if (g.level == level) return g;
    }
    groups.push_back({level, {}, {}, false});
    return groups.back();
  };
  auto add_class = [](ScheduleGroup& g, std::uint32_t cls) {
    if (std::find(g.classes.begin(), g.classes.end(), cls) == g.classes.end()) g.classes.push_back(cls);
  };

  for (std::size_t t = 0; t < tile_class.size(); ++t) {
    const auto it = class_levels.find(tile_class[t]);
    if (it == class_levels.end()) {
      throw Error(ErrorCode::UnmappedClass, "tile " + std::to_string(t) + " has unmapped class " +
                                                std::to_string(tile_class[t]));
    }
    ScheduleGroup& g = group_for(it->second);
    add_class(g, tile_class[t]);
    g.tile_ids.push_back(static_cast<std::uint32_t>(t));
  }
  if (include_overlay) {
    const auto it = class_levels.find(kOverlayClass);
    if (it == class_levels.end()) throw Error(ErrorCode::UnmappedClass, "overlay class has no level");
    ScheduleGroup& g = group_for(it->second);
    add_class(g, kOverlayClass);
    g.overlay = true;
  }
  for (auto& g : groups) std::sort(g.classes.begin(), g.classes.end());
  std::sort(groups.begin(), groups.end(), [](const ScheduleGroup& a, const ScheduleGroup& b) {
    if (a.level.freq_ghz != b.level.freq_ghz) return a.level.freq_ghz > b.level.freq_ghz;
    return a.level.voltage_v < b.level.voltage_v;
  });

  DvfsSchedule s;
  s.groups = std::move(groups);
  s.transition_count = s.groups.size();
  s.transition_time_s = transition_time_s;
  s.transition_overhead_s = static_cast<double>(s.transition_count) * transition_time_s;
  return s;
}

std::string schedule_to_json(const DvfsSchedule& schedule) {
  nlohmann::ordered_json j;
  j["schema"] = "halo-schedule-v1";
  j["transition_count"] = schedule.transition_count;
  j["transition_time_s"] = schedule.transition_time_s;
  j["transition_overhead_s"] = schedule.transition_overhead_s;
  auto& groups = j["groups"] = nlohmann::ordered_json::array();
  for (const auto& g : schedule.groups) {
    nlohmann::ordered_json jg;
    jg["v"] = g.level.voltage_v;
    jg["f_ghz"] = g.level.freq_ghz;
    nlohmann::ordered_json classes = nlohmann::ordered_json::array();
    for (std::uint32_t c : g.classes) {
      if (c == kOverlayClass) {
        classes.push_back("overlay");
      } else {
        classes.push_back(c);
      }
    }
    jg["classes"] = std::move(classes);
    jg["overlay"] = g.overlay;
    jg["tile_ids"] = g.tile_ids;
    groups.push_back(std::move(jg));
  }
  return j.dump(1);
}

DvfsSchedule schedule_from_json(const std::string& text) {
  const auto j = detail::parse_json(text, "schedule");
  if (j.value("schema", "") != "halo-schedule-v1") {
    throw Error(ErrorCode::MalformedFile, "schedule schema must be halo-schedule-v1");
  }
  DvfsSchedule s;
  s.transition_time_s = detail::field<double>(j, "transition_time_s", "schedule");
  if (!j.contains("groups") || !j["groups"].is_array()) {
    throw Error(ErrorCode::MalformedFile, "schedule: missing groups array");
  }
  for (const auto& jg : j["groups"]) {
    ScheduleGroup g;
    g.level = {detail::field<double>(jg, "v", "schedule group"),
               detail::field<double>(jg, "f_ghz", "schedule group")};
    if (!(g.level.voltage_v > 0.0) || !(g.level.freq_ghz > 0.0)) {
      throw Error(ErrorCode::MalformedFile, "schedule group level must be positive");
    }
    g.overlay = jg.value("overlay", false);
    if (jg.contains("classes")) {
      for (const auto& c : jg["classes"]) {
        g.classes.push_back(c.is_string() ? kOverlayClass : c.get<std::uint32_t>());
      }
    }
    g.tile_ids = detail::field<std::vector<std::uint32_t>>(jg, "tile_ids", "schedule group");
    s.groups.push_back(std::move(g));
  }
  s.transition_count = s.groups.size();
  s.transition_overhead_s = static_cast<double>(s.transition_count) * s.transition_time_s;
  return s;
}

void save_schedule(const DvfsSchedule& schedule, const std::filesystem::path& path) {
  detail::write_text(path, schedule_to_json(schedule) + "\n");
}

DvfsSchedule load_schedule(const std::filesystem::path& path) {
  return schedule_from_json(detail::read_text(path));
}

}  // namespace halo
