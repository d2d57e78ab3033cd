#include "halo/profile.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

#include <json.hpp>

#include "halo/digest.hpp"
#include "halo/error.hpp"

namespace halo {

std::size_t WeightProfile::index(int v) {
  if (v < kMinValue || v > kMaxValue) {
    throw Error(ErrorCode::InvalidArgument, "weight value outside int8 range");
  }
  return static_cast<std::size_t>(v - kMinValue);
}

void WeightProfile::set(int v, std::uint32_t delay_ps, double energy) {
  if (delay_ps == 0) throw Error(ErrorCode::InvalidArgument, "delay must be positive");
  if (!(energy >= 0.0) || !std::isfinite(energy)) {
    throw Error(ErrorCode::InvalidArgument, "energy must be finite and nonnegative");
  }
  ProfileEntry& e = entries_[index(v)];
  e.worst_delay_ps = delay_ps;
  e.max_freq_ghz = 1000.0 / static_cast<double>(delay_ps);
  e.mean_switch_energy = energy;
}

std::uint32_t WeightProfile::global_worst_delay_ps() const {
  std::uint32_t worst = 0;
  for (const auto& e : entries_) worst = std::max(worst, e.worst_delay_ps);
  return worst;
}

double WeightProfile::max_energy() const {
  double m = 0.0;
  for (const auto& e : entries_) m = std::max(m, e.mean_switch_energy);
  return m;
}

std::string WeightProfile::digest() const {
  Fnv1a h;
  for (const auto& e : entries_) {
    h.update_u32(e.worst_delay_ps);
    h.update_f64(e.mean_switch_energy);
  }
  return h.hex();
}

bool operator==(const WeightProfile& a, const WeightProfile& b) {
  for (std::size_t i = 0; i < WeightProfile::kSize; ++i) {
    const auto& x = a.entries_[i];
    const auto& y = b.entries_[i];
    if (x.worst_delay_ps != y.worst_delay_ps || x.max_freq_ghz != y.max_freq_ghz ||
        x.mean_switch_energy != y.mean_switch_energy) {
      return false;
    }
  }
  return true;
}

WeightProfile calibrate_profile(const WeightProfile& raw, const CalibrationAnchors& anchors) {
  if (anchors.fast_rank < 1 || anchors.fast_rank > WeightProfile::kSize ||
      !(anchors.fast_delay_ps > 0.0) || !(anchors.slow_delay_ps > anchors.fast_delay_ps)) {
    throw Error(ErrorCode::InvalidArgument, "calibration anchors need 0 < fast < slow");
  }
  std::vector<std::uint32_t> sorted;
  for (const auto& e : raw.entries()) sorted.push_back(e.worst_delay_ps);
  std::sort(sorted.begin(), sorted.end());
  const double d_fast = sorted[anchors.fast_rank - 1];
  const double d_max = sorted.back();

  WeightProfile out;
  for (int v = WeightProfile::kMinValue; v <= WeightProfile::kMaxValue; ++v) {
    const double d = raw.worst_delay_ps(v);
    double ps;
    if (d <= d_fast) {
      ps = d * anchors.fast_delay_ps / d_fast;
    } else {
      ps = anchors.fast_delay_ps +
           (d - d_fast) * (anchors.slow_delay_ps - anchors.fast_delay_ps) / (d_max - d_fast);
    }
    const auto rounded = static_cast<std::uint32_t>(std::max(1.0, std::round(ps)));
    out.set(v, rounded, raw.energy(v));
  }
  return out;
}

std::string profile_to_json(const WeightProfile& profile) {
  nlohmann::ordered_json j;
  j["schema"] = "halo-profile-v1";
  auto& entries = j["entries"] = nlohmann::ordered_json::array();
  for (int v = WeightProfile::kMinValue; v <= WeightProfile::kMaxValue; ++v) {
    nlohmann::ordered_json e;
    e["value"] = v;
    e["delay_ps"] = profile.worst_delay_ps(v);
    e["energy"] = profile.energy(v);
    entries.push_back(std::move(e));
  }
  return j.dump(1);
}

WeightProfile profile_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::MalformedFile, std::string("profile is not valid JSON: ") + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != "halo-profile-v1") {
    throw Error(ErrorCode::MalformedFile, "profile schema must be halo-profile-v1");
  }
  if (!j.contains("entries") || !j["entries"].is_array()) {
    throw Error(ErrorCode::MalformedFile, "profile has no entries array");
  }
  const auto& entries = j["entries"];
  if (entries.size() != WeightProfile::kSize) {
    throw Error(ErrorCode::IncompleteProfile, "incomplete profile: expected 256 entries, got " +
                                                  std::to_string(entries.size()));
  }
  WeightProfile profile;
  std::vector<bool> seen(WeightProfile::kSize, false);
  for (const auto& e : entries) {
    if (!e.is_object() || !e.contains("value") || !e.contains("delay_ps") ||
        !e.contains("energy") || !e["value"].is_number_integer() ||
        !e["delay_ps"].is_number() || !e["energy"].is_number()) {
      throw Error(ErrorCode::MalformedFile, "profile entry needs integer value, delay_ps, energy");
    }
    const auto v = e["value"].get<std::int64_t>();
    if (v < WeightProfile::kMinValue || v > WeightProfile::kMaxValue) {
      throw Error(ErrorCode::MalformedFile, "profile value outside int8 range");
    }
    if (seen[static_cast<std::size_t>(v + 128)]) {
      throw Error(ErrorCode::IncompleteProfile, "incomplete profile: duplicate value " +
                                                    std::to_string(v));
    }
    seen[static_cast<std::size_t>(v + 128)] = true;
    const double delay = e["delay_ps"].get<double>();
    if (!(delay > 0.0) || delay != std::floor(delay) || delay > 4.0e9) {
      throw Error(ErrorCode::MalformedFile, "delay_ps must be a positive integer");
    }
    const double energy = e["energy"].get<double>();
    if (!(energy >= 0.0) || !std::isfinite(energy)) {
      throw Error(ErrorCode::MalformedFile, "energy must be finite and nonnegative");
    }
    profile.set(static_cast<int>(v), static_cast<std::uint32_t>(delay), energy);
  }
  return profile;
}

void save_profile(const WeightProfile& profile, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << profile_to_json(profile) << '\n';
  if (!out) throw Error(ErrorCode::Io, "failed writing " + path.string());
}

WeightProfile load_profile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return profile_from_json(ss.str());
}

}  // namespace halo
