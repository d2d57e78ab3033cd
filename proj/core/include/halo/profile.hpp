#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

namespace halo {

struct ProfileEntry {
  std::uint32_t worst_delay_ps = 1;
  double max_freq_ghz = 1000.0;
  double mean_switch_energy = 0.0;
};

// Timing and energy of the MAC for every signed 8-bit weight value.
class WeightProfile {
 public:
  static constexpr int kMinValue = -128;
  static constexpr int kMaxValue = 127;
  static constexpr std::size_t kSize = 256;

  WeightProfile() = default;

  // Sets delay (and the derived frequency) and energy for value v.
  void set(int v, std::uint32_t delay_ps, double energy);

  const ProfileEntry& operator[](int v) const { return entries_[index(v)]; }
  std::uint32_t worst_delay_ps(int v) const { return entries_[index(v)].worst_delay_ps; }
  double max_freq_ghz(int v) const { return entries_[index(v)].max_freq_ghz; }
  double energy(int v) const { return entries_[index(v)].mean_switch_energy; }

  std::uint32_t global_worst_delay_ps() const;
  double max_energy() const;

  const std::array<ProfileEntry, kSize>& entries() const noexcept { return entries_; }

  // Stable 64-bit FNV-1a digest of the serialized entries, hex encoded.
  std::string digest() const;

  friend bool operator==(const WeightProfile& a, const WeightProfile& b);

 private:
  static std::size_t index(int v);
  std::array<ProfileEntry, kSize> entries_{};
};

// Maps characterized delays onto picoseconds of a target process with a
// monotone two-segment linear curve: [0, d_fast] -> [0, fast_ps] and
// [d_fast, d_max] -> [fast_ps, slow_ps], where d_fast is the delay of the
// fast_rank-th fastest value and d_max the global worst delay. Energies are
// unchanged. Ordering of delays is preserved.
struct CalibrationAnchors {
  std::size_t fast_rank = 9;
  double fast_delay_ps = 265.0;
  double slow_delay_ps = 522.0;
};

WeightProfile calibrate_profile(const WeightProfile& raw, const CalibrationAnchors& anchors = {});

// Schema "halo-profile-v1".
void save_profile(const WeightProfile& profile, const std::filesystem::path& path);
WeightProfile load_profile(const std::filesystem::path& path);
std::string profile_to_json(const WeightProfile& profile);
WeightProfile profile_from_json(const std::string& text);

// Calibrated profile of the default MAC netlist under exhaustive
// characterization, shipped with the library so the pipeline does not need
// to re-run the gate-level sweep.
const WeightProfile& default_profile();
// The same sweep before calibration (unit gate delays).
const WeightProfile& default_raw_profile();

}  // namespace halo
