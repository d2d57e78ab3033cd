#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "halo/matrix.hpp"
#include "halo/profile.hpp"
#include "halo/sensitivity.hpp"

namespace halo {

using Codebook = std::vector<std::int8_t>;

// {v : max_freq(v) >= target} plus 0, truncated to max_size by keeping 0 and
// the fastest values (ties: smaller |v|, then positive first). Sorted ascending.
Codebook build_codebook(const WeightProfile& profile, double target_freq_ghz,
                        std::size_t max_size = 256);

// Worst MAC delay over the values of a codebook.
std::uint32_t codebook_critical_path_ps(const WeightProfile& profile, std::span<const std::int8_t> codebook);

struct FrequencyClass {
  std::uint8_t id = 0;
  std::string name;
  double target_freq_ghz = 1.0;
  double voltage_v = 1.0;
  Codebook codebook;

  // Throws unless the codebook is sorted, duplicate-free, contains 0 and every
  // value meets the class target on `profile`.
  void validate(const WeightProfile& profile) const;
  double bits() const;
  friend bool operator==(const FrequencyClass&, const FrequencyClass&) = default;
};

FrequencyClass make_frequency_class(std::uint8_t id, std::string name, const WeightProfile& profile,
                                    double target_freq_ghz, double voltage_v,
                                    std::size_t max_size);

// Hypersparse CSR overlay for outlier and salient weights, per-row scales.
struct SparseOverlay {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<std::uint32_t> row_ptr;  // rows + 1
  std::vector<std::uint32_t> col_idx;
  std::vector<std::int8_t> values;
  std::vector<float> channel_scales;  // rows

  std::size_t nnz() const noexcept { return values.size(); }
  float dequantized(std::size_t row, std::size_t k) const;
  void validate() const;

  friend bool operator==(const SparseOverlay&, const SparseOverlay&) = default;
};

// Per output channel: scale = max|w| / 127 over masked entries (1 if none),
// rounded to 16 significant bits;
// stored value = round-half-even(w / scale) clamped to [-127, 127].
SparseOverlay quantize_overlay(const Matrix& weights, const Mask& outlier_mask,
                               const Mask& salient_mask);

struct TileQuantization {
  std::vector<std::uint8_t> indices;
  float scale = 1.0f;
};

// Sign-aware max-abs scale: the most positive weight fits the largest
// codebook value and the most negative weight the smallest. For a symmetric
// codebook this is max|w| / max|c|. The ratio is rounded to 16 significant
// bits. Returns 1 for an all-zero tile.
float tile_scale(std::span<const float> weights, std::span<const std::int8_t> codebook);

// Index of the codebook entry nearest to x (ties to the smaller value).
std::uint8_t nearest_codebook_index(double x, std::span<const std::int8_t> codebook);

TileQuantization quantize_tile(std::span<const float> weights, std::span<const std::int8_t> codebook);

inline float dequantize_value(float scale, std::int8_t q) {
  return static_cast<float>(static_cast<double>(scale) * q);
}

// Tile-quantized weight matrix with a sparse overlay.
//
// Dense data is stored tile-major (grid row-major), row-major inside each
// tile, including the zero padding of boundary tiles.
struct QuantizedModel {
  std::string name;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::size_t tile_rows = 0;
  std::size_t tile_cols = 0;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::vector<FrequencyClass> classes;     // indexed by class id
  std::vector<std::uint8_t> tile_class;    // per tile
  std::vector<float> tile_scale;           // per tile
  std::vector<std::uint8_t> indices;       // per padded weight
  SparseOverlay overlay;
  std::string profile_digest;

  std::size_t tile_count() const noexcept { return grid_rows * grid_cols; }
  std::size_t tile_area() const noexcept { return tile_rows * tile_cols; }
  std::size_t parameter_count() const noexcept { return rows * cols; }

  std::int8_t tile_value(std::size_t tile, std::size_t offset) const {
    return classes[tile_class[tile]].codebook[indices[tile * tile_area() + offset]];
  }
  // Number of real (unpadded) weights in a tile.
  std::size_t tile_weight_count(std::size_t tile) const;

  void validate() const;
  friend bool operator==(const QuantizedModel&, const QuantizedModel&) = default;
};

struct QuantizerConfig {
  std::size_t tile_rows = 128;
  std::size_t tile_cols = 128;
  double retention = 0.95;
  double salient_fraction = 0.0005;
  double overlay_cap = 0.005;  // max fraction of outliers + salient weights
  // Class 0 quantizes LOW tiles, class 1 HIGH tiles.
  FrequencyClass low_class;
  FrequencyClass high_class;
};

// Classes for the defaults: LOW = 9 values meeting 3.7 GHz at 1.2 V, HIGH =
// 16 values meeting 2.4 GHz at 1.1 V.
QuantizerConfig default_quantizer_config(const WeightProfile& profile);

struct QuantizationDetail {
  SensitivityMasks masks;
  TileGrid grid;
  bool overlay_cap_exceeded = false;  // outliers alone exceed the cap
};

QuantizedModel quantize_model(const Matrix& weights, const Matrix& gradient,
                              const QuantizerConfig& config, const WeightProfile& profile,
                              QuantizationDetail* detail = nullptr, std::string name = "layer");

// Dense reconstruction; overlay entries overwrite their coordinates.
Matrix dequantize(const QuantizedModel& model);

// Uniform symmetric int8 model (codebook [-127, 127] for bits = 8), per-tile
// scales, no overlay. Used as the W8A8/W4A8/W3A8 baseline.
QuantizedModel quantize_uniform(const Matrix& weights, std::size_t tile_rows, std::size_t tile_cols,
                                int bits, const WeightProfile& profile,
                                std::string name = "layer");

// Parameter-weighted average of log2|codebook| (8 bits for overlay entries).
double effective_bitwidth(const QuantizedModel& model);
double effective_bitwidth(std::span<const QuantizedModel> models);

// sum(lambda * (w - w_hat)^2).
double fisher_weighted_error(const Matrix& weights, const Matrix& reconstructed,
                             const Matrix& fisher);

}  // namespace halo
