#pragma once

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "halo/matrix.hpp"

namespace halo {

// Diagonal Fisher approximation: elementwise g^2.
Matrix fisher_sensitivity(const Matrix& gradient);

// Mean of g_d * g_d over calibration-sample gradients of identical shape.
Matrix fisher_sensitivity(std::span<const Matrix> sample_gradients);

struct OutlierSplit {
  Mask mask;
  Matrix without_outliers;  // outlier positions zeroed
  double mean = 0.0;
  double stddev = 0.0;  // population
};

// 3-sigma rule over the whole matrix: |w - mean| > 3 * stddev.
OutlierSplit extract_outliers(const Matrix& weights);

// Selects ceil(fraction * N) positions with the largest sensitivity, ties to
// the lower row-major index. Positions set in `excluded` are never chosen;
// at most `max_count` positions are returned.
Mask extract_salient(const Matrix& weights, const Matrix& sensitivity, double fraction,
                     const Mask* excluded = nullptr,
                     std::size_t max_count = std::numeric_limits<std::size_t>::max());

// Per-tile mean of squared gradients over a zero-padded grid. The divisor is
// always the nominal tile area, so padded boundary tiles are down-weighted.
struct TileGrid {
  std::size_t tile_rows = 0;
  std::size_t tile_cols = 0;
  std::size_t grid_rows = 0;
  std::size_t grid_cols = 0;
  std::vector<double> sensitivities;  // row-major over the grid

  std::size_t tile_count() const noexcept { return grid_rows * grid_cols; }
  double at(std::size_t gr, std::size_t gc) const { return sensitivities[gr * grid_cols + gc]; }
};

TileGrid tile_sensitivities(const Matrix& gradient, std::size_t tile_rows, std::size_t tile_cols);

// Same grid computed from a precomputed Fisher field instead of raw gradients.
TileGrid tile_sensitivities_from_fisher(const Matrix& fisher, std::size_t tile_rows,
                                        std::size_t tile_cols);

enum class TileClass : std::uint8_t { Low = 0, High = 1 };

struct AdaptiveSplit {
  double k_fraction = 1.0;  // fraction of tiles classified LOW
  std::size_t high_count = 0;
  std::vector<TileClass> classes;  // indexed like the input scores
};

// HIGH = the shortest prefix of tiles sorted by descending score (ties by
// index) whose cumulative score reaches retention * total. All-zero scores
// classify every tile LOW.
AdaptiveSplit compute_adaptive_k(std::span<const double> scores, double retention);

struct SensitivityMasks {
  Mask outlier_mask;
  Mask salient_mask;
  std::vector<TileClass> tile_class;
  double k_fraction = 1.0;
};

}  // namespace halo
