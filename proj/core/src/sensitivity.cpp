#include "halo/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "halo/error.hpp"

namespace halo {

namespace {

void require_finite(const Matrix& m, const char* what) {
  if (!m.all_finite()) throw Error(ErrorCode::NonFinite, std::string(what) + " has non-finite values");
}

}  // namespace

Matrix fisher_sensitivity(const Matrix& gradient) {
  require_finite(gradient, "gradient");
  Matrix out(gradient.rows(), gradient.cols());
  auto src = gradient.data();
  auto dst = out.data();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = src[i] * src[i];
  return out;
}

Matrix fisher_sensitivity(std::span<const Matrix> sample_gradients) {
  if (sample_gradients.empty()) {
    throw Error(ErrorCode::InvalidArgument, "need at least one sample gradient");
  }
  const Matrix& first = sample_gradients.front();
  std::vector<double> acc(first.size(), 0.0);
  for (const Matrix& g : sample_gradients) {
    if (!g.same_shape(first)) throw Error(ErrorCode::ShapeMismatch, "sample gradient shapes differ");
    require_finite(g, "gradient");
    auto d = g.data();
    for (std::size_t i = 0; i < d.size(); ++i) acc[i] += static_cast<double>(d[i]) * d[i];
  }
  Matrix out(first.rows(), first.cols());
  const double n = static_cast<double>(sample_gradients.size());
  auto dst = out.data();
  for (std::size_t i = 0; i < acc.size(); ++i) dst[i] = static_cast<float>(acc[i] / n);
  return out;
}

OutlierSplit extract_outliers(const Matrix& weights) {
  if (weights.size() < 2) throw Error(ErrorCode::InvalidArgument, "need at least two weights");
  require_finite(weights, "weights");
  auto w = weights.data();
  double sum = 0.0;
  for (float v : w) sum += v;
  const double mean = sum / static_cast<double>(w.size());
  double sq = 0.0;
  for (float v : w) sq += (v - mean) * (v - mean);
  const double stddev = std::sqrt(sq / static_cast<double>(w.size()));

  OutlierSplit out{Mask(weights.rows(), weights.cols()), weights, mean, stddev};
  if (stddev == 0.0) return out;
  const double limit = 3.0 * stddev;
  auto dst = out.without_outliers.data();
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (std::abs(w[i] - mean) > limit) {
      out.mask.bits[i] = 1;
      dst[i] = 0.0f;
    }
  }
  return out;
}

Mask extract_salient(const Matrix& weights, const Matrix& sensitivity, double fraction,
                     const Mask* excluded, std::size_t max_count) {
  if (!weights.same_shape(sensitivity)) {
    throw Error(ErrorCode::ShapeMismatch, "sensitivity shape differs from weights");
  }
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "salient fraction must lie in (0, 1)");
  }
  if (excluded && (excluded->rows != weights.rows() || excluded->cols != weights.cols())) {
    throw Error(ErrorCode::ShapeMismatch, "exclusion mask shape differs from weights");
  }
  require_finite(sensitivity, "sensitivity");

  const std::size_t n = weights.size();
  std::size_t want = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n)));
  want = std::min({want, n, max_count});

  auto lambda = sensitivity.data();
  std::vector<std::uint32_t> candidates;
  candidates.reserve(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    if (!excluded || !excluded->bits[i]) candidates.push_back(i);
  }
  want = std::min(want, candidates.size());
  auto better = [&](std::uint32_t a, std::uint32_t b) {
    if (lambda[a] != lambda[b]) return lambda[a] > lambda[b];
    return a < b;
  };
  std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(want),
                    candidates.end(), better);

  Mask mask(weights.rows(), weights.cols());
  for (std::size_t i = 0; i < want; ++i) mask.bits[candidates[i]] = 1;
  return mask;
}

namespace {

template <typename CellFn>
TileGrid tile_grid(std::size_t rows, std::size_t cols, std::size_t tile_rows,
                   std::size_t tile_cols, CellFn cell) {
  if (tile_rows == 0 || tile_cols == 0) {
    throw Error(ErrorCode::InvalidArgument, "tile dimensions must be positive");
  }
  TileGrid grid;
  grid.tile_rows = tile_rows;
  grid.tile_cols = tile_cols;
  grid.grid_rows = (rows + tile_rows - 1) / tile_rows;
  grid.grid_cols = (cols + tile_cols - 1) / tile_cols;
  grid.sensitivities.assign(grid.tile_count(), 0.0);
  const double area = static_cast<double>(tile_rows) * static_cast<double>(tile_cols);
  for (std::size_t gr = 0; gr < grid.grid_rows; ++gr) {
    for (std::size_t gc = 0; gc < grid.grid_cols; ++gc) {
      double sum = 0.0;
      const std::size_t r_end = std::min(rows, (gr + 1) * tile_rows);
      const std::size_t c_end = std::min(cols, (gc + 1) * tile_cols);
      for (std::size_t r = gr * tile_rows; r < r_end; ++r) {
        for (std::size_t c = gc * tile_cols; c < c_end; ++c) sum += cell(r, c);
      }
      grid.sensitivities[gr * grid.grid_cols + gc] = sum / area;
    }
  }
  return grid;
}

}  // namespace

TileGrid tile_sensitivities(const Matrix& gradient, std::size_t tile_rows, std::size_t tile_cols) {
  require_finite(gradient, "gradient");
  return tile_grid(gradient.rows(), gradient.cols(), tile_rows, tile_cols,
                   [&](std::size_t r, std::size_t c) {
                     const double g = gradient(r, c);
                     return g * g;
                   });
}

TileGrid tile_sensitivities_from_fisher(const Matrix& fisher, std::size_t tile_rows,
                                        std::size_t tile_cols) {
  require_finite(fisher, "fisher field");
  return tile_grid(fisher.rows(), fisher.cols(), tile_rows, tile_cols,
                   [&](std::size_t r, std::size_t c) { return static_cast<double>(fisher(r, c)); });
}

AdaptiveSplit compute_adaptive_k(std::span<const double> scores, double retention) {
  if (scores.empty()) throw Error(ErrorCode::InvalidArgument, "no tiles to classify");
  if (!(retention > 0.0 && retention <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "retention must lie in (0, 1]");
  }
  for (double s : scores) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw Error(ErrorCode::InvalidArgument, "tile sensitivities must be finite and nonnegative");
    }
  }
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

  // The total is summed in the same order as the prefix so that a full
  // prefix reproduces it exactly.
  double total = 0.0;
  for (std::size_t i : order) total += scores[i];

  AdaptiveSplit split;
  split.classes.assign(n, TileClass::Low);
  if (total == 0.0) return split;

  const double threshold = retention * total;
  double cumulative = 0.0;
  std::size_t m = n;
  for (std::size_t p = 0; p < n; ++p) {
    cumulative += scores[order[p]];
    if (cumulative >= threshold) {
      m = p + 1;
      break;
    }
  }
  for (std::size_t p = 0; p < m; ++p) split.classes[order[p]] = TileClass::High;
  split.high_count = m;
  split.k_fraction = static_cast<double>(n - m) / static_cast<double>(n);
  return split;
}

}  // namespace halo
