#include "halo/quantizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "halo/error.hpp"

namespace halo {

Codebook build_codebook(const WeightProfile& profile, double target_freq_ghz, std::size_t max_size) {
  if (max_size < 1 || max_size > 256) {
    throw Error(ErrorCode::InvalidArgument, "codebook max_size must lie in [1, 256]");
  }
  std::vector<int> candidates;
  for (int v = WeightProfile::kMinValue; v <= WeightProfile::kMaxValue; ++v) {
    if (profile.max_freq_ghz(v) >= target_freq_ghz) candidates.push_back(v);
  }
  if (candidates.empty()) {
    throw Error(ErrorCode::EmptyCodebook, "no weight value reaches " +
                                              std::to_string(target_freq_ghz) + " GHz");
  }
  std::erase(candidates, 0);
  std::sort(candidates.begin(), candidates.end(), [&](int a, int b) {
    const double fa = profile.max_freq_ghz(a);
    const double fb = profile.max_freq_ghz(b);
    if (fa != fb) return fa > fb;
    if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
    return a > b;
  });
  if (candidates.size() > max_size - 1) candidates.resize(max_size - 1);
  candidates.push_back(0);
  std::sort(candidates.begin(), candidates.end());
  return Codebook(candidates.begin(), candidates.end());
}

std::uint32_t codebook_critical_path_ps(const WeightProfile& profile,
                                        std::span<const std::int8_t> codebook) {
  std::uint32_t worst = 0;
  for (std::int8_t v : codebook) worst = std::max(worst, profile.worst_delay_ps(v));
  return worst;
}

void FrequencyClass::validate(const WeightProfile& profile) const {
  if (codebook.empty()) throw Error(ErrorCode::EmptyCodebook, "class " + name + " has no codebook");
  if (codebook.size() > 256) throw Error(ErrorCode::InvalidArgument, "codebook larger than int8 range");
  if (!std::is_sorted(codebook.begin(), codebook.end()) ||
      std::adjacent_find(codebook.begin(), codebook.end()) != codebook.end()) {
    throw Error(ErrorCode::InvalidArgument, "codebook must be sorted and duplicate-free");
  }
  if (!std::binary_search(codebook.begin(), codebook.end(), std::int8_t{0})) {
    throw Error(ErrorCode::InvalidArgument, "codebook must contain 0");
  }
  if (!(target_freq_ghz > 0.0) || !(voltage_v > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "class frequency and voltage must be positive");
  }
  for (std::int8_t v : codebook) {
    if (profile.max_freq_ghz(v) < target_freq_ghz) {
      throw Error(ErrorCode::InvalidArgument, "codebook value " + std::to_string(v) +
                                                  " misses the class target frequency");
    }
  }
}

double FrequencyClass::bits() const { return std::log2(static_cast<double>(codebook.size())); }

FrequencyClass make_frequency_class(std::uint8_t id, std::string name, const WeightProfile& profile,
                                    double target_freq_ghz, double voltage_v,
                                    std::size_t max_size) {
  FrequencyClass c{id, std::move(name), target_freq_ghz, voltage_v,
                   build_codebook(profile, target_freq_ghz, max_size)};
  c.validate(profile);
  return c;
}

float SparseOverlay::dequantized(std::size_t row, std::size_t k) const {
  return dequantize_value(channel_scales[row], values[k]);
}

void SparseOverlay::validate() const {
  if (row_ptr.size() != rows + 1 || channel_scales.size() != rows) {
    throw Error(ErrorCode::InvalidArgument, "overlay row arrays do not match row count");
  }
  if (row_ptr.front() != 0 || row_ptr.back() != values.size() || col_idx.size() != values.size()) {
    throw Error(ErrorCode::InvalidArgument, "overlay CSR lengths are inconsistent");
  }
  for (std::size_t r = 0; r < rows; ++r) {
    if (row_ptr[r] > row_ptr[r + 1]) throw Error(ErrorCode::InvalidArgument, "row_ptr decreases");
    for (std::uint32_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
      if (col_idx[k] >= cols) throw Error(ErrorCode::IndexOutOfBounds, "overlay column out of range");
      if (k > row_ptr[r] && col_idx[k] <= col_idx[k - 1]) {
        throw Error(ErrorCode::InvalidArgument, "overlay columns not strictly increasing");
      }
      if (values[k] < -127) throw Error(ErrorCode::InvalidArgument, "overlay value outside [-127, 127]");
    }
    if (!(channel_scales[r] > 0.0f) || !std::isfinite(channel_scales[r])) {
      throw Error(ErrorCode::InvalidArgument, "overlay channel scale must be positive");
    }
  }
}

namespace {

// Scales keep 16 significant bits, so scale * code is exact in float32 for
// any int8 code and re-quantizing a dequantized tensor reproduces it.
float round_scale(double ratio) {
  int e = 0;
  const double m = std::frexp(ratio, &e);
  const float s = static_cast<float>(std::ldexp(std::nearbyint(std::ldexp(m, 16)), e - 16));
  return s > 0.0f ? s : std::numeric_limits<float>::min();
}

}  // namespace

SparseOverlay quantize_overlay(const Matrix& weights, const Mask& outlier_mask,
                               const Mask& salient_mask) {
  const std::size_t rows = weights.rows();
  const std::size_t cols = weights.cols();
  for (const Mask* m : {&outlier_mask, &salient_mask}) {
    if (m->rows != rows || m->cols != cols) {
      throw Error(ErrorCode::ShapeMismatch, "overlay mask shape differs from weights");
    }
  }
  SparseOverlay out;
  out.rows = rows;
  out.cols = cols;
  out.row_ptr.assign(rows + 1, 0);
  out.channel_scales.assign(rows, 1.0f);
  for (std::size_t r = 0; r < rows; ++r) {
    float max_abs = 0.0f;
    bool any = false;
    for (std::size_t c = 0; c < cols; ++c) {
      if (outlier_mask(r, c) || salient_mask(r, c)) {
        any = true;
        max_abs = std::max(max_abs, std::abs(weights(r, c)));
      }
    }
    const float scale = any && max_abs > 0.0f
                            ? round_scale(static_cast<double>(max_abs) / 127.0)
                            : 1.0f;
    out.channel_scales[r] = scale;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!(outlier_mask(r, c) || salient_mask(r, c))) continue;
      // nearbyint under the default rounding mode is round-half-even.
      double q = std::nearbyint(static_cast<double>(weights(r, c)) / scale);
      q = std::clamp(q, -127.0, 127.0);
      out.col_idx.push_back(static_cast<std::uint32_t>(c));
      out.values.push_back(static_cast<std::int8_t>(q));
    }
    out.row_ptr[r + 1] = static_cast<std::uint32_t>(out.values.size());
  }
  return out;
}

float tile_scale(std::span<const float> weights, std::span<const std::int8_t> codebook) {
  if (codebook.empty()) throw Error(ErrorCode::EmptyCodebook, "empty codebook");
  const int c_pos = std::max<int>(0, *std::max_element(codebook.begin(), codebook.end()));
  const int c_neg = std::max<int>(0, -*std::min_element(codebook.begin(), codebook.end()));
  const int c_abs = std::max(c_pos, c_neg);
  if (c_abs == 0) return 1.0f;

  float w_pos = 0.0f;
  float w_neg = 0.0f;
  for (float w : weights) {
    if (w > 0.0f) w_pos = std::max(w_pos, w);
    if (w < 0.0f) w_neg = std::max(w_neg, -w);
  }
  // A side without codebook values cannot be represented; fall back to the
  // largest magnitude for it.
  const double ratio_pos = w_pos / static_cast<double>(c_pos > 0 ? c_pos : c_abs);
  const double ratio_neg = w_neg / static_cast<double>(c_neg > 0 ? c_neg : c_abs);
  const double ratio = std::max(ratio_pos, ratio_neg);
  if (ratio == 0.0) return 1.0f;
  return round_scale(ratio);
}

std::uint8_t nearest_codebook_index(double x, std::span<const std::int8_t> codebook) {
  // Codebooks are sorted ascending: the first strictly-closer entry wins, so
  // equal distances resolve to the smaller value.
  std::size_t best = 0;
  double best_dist = std::abs(x - codebook[0]);
  for (std::size_t i = 1; i < codebook.size(); ++i) {
    const double d = std::abs(x - codebook[i]);
    if (d < best_dist) {
      best = i;
      best_dist = d;
    }
  }
  return static_cast<std::uint8_t>(best);
}

TileQuantization quantize_tile(std::span<const float> weights,
                               std::span<const std::int8_t> codebook) {
  TileQuantization out;
  out.scale = tile_scale(weights, codebook);
  out.indices.resize(weights.size());
  const double s = out.scale;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    out.indices[i] = nearest_codebook_index(weights[i] / s, codebook);
  }
  return out;
}

std::size_t QuantizedModel::tile_weight_count(std::size_t tile) const {
  const std::size_t gr = tile / grid_cols;
  const std::size_t gc = tile % grid_cols;
  const std::size_t r = std::min(tile_rows, rows - gr * tile_rows);
  const std::size_t c = std::min(tile_cols, cols - gc * tile_cols);
  return r * c;
}

void QuantizedModel::validate() const {
  if (rows == 0 || cols == 0 || tile_rows == 0 || tile_cols == 0) {
    throw Error(ErrorCode::InvalidArgument, "model dimensions must be positive");
  }
  if (grid_rows != (rows + tile_rows - 1) / tile_rows ||
      grid_cols != (cols + tile_cols - 1) / tile_cols) {
    throw Error(ErrorCode::InvalidArgument, "tile grid does not cover the matrix");
  }
  if (tile_class.size() != tile_count() || tile_scale.size() != tile_count() ||
      indices.size() != tile_count() * tile_area()) {
    throw Error(ErrorCode::InvalidArgument, "tile arrays have the wrong length");
  }
  for (std::size_t i = 0; i < classes.size(); ++i) {
    if (classes[i].id != i) throw Error(ErrorCode::InvalidArgument, "class ids must be 0..n-1");
    if (classes[i].codebook.empty()) throw Error(ErrorCode::EmptyCodebook, "class without codebook");
  }
  for (std::size_t t = 0; t < tile_count(); ++t) {
    if (tile_class[t] >= classes.size()) {
      throw Error(ErrorCode::InvalidArgument, "tile refers to an undeclared class");
    }
    const std::size_t n = classes[tile_class[t]].codebook.size();
    for (std::size_t k = 0; k < tile_area(); ++k) {
      if (indices[t * tile_area() + k] >= n) {
        throw Error(ErrorCode::IndexOutOfBounds, "codebook index out of range");
      }
    }
  }
  if (overlay.rows != rows || overlay.cols != cols) {
    throw Error(ErrorCode::ShapeMismatch, "overlay shape differs from model");
  }
  overlay.validate();
}

QuantizerConfig default_quantizer_config(const WeightProfile& profile) {
  QuantizerConfig cfg;
  cfg.low_class = make_frequency_class(0, "low", profile, 3.7, 1.2, 9);
  cfg.high_class = make_frequency_class(1, "high", profile, 2.4, 1.1, 16);
  return cfg;
}

namespace {

// Quantizes every tile of `normal` (padded with zeros) with the codebook of
// its class.
void quantize_tiles(const Matrix& normal, QuantizedModel& model) {
  const std::size_t area = model.tile_area();
  model.tile_scale.assign(model.tile_count(), 1.0f);
  model.indices.assign(model.tile_count() * area, 0);
  std::vector<float> buffer(area);
  for (std::size_t t = 0; t < model.tile_count(); ++t) {
    const std::size_t r0 = (t / model.grid_cols) * model.tile_rows;
    const std::size_t c0 = (t % model.grid_cols) * model.tile_cols;
    std::fill(buffer.begin(), buffer.end(), 0.0f);
    for (std::size_t r = 0; r < model.tile_rows && r0 + r < model.rows; ++r) {
      for (std::size_t c = 0; c < model.tile_cols && c0 + c < model.cols; ++c) {
        buffer[r * model.tile_cols + c] = normal(r0 + r, c0 + c);
      }
    }
    const Codebook& cb = model.classes[model.tile_class[t]].codebook;
    TileQuantization q = quantize_tile(buffer, cb);
    model.tile_scale[t] = q.scale;
    std::copy(q.indices.begin(), q.indices.end(), model.indices.begin() + static_cast<std::ptrdiff_t>(t * area));
  }
}

void init_geometry(QuantizedModel& m, const Matrix& w, std::size_t tr, std::size_t tc) {
  if (tr == 0 || tc == 0) throw Error(ErrorCode::InvalidArgument, "tile dimensions must be positive");
  if (w.empty()) throw Error(ErrorCode::InvalidArgument, "empty weight matrix");
  m.rows = w.rows();
  m.cols = w.cols();
  m.tile_rows = tr;
  m.tile_cols = tc;
  m.grid_rows = (m.rows + tr - 1) / tr;
  m.grid_cols = (m.cols + tc - 1) / tc;
}

}  // namespace

QuantizedModel quantize_model(const Matrix& weights, const Matrix& gradient,
                              const QuantizerConfig& config, const WeightProfile& profile,
                              QuantizationDetail* detail, std::string name) {
  if (!weights.same_shape(gradient)) {
    throw Error(ErrorCode::ShapeMismatch, "weights and gradient shapes differ");
  }
  if (!weights.all_finite()) throw Error(ErrorCode::NonFinite, "weights have non-finite values");
  if (!(config.overlay_cap > 0.0 && config.overlay_cap < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "overlay cap must lie in (0, 1)");
  }
  config.low_class.validate(profile);
  config.high_class.validate(profile);

  QuantizedModel model;
  model.name = std::move(name);
  init_geometry(model, weights, config.tile_rows, config.tile_cols);
  model.classes = {config.low_class, config.high_class};
  model.classes[0].id = 0;
  model.classes[1].id = 1;
  model.profile_digest = profile.digest();

  const Matrix fisher = fisher_sensitivity(gradient);

  // Outliers first, salient weights from the remaining positions.
  OutlierSplit outliers = extract_outliers(weights);
  const std::size_t n = weights.size();
  const auto cap_count = static_cast<std::size_t>(std::ceil(config.overlay_cap * static_cast<double>(n)));
  const std::size_t n_outliers = outliers.mask.count();
  const std::size_t salient_budget = cap_count > n_outliers ? cap_count - n_outliers : 0;
  Mask salient(weights.rows(), weights.cols());
  if (salient_budget > 0) {
    salient = extract_salient(weights, fisher, config.salient_fraction, &outliers.mask, salient_budget);
    // Zero-sensitivity positions are never salient.
    auto f = fisher.data();
    for (std::size_t i = 0; i < n; ++i) {
      if (f[i] == 0.0f) salient.bits[i] = 0;
    }
  }

  model.overlay = quantize_overlay(weights, outliers.mask, salient);

  Matrix normal = outliers.without_outliers;
  auto nd = normal.data();
  for (std::size_t i = 0; i < n; ++i) {
    if (salient.bits[i]) nd[i] = 0.0f;
  }

  TileGrid grid = tile_sensitivities(gradient, config.tile_rows, config.tile_cols);
  AdaptiveSplit split = compute_adaptive_k(grid.sensitivities, config.retention);
  model.tile_class.resize(grid.tile_count());
  for (std::size_t t = 0; t < grid.tile_count(); ++t) {
    model.tile_class[t] = static_cast<std::uint8_t>(split.classes[t]);
  }

  quantize_tiles(normal, model);

  if (detail) {
    detail->masks.outlier_mask = std::move(outliers.mask);
    detail->masks.salient_mask = std::move(salient);
    detail->masks.tile_class = split.classes;
    detail->masks.k_fraction = split.k_fraction;
    detail->grid = std::move(grid);
    detail->overlay_cap_exceeded = n_outliers > cap_count;
  }
  return model;
}

Matrix dequantize(const QuantizedModel& model) {
  Matrix out(model.rows, model.cols);
  const std::size_t area = model.tile_area();
  for (std::size_t t = 0; t < model.tile_count(); ++t) {
    const std::size_t r0 = (t / model.grid_cols) * model.tile_rows;
    const std::size_t c0 = (t % model.grid_cols) * model.tile_cols;
    const Codebook& cb = model.classes[model.tile_class[t]].codebook;
    const float s = model.tile_scale[t];
    for (std::size_t r = 0; r < model.tile_rows && r0 + r < model.rows; ++r) {
      for (std::size_t c = 0; c < model.tile_cols && c0 + c < model.cols; ++c) {
        out(r0 + r, c0 + c) = dequantize_value(s, cb[model.indices[t * area + r * model.tile_cols + c]]);
      }
    }
  }
  const SparseOverlay& ov = model.overlay;
  for (std::size_t r = 0; r < ov.rows; ++r) {
    for (std::uint32_t k = ov.row_ptr[r]; k < ov.row_ptr[r + 1]; ++k) {
      out(r, ov.col_idx[k]) = ov.dequantized(r, k);
    }
  }
  return out;
}

QuantizedModel quantize_uniform(const Matrix& weights, std::size_t tile_rows, std::size_t tile_cols,
                                int bits, const WeightProfile& profile, std::string name) {
  if (bits < 2 || bits > 8) throw Error(ErrorCode::InvalidArgument, "uniform bits must lie in [2, 8]");
  if (!weights.all_finite()) throw Error(ErrorCode::NonFinite, "weights have non-finite values");
  const int qmax = (1 << (bits - 1)) - 1;
  FrequencyClass cls;
  cls.id = 0;
  cls.name = "w" + std::to_string(bits);
  for (int v = -qmax; v <= qmax; ++v) cls.codebook.push_back(static_cast<std::int8_t>(v));
  cls.target_freq_ghz = 1000.0 / codebook_critical_path_ps(profile, cls.codebook);
  cls.voltage_v = 1.0;

  QuantizedModel model;
  model.name = std::move(name);
  init_geometry(model, weights, tile_rows, tile_cols);
  model.classes = {std::move(cls)};
  model.tile_class.assign(model.tile_count(), 0);
  model.profile_digest = profile.digest();
  model.overlay.rows = model.rows;
  model.overlay.cols = model.cols;
  model.overlay.row_ptr.assign(model.rows + 1, 0);
  model.overlay.channel_scales.assign(model.rows, 1.0f);
  quantize_tiles(weights, model);
  return model;
}

double effective_bitwidth(const QuantizedModel& model) {
  const std::span<const QuantizedModel> one(&model, 1);
  return effective_bitwidth(one);
}

double effective_bitwidth(std::span<const QuantizedModel> models) {
  double weighted = 0.0;
  double params = 0.0;
  for (const QuantizedModel& m : models) {
    for (std::size_t t = 0; t < m.tile_count(); ++t) {
      weighted += m.classes[m.tile_class[t]].bits() * static_cast<double>(m.tile_weight_count(t));
    }
    const SparseOverlay& ov = m.overlay;
    for (std::size_t r = 0; r < ov.rows; ++r) {
      for (std::uint32_t k = ov.row_ptr[r]; k < ov.row_ptr[r + 1]; ++k) {
        const std::size_t tile = (r / m.tile_rows) * m.grid_cols + ov.col_idx[k] / m.tile_cols;
        weighted += 8.0 - m.classes[m.tile_class[tile]].bits();
      }
    }
    params += static_cast<double>(m.parameter_count());
  }
  return params > 0.0 ? weighted / params : 0.0;
}

double fisher_weighted_error(const Matrix& weights, const Matrix& reconstructed,
                             const Matrix& fisher) {
  if (!weights.same_shape(reconstructed) || !weights.same_shape(fisher)) {
    throw Error(ErrorCode::ShapeMismatch, "error operands differ in shape");
  }
  auto w = weights.data();
  auto q = reconstructed.data();
  auto f = fisher.data();
  double sum = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double d = static_cast<double>(w[i]) - q[i];
    sum += static_cast<double>(f[i]) * d * d;
  }
  return sum;
}

}  // namespace halo
