#pragma once

#include <filesystem>
#include <span>
#include <vector>

#include "halo/quantizer.hpp"

namespace halo {

// Model directory:
//   manifest.json         schema "halo-model-v1": shape, tiling, classes, digests
//   tiles.i8              int8 weight values, tile-major, padded
//   tile_classes.u8       class id per tile
//   scales.f32            per-tile scale, little-endian
//   overlay_row_ptr.bin   uint32 LE, rows + 1
//   overlay_col_idx.bin   uint32 LE, nnz
//   overlay_values.bin    int8, nnz
//   overlay_scales.bin    float32 LE, rows
void save_model(const QuantizedModel& model, const std::filesystem::path& dir);
QuantizedModel load_model(const std::filesystem::path& dir);

// Digest over every stored array, as recorded in the manifest.
std::string model_digest(const QuantizedModel& model);

// Multi-layer set: model.json (schema "halo-model-set-v1") listing one
// subdirectory per layer.
void save_model_set(std::span<const QuantizedModel> models, const std::filesystem::path& dir);
// Loads either a model set or a single model directory.
std::vector<QuantizedModel> load_model_set(const std::filesystem::path& dir);

}  // namespace halo
