#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "halo/matrix.hpp"

namespace halo {

struct LayerTensors {
  std::string name;
  Matrix weights;
  Matrix gradients;
};

// Directory with manifest.json (schema "halo-tensors-v1") and one raw
// little-endian float32 blob per tensor.
struct TensorContainer {
  std::vector<LayerTensors> layers;

  void validate() const;
};

void save_container(const TensorContainer& container, const std::filesystem::path& dir);
TensorContainer load_container(const std::filesystem::path& dir);

struct SyntheticSpec {
  std::size_t layers = 2;
  std::size_t rows = 256;
  std::size_t cols = 256;
  std::uint64_t seed = 1;
  double weight_std = 0.02;
  // Gradient magnitude varies per block of this size as exp(sigma * z).
  std::size_t block = 16;
  double heavy_sigma = 2.0;
};

// Gaussian weights and a heavy-tailed, block-structured gradient field.
TensorContainer synthetic_container(const SyntheticSpec& spec);

}  // namespace halo
