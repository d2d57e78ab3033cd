#include "halo/tensor_io.hpp"

#include <cmath>
#include <cstring>

#include "halo/error.hpp"
#include "halo/random.hpp"
#include "io_util.hpp"

namespace halo {

void TensorContainer::validate() const {
  if (layers.empty()) throw Error(ErrorCode::InvalidArgument, "tensor container has no layers");
  for (const LayerTensors& l : layers) {
    if (l.weights.empty()) throw Error(ErrorCode::InvalidArgument, "layer " + l.name + " is empty");
    if (!l.weights.same_shape(l.gradients)) {
      throw Error(ErrorCode::ShapeMismatch, "layer " + l.name + ": weight and gradient shapes differ");
    }
    if (!l.weights.all_finite() || !l.gradients.all_finite()) {
      throw Error(ErrorCode::NonFinite, "layer " + l.name + " has non-finite values");
    }
  }
}

namespace {

void write_f32(const std::filesystem::path& path, const Matrix& m) {
  std::vector<std::uint8_t> bytes(m.size() * 4);
  auto d = m.data();
  for (std::size_t i = 0; i < d.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &d[i], 4);
    for (int b = 0; b < 4; ++b) bytes[i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  detail::write_bytes(path, bytes.data(), bytes.size());
}

Matrix read_f32(const std::filesystem::path& path, std::size_t rows, std::size_t cols) {
  const auto bytes = detail::read_bytes(path);
  if (bytes.size() != rows * cols * 4) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": expected " + std::to_string(rows * cols * 4) +
                                              " bytes, found " + std::to_string(bytes.size()));
  }
  std::vector<float> data(rows * cols);
  for (std::size_t i = 0; i < data.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    std::memcpy(&data[i], &bits, 4);
  }
  Matrix m(rows, cols, std::move(data));
  if (!m.all_finite()) throw Error(ErrorCode::NonFinite, path.string() + " has non-finite values");
  return m;
}

}  // namespace

void save_container(const TensorContainer& container, const std::filesystem::path& dir) {
  container.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  nlohmann::ordered_json j;
  j["schema"] = "halo-tensors-v1";
  j["dtype"] = "f32";
  j["endianness"] = "little";
  auto& layers = j["layers"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < container.layers.size(); ++i) {
    const LayerTensors& l = container.layers[i];
    const std::string w = "layer" + std::to_string(i) + ".weights.f32";
    const std::string g = "layer" + std::to_string(i) + ".gradients.f32";
    write_f32(dir / w, l.weights);
    write_f32(dir / g, l.gradients);
    nlohmann::ordered_json jl;
    jl["name"] = l.name;
    jl["shape"] = {l.weights.rows(), l.weights.cols()};
    jl["weights"] = w;
    jl["gradients"] = g;
    layers.push_back(std::move(jl));
  }
  detail::write_text(dir / "manifest.json", j.dump(1) + "\n");
}

TensorContainer load_container(const std::filesystem::path& dir) {
  const std::string what = "tensor manifest " + (dir / "manifest.json").string();
  const auto j = detail::parse_json(detail::read_text(dir / "manifest.json"), what);
  if (j.value("schema", "") != "halo-tensors-v1") {
    throw Error(ErrorCode::MalformedFile, what + ": schema must be halo-tensors-v1");
  }
  if (j.value("dtype", "f32") != "f32" || j.value("endianness", "little") != "little") {
    throw Error(ErrorCode::MalformedFile, what + ": only little-endian f32 tensors are supported");
  }
  if (!j.contains("layers") || !j["layers"].is_array()) {
    throw Error(ErrorCode::MalformedFile, what + ": missing layers array");
  }
  TensorContainer c;
  for (const auto& jl : j["layers"]) {
    const auto shape = detail::field<std::vector<std::size_t>>(jl, "shape", what);
    if (shape.size() != 2 || shape[0] == 0 || shape[1] == 0) {
      throw Error(ErrorCode::MalformedFile, what + ": shape must be [rows, cols] with positive sizes");
    }
    LayerTensors l;
    l.name = detail::field<std::string>(jl, "name", what);
    l.weights = read_f32(dir / detail::field<std::string>(jl, "weights", what), shape[0], shape[1]);
    l.gradients = read_f32(dir / detail::field<std::string>(jl, "gradients", what), shape[0], shape[1]);
    c.layers.push_back(std::move(l));
  }
  c.validate();
  return c;
}

TensorContainer synthetic_container(const SyntheticSpec& spec) {
  if (spec.layers == 0 || spec.rows == 0 || spec.cols == 0 || spec.block == 0) {
    throw Error(ErrorCode::InvalidArgument, "synthetic container dimensions must be positive");
  }
  Rng rng(spec.seed);
  TensorContainer c;
  for (std::size_t l = 0; l < spec.layers; ++l) {
    LayerTensors layer;
    layer.name = "layer" + std::to_string(l);
    layer.weights = Matrix(spec.rows, spec.cols);
    layer.gradients = Matrix(spec.rows, spec.cols);
    for (float& w : layer.weights.data()) w = static_cast<float>(spec.weight_std * rng.normal());

    const std::size_t br = (spec.rows + spec.block - 1) / spec.block;
    const std::size_t bc = (spec.cols + spec.block - 1) / spec.block;
    std::vector<double> intensity(br * bc);
    for (double& x : intensity) x = std::exp(spec.heavy_sigma * rng.normal());
    for (std::size_t r = 0; r < spec.rows; ++r) {
      for (std::size_t col = 0; col < spec.cols; ++col) {
        const double scale = 1e-3 * intensity[(r / spec.block) * bc + col / spec.block];
        layer.gradients(r, col) = static_cast<float>(scale * rng.normal());
      }
    }
    c.layers.push_back(std::move(layer));
  }
  return c;
}

}  // namespace halo
