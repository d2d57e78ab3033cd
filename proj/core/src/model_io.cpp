#include "halo/model_io.hpp"

#include <algorithm>
#include <cstring>

#include "halo/digest.hpp"
#include "halo/error.hpp"
#include "io_util.hpp"

namespace halo {

namespace {

template <typename T>
std::vector<std::uint8_t> encode_le(const std::vector<T>& v) {
  static_assert(sizeof(T) == 4);
  std::vector<std::uint8_t> out(v.size() * 4);
  for (std::size_t i = 0; i < v.size(); ++i) {
    std::uint32_t bits;
    std::memcpy(&bits, &v[i], 4);
    for (int b = 0; b < 4; ++b) out[i * 4 + b] = static_cast<std::uint8_t>(bits >> (8 * b));
  }
  return out;
}

template <typename T>
std::vector<T> decode_le(const std::vector<std::uint8_t>& bytes, const std::string& what) {
  static_assert(sizeof(T) == 4);
  if (bytes.size() % 4 != 0) throw Error(ErrorCode::MalformedFile, what + " length is not a multiple of 4");
  std::vector<T> out(bytes.size() / 4);
  for (std::size_t i = 0; i < out.size(); ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(bytes[i * 4 + b]) << (8 * b);
    std::memcpy(&out[i], &bits, 4);
  }
  return out;
}

std::vector<std::uint8_t> tile_values(const QuantizedModel& m) {
  std::vector<std::uint8_t> out(m.indices.size());
  const std::size_t area = m.tile_area();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<std::uint8_t>(m.tile_value(i / area, i % area));
  }
  return out;
}

std::vector<std::uint8_t> int8_bytes(const std::vector<std::int8_t>& v) {
  return std::vector<std::uint8_t>(v.begin(), v.end());
}

struct Blobs {
  std::vector<std::uint8_t> tiles, classes, scales, row_ptr, col_idx, values, overlay_scales;
};

Blobs make_blobs(const QuantizedModel& m) {
  return {tile_values(m),
          m.tile_class,
          encode_le(m.tile_scale),
          encode_le(m.overlay.row_ptr),
          encode_le(m.overlay.col_idx),
          int8_bytes(m.overlay.values),
          encode_le(m.overlay.channel_scales)};
}

std::string hex_of(const std::vector<std::uint8_t>& bytes) {
  Fnv1a h;
  h.update(bytes);
  return h.hex();
}

std::string combined_digest(const Blobs& b) {
  Fnv1a h;
  for (const auto* v : {&b.tiles, &b.classes, &b.scales, &b.row_ptr, &b.col_idx, &b.values,
                        &b.overlay_scales}) {
    h.update_u64(v->size());
    h.update(*v);
  }
  return h.hex();
}

}  // namespace

std::string model_digest(const QuantizedModel& model) { return combined_digest(make_blobs(model)); }

void save_model(const QuantizedModel& model, const std::filesystem::path& dir) {
  model.validate();
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  const Blobs b = make_blobs(model);

  nlohmann::ordered_json j;
  j["schema"] = "halo-model-v1";
  j["name"] = model.name;
  j["rows"] = model.rows;
  j["cols"] = model.cols;
  j["tile_rows"] = model.tile_rows;
  j["tile_cols"] = model.tile_cols;
  j["grid_rows"] = model.grid_rows;
  j["grid_cols"] = model.grid_cols;
  j["endianness"] = "little";
  j["profile_digest"] = model.profile_digest;
  auto& classes = j["classes"] = nlohmann::ordered_json::array();
  for (const FrequencyClass& c : model.classes) {
    nlohmann::ordered_json jc;
    jc["id"] = c.id;
    jc["name"] = c.name;
    jc["target_freq_ghz"] = c.target_freq_ghz;
    jc["voltage_v"] = c.voltage_v;
    std::vector<int> cb(c.codebook.begin(), c.codebook.end());
    jc["codebook"] = cb;
    classes.push_back(std::move(jc));
  }
  j["overlay_nnz"] = model.overlay.nnz();
  j["digests"] = {{"tiles", hex_of(b.tiles)},
                  {"tile_classes", hex_of(b.classes)},
                  {"scales", hex_of(b.scales)},
                  {"overlay", hex_of(b.row_ptr) + hex_of(b.col_idx) + hex_of(b.values) +
                                  hex_of(b.overlay_scales)},
                  {"model", combined_digest(b)}};

  detail::write_text(dir / "manifest.json", j.dump(1) + "\n");
  detail::write_bytes(dir / "tiles.i8", b.tiles.data(), b.tiles.size());
  detail::write_bytes(dir / "tile_classes.u8", b.classes.data(), b.classes.size());
  detail::write_bytes(dir / "scales.f32", b.scales.data(), b.scales.size());
  detail::write_bytes(dir / "overlay_row_ptr.bin", b.row_ptr.data(), b.row_ptr.size());
  detail::write_bytes(dir / "overlay_col_idx.bin", b.col_idx.data(), b.col_idx.size());
  detail::write_bytes(dir / "overlay_values.bin", b.values.data(), b.values.size());
  detail::write_bytes(dir / "overlay_scales.bin", b.overlay_scales.data(), b.overlay_scales.size());
}

QuantizedModel load_model(const std::filesystem::path& dir) {
  const std::string what = "model manifest " + (dir / "manifest.json").string();
  const auto j = detail::parse_json(detail::read_text(dir / "manifest.json"), what);
  if (j.value("schema", "") != "halo-model-v1") {
    throw Error(ErrorCode::MalformedFile, what + ": schema must be halo-model-v1");
  }
  QuantizedModel m;
  m.name = detail::field<std::string>(j, "name", what);
  m.rows = detail::field<std::size_t>(j, "rows", what);
  m.cols = detail::field<std::size_t>(j, "cols", what);
  m.tile_rows = detail::field<std::size_t>(j, "tile_rows", what);
  m.tile_cols = detail::field<std::size_t>(j, "tile_cols", what);
  m.grid_rows = detail::field<std::size_t>(j, "grid_rows", what);
  m.grid_cols = detail::field<std::size_t>(j, "grid_cols", what);
  m.profile_digest = j.value("profile_digest", "");
  if (!j.contains("classes") || !j["classes"].is_array()) {
    throw Error(ErrorCode::MalformedFile, what + ": missing classes");
  }
  for (const auto& jc : j["classes"]) {
    FrequencyClass c;
    c.id = detail::field<std::uint8_t>(jc, "id", what);
    c.name = detail::field<std::string>(jc, "name", what);
    c.target_freq_ghz = detail::field<double>(jc, "target_freq_ghz", what);
    c.voltage_v = detail::field<double>(jc, "voltage_v", what);
    for (int v : detail::field<std::vector<int>>(jc, "codebook", what)) {
      if (v < -128 || v > 127) throw Error(ErrorCode::MalformedFile, what + ": codebook value out of range");
      c.codebook.push_back(static_cast<std::int8_t>(v));
    }
    m.classes.push_back(std::move(c));
  }

  const auto tiles = detail::read_bytes(dir / "tiles.i8");
  m.tile_class = detail::read_bytes(dir / "tile_classes.u8");
  m.tile_scale = decode_le<float>(detail::read_bytes(dir / "scales.f32"), "scales.f32");
  m.overlay.rows = m.rows;
  m.overlay.cols = m.cols;
  m.overlay.row_ptr = decode_le<std::uint32_t>(detail::read_bytes(dir / "overlay_row_ptr.bin"), "overlay_row_ptr.bin");
  m.overlay.col_idx = decode_le<std::uint32_t>(detail::read_bytes(dir / "overlay_col_idx.bin"), "overlay_col_idx.bin");
  const auto values = detail::read_bytes(dir / "overlay_values.bin");
  m.overlay.values.assign(values.begin(), values.end());
  m.overlay.channel_scales = decode_le<float>(detail::read_bytes(dir / "overlay_scales.bin"), "overlay_scales.bin");

  if (m.tile_class.size() != m.tile_count() || tiles.size() != m.tile_count() * m.tile_area()) {
    throw Error(ErrorCode::MalformedFile, what + ": tile arrays do not match the manifest shape");
  }
  for (std::uint8_t c : m.tile_class) {
    if (c >= m.classes.size()) throw Error(ErrorCode::MalformedFile, what + ": undeclared tile class");
  }
  m.indices.resize(tiles.size());
  const std::size_t area = m.tile_area();
  for (std::size_t i = 0; i < tiles.size(); ++i) {
    const Codebook& cb = m.classes[m.tile_class[i / area]].codebook;
    const auto v = static_cast<std::int8_t>(tiles[i]);
    const auto it = std::lower_bound(cb.begin(), cb.end(), v);
    if (it == cb.end() || *it != v) {
      throw Error(ErrorCode::MalformedFile, what + ": tile value " + std::to_string(v) +
                                                " is not in its class codebook");
    }
    m.indices[i] = static_cast<std::uint8_t>(it - cb.begin());
  }
  m.validate();
  if (j.contains("digests") && j["digests"].contains("model") &&
      j["digests"]["model"].get<std::string>() != model_digest(m)) {
    throw Error(ErrorCode::MalformedFile, what + ": digest mismatch");
  }
  return m;
}

void save_model_set(std::span<const QuantizedModel> models, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::Io, "cannot create " + dir.string() + ": " + ec.message());
  nlohmann::ordered_json j;
  j["schema"] = "halo-model-set-v1";
  auto& layers = j["layers"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < models.size(); ++i) {
    const std::string sub = "layer_" + std::to_string(i);
    save_model(models[i], dir / sub);
    layers.push_back({{"name", models[i].name}, {"dir", sub}});
  }
  detail::write_text(dir / "model.json", j.dump(1) + "\n");
}

std::vector<QuantizedModel> load_model_set(const std::filesystem::path& dir) {
  if (!std::filesystem::exists(dir / "model.json")) return {load_model(dir)};
  const std::string what = "model set " + (dir / "model.json").string();
  const auto j = detail::parse_json(detail::read_text(dir / "model.json"), what);
  if (j.value("schema", "") != "halo-model-set-v1" || !j.contains("layers")) {
    throw Error(ErrorCode::MalformedFile, what + ": schema must be halo-model-set-v1");
  }
  std::vector<QuantizedModel> out;
  for (const auto& l : j["layers"]) out.push_back(load_model(dir / detail::field<std::string>(l, "dir", what)));
  return out;
}

}  // namespace halo
