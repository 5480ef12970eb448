#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "macrobottle/diffcore/params.hpp"

// Parameter checkpoints: `<stem>.bin` holds every array as little-endian
// IEEE-754 float64 in row-major order, concatenated in manifest order.
// `<stem>.json` is the manifest:
//
//   { "format": "macrobottle-checkpoint", "version": 1,
//     "byte_order": "little", "dtype": "float64", "total_bytes": N,
//     "arrays": [ { "name": ..., "shape": [rows, cols], "offset": bytes,
//                   "nonnegative": bool }, ... ],
//     "metadata": { ...caller supplied... } }

namespace macrobottle::diff {

inline constexpr const char* kCheckpointFormat = "macrobottle-checkpoint";
inline constexpr int kCheckpointVersion = 1;

struct Checkpoint {
  ParamStore params;
  nlohmann::json metadata;
};

namespace detail {

inline std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

}  // namespace detail

inline std::filesystem::path checkpoint_manifest_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".json");
}
inline std::filesystem::path checkpoint_data_path(const std::filesystem::path& stem) {
  return std::filesystem::path(stem.string() + ".bin");
}

inline void save_checkpoint(const ParamStore& store, const std::filesystem::path& stem,
                            const nlohmann::json& metadata = nlohmann::json::object()) {
  nlohmann::json arrays = nlohmann::json::array();
  std::vector<char> bytes;
  for (const auto& [name, p] : store) {
    arrays.push_back({{"name", name},
                      {"shape", {p.value.rows(), p.value.cols()}},
                      {"offset", bytes.size()},
                      {"nonnegative", p.nonnegative}});
    for (Index i = 0; i < p.value.size(); ++i) {
      const std::uint64_t le = detail::to_little(std::bit_cast<std::uint64_t>(p.value.data()[i]));
      char buf[8];
      std::memcpy(buf, &le, 8);
      bytes.insert(bytes.end(), buf, buf + 8);
    }
  }
  nlohmann::json manifest = {{"format", kCheckpointFormat},
                             {"version", kCheckpointVersion},
                             {"byte_order", "little"},
                             {"dtype", "float64"},
                             {"total_bytes", bytes.size()},
                             {"arrays", arrays},
                             {"metadata", metadata}};

  std::ofstream bin(checkpoint_data_path(stem), std::ios::binary | std::ios::trunc);
  if (!bin) throw DataError("cannot write " + checkpoint_data_path(stem).string());
  bin.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  std::ofstream js(checkpoint_manifest_path(stem), std::ios::trunc);
  if (!js) throw DataError("cannot write " + checkpoint_manifest_path(stem).string());
  js << manifest.dump(2) << '\n';
  if (!bin || !js) throw DataError("write failed for checkpoint " + stem.string());
}

inline Checkpoint load_checkpoint(const std::filesystem::path& stem) {
  const auto manifest_path = checkpoint_manifest_path(stem);
  std::ifstream js(manifest_path);
  if (!js) throw DataError("cannot read " + manifest_path.string());
  nlohmann::json manifest;
  try {
    js >> manifest;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(manifest_path.string() + ": " + e.what());
  }
  if (manifest.value("format", "") != kCheckpointFormat ||
      manifest.value("version", 0) != kCheckpointVersion) {
    throw DataError(manifest_path.string() + ": not a version-1 macrobottle checkpoint");
  }
  if (manifest.value("byte_order", "") != "little" || manifest.value("dtype", "") != "float64") {
    throw DataError(manifest_path.string() + ": unsupported byte order or dtype");
  }

  const auto data_path = checkpoint_data_path(stem);
  std::ifstream bin(data_path, std::ios::binary);
  if (!bin) throw DataError("cannot read " + data_path.string());
  std::vector<char> bytes((std::istreambuf_iterator<char>(bin)), std::istreambuf_iterator<char>());
  if (bytes.size() != manifest.at("total_bytes").get<std::size_t>()) {
    throw DataError(data_path.string() + ": size does not match manifest");
  }

  Checkpoint cp;
  for (const auto& a : manifest.at("arrays")) {
    const auto rows = a.at("shape").at(0).get<Index>();
    const auto cols = a.at("shape").at(1).get<Index>();
    const auto offset = a.at("offset").get<std::size_t>();
    if (rows < 0 || cols < 0 ||
        offset + static_cast<std::size_t>(rows * cols) * 8 > bytes.size()) {
      throw DataError(data_path.string() + ": array '" + a.at("name").get<std::string>() +
                      "' lies outside the data file");
    }
    Matrix m(rows, cols);
    for (Index i = 0; i < m.size(); ++i) {
      std::uint64_t le = 0;
      std::memcpy(&le, bytes.data() + offset + static_cast<std::size_t>(i) * 8, 8);
      m.data()[i] = std::bit_cast<double>(detail::to_little(le));
    }
    cp.params.add(a.at("name").get<std::string>(), std::move(m), a.value("nonnegative", false));
  }
  cp.metadata = manifest.value("metadata", nlohmann::json::object());
  return cp;
}

}  // namespace macrobottle::diff
