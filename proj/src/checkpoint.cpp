// Copyright 2026 The uacgan Authors.
// SPDX-License-Identifier: Apache-2.0

#include "uacgan/checkpoint.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <vector>

namespace uacgan {

namespace {

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

template <class T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in, const std::filesystem::path& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw CheckpointError("truncated checkpoint " + path.string());
  return to_little(v);
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const CheckpointData& data) {
  nlohmann::json manifest;
  manifest["meta"] = data.meta;
  manifest["arrays"] = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& [name, m] : data.arrays) {
    const std::uint64_t nbytes = static_cast<std::uint64_t>(m.size()) * sizeof(double);
    manifest["arrays"].push_back({{"name", name},
                                  {"shape", {m.rows(), m.cols()}},
                                  {"dtype", "<f8"},
                                  {"offset", offset},
                                  {"nbytes", nbytes}});
    offset += nbytes;
  }
  const std::string text = manifest.dump();

  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw CheckpointError("cannot open " + tmp.string() + " for writing");
    out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
    put<std::uint32_t>(out, kCheckpointVersion);
    put<std::uint64_t>(out, text.size());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& [name, m] : data.arrays) {
      for (Eigen::Index i = 0; i < m.size(); ++i) put<double>(out, m.data()[i]);
    }
    if (!out) throw CheckpointError("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw CheckpointError(path.string() + " is not a checkpoint (bad magic)");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto len = get<std::uint64_t>(in, path);
  std::string text(len, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(len))) throw CheckpointError("truncated manifest");
  const auto manifest = nlohmann::json::parse(text);
  const auto blob_start = in.tellg();

  CheckpointData data;
  data.meta = manifest.at("meta");
  for (const auto& a : manifest.at("arrays")) {
    if (a.at("dtype") != "<f8") throw CheckpointError("unsupported dtype " + a.at("dtype").dump());
    const auto rows = a.at("shape").at(0).get<Eigen::Index>();
    const auto cols = a.at("shape").at(1).get<Eigen::Index>();
    const auto offset = a.at("offset").get<std::uint64_t>();
    if (a.at("nbytes").get<std::uint64_t>() != static_cast<std::uint64_t>(rows * cols) * sizeof(double)) {
      throw CheckpointError("array " + a.at("name").get<std::string>() + ": nbytes disagrees with shape");
    }
    in.seekg(blob_start + static_cast<std::streamoff>(offset));
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = get<double>(in, path);
    data.arrays.emplace(a.at("name").get<std::string>(), std::move(m));
  }
  return data;
}

}  // namespace uacgan
