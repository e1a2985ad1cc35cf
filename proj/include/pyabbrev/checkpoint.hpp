// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <type_traits>

#include "pyabbrev/model.hpp"

namespace pyab {

namespace ckpt {

constexpr char kMagic[8] = {'P', 'Y', 'A', 'B', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

std::uint32_t crc32(const unsigned char* data, size_t len,
                    std::uint32_t seed = 0);

static_assert(std::endian::native == std::endian::little,
              "checkpoint payloads are little-endian");

template <class S>
constexpr std::uint8_t dtype_code() {
  if constexpr (std::is_same_v<S, float>) return 0;
  else if constexpr (std::is_same_v<S, double>) return 1;
  else static_assert(sizeof(S) == 0, "unsupported scalar");
}

class Writer {
public:
  explicit Writer(const std::filesystem::path& path);
  void write(const void* data, size_t len);
  template <class T>
  void write_pod(T value) {
    write(&value, sizeof(T));
  }
  void finish();  // appends the whole-file CRC32

private:
  std::ofstream out_;
  std::uint32_t crc_ = 0;
};

class Reader {
public:
  explicit Reader(const std::filesystem::path& path);
  void read(void* data, size_t len);  // throws CheckpointTruncatedError at EOF
  template <class T>
  T read_pod() {
    T value;
    read(&value, sizeof(T));
    return value;
  }
  void verify_checksum();  // consumes the trailing CRC32

private:
  std::vector<unsigned char> bytes_;
  size_t pos_ = 0;
};

}  // namespace ckpt

/**
 * Writes magic, format version, the length-prefixed canonical config text,
 * then every named tensor as (name, dtype, shape, little-endian payload),
 * and a trailing whole-file CRC32.
 */
template <class S>
void save_checkpoint(const ModelParams<S>& params,
                     const std::filesystem::path& path) {
  auto& mut = const_cast<ModelParams<S>&>(params);
  auto tensors = named_tensors(mut);

  ckpt::Writer w(path);
  w.write(ckpt::kMagic, sizeof(ckpt::kMagic));
  w.write_pod<std::uint32_t>(ckpt::kVersion);
  const std::string config_text = to_text(params.config);
  w.write_pod<std::uint64_t>(config_text.size());
  w.write(config_text.data(), config_text.size());
  w.write_pod<std::uint32_t>(static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    w.write_pod<std::uint32_t>(static_cast<std::uint32_t>(t.name.size()));
    w.write(t.name.data(), t.name.size());
    w.write_pod<std::uint8_t>(ckpt::dtype_code<S>());
    if (t.is_matrix()) {
      w.write_pod<std::uint32_t>(2);
      w.write_pod<std::uint64_t>(static_cast<std::uint64_t>(t.mat->rows()));
      w.write_pod<std::uint64_t>(static_cast<std::uint64_t>(t.mat->cols()));
    } else {
      w.write_pod<std::uint32_t>(1);
      w.write_pod<std::uint64_t>(static_cast<std::uint64_t>(t.vec->size()));
    }
    w.write(t.data(), static_cast<size_t>(t.size()) * sizeof(S));
  }
  w.finish();
}

/**
 * Reads back a checkpoint written by save_checkpoint. Distinct failures:
 * CheckpointVersionError, CheckpointTruncatedError, CheckpointChecksumError,
 * and CheckpointFormatError for structural mismatches.
 */
template <class S>
ModelParams<S> load_checkpoint(const std::filesystem::path& path) {
  ckpt::Reader r(path);

  char magic[sizeof(ckpt::kMagic)];
  r.read(magic, sizeof(magic));
  if (std::memcmp(magic, ckpt::kMagic, sizeof(magic)) != 0)
    throw CheckpointFormatError("not a checkpoint file: " + path.string());
  const auto version = r.read_pod<std::uint32_t>();
  if (version != ckpt::kVersion)
    throw CheckpointVersionError("unsupported checkpoint version " +
                                 std::to_string(version));

  const auto config_len = r.read_pod<std::uint64_t>();
  std::string config_text(config_len, '\0');
  r.read(config_text.data(), config_len);
  const ModelConfig config = config_from_text(config_text);

  // Allocate the full structure, then fill tensors by name.
  ModelParams<S> params = init_model<S>(config, 0);
  auto tensors = named_tensors(params);

  const auto count = r.read_pod<std::uint32_t>();
  if (count != tensors.size())
    throw CheckpointFormatError("tensor count mismatch: file has " +
                                std::to_string(count) + ", model needs " +
                                std::to_string(tensors.size()));
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto name_len = r.read_pod<std::uint32_t>();
    std::string name(name_len, '\0');
    r.read(name.data(), name_len);
    if (name != tensors[i].name)
      throw CheckpointFormatError("unexpected tensor '" + name +
                                  "' (expected '" + tensors[i].name + "')");
    const auto dtype = r.read_pod<std::uint8_t>();
    if (dtype != ckpt::dtype_code<S>())
      throw CheckpointFormatError("dtype mismatch for tensor '" + name + "'");
    const auto ndim = r.read_pod<std::uint32_t>();
    std::uint64_t rows = 0, cols = 1;
    if (ndim == 2) {
      rows = r.read_pod<std::uint64_t>();
      cols = r.read_pod<std::uint64_t>();
    } else if (ndim == 1) {
      rows = r.read_pod<std::uint64_t>();
    } else {
      throw CheckpointFormatError("unsupported rank for tensor '" + name + "'");
    }
    if (static_cast<std::uint64_t>(tensors[i].size()) != rows * cols)
      throw CheckpointFormatError("shape mismatch for tensor '" + name + "'");
    r.read(tensors[i].data(), static_cast<size_t>(tensors[i].size()) * sizeof(S));
  }
  r.verify_checksum();
  return params;
}

}  // namespace pyab
