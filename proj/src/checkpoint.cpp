// SPDX-License-Identifier: Apache-2.0
#include "pyabbrev/checkpoint.hpp"

#include <zlib.h>

#include <fstream>

#include "pyabbrev/errors.hpp"

namespace pyab::ckpt {

std::uint32_t crc32(const unsigned char* data, size_t len, std::uint32_t seed) {
  return static_cast<std::uint32_t>(
      ::crc32(seed, data, static_cast<uInt>(len)));
}

Writer::Writer(const std::filesystem::path& path)
    : out_(path, std::ios::binary) {
  if (!out_) throw DataError("cannot write checkpoint: " + path.string());
}

void Writer::write(const void* data, size_t len) {
  out_.write(static_cast<const char*>(data), static_cast<std::streamsize>(len));
  crc_ = crc32(static_cast<const unsigned char*>(data), len, crc_);
}

void Writer::finish() {
  const std::uint32_t crc = crc_;
  out_.write(reinterpret_cast<const char*>(&crc), sizeof(crc));
  out_.flush();
  if (!out_) throw DataError("checkpoint write failed");
}

Reader::Reader(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary | std::ios::ate);
  if (!in) throw DataError("cannot open checkpoint: " + path.string());
  const std::streamsize size = in.tellg();
  in.seekg(0);
  bytes_.resize(static_cast<size_t>(size));
  if (size > 0) in.read(reinterpret_cast<char*>(bytes_.data()), size);
  if (!in) throw DataError("checkpoint read failed: " + path.string());
}

void Reader::read(void* data, size_t len) {
  // The trailing 4 bytes are the checksum; payload reads must stop short.
  if (bytes_.size() < sizeof(std::uint32_t) ||
      pos_ + len > bytes_.size() - sizeof(std::uint32_t))
    throw CheckpointTruncatedError("checkpoint is truncated");
  std::memcpy(data, bytes_.data() + pos_, len);
  pos_ += len;
}

void Reader::verify_checksum() {
  if (pos_ + sizeof(std::uint32_t) != bytes_.size())
    throw CheckpointFormatError("checkpoint has trailing bytes");
  const std::uint32_t expected = crc32(bytes_.data(), pos_);
  std::uint32_t stored;
  std::memcpy(&stored, bytes_.data() + pos_, sizeof(stored));
  if (stored != expected)
    throw CheckpointChecksumError("checkpoint checksum mismatch");
}

}  // namespace pyab::ckpt
