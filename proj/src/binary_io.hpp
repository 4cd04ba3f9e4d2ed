#pragma once

// Little-endian encoding helpers shared by the HSIC and HSCK formats.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsid/error.hpp"

namespace hsid::detail {

class ByteWriter {
 public:
  void bytes(std::string_view s) { buf_.insert(buf_.end(), s.begin(), s.end()); }

  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }

  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  void f32s(std::span<const float> values) {
    buf_.reserve(buf_.size() + 4 * values.size());
    for (float v : values) f32(v);
  }

  const std::vector<char>& buffer() const { return buf_; }

  void write_to(const std::filesystem::path& path) const {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
    out.write(buf_.data(), static_cast<std::streamsize>(buf_.size()));
    if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
  }

 private:
  std::vector<char> buf_;
};

class ByteReader {
 public:
  static ByteReader from_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
    std::vector<char> data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return ByteReader(std::move(data), path.string());
  }

  ByteReader(std::vector<char> data, std::string origin) : data_(std::move(data)), origin_(std::move(origin)) {}

  std::size_t remaining() const { return data_.size() - pos_; }

  std::string bytes(std::size_t n) {
    need(n, "bytes");
    std::string s(data_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  std::uint32_t u32() {
    need(4, "u32");
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64() {
    need(8, "u64");
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  float f32() { return std::bit_cast<float>(u32()); }

  void f32s(std::span<float> out) {
    need(4 * out.size(), "float payload");
    for (float& v : out) v = f32();
  }

  const std::string& origin() const { return origin_; }

 private:
  void need(std::size_t n, const char* what) const {
    if (remaining() < n) {
      throw Error(ErrorCode::Truncated, origin_ + ": file ends while reading " + what + " (need " + std::to_string(n) +
                                            " bytes, have " + std::to_string(remaining()) + ")");
    }
  }

  std::vector<char> data_;
  std::string origin_;
  std::size_t pos_ = 0;
};

}  // namespace hsid::detail
