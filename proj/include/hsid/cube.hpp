#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace hsid {

/// Hyperspectral cube, band-sequential: value(x, y, b) lives at
/// data[(b * height + y) * width + x]. Values are 32-bit floats, which is
/// also the on-disk payload type.
class HsiCube {
 public:
  HsiCube() = default;
  HsiCube(std::size_t width, std::size_t height, std::size_t bands, float fill = 0.0f);
  HsiCube(std::size_t width, std::size_t height, std::size_t bands, std::vector<float> data);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t bands() const noexcept { return bands_; }
  std::size_t band_size() const noexcept { return width_ * height_; }
  bool empty() const noexcept { return data_.empty(); }

  float& at(std::size_t x, std::size_t y, std::size_t b) { return data_[(b * height_ + y) * width_ + x]; }
  float at(std::size_t x, std::size_t y, std::size_t b) const { return data_[(b * height_ + y) * width_ + x]; }

  std::span<float> band(std::size_t b);
  std::span<const float> band(std::size_t b) const;

  std::span<float> values() noexcept { return data_; }
  std::span<const float> values() const noexcept { return data_; }
  const std::vector<float>& storage() const noexcept { return data_; }

  bool same_dims(const HsiCube& other) const {
    return width_ == other.width_ && height_ == other.height_ && bands_ == other.bands_;
  }

  friend bool operator==(const HsiCube&, const HsiCube&) = default;

 private:
  std::size_t width_ = 0;
  std::size_t height_ = 0;
  std::size_t bands_ = 0;
  std::vector<float> data_;
};

/// HSIC v1: "HSIC", u32 version, u32 W, u32 H, u32 B, then W*H*B float32,
/// all little-endian, band-sequential.
void save_cube(const HsiCube& cube, const std::filesystem::path& path);
HsiCube load_cube(const std::filesystem::path& path);

enum class SampleType { Float32, Float64, Int16, UInt16 };
enum class ByteOrder { Little, Big };

/// Headerless band-sequential raw import; dimensions come from the caller.
HsiCube load_raw_bsq(const std::filesystem::path& path, std::size_t width, std::size_t height, std::size_t bands,
                     SampleType type, ByteOrder order);

}  // namespace hsid
