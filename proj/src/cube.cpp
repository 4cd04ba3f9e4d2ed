#include "hsid/cube.hpp"

#include <bit>
#include <cstring>
#include <limits>
#include <string>

#include "binary_io.hpp"
#include "hsid/error.hpp"

namespace hsid {
namespace {

constexpr std::string_view kMagic = "HSIC";
constexpr std::uint32_t kVersion = 1;

std::size_t checked_volume(std::uint64_t w, std::uint64_t h, std::uint64_t b, std::uint64_t bytes_per_sample,
                           const std::string& origin) {
  constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
  if (w == 0 || h == 0 || b == 0) {
    throw Error(ErrorCode::InvalidArgument, origin + ": cube dimensions must be positive");
  }
  if (w > kMax / h || w * h > kMax / b || w * h * b > kMax / bytes_per_sample ||
      w * h * b > std::numeric_limits<std::size_t>::max() / bytes_per_sample) {
    throw Error(ErrorCode::DimensionOverflow, origin + ": " + std::to_string(w) + "x" + std::to_string(h) + "x" +
                                                  std::to_string(b) + " overflows the addressable size");
  }
  return static_cast<std::size_t>(w * h * b);
}

}  // namespace

HsiCube::HsiCube(std::size_t width, std::size_t height, std::size_t bands, float fill)
    : width_(width), height_(height), bands_(bands), data_(width * height * bands, fill) {}

HsiCube::HsiCube(std::size_t width, std::size_t height, std::size_t bands, std::vector<float> data)
    : width_(width), height_(height), bands_(bands), data_(std::move(data)) {
  if (data_.size() != width * height * bands) {
    throw Error(ErrorCode::ShapeMismatch, "cube data length " + std::to_string(data_.size()) + " != " +
                                              std::to_string(width) + "*" + std::to_string(height) + "*" +
                                              std::to_string(bands));
  }
}

std::span<float> HsiCube::band(std::size_t b) {
  if (b >= bands_) throw Error(ErrorCode::OutOfRange, "band " + std::to_string(b) + " >= " + std::to_string(bands_));
  return std::span<float>(data_).subspan(b * band_size(), band_size());
}

std::span<const float> HsiCube::band(std::size_t b) const {
  if (b >= bands_) throw Error(ErrorCode::OutOfRange, "band " + std::to_string(b) + " >= " + std::to_string(bands_));
  return std::span<const float>(data_).subspan(b * band_size(), band_size());
}

void save_cube(const HsiCube& cube, const std::filesystem::path& path) {
  constexpr auto kMaxDim = std::numeric_limits<std::uint32_t>::max();
  if (cube.width() > kMaxDim || cube.height() > kMaxDim || cube.bands() > kMaxDim) {
    throw Error(ErrorCode::DimensionOverflow, "cube dimensions do not fit the u32 header fields");
  }
  detail::ByteWriter w;
  w.bytes(kMagic);
  w.u32(kVersion);
  w.u32(static_cast<std::uint32_t>(cube.width()));
  w.u32(static_cast<std::uint32_t>(cube.height()));
  w.u32(static_cast<std::uint32_t>(cube.bands()));
  w.f32s(cube.values());
  w.write_to(path);
}

HsiCube load_cube(const std::filesystem::path& path) {
  auto r = detail::ByteReader::from_file(path);
  if (r.remaining() < kMagic.size() || r.bytes(kMagic.size()) != kMagic) {
    throw Error(ErrorCode::BadMagic, path.string() + ": not an HSIC cube");
  }
  const std::uint32_t version = r.u32();
  if (version != kVersion) {
    throw Error(ErrorCode::VersionMismatch, path.string() + ": HSIC version " + std::to_string(version) +
                                                ", expected " + std::to_string(kVersion));
  }
  const std::uint32_t w = r.u32(), h = r.u32(), b = r.u32();
  const std::size_t n = checked_volume(w, h, b, 4, path.string());
  std::vector<float> data(n);
  r.f32s(data);
  return HsiCube(w, h, b, std::move(data));
}

HsiCube load_raw_bsq(const std::filesystem::path& path, std::size_t width, std::size_t height, std::size_t bands,
                     SampleType type, ByteOrder order) {
  const std::size_t sample_bytes = type == SampleType::Float64 ? 8 : type == SampleType::Float32 ? 4 : 2;
  const std::size_t n = checked_volume(width, height, bands, sample_bytes, path.string());
  auto r = detail::ByteReader::from_file(path);
  if (r.remaining() < n * sample_bytes) {
    throw Error(ErrorCode::Truncated, path.string() + ": raw payload has " + std::to_string(r.remaining()) +
                                          " bytes, dimensions need " + std::to_string(n * sample_bytes));
  }
  const std::string raw = r.bytes(n * sample_bytes);
  std::vector<float> data(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint64_t v = 0;
    for (std::size_t j = 0; j < sample_bytes; ++j) {
      const auto byte = static_cast<unsigned char>(raw[i * sample_bytes + j]);
      const std::size_t shift = order == ByteOrder::Little ? j : sample_bytes - 1 - j;
      v |= std::uint64_t(byte) << (8 * shift);
    }
    switch (type) {
      case SampleType::Float32: data[i] = std::bit_cast<float>(static_cast<std::uint32_t>(v)); break;
      case SampleType::Float64: data[i] = static_cast<float>(std::bit_cast<double>(v)); break;
      case SampleType::Int16: data[i] = static_cast<float>(static_cast<std::int16_t>(static_cast<std::uint16_t>(v))); break;
      case SampleType::UInt16: data[i] = static_cast<float>(static_cast<std::uint16_t>(v)); break;
    }
  }
  return HsiCube(width, height, bands, std::move(data));
}

}  // namespace hsid
