#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "hsid/cube.hpp"
#include "hsid/noise.hpp"
#include "hsid/tensor.hpp"

namespace hsid {

// ---------------------------------------------------------------------------
// Normalisation

struct BandRange {
  float min = 0.0f;
  float max = 1.0f;
  bool constant = false;
};

enum class NormalizeMode { PerBand, Global, None };

struct NormalizedCube {
  HsiCube cube;
  std::vector<BandRange> ranges;  // one per band; identical entries in global mode
};

/// Per-band min-max scaling to [0, 1]. Constant bands map to 0 with a warning.
NormalizedCube normalize_bands(const HsiCube& cube);
/// One min-max pair over the whole cube.
NormalizedCube normalize_global(const HsiCube& cube);
NormalizedCube normalize(const HsiCube& cube, NormalizeMode mode);
/// Maps a normalised cube back to the original value range.
HsiCube denormalize(const HsiCube& cube, const std::vector<BandRange>& ranges);

// ---------------------------------------------------------------------------
// Spectral neighbourhood

/// The K bands nearest to `band`, excluding it, ascending. The window is
/// symmetric (K/2 per side) where it fits and slides inward at the spectrum
/// edges so that exactly K in-range bands are returned.
std::vector<std::size_t> adjacent_band_indices(std::size_t bands, std::size_t band, std::size_t K);

template <typename T>
BasicTensor<T> adjacent_bands(const HsiCube& cube, std::size_t band, std::size_t K);

/// One band as a [1, H, W] tensor.
template <typename T>
BasicTensor<T> band_tensor(const HsiCube& cube, std::size_t band);

// ---------------------------------------------------------------------------
// Patches

struct PatchGrid {
  std::size_t patch = 20;
  std::size_t stride = 20;
};

template <typename T>
struct PatchSample {
  BasicTensor<T> y_spatial;    // [1, p, p] noisy current band
  BasicTensor<T> y_spectral;   // [K, p, p] noisy adjacent bands
  BasicTensor<T> label_clean;  // [1, p, p] clean current band
  std::size_t band = 0;
  std::size_t x = 0;
  std::size_t y = 0;

  template <typename U>
  PatchSample<U> cast() const {
    return {y_spatial.template cast<U>(), y_spectral.template cast<U>(), label_clean.template cast<U>(), band, x, y};
  }
};

/// Window offsets along one axis: 0, stride, ... while offset + patch <= extent.
std::vector<std::size_t> window_offsets(std::size_t extent, std::size_t patch, std::size_t stride);

/// B * (floor((W - p) / s) + 1) * (floor((H - p) / s) + 1), or 0 when p > W or p > H.
std::size_t expected_patch_count(std::size_t width, std::size_t height, std::size_t bands, const PatchGrid& grid);

/// Spatial mask, width*height entries, non-zero where a pixel may be used for training.
using PixelMask = std::vector<std::uint8_t>;

/// Every (band, window) sample, band-major then row-major over windows.
/// Windows touching a masked-out pixel are skipped when `mask` is given.
std::vector<PatchSample<float>> extract_patches(const HsiCube& noisy, const HsiCube& clean, const PatchGrid& grid,
                                                std::size_t K, const PixelMask* mask = nullptr);

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentSpec {
  std::vector<int> rotations{0, 90, 180, 270};  // degrees, multiples of 90
  std::vector<double> scales{0.5, 1.0, 1.5, 2.0};

  void validate() const;
};

/// Rotates every band counter-clockwise by quarter_turns * 90 degrees.
HsiCube rotate90(const HsiCube& cube, int quarter_turns);

/// Corner-aligned bilinear resize of every band to round(W*s) x round(H*s).
HsiCube rescale_bilinear(const HsiCube& cube, double scale);

/// Cross product rotations x scales (rotation-major), applied to a clean cube.
std::vector<HsiCube> augment(const HsiCube& cube, const AugmentSpec& spec);

// ---------------------------------------------------------------------------
// Train/test split

struct Rect {
  std::size_t x = 0;
  std::size_t y = 0;
  std::size_t width = 0;
  std::size_t height = 0;
};

struct SpatialSplit {
  HsiCube train;           // full frame with the test region zeroed
  PixelMask train_mask;    // 1 outside the test region
  HsiCube test;            // the test region, region.width x region.height x B
  std::size_t train_area = 0;
};

SpatialSplit split_spatial(const HsiCube& cube, const Rect& test_region);

HsiCube crop(const HsiCube& cube, const Rect& region);

// ---------------------------------------------------------------------------
// Training sets

/// Patch samples materialised on demand from (noisy, clean) cube pairs.
class PatchDataset {
 public:
  void add_pair(std::shared_ptr<const HsiCube> noisy, std::shared_ptr<const HsiCube> clean, const PatchGrid& grid,
                std::size_t K, const PixelMask* mask = nullptr);
  void add_sample(PatchSample<float> sample);

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  PatchSample<float> at(std::size_t index) const;

 private:
  struct Source {
    std::shared_ptr<const HsiCube> noisy;
    std::shared_ptr<const HsiCube> clean;
    std::size_t patch = 0;
    std::size_t K = 0;
  };
  struct Entry {
    std::size_t source = 0;  // index into sources_, or npos for explicit samples
    std::size_t band = 0, x = 0, y = 0;
    std::size_t explicit_index = 0;
  };
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  std::vector<Source> sources_;
  std::vector<Entry> entries_;
  std::vector<PatchSample<float>> explicit_;
};

struct TrainingSetOptions {
  PatchGrid grid;
  std::size_t K = 24;
  AugmentSpec augment{{0}, {1.0}};
  NoiseSpec noise;
};

/// For each clean cube (already normalised) and each augmentation: transform
/// the clean cube (and its mask), add fresh noise with a seed derived from
/// (noise.seed, cube index, augmentation index), then index the patches.
PatchDataset build_training_set(const std::vector<HsiCube>& clean_cubes, const std::vector<PixelMask>& masks,
                                const TrainingSetOptions& options);

}  // namespace hsid
