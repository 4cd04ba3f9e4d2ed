#include "hsid/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsid/error.hpp"
#include "hsid/log.hpp"
#include "hsid/random.hpp"

namespace hsid {
namespace {

std::string num(std::size_t v) { return std::to_string(v); }

BandRange range_of(std::span<const float> values) {
  const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
  return {*lo, *hi, !(*hi > *lo)};
}

void scale_band(std::span<float> band, const BandRange& r) {
  if (r.constant) {
    std::fill(band.begin(), band.end(), 0.0f);
    return;
  }
  const double lo = r.min, span = static_cast<double>(r.max) - static_cast<double>(r.min);
  for (float& v : band) v = static_cast<float>((static_cast<double>(v) - lo) / span);
}

HsiCube mask_to_cube(const PixelMask& mask, std::size_t width, std::size_t height) {
  HsiCube c(width, height, 1);
  for (std::size_t i = 0; i < mask.size(); ++i) c.values()[i] = mask[i] ? 1.0f : 0.0f;
  return c;
}

PixelMask cube_to_mask(const HsiCube& c) {
  PixelMask m(c.band_size());
  // Bilinear resampling of an all-ones neighbourhood stays within rounding of 1.
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = c.values()[i] > 0.999f ? 1 : 0;
  return m;
}

bool window_clear(const PixelMask& mask, std::size_t width, std::size_t x0, std::size_t y0, std::size_t p) {
  for (std::size_t y = y0; y < y0 + p; ++y)
    for (std::size_t x = x0; x < x0 + p; ++x)
      if (!mask[y * width + x]) return false;
  return true;
}

template <typename T>
BasicTensor<T> window(const HsiCube& cube, std::span<const std::size_t> bands, std::size_t x0, std::size_t y0,
                      std::size_t p) {
  BasicTensor<T> t = BasicTensor<T>::chw(bands.size(), p, p);
  for (std::size_t c = 0; c < bands.size(); ++c)
    for (std::size_t y = 0; y < p; ++y)
      for (std::size_t x = 0; x < p; ++x) t.at(c, y, x) = static_cast<T>(cube.at(x0 + x, y0 + y, bands[c]));
  return t;
}

PatchSample<float> make_sample(const HsiCube& noisy, const HsiCube& clean, std::size_t band, std::size_t x0,
                               std::size_t y0, std::size_t p, std::size_t K) {
  const std::size_t self[1] = {band};
  const auto neighbours = adjacent_band_indices(noisy.bands(), band, K);
  return {window<float>(noisy, self, x0, y0, p), window<float>(noisy, neighbours, x0, y0, p),
          window<float>(clean, self, x0, y0, p), band, x0, y0};
}

void check_grid(const PatchGrid& grid) {
  if (grid.patch == 0 || grid.stride == 0) throw Error(ErrorCode::InvalidArgument, "patch size and stride must be positive");
}

}  // namespace

// --- normalisation ----------------------------------------------------------

NormalizedCube normalize_bands(const HsiCube& cube) {
  NormalizedCube out{cube, {}};
  out.ranges.reserve(cube.bands());
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const BandRange r = range_of(cube.band(b));
    if (r.constant) warn("normalize_bands: band " + num(b) + " is constant; mapped to 0");
    scale_band(out.cube.band(b), r);
    out.ranges.push_back(r);
  }
  return out;
}

NormalizedCube normalize_global(const HsiCube& cube) {
  NormalizedCube out{cube, {}};
  const BandRange r = range_of(cube.values());
  if (r.constant) warn("normalize_global: cube is constant; mapped to 0");
  scale_band(out.cube.values(), r);
  out.ranges.assign(cube.bands(), r);
  return out;
}

NormalizedCube normalize(const HsiCube& cube, NormalizeMode mode) {
  switch (mode) {
    case NormalizeMode::PerBand: return normalize_bands(cube);
    case NormalizeMode::Global: return normalize_global(cube);
    case NormalizeMode::None: break;
  }
  return {cube, std::vector<BandRange>(cube.bands(), BandRange{0.0f, 1.0f, false})};
}

HsiCube denormalize(const HsiCube& cube, const std::vector<BandRange>& ranges) {
  if (ranges.size() != cube.bands()) {
    throw Error(ErrorCode::ShapeMismatch, "denormalize: " + num(ranges.size()) + " ranges for " + num(cube.bands()) + " bands");
  }
  HsiCube out = cube;
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    const double lo = ranges[b].min, span = static_cast<double>(ranges[b].max) - lo;
    for (float& v : out.band(b)) v = static_cast<float>(lo + span * static_cast<double>(v));
  }
  return out;
}

// --- spectral neighbourhood -------------------------------------------------

std::vector<std::size_t> adjacent_band_indices(std::size_t bands, std::size_t band, std::size_t K) {
  if (K == 0 || K >= bands) {
    throw Error(ErrorCode::InvalidArgument, "adjacent bands: need 1 <= K < B, got K=" + num(K) + ", B=" + num(bands));
  }
  if (band >= bands) throw Error(ErrorCode::OutOfRange, "adjacent bands: band " + num(band) + " >= B=" + num(bands));
  // The window [lo, lo + K] holds K + 1 bands including `band`.
  const std::size_t half = K / 2;
  std::size_t lo = band >= half ? band - half : 0;
  lo = std::min(lo, bands - 1 - K);
  std::vector<std::size_t> out;
  out.reserve(K);
  for (std::size_t b = lo; b <= lo + K; ++b) {
    if (b != band) out.push_back(b);
  }
  return out;
}

template <typename T>
BasicTensor<T> adjacent_bands(const HsiCube& cube, std::size_t band, std::size_t K) {
  const auto idx = adjacent_band_indices(cube.bands(), band, K);
  BasicTensor<T> t = BasicTensor<T>::chw(K, cube.height(), cube.width());
  for (std::size_t c = 0; c < K; ++c) {
    const auto src = cube.band(idx[c]);
    std::transform(src.begin(), src.end(), t.channel(c).begin(), [](float v) { return static_cast<T>(v); });
  }
  return t;
}

template <typename T>
BasicTensor<T> band_tensor(const HsiCube& cube, std::size_t band) {
  const auto src = cube.band(band);
  BasicTensor<T> t = BasicTensor<T>::chw(1, cube.height(), cube.width());
  std::transform(src.begin(), src.end(), t.values().begin(), [](float v) { return static_cast<T>(v); });
  return t;
}

template BasicTensor<float> adjacent_bands(const HsiCube&, std::size_t, std::size_t);
template BasicTensor<double> adjacent_bands(const HsiCube&, std::size_t, std::size_t);
template BasicTensor<float> band_tensor(const HsiCube&, std::size_t);
template BasicTensor<double> band_tensor(const HsiCube&, std::size_t);

// --- patches ----------------------------------------------------------------

std::vector<std::size_t> window_offsets(std::size_t extent, std::size_t patch, std::size_t stride) {
  std::vector<std::size_t> out;
  for (std::size_t o = 0; o + patch <= extent; o += stride) out.push_back(o);
  return out;
}

std::size_t expected_patch_count(std::size_t width, std::size_t height, std::size_t bands, const PatchGrid& grid) {
  check_grid(grid);
  if (grid.patch > width || grid.patch > height) return 0;
  return bands * ((width - grid.patch) / grid.stride + 1) * ((height - grid.patch) / grid.stride + 1);
}

std::vector<PatchSample<float>> extract_patches(const HsiCube& noisy, const HsiCube& clean, const PatchGrid& grid,
                                                std::size_t K, const PixelMask* mask) {
  check_grid(grid);
  if (!noisy.same_dims(clean)) throw Error(ErrorCode::ShapeMismatch, "extract_patches: noisy and clean cubes differ in size");
  if (mask && mask->size() != noisy.band_size()) throw Error(ErrorCode::ShapeMismatch, "extract_patches: mask size mismatch");
  if (K >= noisy.bands()) {
    throw Error(ErrorCode::InvalidArgument, "extract_patches: K=" + num(K) + " must be below B=" + num(noisy.bands()));
  }
  const auto xs = window_offsets(noisy.width(), grid.patch, grid.stride);
  const auto ys = window_offsets(noisy.height(), grid.patch, grid.stride);
  if (xs.empty() || ys.empty()) {
    warn("extract_patches: patch size " + num(grid.patch) + " exceeds the " + num(noisy.width()) + "x" +
         num(noisy.height()) + " frame; no samples");
    return {};
  }
  std::vector<PatchSample<float>> out;
  for (std::size_t b = 0; b < noisy.bands(); ++b)
    for (std::size_t y : ys)
      for (std::size_t x : xs) {
        if (mask && !window_clear(*mask, noisy.width(), x, y, grid.patch)) continue;
        out.push_back(make_sample(noisy, clean, b, x, y, grid.patch, K));
      }
  return out;
}

// --- augmentation -----------------------------------------------------------

void AugmentSpec::validate() const {
  if (rotations.empty() || scales.empty()) throw Error(ErrorCode::InvalidArgument, "augment: rotations and scales must be nonempty");
  for (int r : rotations) {
    if (r % 90 != 0) throw Error(ErrorCode::InvalidArgument, "augment: rotation " + std::to_string(r) + " is not a multiple of 90");
  }
  for (double s : scales) {
    if (!(s > 0.0)) throw Error(ErrorCode::InvalidArgument, "augment: scale must be positive");
  }
}

HsiCube rotate90(const HsiCube& cube, int quarter_turns) {
  const int turns = ((quarter_turns % 4) + 4) % 4;
  HsiCube cur = cube;
  for (int t = 0; t < turns; ++t) {
    const std::size_t W = cur.width(), H = cur.height();
    HsiCube next(H, W, cur.bands());
    for (std::size_t b = 0; b < cur.bands(); ++b)
      for (std::size_t y = 0; y < H; ++y)
        for (std::size_t x = 0; x < W; ++x) next.at(y, W - 1 - x, b) = cur.at(x, y, b);
    cur = std::move(next);
  }
  return cur;
}

HsiCube rescale_bilinear(const HsiCube& cube, double scale) {
  if (!(scale > 0.0)) throw Error(ErrorCode::InvalidArgument, "rescale: scale must be positive");
  if (scale == 1.0) return cube;
  const std::size_t W = cube.width(), H = cube.height();
  const auto out_w = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(W) * scale)));
  const auto out_h = std::max<std::size_t>(1, static_cast<std::size_t>(std::lround(static_cast<double>(H) * scale)));
  auto source = [](std::size_t i, std::size_t out_n, std::size_t in_n) {
    return out_n > 1 ? static_cast<double>(i) * static_cast<double>(in_n - 1) / static_cast<double>(out_n - 1) : 0.0;
  };
  HsiCube out(out_w, out_h, cube.bands());
  for (std::size_t b = 0; b < cube.bands(); ++b)
    for (std::size_t y = 0; y < out_h; ++y) {
      const double sy = source(y, out_h, H);
      const auto y0 = static_cast<std::size_t>(std::floor(sy));
      const std::size_t y1 = std::min(y0 + 1, H - 1);
      const double fy = sy - static_cast<double>(y0);
      for (std::size_t x = 0; x < out_w; ++x) {
        const double sx = source(x, out_w, W);
        const auto x0 = static_cast<std::size_t>(std::floor(sx));
        const std::size_t x1 = std::min(x0 + 1, W - 1);
        const double fx = sx - static_cast<double>(x0);
        const double top = (1.0 - fx) * cube.at(x0, y0, b) + fx * cube.at(x1, y0, b);
        const double bottom = (1.0 - fx) * cube.at(x0, y1, b) + fx * cube.at(x1, y1, b);
        out.at(x, y, b) = static_cast<float>((1.0 - fy) * top + fy * bottom);
      }
    }
  return out;
}

std::vector<HsiCube> augment(const HsiCube& cube, const AugmentSpec& spec) {
  spec.validate();
  std::vector<HsiCube> out;
  out.reserve(spec.rotations.size() * spec.scales.size());
  for (int r : spec.rotations) {
    const HsiCube rotated = rotate90(cube, r / 90);
    for (double s : spec.scales) out.push_back(rescale_bilinear(rotated, s));
  }
  return out;
}

// --- split ------------------------------------------------------------------

HsiCube crop(const HsiCube& cube, const Rect& r) {
  if (r.width == 0 || r.height == 0 || r.x + r.width > cube.width() || r.y + r.height > cube.height()) {
    throw Error(ErrorCode::OutOfRange, "region " + num(r.x) + "," + num(r.y) + "," + num(r.width) + "x" + num(r.height) +
                                           " is outside the " + num(cube.width()) + "x" + num(cube.height()) + " cube");
  }
  HsiCube out(r.width, r.height, cube.bands());
  for (std::size_t b = 0; b < cube.bands(); ++b)
    for (std::size_t y = 0; y < r.height; ++y)
      for (std::size_t x = 0; x < r.width; ++x) out.at(x, y, b) = cube.at(r.x + x, r.y + y, b);
  return out;
}

SpatialSplit split_spatial(const HsiCube& cube, const Rect& region) {
  SpatialSplit split;
  split.test = crop(cube, region);
  split.train = cube;
  split.train_mask.assign(cube.band_size(), 1);
  for (std::size_t y = region.y; y < region.y + region.height; ++y)
    for (std::size_t x = region.x; x < region.x + region.width; ++x) {
      split.train_mask[y * cube.width() + x] = 0;
      for (std::size_t b = 0; b < cube.bands(); ++b) split.train.at(x, y, b) = 0.0f;
    }
  split.train_area = cube.band_size() - region.width * region.height;
  if (split.train_area == 0) warn("split_spatial: test region covers the whole cube; training set is empty");
  return split;
}

// --- datasets ---------------------------------------------------------------

void PatchDataset::add_pair(std::shared_ptr<const HsiCube> noisy, std::shared_ptr<const HsiCube> clean,
                            const PatchGrid& grid, std::size_t K, const PixelMask* mask) {
  check_grid(grid);
  if (!noisy || !clean || !noisy->same_dims(*clean)) {
    throw Error(ErrorCode::ShapeMismatch, "PatchDataset: noisy and clean cubes differ in size");
  }
  if (mask && mask->size() != noisy->band_size()) throw Error(ErrorCode::ShapeMismatch, "PatchDataset: mask size mismatch");
  if (K >= noisy->bands()) {
    throw Error(ErrorCode::InvalidArgument, "PatchDataset: K=" + num(K) + " must be below B=" + num(noisy->bands()));
  }
  const std::size_t source = sources_.size();
  const auto xs = window_offsets(noisy->width(), grid.patch, grid.stride);
  const auto ys = window_offsets(noisy->height(), grid.patch, grid.stride);
  if (xs.empty() || ys.empty()) {
    warn("PatchDataset: patch size " + num(grid.patch) + " exceeds the " + num(noisy->width()) + "x" +
         num(noisy->height()) + " frame; no samples");
  }
  for (std::size_t b = 0; b < noisy->bands(); ++b)
    for (std::size_t y : ys)
      for (std::size_t x : xs) {
        if (mask && !window_clear(*mask, noisy->width(), x, y, grid.patch)) continue;
        entries_.push_back({source, b, x, y, 0});
      }
  sources_.push_back({std::move(noisy), std::move(clean), grid.patch, K});
}

void PatchDataset::add_sample(PatchSample<float> sample) {
  entries_.push_back({npos, sample.band, sample.x, sample.y, explicit_.size()});
  explicit_.push_back(std::move(sample));
}

PatchSample<float> PatchDataset::at(std::size_t index) const {
  const Entry& e = entries_.at(index);
  if (e.source == npos) return explicit_[e.explicit_index];
  const Source& s = sources_[e.source];
  return make_sample(*s.noisy, *s.clean, e.band, e.x, e.y, s.patch, s.K);
}

PatchDataset build_training_set(const std::vector<HsiCube>& clean_cubes, const std::vector<PixelMask>& masks,
                                const TrainingSetOptions& options) {
  if (!masks.empty() && masks.size() != clean_cubes.size()) {
    throw Error(ErrorCode::InvalidArgument, "build_training_set: one mask per cube is required");
  }
  options.augment.validate();
  PatchDataset dataset;
  for (std::size_t i = 0; i < clean_cubes.size(); ++i) {
    const HsiCube& clean = clean_cubes[i];
    const bool has_mask = !masks.empty() && !masks[i].empty();
    const HsiCube mask_cube = has_mask ? mask_to_cube(masks[i], clean.width(), clean.height()) : HsiCube();
    std::size_t aug_index = 0;
    for (int r : options.augment.rotations) {
      for (double s : options.augment.scales) {
        auto aug_clean = std::make_shared<const HsiCube>(rescale_bilinear(rotate90(clean, r / 90), s));
        NoiseSpec noise = options.noise;
        noise.seed = derive_key(options.noise.seed, static_cast<std::uint64_t>(Stream::AugmentNoise) << 32 | i, aug_index);
        auto aug_noisy = std::make_shared<const HsiCube>(add_noise(*aug_clean, noise));
        if (has_mask) {
          const PixelMask m = cube_to_mask(rescale_bilinear(rotate90(mask_cube, r / 90), s));
          dataset.add_pair(aug_noisy, aug_clean, options.grid, options.K, &m);
        } else {
          dataset.add_pair(aug_noisy, aug_clean, options.grid, options.K);
        }
        ++aug_index;
      }
    }
  }
  return dataset;
}

}  // namespace hsid
