#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "hsid/cube.hpp"

namespace hsid {

/// A read-only W x H plane (row-major).
struct BandView {
  std::size_t width = 0;
  std::size_t height = 0;
  std::span<const float> values;

  static BandView of(const HsiCube& cube, std::size_t band) { return {cube.width(), cube.height(), cube.band(band)}; }
};

/// Returned by psnr when the two bands are identical.
inline constexpr double kPsnrCapDb = 100.0;

/// 10 log10(peak^2 / MSE), or kPsnrCapDb when MSE is exactly zero.
double psnr(BandView ref, BandView test, double peak = 1.0);

struct SsimParams {
  std::size_t window = 11;
  double gaussian_sigma = 1.5;
  double k1 = 0.01;
  double k2 = 0.03;
  double dynamic_range = 1.0;
};

/// Mean local SSIM over every fully-contained window position.
double ssim(BandView ref, BandView test, const SsimParams& params = {});

struct SpectralAngle {
  std::optional<double> mean_degrees;  // empty when B < 2 or every pixel was skipped
  std::size_t skipped_pixels = 0;      // pixels where either spectrum has zero norm
};

SpectralAngle msa(const HsiCube& ref, const HsiCube& test);

struct QualityReport {
  double mpsnr = 0.0;
  double mssim = 0.0;
  std::optional<double> msa_degrees;
  std::size_t msa_skipped_pixels = 0;
  std::vector<double> per_band_psnr;
  std::vector<double> per_band_ssim;
};

QualityReport report(const HsiCube& ref, const HsiCube& test);

/// CSV: header "band,psnr_db,ssim", one row per band (0-based), then a
/// summary header "mpsnr,mssim,msa_deg" and its row ("NA" when the spectral
/// angle is unavailable).
void emit_csv(const QualityReport& report, const std::filesystem::path& path);

}  // namespace hsid
