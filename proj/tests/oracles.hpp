#pragma once

// Brute-force metric references written from the textbook definitions,
// sharing no code with the library.

#include <cmath>
#include <cstddef>
#include <vector>

#include "hsid/cube.hpp"

namespace hsid::testing {

inline double psnr_oracle(const HsiCube& a, const HsiCube& b, std::size_t band) {
  std::vector<long double> diff;
  for (std::size_t y = 0; y < a.height(); ++y)
    for (std::size_t x = 0; x < a.width(); ++x)
      diff.push_back(static_cast<long double>(a.at(x, y, band)) - static_cast<long double>(b.at(x, y, band)));
  long double sum = 0;
  for (long double d : diff) sum += d * d;
  const long double mse = sum / static_cast<long double>(diff.size());
  return static_cast<double>(10.0L * std::log10(1.0L / mse));
}

/// Single-scale SSIM: 11x11 Gaussian window (sigma 1.5), K1 0.01, K2 0.03,
/// L 1, mean over every window fully inside the band. Local statistics use
/// two-pass weighted moments.
inline double ssim_oracle(const HsiCube& a, const HsiCube& b, std::size_t band) {
  constexpr int n = 11;
  long double g[n][n];
  long double gsum = 0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      g[i][j] = std::exp(-static_cast<long double>((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2.0L * 1.5L * 1.5L));
      gsum += g[i][j];
    }
  const long double c1 = 0.01L * 0.01L, c2 = 0.03L * 0.03L;
  long double total = 0;
  std::size_t windows = 0;
  for (std::size_t y0 = 0; y0 + n <= a.height(); ++y0)
    for (std::size_t x0 = 0; x0 + n <= a.width(); ++x0) {
      long double mu_a = 0, mu_b = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          mu_a += g[i][j] / gsum * a.at(x0 + j, y0 + i, band);
          mu_b += g[i][j] / gsum * b.at(x0 + j, y0 + i, band);
        }
      long double va = 0, vb = 0, cov = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const long double w = g[i][j] / gsum;
          const long double da = a.at(x0 + j, y0 + i, band) - mu_a, db = b.at(x0 + j, y0 + i, band) - mu_b;
          va += w * da * da;
          vb += w * db * db;
          cov += w * da * db;
        }
      total += (2 * mu_a * mu_b + c1) * (2 * cov + c2) / ((mu_a * mu_a + mu_b * mu_b + c1) * (va + vb + c2));
      ++windows;
    }
  return static_cast<double>(total / static_cast<long double>(windows));
}

/// Mean spectral angle in degrees over pixels with non-zero spectra.
inline double msa_oracle(const HsiCube& a, const HsiCube& b) {
  long double total = 0;
  std::size_t used = 0;
  for (std::size_t y = 0; y < a.height(); ++y)
    for (std::size_t x = 0; x < a.width(); ++x) {
      long double ab = 0, aa = 0, bb = 0;
      for (std::size_t k = 0; k < a.bands(); ++k) {
        ab += static_cast<long double>(a.at(x, y, k)) * b.at(x, y, k);
        aa += static_cast<long double>(a.at(x, y, k)) * a.at(x, y, k);
        bb += static_cast<long double>(b.at(x, y, k)) * b.at(x, y, k);
      }
      if (aa == 0 || bb == 0) continue;
      long double c = ab / std::sqrt(aa * bb);
      c = c > 1 ? 1 : (c < -1 ? -1 : c);
      total += std::acos(c);
      ++used;
    }
  return static_cast<double>(total / static_cast<long double>(used) * 180.0L / 3.14159265358979323846264338327950288L);
}

}  // namespace hsid::testing
