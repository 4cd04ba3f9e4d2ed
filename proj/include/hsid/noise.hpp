#pragma once

#include <cstddef>
#include <cstdint>
#include <variant>
#include <vector>

#include "hsid/cube.hpp"

namespace hsid {

/// Same sigma in every band.
struct FixedNoise {
  double sigma = 25.0;
};

/// Per-band sigma drawn i.i.d. uniform on (0, sigma_max].
struct UniformPerBandNoise {
  double sigma_max = 25.0;
};

/// Sigma follows a Gaussian bump along the spectrum, scaled so that the
/// squared sigmas sum to beta^2:
///   sigma_n = beta * sqrt(exp(-(n - B/2)^2 / (2 eta^2)) / sum_i exp(-(i - B/2)^2 / (2 eta^2)))
/// for n = 1..B.
struct GaussianCurveNoise {
  double beta = 200.0;
  double eta = 30.0;
};

/// Sigma values are on the 0-255 grey scale; they are divided by 255 when
/// applied to cubes normalised to [0, 1].
struct NoiseSpec {
  std::variant<FixedNoise, UniformPerBandNoise, GaussianCurveNoise> variant = FixedNoise{};
  std::uint64_t seed = 1;

  void validate() const;
};

inline constexpr double kGreyScale = 255.0;

/// Per-band sigma (0-255 scale), one entry per band.
std::vector<double> sigma_profile(const NoiseSpec& spec, std::size_t bands);

/// Y = X + V with V's band n i.i.d. N(0, (sigma_n / 255)^2). Band n draws from
/// its own substream derive_key(seed, NoiseBand, n). The result is not clipped.
HsiCube add_noise(const HsiCube& cube, const NoiseSpec& spec);

/// Guard margins around [0, 1]: clean cubes must be normalised up to
/// rounding; noisy cubes carry unclipped noise, so only values that can only
/// come from un-normalised data are rejected.
inline constexpr double kCleanGuard = 0.01;
inline constexpr double kNoisyGuard = 1.5;

/// Throws Unnormalized when a value lies outside [-margin, 1 + margin].
void require_normalized(const HsiCube& cube, const char* context, double margin = kCleanGuard);

}  // namespace hsid
