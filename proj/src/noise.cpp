#include "hsid/noise.hpp"

#include <cmath>
#include <string>

#include "hsid/error.hpp"
#include "hsid/random.hpp"

namespace hsid {
namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

void require_positive(double v, const char* name) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidArgument, std::string("noise: ") + name + " must be positive, got " + std::to_string(v));
  }
}

}  // namespace

void NoiseSpec::validate() const {
  std::visit(overloaded{
                 [](const FixedNoise& n) { require_positive(n.sigma, "sigma"); },
                 [](const UniformPerBandNoise& n) { require_positive(n.sigma_max, "sigma_max"); },
                 [](const GaussianCurveNoise& n) {
                   require_positive(n.beta, "beta");
                   require_positive(n.eta, "eta");
                 },
             },
             variant);
}

std::vector<double> sigma_profile(const NoiseSpec& spec, std::size_t bands) {
  if (bands == 0) throw Error(ErrorCode::InvalidArgument, "sigma_profile: band count must be positive");
  spec.validate();
  std::vector<double> sigma(bands);
  std::visit(overloaded{
                 [&](const FixedNoise& n) { std::fill(sigma.begin(), sigma.end(), n.sigma); },
                 [&](const UniformPerBandNoise& n) {
                   SplitMix64 rng(derive_key(spec.seed, static_cast<std::uint64_t>(Stream::SigmaProfile)));
                   for (double& s : sigma) s = n.sigma_max * rng.uniform_open_closed();
                 },
                 [&](const GaussianCurveNoise& n) {
                   const double centre = static_cast<double>(bands) / 2.0;
                   std::vector<double> weight(bands);
                   double total = 0.0;
                   for (std::size_t i = 0; i < bands; ++i) {
                     const double d = static_cast<double>(i + 1) - centre;
                     weight[i] = std::exp(-(d * d) / (2.0 * n.eta * n.eta));
                     total += weight[i];
                   }
                   for (std::size_t i = 0; i < bands; ++i) sigma[i] = n.beta * std::sqrt(weight[i] / total);
                 },
             },
             spec.variant);
  return sigma;
}

void require_normalized(const HsiCube& cube, const char* context, double margin) {
  const auto v = cube.values();
  const double lo = -margin, hi = 1.0 + margin;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!(v[i] >= lo && v[i] <= hi)) {
      throw Error(ErrorCode::Unnormalized, std::string(context) + ": value " + std::to_string(v[i]) + " at index " +
                                               std::to_string(i) + " is outside [0,1]; normalise the cube first");
    }
  }
}

HsiCube add_noise(const HsiCube& cube, const NoiseSpec& spec) {
  require_normalized(cube, "add_noise");
  const std::vector<double> sigma = sigma_profile(spec, cube.bands());
  HsiCube noisy = cube;
  for (std::size_t b = 0; b < cube.bands(); ++b) {
    NormalStream normal(derive_key(spec.seed, static_cast<std::uint64_t>(Stream::NoiseBand), b));
    const double scale = sigma[b] / kGreyScale;
    for (float& v : noisy.band(b)) v = static_cast<float>(static_cast<double>(v) + scale * normal.next());
  }
  return noisy;
}

}  // namespace hsid
