#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "hsid/error.hpp"
#include "hsid/model.hpp"
#include "hsid/tensor.hpp"

namespace hsid {

/// Central-difference gradient estimate of a scalar function, one component
/// at a time: g_i = (f(p + h e_i) - f(p - h e_i)) / 2h.
inline TensorD finite_diff_grad(const std::function<double(const TensorD&)>& scalar_fn, const TensorD& point,
                                double step) {
  if (!(step > 0.0)) throw Error(ErrorCode::InvalidArgument, "finite_diff_grad: step must be positive");
  TensorD grad(point.shape());
  TensorD probe = point;
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + step;
    const double up = scalar_fn(probe);
    probe[i] = orig - step;
    const double down = scalar_fn(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * step);
  }
  return grad;
}

/// |a - b| / max(|a|, |b|), with the denominator floored at `floor` so that
/// two values that are both negligible compare as equal.
inline double relative_error(double a, double b, double floor = 1e-12) {
  const double denom = std::max({std::abs(a), std::abs(b), floor});
  return std::abs(a - b) / denom;
}


/// Full-network gradient check of the residual loss in double precision.
/// For every parameter tensor it compares the analytic gradient against
/// central differences on the `components` largest-magnitude entries and on
/// one unit-norm random direction spanning the whole tensor.
struct GradcheckOptions {
  ArchitectureSpec spec = make_architecture(4);
  std::size_t patch = 8;
  std::size_t batch = 2;
  std::uint64_t seed = 1;
  double step = 1e-5;
  std::size_t components = 3;
  double floor = 1e-8;            // relative_error denominator floor
  bool corrupt_backward = false;  // negative control: perturbs one analytic gradient
};

struct TensorCheck {
  std::string name;
  double worst = 0.0;
  std::size_t probes = 0;
};

struct GradcheckReport {
  std::vector<TensorCheck> tensors;
  double max_error = 0.0;

  bool passed(double tolerance = 1e-5) const { return max_error < tolerance; }
};

GradcheckReport run_gradcheck(const GradcheckOptions& options);

}  // namespace hsid
