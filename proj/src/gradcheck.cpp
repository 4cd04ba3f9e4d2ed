#include "hsid/gradcheck.hpp"

#include <limits>
#include <numeric>

#include "hsid/random.hpp"
#include "hsid/trainer.hpp"

namespace hsid {
namespace {

constexpr int kDirectionAttempts = 16;

}  // namespace

GradcheckReport run_gradcheck(const GradcheckOptions& options) {
  const ArchitectureSpec& spec = options.spec;
  spec.validate();
  const auto params = init_params<double>(spec, options.seed);
  const std::size_t p = options.patch;

  std::vector<PatchSample<double>> batch;
  for (std::size_t i = 0; i < options.batch; ++i) {
    SplitMix64 rng(derive_key(options.seed, 0x6772616463ULL, i));
    PatchSample<double> s{TensorD({1, p, p}), TensorD({spec.adjacent_bands, p, p}), TensorD({1, p, p})};
    for (double& v : s.label_clean.values()) v = rng.uniform();
    for (std::size_t j = 0; j < s.y_spatial.size(); ++j) s.y_spatial[j] = s.label_clean[j] + 0.2 * (rng.uniform() - 0.5);
    for (double& v : s.y_spectral.values()) v = rng.uniform();
    batch.push_back(std::move(s));
  }
  auto loss_at = [&](const ModelParams<double>& q) { return residual_loss<double>(batch, q, spec).loss; };
  // Central differences are only meaningful where the network is smooth:
  // a probe whose perturbation flips any ReLU is resampled.
  auto pattern = [&](const ModelParams<double>& q) {
    std::vector<bool> bits;
    for (const auto& s : batch) {
      const auto cache = forward(s.y_spatial, s.y_spectral, q, spec).cache;
      for (const auto* group : {&cache.branch_out, &cache.trunk_out})
        for (const auto& t : *group)
          for (double v : t.values()) bits.push_back(v > 0.0);
    }
    return bits;
  };
  const std::vector<bool> base_pattern = pattern(params);
  struct Probe {
    double up, down;
    bool smooth;
  };

  auto grads = residual_loss<double>(batch, params, spec).grads;
  auto gblocks = param_blocks(grads);
  if (options.corrupt_backward) {
    for (double& v : gblocks.back().values) v *= 1.001;
  }

  GradcheckReport report;
  const double h = options.step;
  for (std::size_t b = 0; b < gblocks.size(); ++b) {
    TensorCheck check{gblocks[b].name, 0.0, 0};
    const auto g = gblocks[b].values;

    std::vector<std::size_t> idx(g.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    const std::size_t n = std::min(options.components, idx.size());
    std::partial_sort(idx.begin(), idx.begin() + static_cast<long>(n), idx.end(),
                      [&](std::size_t a, std::size_t c) { return std::abs(g[a]) > std::abs(g[c]); });
    auto probe_component = [&](std::size_t i) {
      auto q = params;
      double& v = param_blocks(q)[b].values[i];
      const double orig = v;
      v = orig + h;
      Probe r{loss_at(q), 0.0, pattern(q) == base_pattern};
      v = orig - h;
      r.down = loss_at(q);
      r.smooth = r.smooth && pattern(q) == base_pattern;
      return r;
    };
    for (std::size_t j = 0, found = 0; j < idx.size() && found < n; ++j) {
      const Probe r = probe_component(idx[j]);
      if (!r.smooth) continue;
      check.worst = std::max(check.worst, relative_error(g[idx[j]], (r.up - r.down) / (2 * h), options.floor));
      ++check.probes;
      ++found;
    }

    NormalStream normal(derive_key(options.seed, 0x646972ULL, b));
    for (int attempt = 0; attempt < kDirectionAttempts; ++attempt) {
      std::vector<double> dir(g.size());
      double norm = 0.0;
      for (double& d : dir) {
        d = normal.next();
        norm += d * d;
      }
      norm = std::sqrt(norm);
      double analytic = 0.0;
      for (std::size_t i = 0; i < dir.size(); ++i) {
        dir[i] /= norm;
        analytic += dir[i] * g[i];
      }
      auto shifted = [&](double s, bool& smooth) {
        auto q = params;
        auto blk = param_blocks(q)[b].values;
        for (std::size_t i = 0; i < dir.size(); ++i) blk[i] += s * dir[i];
        smooth = smooth && pattern(q) == base_pattern;
        return loss_at(q);
      };
      bool smooth = true;
      const double numeric = (shifted(h, smooth) - shifted(-h, smooth)) / (2 * h);
      if (!smooth) continue;
      check.worst = std::max(check.worst, relative_error(analytic, numeric, options.floor));
      ++check.probes;
      break;
    }

    if (check.probes < n + 1) check.worst = std::numeric_limits<double>::infinity();
    report.max_error = std::max(report.max_error, check.worst);
    report.tensors.push_back(std::move(check));
  }
  return report;
}

}  // namespace hsid
