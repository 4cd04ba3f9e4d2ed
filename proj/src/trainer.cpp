#include "hsid/trainer.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <string>

#include "hsid/error.hpp"
#include "hsid/random.hpp"

namespace hsid {

void OptimizerConfig::validate() const {
  if (!(alpha > 0.0) || !(epsilon > 0.0)) throw Error(ErrorCode::InvalidArgument, "optimizer: alpha and epsilon must be positive");
  if (!(beta1 > 0.0 && beta1 < 1.0) || !(beta2 > 0.0 && beta2 < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "optimizer: beta1 and beta2 must lie in (0, 1)");
  }
  if (!(decay_factor > 0.0)) throw Error(ErrorCode::InvalidArgument, "optimizer: decay factor must be positive");
}

double OptimizerConfig::learning_rate(std::uint64_t step) const {
  if (decay_every == 0 || step == 0) return alpha;
  return alpha * std::pow(decay_factor, static_cast<double>((step - 1) / decay_every));
}

void TrainConfig::validate() const {
  if (batch_size == 0) throw Error(ErrorCode::InvalidArgument, "train: batch size must be >= 1");
}

template <typename T>
LossAndGradients<T> residual_loss(std::span<const PatchSample<T>> batch, const ModelParams<T>& params,
                                  const ArchitectureSpec& spec) {
  if (batch.empty()) throw Error(ErrorCode::InvalidArgument, "residual_loss: empty batch");
  LossAndGradients<T> out{0.0, ModelParams<T>::zeros(spec)};
  const T inv_batch = T{1} / static_cast<T>(batch.size());
  double sum_sq = 0.0;
  for (const auto& sample : batch) {
    if (sample.label_clean.shape() != sample.y_spatial.shape()) {
      throw Error(ErrorCode::ShapeMismatch, "residual_loss: label shape " + shape_string(sample.label_clean.shape()) +
                                                " differs from input " + shape_string(sample.y_spatial.shape()));
    }
    auto fr = forward(sample.y_spatial, sample.y_spectral, params, spec);
    BasicTensor<T>& grad_phi = fr.phi;  // reused in place: becomes (phi - target) / T
    for (std::size_t i = 0; i < grad_phi.size(); ++i) {
      const T target = sample.label_clean[i] - sample.y_spatial[i];
      const T r = grad_phi[i] - target;
      sum_sq += static_cast<double>(r) * static_cast<double>(r);
      grad_phi[i] = r * inv_batch;
    }
    backward_accumulate(fr.cache, params, grad_phi, out.grads);
  }
  out.loss = sum_sq / (2.0 * static_cast<double>(batch.size()));
  return out;
}

template <typename T>
void adam_update(ModelParams<T>& params, const ParamGradients<T>& grads, AdamState<T>& state,
                 const OptimizerConfig& config) {
  config.validate();
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double lr = config.learning_rate(state.step);
  const double bc1 = 1.0 - std::pow(config.beta1, t);
  const double bc2 = 1.0 - std::pow(config.beta2, t);
  auto p = param_blocks(params);
  const auto g = param_blocks(grads);
  auto m = param_blocks(state.m);
  auto v = param_blocks(state.v);
  if (p.size() != g.size() || p.size() != m.size() || p.size() != v.size()) {
    throw Error(ErrorCode::ShapeMismatch, "adam: parameter, gradient and moment layouts differ");
  }
  for (std::size_t b = 0; b < p.size(); ++b) {
    if (p[b].values.size() != g[b].values.size() || p[b].values.size() != m[b].values.size() ||
        p[b].values.size() != v[b].values.size()) {
      throw Error(ErrorCode::ShapeMismatch, "adam: block " + p[b].name + " has mismatched gradient or moment size");
    }
    for (std::size_t i = 0; i < p[b].values.size(); ++i) {
      const double gi = g[b].values[i];
      const double mi = config.beta1 * static_cast<double>(m[b].values[i]) + (1.0 - config.beta1) * gi;
      const double vi = config.beta2 * static_cast<double>(v[b].values[i]) + (1.0 - config.beta2) * gi * gi;
      m[b].values[i] = static_cast<T>(mi);
      v[b].values[i] = static_cast<T>(vi);
      const double step = lr * (mi / bc1) / (std::sqrt(vi / bc2) + config.epsilon);
      p[b].values[i] = static_cast<T>(static_cast<double>(p[b].values[i]) - step);
    }
  }
}

template <typename T>
std::pair<ModelParams<T>, AdamState<T>> adam_step(const ModelParams<T>& params, const ParamGradients<T>& grads,
                                                  const AdamState<T>& state, const OptimizerConfig& config) {
  std::pair<ModelParams<T>, AdamState<T>> out{params, state};
  adam_update(out.first, grads, out.second, config);
  return out;
}

template <typename T>
void check_finite(double loss, const ParamGradients<T>& grads, std::uint64_t iteration) {
  if (!std::isfinite(loss)) {
    throw Error(ErrorCode::Divergence, "non-finite loss " + std::to_string(loss) + " at iteration " +
                                           std::to_string(iteration) + "; lower the learning rate");
  }
  for (const auto& b : param_blocks(grads)) {
    for (T v : b.values) {
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::Divergence, "non-finite gradient in " + b.name + " at iteration " + std::to_string(iteration));
      }
    }
  }
}

template <typename T>
TrainResult<T> train(const PatchDataset& dataset, const ArchitectureSpec& spec, const TrainConfig& config,
                     const OptimizerConfig& optimizer, ModelParams<T> initial, std::optional<AdamState<T>> resume,
                     const SnapshotFn<T>& snapshot) {
  config.validate();
  optimizer.validate();
  initial.check_shapes(spec);
  TrainResult<T> result{std::move(initial), resume ? std::move(*resume) : AdamState<T>::fresh(spec), {}};
  if (config.epochs == 0) return result;
  if (dataset.empty()) throw Error(ErrorCode::InvalidArgument, "train: dataset is empty");

  const std::size_t n = dataset.size();
  const std::size_t per_epoch = (n + config.batch_size - 1) / config.batch_size;
  const std::uint64_t last = static_cast<std::uint64_t>(config.epochs) * per_epoch;
  const std::uint64_t stop = config.max_iterations ? std::min<std::uint64_t>(last, config.max_iterations) : last;

  std::size_t perm_epoch = static_cast<std::size_t>(-1);
  std::vector<std::size_t> perm;
  std::vector<PatchSample<T>> batch;
  for (std::uint64_t t = result.state.step + 1; t <= stop; ++t) {
    const std::size_t epoch = static_cast<std::size_t>((t - 1) / per_epoch);
    const std::size_t offset = static_cast<std::size_t>((t - 1) % per_epoch) * config.batch_size;
    if (epoch != perm_epoch) {
      perm = random_permutation(n, derive_key(config.shuffle_seed, static_cast<std::uint64_t>(Stream::ShuffleEpoch), epoch));
      perm_epoch = epoch;
    }
    batch.clear();
    for (std::size_t i = offset; i < std::min(n, offset + config.batch_size); ++i) {
      if constexpr (std::is_same_v<T, float>) {
        batch.push_back(dataset.at(perm[i]));
      } else {
        batch.push_back(dataset.at(perm[i]).template cast<T>());
      }
    }
    auto lg = residual_loss<T>(batch, result.params, spec);
    check_finite(lg.loss, lg.grads, t);
    adam_update(result.params, lg.grads, result.state, optimizer);
    result.trace.push_back({t, epoch, lg.loss});
    if (snapshot && config.snapshot_every && t % config.snapshot_every == 0) snapshot(t, result.params, result.state);
  }
  return result;
}

void write_loss_trace(const std::vector<LossRecord>& trace, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << std::setprecision(17) << "iteration,epoch,loss\n";
  for (const auto& r : trace) out << r.iteration << ',' << r.epoch << ',' << r.loss << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

#define HSID_INSTANTIATE_TRAINER(T)                                                                                  \
  template LossAndGradients<T> residual_loss(std::span<const PatchSample<T>>, const ModelParams<T>&,                 \
                                             const ArchitectureSpec&);                                               \
  template void adam_update(ModelParams<T>&, const ParamGradients<T>&, AdamState<T>&, const OptimizerConfig&);       \
  template std::pair<ModelParams<T>, AdamState<T>> adam_step(const ModelParams<T>&, const ParamGradients<T>&,        \
                                                             const AdamState<T>&, const OptimizerConfig&);           \
  template void check_finite(double, const ParamGradients<T>&, std::uint64_t);                                       \
  template TrainResult<T> train(const PatchDataset&, const ArchitectureSpec&, const TrainConfig&,                    \
                                const OptimizerConfig&, ModelParams<T>, std::optional<AdamState<T>>,                 \
                                const SnapshotFn<T>&);

HSID_INSTANTIATE_TRAINER(float)
HSID_INSTANTIATE_TRAINER(double)

#undef HSID_INSTANTIATE_TRAINER

}  // namespace hsid
