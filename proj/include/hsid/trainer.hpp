#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "hsid/model.hpp"
#include "hsid/pipeline.hpp"

namespace hsid {

struct OptimizerConfig {
  double alpha = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  // Step decay, off by default: alpha * decay_factor^floor((t-1) / decay_every).
  double decay_factor = 1.0;
  std::size_t decay_every = 0;

  void validate() const;
  double learning_rate(std::uint64_t step) const;
};

template <typename T>
struct AdamState {
  ModelParams<T> m;  // first moments, shaped like the parameters
  ModelParams<T> v;  // second moments
  std::uint64_t step = 0;

  static AdamState fresh(const ArchitectureSpec& spec) {
    return {ModelParams<T>::zeros(spec), ModelParams<T>::zeros(spec), 0};
  }

  friend bool operator==(const AdamState&, const AdamState&) = default;
};

struct TrainConfig {
  std::size_t epochs = 100;
  std::size_t batch_size = 128;
  std::uint64_t shuffle_seed = 3;
  std::size_t snapshot_every = 0;  // iterations; 0 disables snapshots
  std::size_t max_iterations = 0;  // absolute cap on the step counter; 0 = none

  void validate() const;
};

struct LossRecord {
  std::uint64_t iteration = 0;  // 1-based Adam step
  std::size_t epoch = 0;        // 0-based
  double loss = 0.0;

  friend bool operator==(const LossRecord&, const LossRecord&) = default;
};

template <typename T>
struct LossAndGradients {
  double loss = 0.0;
  ParamGradients<T> grads;
};

/// loss = 1/(2T) * sum_i || Net(y_spatial_i, y_spectral_i) - (x_i - y_spatial_i) ||^2
/// over a batch of T samples, with its exact gradient. Gradients are
/// accumulated in sample order.
template <typename T>
LossAndGradients<T> residual_loss(std::span<const PatchSample<T>> batch, const ModelParams<T>& params,
                                  const ArchitectureSpec& spec);

/// In-place bias-corrected Adam update; increments state.step.
template <typename T>
void adam_update(ModelParams<T>& params, const ParamGradients<T>& grads, AdamState<T>& state,
                 const OptimizerConfig& config);

/// Pure form of adam_update.
template <typename T>
std::pair<ModelParams<T>, AdamState<T>> adam_step(const ModelParams<T>& params, const ParamGradients<T>& grads,
                                                  const AdamState<T>& state, const OptimizerConfig& config);

/// Throws Divergence when the loss or any gradient is not finite.
template <typename T>
void check_finite(double loss, const ParamGradients<T>& grads, std::uint64_t iteration);

template <typename T>
using SnapshotFn = std::function<void(std::uint64_t iteration, const ModelParams<T>&, const AdamState<T>&)>;

template <typename T>
struct TrainResult {
  ModelParams<T> params;
  AdamState<T> state;
  std::vector<LossRecord> trace;
};

/// Mini-batch Adam over `dataset`. Epoch e visits the samples in the order
/// random_permutation(N, derive_key(shuffle_seed, ShuffleEpoch, e)), in
/// batches of batch_size (the last one may be short). Training resumes at
/// state.step, so a run restored from a checkpoint continues the same
/// trajectory. The recorded loss is the batch loss before the update.
template <typename T>
TrainResult<T> train(const PatchDataset& dataset, const ArchitectureSpec& spec, const TrainConfig& config,
                     const OptimizerConfig& optimizer, ModelParams<T> initial, std::optional<AdamState<T>> resume = {},
                     const SnapshotFn<T>& snapshot = {});

/// CSV with columns iteration,epoch,loss.
void write_loss_trace(const std::vector<LossRecord>& trace, const std::filesystem::path& path);

}  // namespace hsid
