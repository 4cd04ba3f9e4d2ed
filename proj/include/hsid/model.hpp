#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hsid/layers.hpp"
#include "hsid/tensor.hpp"

namespace hsid {

/// Shape knobs of the spatial-spectral residual network.
///
/// Data flow for one band of size H x W:
///   y_spatial [1,H,W]  -> one conv per scale (1 -> branch_channels)
///   y_spectral [K,H,W] -> one conv per scale (K -> branch_channels)
///   concat (spatial scales, then spectral scales) -> fused map
///   trunk: trunk_depth x (3x3 conv + ReLU), trunk_channels wide
///   concat of the post-ReLU outputs of tap_layers -> head conv -> phi [1,H,W]
/// and the reconstruction is y_spatial + phi.
struct ArchitectureSpec {
  std::size_t adjacent_bands = 24;  // K
  std::size_t branch_channels = 20;
  std::vector<std::size_t> scales{3, 5, 7};
  std::size_t trunk_depth = 9;
  std::size_t trunk_channels = 60;
  std::vector<std::size_t> tap_layers{3, 5, 7, 9};  // 1-based trunk layer indices
  std::size_t head_kernel = 3;
  bool branch_relu = true;

  static constexpr std::size_t kTrunkKernel = 3;

  void validate() const;

  std::size_t fused_channels() const { return 2 * scales.size() * branch_channels; }
  std::size_t tap_channels() const { return tap_layers.size() * trunk_channels; }
  /// Pixels of context on each side that can influence one output pixel.
  std::size_t receptive_radius() const;
  std::size_t parameter_count() const;

  friend bool operator==(const ArchitectureSpec&, const ArchitectureSpec&) = default;
};

/// Default architecture with K adjacent bands and the two ablation switches.
/// Without the multi-scale unit each branch is a single 3x3 conv widened so
/// the fused map keeps its channel count; without the multi-level unit the
/// head reads the last trunk layer only.
ArchitectureSpec make_architecture(std::size_t adjacent_bands, bool multi_scale = true, bool multi_level = true);

template <typename T>
struct ModelParams {
  std::vector<ConvLayerParams<T>> spatial;   // one per scale, in 1 -> branch_channels
  std::vector<ConvLayerParams<T>> spectral;  // one per scale, in K -> branch_channels
  std::vector<ConvLayerParams<T>> trunk;     // trunk_depth layers
  ConvLayerParams<T> head;                   // tap_channels -> 1

  /// All-zero parameters shaped for `spec`.
  static ModelParams zeros(const ArchitectureSpec& spec);

  /// Throws ShapeMismatch naming the first layer whose shape disagrees with `spec`.
  void check_shapes(const ArchitectureSpec& spec) const;

  std::size_t scalar_count() const;

  template <typename U>
  ModelParams<U> cast() const;

  friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

template <typename T>
template <typename U>
ModelParams<U> ModelParams<T>::cast() const {
  auto cast_layer = [](const ConvLayerParams<T>& l) {
    std::vector<U> b(l.bias.begin(), l.bias.end());
    return ConvLayerParams<U>(l.weights.template cast<U>(), std::move(b));
  };
  ModelParams<U> out;
  for (const auto& l : spatial) out.spatial.push_back(cast_layer(l));
  for (const auto& l : spectral) out.spectral.push_back(cast_layer(l));
  for (const auto& l : trunk) out.trunk.push_back(cast_layer(l));
  out.head = cast_layer(head);
  return out;
}

template <typename T>
using ParamGradients = ModelParams<T>;

/// A named, flat view of one parameter tensor (a layer's weights or bias).
template <typename T>
struct ParamBlock {
  std::string name;
  Shape shape;
  std::span<T> values;
};

/// Canonical ordering of every trainable tensor: spatial.k{3,5,7}, spectral.k*,
/// trunk.1..N, head; weight before bias.
template <typename T>
std::vector<ParamBlock<T>> param_blocks(ModelParams<T>& params);
template <typename T>
std::vector<ParamBlock<const T>> param_blocks(const ModelParams<T>& params);

template <typename T>
struct ForwardCache {
  ArchitectureSpec spec;
  BasicTensor<T> y_spatial;
  BasicTensor<T> y_spectral;
  std::vector<BasicTensor<T>> branch_out;  // spatial scales then spectral scales
  BasicTensor<T> fused;
  std::vector<BasicTensor<T>> trunk_out;   // post-ReLU output of each trunk layer
  BasicTensor<T> taps;                     // concat of tapped trunk outputs
};

/// He-style initialisation: weights ~ N(0, 2 / (in_channels * k^2)), biases 0.
/// Each parameter block draws from its own seeded substream.
template <typename T>
ModelParams<T> init_params(const ArchitectureSpec& spec, std::uint64_t seed);

template <typename T>
struct ForwardResult {
  BasicTensor<T> phi;
  ForwardCache<T> cache;
};

template <typename T>
ForwardResult<T> forward(const BasicTensor<T>& y_spatial, const BasicTensor<T>& y_spectral,
                         const ModelParams<T>& params, const ArchitectureSpec& spec);

/// Forward pass that keeps only what is needed to produce phi.
template <typename T>
BasicTensor<T> predict_residual(const BasicTensor<T>& y_spatial, const BasicTensor<T>& y_spectral,
                                const ModelParams<T>& params, const ArchitectureSpec& spec);

template <typename T>
ParamGradients<T> backward(const ForwardCache<T>& cache, const ModelParams<T>& params, const BasicTensor<T>& grad_phi);

/// Adds the parameter gradients for `grad_phi` into `grads`.
template <typename T>
void backward_accumulate(const ForwardCache<T>& cache, const ModelParams<T>& params, const BasicTensor<T>& grad_phi,
                         ParamGradients<T>& grads);

/// x_hat = y_spatial + phi.
template <typename T>
BasicTensor<T> denoise_patch(const BasicTensor<T>& y_spatial, const BasicTensor<T>& y_spectral,
                             const ModelParams<T>& params, const ArchitectureSpec& spec);

}  // namespace hsid
