#include "hsid/model.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hsid/random.hpp"

namespace hsid {
namespace {

std::string num(std::size_t v) { return std::to_string(v); }

bool is_tap(const ArchitectureSpec& spec, std::size_t layer) {
  return std::find(spec.tap_layers.begin(), spec.tap_layers.end(), layer) != spec.tap_layers.end();
}

std::size_t trunk_in_channels(const ArchitectureSpec& spec, std::size_t layer_index) {
  return layer_index == 0 ? spec.fused_channels() : spec.trunk_channels;
}

template <typename T>
void check_layer(const ConvLayerParams<T>& layer, const std::string& name, std::size_t out, std::size_t in,
                 std::size_t k) {
  const Shape expected{out, in, k, k};
  if (layer.weights.shape() != expected || layer.bias.size() != out) {
    throw Error(ErrorCode::ShapeMismatch, "layer " + name + ": weight shape " + shape_string(layer.weights.shape()) +
                                              ", expected " + shape_string(expected));
  }
}

template <typename T>
void check_inputs(const BasicTensor<T>& y_spatial, const BasicTensor<T>& y_spectral, const ArchitectureSpec& spec) {
  if (y_spatial.rank() != 3 || y_spatial.channels() != 1) {
    throw Error(ErrorCode::ShapeMismatch, "spatial input must be [1,H,W], got " + shape_string(y_spatial.shape()));
  }
  if (y_spectral.rank() != 3 || y_spectral.channels() != spec.adjacent_bands) {
    throw Error(ErrorCode::ShapeMismatch, "spectral input must be [" + num(spec.adjacent_bands) + ",H,W], got " +
                                              shape_string(y_spectral.shape()));
  }
  if (y_spectral.height() != y_spatial.height() || y_spectral.width() != y_spatial.width()) {
    throw Error(ErrorCode::ShapeMismatch, "spectral input " + shape_string(y_spectral.shape()) +
                                              " and spatial input " + shape_string(y_spatial.shape()) +
                                              " differ in H,W");
  }
}

// Shared by forward (cache != nullptr) and predict_residual.
template <typename T>
BasicTensor<T> run_forward(const BasicTensor<T>& y_spatial, const BasicTensor<T>& y_spectral,
                           const ModelParams<T>& params, const ArchitectureSpec& spec, ForwardCache<T>* cache) {
  spec.validate();
  params.check_shapes(spec);
  check_inputs(y_spatial, y_spectral, spec);

  std::vector<BasicTensor<T>> branches;
  branches.reserve(2 * spec.scales.size());
  for (const auto& layer : params.spatial) branches.push_back(conv2d_forward(y_spatial, layer));
  for (const auto& layer : params.spectral) branches.push_back(conv2d_forward(y_spectral, layer));
  if (spec.branch_relu) {
    for (auto& b : branches) relu_inplace(b);
  }
  BasicTensor<T> fused = concat_channels<T>(branches);

  std::vector<BasicTensor<T>> tapped;
  tapped.reserve(spec.tap_layers.size());
  std::vector<BasicTensor<T>> trunk_out;
  BasicTensor<T> current;
  for (std::size_t l = 0; l < spec.trunk_depth; ++l) {
    BasicTensor<T> next = conv2d_forward(l == 0 ? fused : current, params.trunk[l]);
    relu_inplace(next);
    if (is_tap(spec, l + 1)) tapped.push_back(next);
    if (cache) trunk_out.push_back(next);
    current = std::move(next);
  }
  BasicTensor<T> taps = concat_channels<T>(tapped);
  tapped.clear();
  BasicTensor<T> phi = conv2d_forward(taps, params.head);

  if (cache) {
    cache->spec = spec;
    cache->y_spatial = y_spatial;
    cache->y_spectral = y_spectral;
    cache->branch_out = std::move(branches);
    cache->fused = std::move(fused);
    cache->trunk_out = std::move(trunk_out);
    cache->taps = std::move(taps);
  }
  return phi;
}

template <typename T>
void check_cache(const ForwardCache<T>& cache, const BasicTensor<T>& grad_phi) {
  const auto& spec = cache.spec;
  const std::size_t branches = 2 * spec.scales.size();
  if (cache.y_spatial.rank() != 3 || cache.branch_out.size() != branches || cache.trunk_out.size() != spec.trunk_depth ||
      cache.fused.rank() != 3 || cache.fused.channels() != spec.fused_channels() || cache.taps.rank() != 3 ||
      cache.taps.channels() != spec.tap_channels()) {
    throw Error(ErrorCode::ShapeMismatch, "backward: forward cache is incomplete or inconsistent with its spec");
  }
  const Shape plane{1, cache.y_spatial.height(), cache.y_spatial.width()};
  if (grad_phi.shape() != plane) {
    throw Error(ErrorCode::ShapeMismatch, "backward: grad_phi shape " + shape_string(grad_phi.shape()) +
                                              " does not match cached forward " + shape_string(plane));
  }
  for (const auto& t : cache.trunk_out) {
    if (t.height() != plane[1] || t.width() != plane[2]) {
      throw Error(ErrorCode::ShapeMismatch, "backward: cached trunk activation has stale spatial size");
    }
  }
}

template <typename T>
void mask_by_activation(BasicTensor<T>& grad, const BasicTensor<T>& post_relu) {
  for (std::size_t i = 0; i < grad.size(); ++i) {
    if (!(post_relu[i] > T{0})) grad[i] = T{0};
  }
}

template <typename T>
void add_into(BasicTensor<T>& dst, const BasicTensor<T>& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

template <typename T, typename Params>
auto blocks_impl(Params& params) {
  std::vector<ParamBlock<T>> out;
  auto add_layer = [&](auto& layer, const std::string& prefix) {
    out.push_back({prefix + ".weight", layer.weights.shape(), std::span<T>(layer.weights.data(), layer.weights.size())});
    out.push_back({prefix + ".bias", Shape{layer.bias.size()}, std::span<T>(layer.bias.data(), layer.bias.size())});
  };
  for (auto& l : params.spatial) add_layer(l, "spatial.k" + num(l.kernel_size()));
  for (auto& l : params.spectral) add_layer(l, "spectral.k" + num(l.kernel_size()));
  for (std::size_t i = 0; i < params.trunk.size(); ++i) add_layer(params.trunk[i], "trunk." + num(i + 1));
  add_layer(params.head, "head");
  return out;
}

}  // namespace

void ArchitectureSpec::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, "architecture: " + msg); };
  if (adjacent_bands < 2 || adjacent_bands % 2 != 0) fail("K must be even and >= 2, got " + num(adjacent_bands));
  if (branch_channels == 0 || trunk_channels == 0) fail("channel counts must be positive");
  if (scales.empty()) fail("at least one branch scale is required");
  for (std::size_t k : scales) {
    if (k % 2 == 0) fail("branch kernel sizes must be odd, got " + num(k));
  }
  if (trunk_depth == 0) fail("trunk depth must be positive");
  if (tap_layers.empty()) fail("at least one tap layer is required");
  for (std::size_t i = 0; i < tap_layers.size(); ++i) {
    if (tap_layers[i] < 1 || tap_layers[i] > trunk_depth) fail("tap layer " + num(tap_layers[i]) + " outside 1.." + num(trunk_depth));
    if (i > 0 && tap_layers[i] <= tap_layers[i - 1]) fail("tap layers must be strictly increasing");
  }
  if (head_kernel % 2 == 0) fail("head kernel size must be odd, got " + num(head_kernel));
}

std::size_t ArchitectureSpec::receptive_radius() const {
  const std::size_t branch = *std::max_element(scales.begin(), scales.end()) / 2;
  const std::size_t deepest_tap = tap_layers.back();
  return branch + deepest_tap * (kTrunkKernel / 2) + head_kernel / 2;
}

std::size_t ArchitectureSpec::parameter_count() const {
  std::size_t total = 0;
  for (std::size_t k : scales) {
    total += branch_channels * 1 * k * k + branch_channels;
    total += branch_channels * adjacent_bands * k * k + branch_channels;
  }
  const std::size_t kk = kTrunkKernel * kTrunkKernel;
  total += trunk_channels * fused_channels() * kk + trunk_channels;
  total += (trunk_depth - 1) * (trunk_channels * trunk_channels * kk + trunk_channels);
  total += tap_channels() * head_kernel * head_kernel + 1;
  return total;
}

ArchitectureSpec make_architecture(std::size_t adjacent_bands, bool multi_scale, bool multi_level) {
  ArchitectureSpec spec;
  spec.adjacent_bands = adjacent_bands;
  if (!multi_scale) {
    spec.branch_channels *= spec.scales.size();
    spec.scales = {3};
  }
  if (!multi_level) spec.tap_layers = {spec.trunk_depth};
  spec.validate();
  return spec;
}

template <typename T>
ModelParams<T> ModelParams<T>::zeros(const ArchitectureSpec& spec) {
  spec.validate();
  ModelParams p;
  for (std::size_t k : spec.scales) p.spatial.emplace_back(spec.branch_channels, 1, k);
  for (std::size_t k : spec.scales) p.spectral.emplace_back(spec.branch_channels, spec.adjacent_bands, k);
  for (std::size_t l = 0; l < spec.trunk_depth; ++l) {
    p.trunk.emplace_back(spec.trunk_channels, trunk_in_channels(spec, l), ArchitectureSpec::kTrunkKernel);
  }
  p.head = ConvLayerParams<T>(1, spec.tap_channels(), spec.head_kernel);
  return p;
}

template <typename T>
void ModelParams<T>::check_shapes(const ArchitectureSpec& spec) const {
  const std::size_t S = spec.scales.size();
  if (spatial.size() != S || spectral.size() != S) {
    throw Error(ErrorCode::ShapeMismatch, "model has " + num(spatial.size()) + "/" + num(spectral.size()) +
                                              " branch layers, spec expects " + num(S));
  }
  if (trunk.size() != spec.trunk_depth) {
    throw Error(ErrorCode::ShapeMismatch, "model has " + num(trunk.size()) + " trunk layers, spec expects " +
                                              num(spec.trunk_depth));
  }
  for (std::size_t s = 0; s < S; ++s) {
    const std::size_t k = spec.scales[s];
    check_layer(spatial[s], "spatial.k" + num(k), spec.branch_channels, 1, k);
    check_layer(spectral[s], "spectral.k" + num(k), spec.branch_channels, spec.adjacent_bands, k);
  }
  for (std::size_t l = 0; l < spec.trunk_depth; ++l) {
    check_layer(trunk[l], "trunk." + num(l + 1), spec.trunk_channels, trunk_in_channels(spec, l),
                ArchitectureSpec::kTrunkKernel);
  }
  check_layer(head, "head", 1, spec.tap_channels(), spec.head_kernel);
}

template <typename T>
std::size_t ModelParams<T>::scalar_count() const {
  std::size_t n = 0;
  for (const auto& b : param_blocks(*this)) n += b.values.size();
  return n;
}

template <typename T>
std::vector<ParamBlock<T>> param_blocks(ModelParams<T>& params) {
  return blocks_impl<T>(params);
}

template <typename T>
std::vector<ParamBlock<const T>> param_blocks(const ModelParams<T>& params) {
  return blocks_impl<const T>(params);
}

template <typename T>
ModelParams<T> init_params(const ArchitectureSpec& spec, std::uint64_t seed) {
  ModelParams<T> params = ModelParams<T>::zeros(spec);
  std::uint64_t index = 0;
  auto init_layer = [&](ConvLayerParams<T>& layer) {
    const double fan_in = static_cast<double>(layer.in_channels() * layer.kernel_size() * layer.kernel_size());
    const double stddev = std::sqrt(2.0 / fan_in);
    NormalStream normal(derive_key(seed, static_cast<std::uint64_t>(Stream::InitBlock), index++));
    for (T& w : layer.weights.values()) w = static_cast<T>(stddev * normal.next());
  };
  for (auto& l : params.spatial) init_layer(l);
  for (auto& l : params.spectral) init_layer(l);
  for (auto& l : params.trunk) init_layer(l);
  init_layer(params.head);
  return params;
}

template <typename T>
ForwardResult<T> forward(const BasicTensor<T>& y_spatial, const BasicTensor<T>& y_spectral,
                         const ModelParams<T>& params, const ArchitectureSpec& spec) {
  ForwardResult<T> result;
  result.phi = run_forward(y_spatial, y_spectral, params, spec, &result.cache);
  return result;
}

template <typename T>
BasicTensor<T> predict_residual(const BasicTensor<T>& y_spatial, const BasicTensor<T>& y_spectral,
                                const ModelParams<T>& params, const ArchitectureSpec& spec) {
  return run_forward<T>(y_spatial, y_spectral, params, spec, nullptr);
}

template <typename T>
void backward_accumulate(const ForwardCache<T>& cache, const ModelParams<T>& params, const BasicTensor<T>& grad_phi,
                         ParamGradients<T>& grads) {
  const ArchitectureSpec& spec = cache.spec;
  check_cache(cache, grad_phi);
  params.check_shapes(spec);
  grads.check_shapes(spec);

  // Head: phi = conv(taps).
  BasicTensor<T> grad_taps = conv2d_backward_accumulate(cache.taps, params.head, grad_phi, grads.head, true);
  const std::vector<std::size_t> tap_counts(spec.tap_layers.size(), spec.trunk_channels);
  std::vector<BasicTensor<T>> grad_tap_parts = split_channels<T>(grad_taps, tap_counts);

  // Trunk, last layer first. A tapped layer's output feeds both the next
  // layer and the head, so its gradient is the sum of both contributions.
  BasicTensor<T> grad_out;  // w.r.t. the post-ReLU output of the current layer
  std::size_t tap_cursor = spec.tap_layers.size();
  for (std::size_t l = spec.trunk_depth; l-- > 0;) {
    if (grad_out.empty()) grad_out = BasicTensor<T>::chw(spec.trunk_channels, grad_phi.height(), grad_phi.width());
    if (tap_cursor > 0 && spec.tap_layers[tap_cursor - 1] == l + 1) {
      add_into(grad_out, grad_tap_parts[--tap_cursor]);
    }
    mask_by_activation(grad_out, cache.trunk_out[l]);
    const BasicTensor<T>& input = l == 0 ? cache.fused : cache.trunk_out[l - 1];
    grad_out = conv2d_backward_accumulate(input, params.trunk[l], grad_out, grads.trunk[l], true);
  }

  // grad_out is now w.r.t. the fused map.
  const std::vector<std::size_t> branch_counts(2 * spec.scales.size(), spec.branch_channels);
  std::vector<BasicTensor<T>> grad_branches = split_channels<T>(grad_out, branch_counts);
  const std::size_t S = spec.scales.size();
  for (std::size_t b = 0; b < 2 * S; ++b) {
    if (spec.branch_relu) mask_by_activation(grad_branches[b], cache.branch_out[b]);
    if (b < S) {
      conv2d_backward_accumulate(cache.y_spatial, params.spatial[b], grad_branches[b], grads.spatial[b], false);
    } else {
      conv2d_backward_accumulate(cache.y_spectral, params.spectral[b - S], grad_branches[b], grads.spectral[b - S], false);
    }
  }
}

template <typename T>
ParamGradients<T> backward(const ForwardCache<T>& cache, const ModelParams<T>& params, const BasicTensor<T>& grad_phi) {
  ParamGradients<T> grads = ModelParams<T>::zeros(cache.spec);
  backward_accumulate(cache, params, grad_phi, grads);
  return grads;
}

template <typename T>
BasicTensor<T> denoise_patch(const BasicTensor<T>& y_spatial, const BasicTensor<T>& y_spectral,
                             const ModelParams<T>& params, const ArchitectureSpec& spec) {
  return residual_add(y_spatial, predict_residual(y_spatial, y_spectral, params, spec));
}

#define HSID_INSTANTIATE_MODEL(T)                                                                                    \
  template struct ModelParams<T>;                                                                                    \
  template std::vector<ParamBlock<T>> param_blocks(ModelParams<T>&);                                                 \
  template std::vector<ParamBlock<const T>> param_blocks(const ModelParams<T>&);                                     \
  template ModelParams<T> init_params(const ArchitectureSpec&, std::uint64_t);                                       \
  template ForwardResult<T> forward(const BasicTensor<T>&, const BasicTensor<T>&, const ModelParams<T>&,             \
                                    const ArchitectureSpec&);                                                        \
  template BasicTensor<T> predict_residual(const BasicTensor<T>&, const BasicTensor<T>&, const ModelParams<T>&,      \
                                           const ArchitectureSpec&);                                                 \
  template ParamGradients<T> backward(const ForwardCache<T>&, const ModelParams<T>&, const BasicTensor<T>&);         \
  template void backward_accumulate(const ForwardCache<T>&, const ModelParams<T>&, const BasicTensor<T>&,            \
                                    ParamGradients<T>&);                                                             \
  template BasicTensor<T> denoise_patch(const BasicTensor<T>&, const BasicTensor<T>&, const ModelParams<T>&,         \
                                        const ArchitectureSpec&);

HSID_INSTANTIATE_MODEL(float)
HSID_INSTANTIATE_MODEL(double)

#undef HSID_INSTANTIATE_MODEL

}  // namespace hsid
