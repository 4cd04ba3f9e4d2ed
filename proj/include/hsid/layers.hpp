#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "hsid/tensor.hpp"

namespace hsid {

/// Weights [out, in, k, k] plus one bias per output channel. k is odd so
/// that "same" zero padding of (k-1)/2 keeps the spatial size.
template <typename T>
struct ConvLayerParams {
  BasicTensor<T> weights;
  std::vector<T> bias;

  ConvLayerParams() = default;
  ConvLayerParams(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_size);
  ConvLayerParams(BasicTensor<T> w, std::vector<T> b);

  std::size_t out_channels() const { return weights.dim(0); }
  std::size_t in_channels() const { return weights.dim(1); }
  std::size_t kernel_size() const { return weights.dim(2); }

  /// Throws ShapeMismatch/InvalidArgument when the invariants do not hold.
  void validate() const;

  friend bool operator==(const ConvLayerParams&, const ConvLayerParams&) = default;
};

template <typename T>
struct ConvGradients {
  BasicTensor<T> grad_input;  // empty when not requested
  BasicTensor<T> grad_weights;
  std::vector<T> grad_bias;
};

// Convolution uses cross-correlation orientation (no kernel flip):
//   out[c](y, x) = bias[c] + sum_{ci,dy,dx} w[c,ci,dy,dx] * in[ci](y+dy-p, x+dx-p)
// with zeros outside the input, p = (k-1)/2.
template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const ConvLayerParams<T>& params);

/// Gradients of sum(grad_out * conv2d_forward(input, params)).
template <typename T>
ConvGradients<T> conv2d_backward(const BasicTensor<T>& input, const ConvLayerParams<T>& params,
                                 const BasicTensor<T>& grad_out, bool want_input_grad = true);

/// Accumulating form used by the model: adds weight/bias gradients into
/// `grads` and returns the input gradient (empty tensor if not wanted).
template <typename T>
BasicTensor<T> conv2d_backward_accumulate(const BasicTensor<T>& input, const ConvLayerParams<T>& params,
                                          const BasicTensor<T>& grad_out, ConvLayerParams<T>& grads,
                                          bool want_input_grad);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x);

/// Passes grad_out where x > 0. The subgradient at exactly 0 is 0.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out);

template <typename T>
void relu_inplace(BasicTensor<T>& x);

/// Stacks [C_i, H, W] parts along the channel axis, in the given order.
template <typename T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>> parts);

/// Inverse routing of concat_channels.
template <typename T>
std::vector<BasicTensor<T>> split_channels(const BasicTensor<T>& x, std::span<const std::size_t> channel_counts);

/// x_hat = y_spatial + phi. The only place where a reconstruction is formed.
template <typename T>
BasicTensor<T> residual_add(const BasicTensor<T>& y_spatial, const BasicTensor<T>& phi);

}  // namespace hsid
