#include "hsid/layers.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <string>

namespace hsid {
namespace {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using StridedMap = Eigen::Map<RowMatrix<T>, 0, Eigen::OuterStride<>>;
template <typename T>
using ConstStridedMap = Eigen::Map<const RowMatrix<T>, 0, Eigen::OuterStride<>>;

// Upper bound on im2col buffer elements; large frames are processed in row
// blocks so full-band inference does not materialize a huge column matrix.
constexpr std::size_t kColumnBudget = std::size_t{1} << 22;

std::string dims(std::size_t a, std::size_t b) { return std::to_string(a) + " vs " + std::to_string(b); }

template <typename T>
void check_conv_input(const BasicTensor<T>& input, const ConvLayerParams<T>& params, const char* op) {
  params.validate();
  if (input.rank() != 3) {
    throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": input must be [C,H,W], got " + shape_string(input.shape()));
  }
  if (input.channels() != params.in_channels()) {
    throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": input channels " +
                                              dims(input.channels(), params.in_channels()) + " (weights in_channels)");
  }
}

std::size_t rows_per_block(std::size_t patch_len, std::size_t width, std::size_t height) {
  const std::size_t per_row = std::max<std::size_t>(1, patch_len * width);
  return std::clamp<std::size_t>(kColumnBudget / per_row, 1, height);
}

// Fills col[(ci*k + ky)*k + kx, (y-y0)*W + x] = in[ci](y+ky-p, x+kx-p) for y in [y0, y1).
template <typename T>
void im2col(const BasicTensor<T>& in, std::size_t k, std::size_t y0, std::size_t y1, RowMatrix<T>& col) {
  const std::size_t C = in.channels(), H = in.height(), W = in.width();
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t n = (y1 - y0) * W;
  for (std::size_t ci = 0; ci < C; ++ci) {
    const T* plane = in.data() + ci * H * W;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        T* row = col.data() + ((ci * k + ky) * k + kx) * n;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::size_t x_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dx));
        const std::size_t x_hi = static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(W) - dx, 0, static_cast<std::ptrdiff_t>(W)));
        for (std::size_t y = y0; y < y1; ++y) {
          T* dst = row + (y - y0) * W;
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H) || x_lo >= x_hi) {
            std::fill(dst, dst + W, T{0});
            continue;
          }
          const T* src = plane + static_cast<std::size_t>(sy) * W;
          std::fill(dst, dst + x_lo, T{0});
          for (std::size_t x = x_lo; x < x_hi; ++x) dst[x] = src[static_cast<std::ptrdiff_t>(x) + dx];
          std::fill(dst + x_hi, dst + W, T{0});
        }
      }
    }
  }
}

// Adjoint of im2col: scatters column gradients back into the input gradient.
template <typename T>
void col2im_add(const RowMatrix<T>& col, std::size_t k, std::size_t y0, std::size_t y1, BasicTensor<T>& grad_in) {
  const std::size_t C = grad_in.channels(), H = grad_in.height(), W = grad_in.width();
  const auto pad = static_cast<std::ptrdiff_t>(k / 2);
  const std::size_t n = (y1 - y0) * W;
  for (std::size_t ci = 0; ci < C; ++ci) {
    T* plane = grad_in.data() + ci * H * W;
    for (std::size_t ky = 0; ky < k; ++ky) {
      for (std::size_t kx = 0; kx < k; ++kx) {
        const T* row = col.data() + ((ci * k + ky) * k + kx) * n;
        const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - pad;
        const std::size_t x_lo = static_cast<std::size_t>(std::max<std::ptrdiff_t>(0, -dx));
        const std::size_t x_hi = static_cast<std::size_t>(
            std::clamp<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(W) - dx, 0, static_cast<std::ptrdiff_t>(W)));
        for (std::size_t y = y0; y < y1; ++y) {
          const std::ptrdiff_t sy = static_cast<std::ptrdiff_t>(y + ky) - pad;
          if (sy < 0 || sy >= static_cast<std::ptrdiff_t>(H)) continue;
          const T* src = row + (y - y0) * W;
          T* dst = plane + static_cast<std::size_t>(sy) * W;
          for (std::size_t x = x_lo; x < x_hi; ++x) dst[static_cast<std::ptrdiff_t>(x) + dx] += src[x];
        }
      }
    }
  }
}

template <typename T>
void check_same_shape(const BasicTensor<T>& a, const BasicTensor<T>& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(op) + ": shapes " + shape_string(a.shape()) + " and " + shape_string(b.shape()) + " differ");
  }
}

}  // namespace

template <typename T>
ConvLayerParams<T>::ConvLayerParams(std::size_t out_channels, std::size_t in_channels, std::size_t kernel_size)
    : weights({out_channels, in_channels, kernel_size, kernel_size}), bias(out_channels, T{0}) {
  validate();
}

template <typename T>
ConvLayerParams<T>::ConvLayerParams(BasicTensor<T> w, std::vector<T> b) : weights(std::move(w)), bias(std::move(b)) {
  validate();
}

template <typename T>
void ConvLayerParams<T>::validate() const {
  if (weights.rank() != 4) {
    throw Error(ErrorCode::ShapeMismatch, "conv weights must be [out,in,k,k], got " + shape_string(weights.shape()));
  }
  if (weights.dim(2) != weights.dim(3)) {
    throw Error(ErrorCode::ShapeMismatch, "conv kernel must be square, got " + shape_string(weights.shape()));
  }
  if (weights.dim(2) % 2 == 0) {
    throw Error(ErrorCode::InvalidArgument, "conv kernel size must be odd, got " + std::to_string(weights.dim(2)));
  }
  if (bias.size() != weights.dim(0)) {
    throw Error(ErrorCode::ShapeMismatch, "conv bias length " + dims(bias.size(), weights.dim(0)) + " (out_channels)");
  }
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const ConvLayerParams<T>& params) {
  check_conv_input(input, params, "conv2d_forward");
  const std::size_t H = input.height(), W = input.width(), k = params.kernel_size();
  const std::size_t cout = params.out_channels();
  const std::size_t patch_len = params.in_channels() * k * k;
  BasicTensor<T> out = BasicTensor<T>::chw(cout, H, W);

  const ConstMatrixMap<T> w(params.weights.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(patch_len));
  const std::size_t block = rows_per_block(patch_len, W, H);
  RowMatrix<T> col(patch_len, block * W);
  for (std::size_t y0 = 0; y0 < H; y0 += block) {
    const std::size_t y1 = std::min(H, y0 + block);
    const std::size_t n = (y1 - y0) * W;
    if (static_cast<std::size_t>(col.cols()) != n) col.resize(static_cast<Eigen::Index>(patch_len), static_cast<Eigen::Index>(n));
    im2col(input, k, y0, y1, col);
    StridedMap<T> dst(out.data() + y0 * W, static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(n),
                      Eigen::OuterStride<>(static_cast<Eigen::Index>(H * W)));
    dst.noalias() = w * col;
    for (std::size_t c = 0; c < cout; ++c) dst.row(static_cast<Eigen::Index>(c)).array() += params.bias[c];
  }
  return out;
}

template <typename T>
BasicTensor<T> conv2d_backward_accumulate(const BasicTensor<T>& input, const ConvLayerParams<T>& params,
                                          const BasicTensor<T>& grad_out, ConvLayerParams<T>& grads,
                                          bool want_input_grad) {
  check_conv_input(input, params, "conv2d_backward");
  const std::size_t H = input.height(), W = input.width(), k = params.kernel_size();
  const std::size_t cout = params.out_channels();
  const std::size_t patch_len = params.in_channels() * k * k;
  if (grad_out.shape() != Shape{cout, H, W}) {
    throw Error(ErrorCode::ShapeMismatch, "conv2d_backward: grad_out shape " + shape_string(grad_out.shape()) +
                                              " does not match output shape " + shape_string({cout, H, W}));
  }
  if (grads.weights.shape() != params.weights.shape() || grads.bias.size() != cout) {
    throw Error(ErrorCode::ShapeMismatch, "conv2d_backward: gradient accumulator shape " +
                                              shape_string(grads.weights.shape()) + " does not match weights");
  }

  for (std::size_t c = 0; c < cout; ++c) {
    const auto plane = grad_out.channel(c);
    T sum{0};
    for (T g : plane) sum += g;
    grads.bias[c] += sum;
  }

  BasicTensor<T> grad_in;
  if (want_input_grad) grad_in = BasicTensor<T>::chw(input.channels(), H, W);

  const ConstMatrixMap<T> w(params.weights.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(patch_len));
  MatrixMap<T> gw(grads.weights.data(), static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(patch_len));
  const std::size_t block = rows_per_block(patch_len, W, H);
  RowMatrix<T> col(patch_len, block * W);
  RowMatrix<T> grad_col;
  for (std::size_t y0 = 0; y0 < H; y0 += block) {
    const std::size_t y1 = std::min(H, y0 + block);
    const std::size_t n = (y1 - y0) * W;
    if (static_cast<std::size_t>(col.cols()) != n) col.resize(static_cast<Eigen::Index>(patch_len), static_cast<Eigen::Index>(n));
    im2col(input, k, y0, y1, col);
    ConstStridedMap<T> g(grad_out.data() + y0 * W, static_cast<Eigen::Index>(cout), static_cast<Eigen::Index>(n),
                         Eigen::OuterStride<>(static_cast<Eigen::Index>(H * W)));
    gw.noalias() += g * col.transpose();
    if (want_input_grad) {
      grad_col.noalias() = w.transpose() * g;
      col2im_add(grad_col, k, y0, y1, grad_in);
    }
  }
  return grad_in;
}

template <typename T>
ConvGradients<T> conv2d_backward(const BasicTensor<T>& input, const ConvLayerParams<T>& params,
                                 const BasicTensor<T>& grad_out, bool want_input_grad) {
  ConvLayerParams<T> acc(params.out_channels(), params.in_channels(), params.kernel_size());
  ConvGradients<T> result;
  result.grad_input = conv2d_backward_accumulate(input, params, grad_out, acc, want_input_grad);
  result.grad_weights = std::move(acc.weights);
  result.grad_bias = std::move(acc.bias);
  return result;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& x) {
  BasicTensor<T> y = x;
  relu_inplace(y);
  return y;
}

template <typename T>
void relu_inplace(BasicTensor<T>& x) {
  for (T& v : x.values()) v = v > T{0} ? v : T{0};
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& x, const BasicTensor<T>& grad_out) {
  check_same_shape(x, grad_out, "relu_backward");
  BasicTensor<T> g = grad_out;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!(x[i] > T{0})) g[i] = T{0};
  }
  return g;
}

template <typename T>
BasicTensor<T> concat_channels(std::span<const BasicTensor<T>> parts) {
  if (parts.empty()) throw Error(ErrorCode::InvalidArgument, "concat_channels: empty part list");
  const std::size_t H = parts[0].height(), W = parts[0].width();
  std::size_t total = 0;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& p = parts[i];
    if (p.rank() != 3 || p.height() != H || p.width() != W) {
      throw Error(ErrorCode::ShapeMismatch, "concat_channels: part " + std::to_string(i) + " has shape " +
                                                shape_string(p.shape()) + ", expected [*," + std::to_string(H) + "," +
                                                std::to_string(W) + "]");
    }
    total += p.channels();
  }
  BasicTensor<T> out = BasicTensor<T>::chw(total, H, W);
  T* dst = out.data();
  for (const auto& p : parts) dst = std::copy(p.storage().begin(), p.storage().end(), dst);
  return out;
}

template <typename T>
std::vector<BasicTensor<T>> split_channels(const BasicTensor<T>& x, std::span<const std::size_t> channel_counts) {
  std::size_t total = 0;
  for (std::size_t c : channel_counts) total += c;
  if (x.rank() != 3 || total != x.channels()) {
    throw Error(ErrorCode::ShapeMismatch, "split_channels: counts sum to " + std::to_string(total) +
                                              " but tensor has shape " + shape_string(x.shape()));
  }
  std::vector<BasicTensor<T>> parts;
  parts.reserve(channel_counts.size());
  const T* src = x.data();
  const std::size_t plane = x.plane_size();
  for (std::size_t c : channel_counts) {
    std::vector<T> data(src, src + c * plane);
    parts.emplace_back(Shape{c, x.height(), x.width()}, std::move(data));
    src += c * plane;
  }
  return parts;
}

template <typename T>
BasicTensor<T> residual_add(const BasicTensor<T>& y_spatial, const BasicTensor<T>& phi) {
  check_same_shape(y_spatial, phi, "residual_add");
  BasicTensor<T> out = y_spatial;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += phi[i];
  return out;
}

#define HSID_INSTANTIATE_LAYERS(T)                                                                                  \
  template struct ConvLayerParams<T>;                                                                               \
  template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const ConvLayerParams<T>&);                         \
  template ConvGradients<T> conv2d_backward(const BasicTensor<T>&, const ConvLayerParams<T>&, const BasicTensor<T>&, \
                                            bool);                                                                  \
  template BasicTensor<T> conv2d_backward_accumulate(const BasicTensor<T>&, const ConvLayerParams<T>&,              \
                                                     const BasicTensor<T>&, ConvLayerParams<T>&, bool);             \
  template BasicTensor<T> relu_forward(const BasicTensor<T>&);                                                      \
  template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);                              \
  template void relu_inplace(BasicTensor<T>&);                                                                      \
  template BasicTensor<T> concat_channels(std::span<const BasicTensor<T>>);                                         \
  template std::vector<BasicTensor<T>> split_channels(const BasicTensor<T>&, std::span<const std::size_t>);         \
  template BasicTensor<T> residual_add(const BasicTensor<T>&, const BasicTensor<T>&);

HSID_INSTANTIATE_LAYERS(float)
HSID_INSTANTIATE_LAYERS(double)

#undef HSID_INSTANTIATE_LAYERS

}  // namespace hsid
