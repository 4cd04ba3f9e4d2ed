#include "hsid/inference.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>

#include "hsid/checkpoint.hpp"
#include "hsid/error.hpp"
#include "hsid/noise.hpp"
#include "hsid/pipeline.hpp"

namespace hsid {
namespace {

std::string num(std::size_t v) { return std::to_string(v); }

std::uint16_t to_sample(float v) {
  const double clipped = std::clamp(static_cast<double>(v), 0.0, 1.0);
  return static_cast<std::uint16_t>(std::floor(clipped * 65535.0 + 0.5));
}

void put_u16(std::ofstream& out, std::uint16_t s) {
  const char bytes[2] = {static_cast<char>(s >> 8), static_cast<char>(s & 0xff)};
  out.write(bytes, 2);
}

std::ofstream open_image(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  return out;
}

template <typename T>
void write_band(HsiCube& out, std::size_t band, const BasicTensor<T>& x_hat, std::size_t src_x, std::size_t src_y,
                std::size_t dst_x, std::size_t dst_y, std::size_t w, std::size_t h) {
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out.at(dst_x + x, dst_y + y, band) = static_cast<float>(x_hat.at(0, src_y + y, src_x + x));
}

}  // namespace

template <typename T>
HsiCube denoise_cube(const HsiCube& noisy, const ModelParams<T>& params, const ArchitectureSpec& spec,
                     const TilingOptions& tiling) {
  spec.validate();
  params.check_shapes(spec);
  if (spec.adjacent_bands >= noisy.bands()) {
    throw Error(ErrorCode::InvalidArgument, "denoise: model uses K=" + num(spec.adjacent_bands) +
                                                " adjacent bands but the cube has only B=" + num(noisy.bands()));
  }
  require_normalized(noisy, "denoise", kNoisyGuard);
  const std::size_t radius = spec.receptive_radius();
  if (tiling.tile) {
    if (tiling.tile < 2 * radius + 1) {
      throw Error(ErrorCode::InvalidArgument, "denoise: tile " + num(tiling.tile) + " is smaller than the receptive field diameter " +
                                                  num(2 * radius + 1));
    }
    if (tiling.overlap < radius) {
      throw Error(ErrorCode::InvalidArgument, "denoise: overlap " + num(tiling.overlap) +
                                                  " is smaller than the receptive field radius " + num(radius));
    }
  }

  HsiCube out(noisy.width(), noisy.height(), noisy.bands());
  const std::size_t W = noisy.width(), H = noisy.height();
  for (std::size_t b = 0; b < noisy.bands(); ++b) {
    if (!tiling.tile) {
      const auto x_hat = denoise_patch(band_tensor<T>(noisy, b), adjacent_bands<T>(noisy, b, spec.adjacent_bands), params, spec);
      write_band(out, b, x_hat, 0, 0, 0, 0, W, H);
      continue;
    }
    const HsiCube* src = &noisy;
    for (std::size_t ty = 0; ty < H; ty += tiling.tile) {
      for (std::size_t tx = 0; tx < W; tx += tiling.tile) {
        const std::size_t tw = std::min(tiling.tile, W - tx), th = std::min(tiling.tile, H - ty);
        const std::size_t x0 = tx >= tiling.overlap ? tx - tiling.overlap : 0;
        const std::size_t y0 = ty >= tiling.overlap ? ty - tiling.overlap : 0;
        const std::size_t x1 = std::min(W, tx + tw + tiling.overlap), y1 = std::min(H, ty + th + tiling.overlap);
        const Rect region{x0, y0, x1 - x0, y1 - y0};
        const auto idx = adjacent_band_indices(noisy.bands(), b, spec.adjacent_bands);
        BasicTensor<T> ys = BasicTensor<T>::chw(1, region.height, region.width);
        BasicTensor<T> yk = BasicTensor<T>::chw(spec.adjacent_bands, region.height, region.width);
        for (std::size_t y = 0; y < region.height; ++y)
          for (std::size_t x = 0; x < region.width; ++x) {
            ys.at(0, y, x) = static_cast<T>(src->at(x0 + x, y0 + y, b));
            for (std::size_t c = 0; c < idx.size(); ++c) yk.at(c, y, x) = static_cast<T>(src->at(x0 + x, y0 + y, idx[c]));
          }
        const auto x_hat = denoise_patch(ys, yk, params, spec);
        write_band(out, b, x_hat, tx - x0, ty - y0, tx, ty, tw, th);
      }
    }
  }
  return out;
}

HsiCube run_denoise_job(const DenoiseJob& job) {
  const Checkpoint ck = load_checkpoint(job.checkpoint);
  const HsiCube noisy = load_cube(job.input);
  HsiCube out = denoise_cube<float>(noisy, ck.params, ck.spec, job.tiling);
  save_cube(out, job.output);
  return out;
}

void emit_band_image(const HsiCube& cube, std::size_t band, const std::filesystem::path& path) {
  if (band >= cube.bands()) throw Error(ErrorCode::OutOfRange, "band " + num(band) + " >= " + num(cube.bands()));
  auto out = open_image(path);
  out << "P5\n" << cube.width() << ' ' << cube.height() << "\n65535\n";
  for (float v : cube.band(band)) put_u16(out, to_sample(v));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

void emit_pseudocolor(const HsiCube& cube, const std::array<std::size_t, 3>& bands, const std::filesystem::path& path) {
  for (std::size_t b : bands) {
    if (b >= cube.bands()) throw Error(ErrorCode::OutOfRange, "band " + num(b) + " >= " + num(cube.bands()));
  }
  auto out = open_image(path);
  out << "P6\n" << cube.width() << ' ' << cube.height() << "\n65535\n";
  const auto r = cube.band(bands[0]), g = cube.band(bands[1]), bl = cube.band(bands[2]);
  for (std::size_t i = 0; i < cube.band_size(); ++i) {
    put_u16(out, to_sample(r[i]));
    put_u16(out, to_sample(g[i]));
    put_u16(out, to_sample(bl[i]));
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

template HsiCube denoise_cube(const HsiCube&, const ModelParams<float>&, const ArchitectureSpec&, const TilingOptions&);
template HsiCube denoise_cube(const HsiCube&, const ModelParams<double>&, const ArchitectureSpec&, const TilingOptions&);

}  // namespace hsid
