#pragma once

#include <array>
#include <cstddef>
#include <filesystem>

#include "hsid/cube.hpp"
#include "hsid/model.hpp"

namespace hsid {

/// tile == 0 runs every band in one piece. Otherwise the frame is cut into
/// tile x tile blocks, each evaluated with `overlap` pixels of context on
/// every side, and only block interiors are written back.
struct TilingOptions {
  std::size_t tile = 0;
  std::size_t overlap = 13;
};

struct DenoiseJob {
  std::filesystem::path input;
  std::filesystem::path checkpoint;
  std::filesystem::path output;
  TilingOptions tiling;
};

/// Denoises every band k from itself and adjacent_bands(noisy, k, K), with
/// x_hat_k = y_k + phi_k. Output has the input's dimensions.
template <typename T>
HsiCube denoise_cube(const HsiCube& noisy, const ModelParams<T>& params, const ArchitectureSpec& spec,
                     const TilingOptions& tiling = {});

/// Loads the checkpoint and cube, denoises in single precision, writes the
/// result and returns it.
HsiCube run_denoise_job(const DenoiseJob& job);

/// 16-bit binary PGM (P5, maxval 65535, big-endian samples); values are
/// clipped to [0, 1] and mapped with floor(v * 65535 + 0.5).
void emit_band_image(const HsiCube& cube, std::size_t band, const std::filesystem::path& path);

/// 16-bit binary PPM (P6) with bands (r, g, b) and the same mapping.
void emit_pseudocolor(const HsiCube& cube, const std::array<std::size_t, 3>& bands, const std::filesystem::path& path);

/// The pseudo-colour band triple used for the Washington DC Mall figures.
inline constexpr std::array<std::size_t, 3> kDcMallPseudocolor{57, 27, 17};

}  // namespace hsid
