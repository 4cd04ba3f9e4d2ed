#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "hsid/config.hpp"
#include "hsid/cube.hpp"
#include "hsid/gradcheck.hpp"
#include "hsid/inference.hpp"
#include "hsid/metrics.hpp"

// The harness subcommands as library calls. Each reads its inputs, writes
// its outputs and returns what it computed; errors surface as hsid::Error.

namespace hsid {

/// Adds noise to paths.clean (normalised per config), writes paths.noisy and
/// the "band,sigma" CSV.
struct SimulateResult {
  HsiCube noisy;
  std::vector<double> sigma;
};
SimulateResult cmd_simulate(const HarnessConfig& config);

/// Builds the training set from paths.train, trains, and writes the
/// checkpoint (with optimizer state) and the loss trace.
struct TrainOutcome {
  ArchitectureSpec spec;
  ModelParams<float> params;
  AdamState<float> state;
  std::vector<LossRecord> trace;
};
TrainOutcome cmd_train(const HarnessConfig& config);

struct DenoiseOptions {
  std::filesystem::path checkpoint;
  std::filesystem::path input;
  std::filesystem::path output;
  TilingOptions tiling;
  std::vector<std::size_t> emit_bands;  // one band -> PGM, three -> PPM
  std::filesystem::path emit_path;      // default: output with .pgm / .ppm
};
HsiCube cmd_denoise(const DenoiseOptions& options);

QualityReport cmd_evaluate(const std::filesystem::path& reference, const std::filesystem::path& test,
                           const std::filesystem::path& csv);

/// Prints one line per parameter tensor and a summary line.
GradcheckReport cmd_gradcheck(const GradcheckOptions& options, std::ostream& out);

/// Denoised and noisy-input quality on a clean held-out cube.
struct HoldoutResult {
  QualityReport noisy;
  QualityReport denoised;
};
HoldoutResult evaluate_holdout(const HsiCube& clean, const NoiseSpec& noise, const ArchitectureSpec& spec,
                               const ModelParams<float>& params);

/// The clean cube a config evaluates on: the test region of the first
/// training cube when train.test_region is set, else paths.clean.
HsiCube holdout_cube(const HarnessConfig& config);

struct KSweepRow {
  std::size_t K = 0;
  double mpsnr = 0.0;
  double noisy_mpsnr = 0.0;
  double mssim = 0.0;
  std::optional<double> msa_deg;
};

/// Trains and evaluates one model per K; writes "K,mpsnr,noisy_mpsnr,mssim,msa_deg".
std::vector<KSweepRow> cmd_ksweep(const HarnessConfig& config, const std::vector<std::size_t>& ks,
                                  const std::filesystem::path& csv);

struct RawImport {
  std::filesystem::path input;
  std::filesystem::path output;
  std::size_t width = 0, height = 0, bands = 0;
  SampleType type = SampleType::UInt16;
  ByteOrder order = ByteOrder::Little;
  NormalizeMode normalize = NormalizeMode::PerBand;
};
HsiCube cmd_import_raw(const RawImport& options);

/// Loads a cube and applies the configured normalisation.
HsiCube load_normalized(const std::filesystem::path& path, NormalizeMode mode);

}  // namespace hsid
