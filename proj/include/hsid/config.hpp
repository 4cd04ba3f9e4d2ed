#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "hsid/model.hpp"
#include "hsid/noise.hpp"
#include "hsid/pipeline.hpp"
#include "hsid/trainer.hpp"

namespace hsid {

/// Every harness setting. Text form: one `key = value` per line, `#` starts
/// a comment, blank lines are ignored, unknown keys are rejected.
///
///   noise.case          fixed | uniform | curve            (fixed)
///   noise.sigma         Case 1 sigma, 0-255 scale          (25)
///   noise.sigma_max     Case 2 upper bound                 (25)
///   noise.beta          Case 3 beta                        (200)
///   noise.eta           Case 3 eta                         (30)
///   seed.noise          noise generator seed               (1)
///   seed.init           parameter initialisation seed      (2)
///   seed.shuffle        epoch shuffling seed               (3)
///   arch.K              adjacent bands                     (24)
///   arch.multi_scale    on | off                           (on)
///   arch.multi_level    on | off                           (on)
///   arch.branch_relu    on | off                           (on)
///   train.epochs        (100)      train.batch_size   (128)
///   train.patch         (20)       train.stride       (20)
///   train.rotations     degrees, comma list            (0,90,180,270)
///   train.scales        comma list                     (0.5,1,1.5,2)
///   train.snapshot_every  iterations, 0 = off          (0)
///   train.max_iterations  0 = no cap                   (0)
///   train.test_region   x,y,width,height held out of training (unset)
///   optim.alpha (0.01)  optim.beta1 (0.9)  optim.beta2 (0.999)  optim.epsilon (1e-8)
///   optim.decay_factor (1)  optim.decay_every (0 = off)
///   normalize           band | global | none               (band)
///   paths.clean         clean cube (simulate input; evaluate reference)
///   paths.noisy         noisy cube (simulate output)
///   paths.sigma_csv     sigma profile CSV (default: <noisy>.sigma.csv)
///   paths.train         comma list of clean cubes or directories of *.hsic
///   paths.checkpoint    checkpoint written by train
///   paths.loss_trace    loss CSV written by train (default: <checkpoint>.loss.csv)
///   paths.snapshot_dir  where cadenced snapshots go (default: checkpoint's directory)
///   paths.resume        checkpoint with optimizer state to continue from
///   paths.output_dir    directory for ksweep artefacts        (.)
///
/// Relative output paths are resolved against $HSID_OUTPUT_ROOT when set.
struct HarnessConfig {
  NoiseSpec noise;
  std::uint64_t init_seed = 2;
  ArchitectureSpec arch;
  TrainConfig train;
  PatchGrid grid;
  AugmentSpec augment;
  std::optional<Rect> test_region;
  OptimizerConfig optim;
  NormalizeMode normalize = NormalizeMode::PerBand;

  std::filesystem::path clean;
  std::filesystem::path noisy;
  std::filesystem::path sigma_csv;
  std::vector<std::filesystem::path> train_inputs;
  std::filesystem::path checkpoint;
  std::filesystem::path loss_trace;
  std::filesystem::path snapshot_dir;
  std::filesystem::path resume;
  std::filesystem::path output_dir = ".";
};

/// Parses config text; errors (ErrorCode::Config) name the line and key.
HarnessConfig parse_config(const std::string& text);
HarnessConfig load_config(const std::filesystem::path& path);

/// Applies one `key = value` setting, as from a config line.
void apply_setting(HarnessConfig& config, const std::string& key, const std::string& value);

/// Resolves a relative output path against $HSID_OUTPUT_ROOT, if set.
std::filesystem::path output_path(const std::filesystem::path& path);

}  // namespace hsid
