#include "hsid/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "hsid/checkpoint.hpp"
#include "hsid/error.hpp"
#include "hsid/log.hpp"
#include "hsid/noise.hpp"
#include "hsid/pipeline.hpp"

namespace hsid {
namespace {

std::ofstream open_output(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  return out;
}

void ensure_parent(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
}

std::filesystem::path with_suffix(std::filesystem::path p, const std::string& suffix) {
  p += suffix;
  return p;
}

void require_path(const std::filesystem::path& p, const char* key) {
  if (p.empty()) throw Error(ErrorCode::Config, std::string("missing setting ") + key);
}

std::vector<std::filesystem::path> expand_inputs(const std::vector<std::filesystem::path>& inputs) {
  std::vector<std::filesystem::path> out;
  for (const auto& p : inputs) {
    if (std::filesystem::is_directory(p)) {
      std::vector<std::filesystem::path> found;
      for (const auto& e : std::filesystem::directory_iterator(p))
        if (e.is_regular_file() && e.path().extension() == ".hsic") found.push_back(e.path());
      std::sort(found.begin(), found.end());
      if (found.empty()) throw Error(ErrorCode::Io, "no .hsic cubes in " + p.string());
      out.insert(out.end(), found.begin(), found.end());
    } else {
      out.push_back(p);
    }
  }
  return out;
}

}  // namespace

HsiCube load_normalized(const std::filesystem::path& path, NormalizeMode mode) {
  return normalize(load_cube(path), mode).cube;
}

SimulateResult cmd_simulate(const HarnessConfig& config) {
  require_path(config.clean, "paths.clean");
  require_path(config.noisy, "paths.noisy");
  const HsiCube clean = load_normalized(config.clean, config.normalize);
  SimulateResult r{add_noise(clean, config.noise), sigma_profile(config.noise, clean.bands())};
  const auto noisy_path = output_path(config.noisy);
  ensure_parent(noisy_path);
  save_cube(r.noisy, noisy_path);
  const auto csv_path = output_path(config.sigma_csv.empty() ? with_suffix(config.noisy, ".sigma.csv") : config.sigma_csv);
  auto csv = open_output(csv_path);
  csv << std::setprecision(17) << "band,sigma\n";
  for (std::size_t b = 0; b < r.sigma.size(); ++b) csv << b << ',' << r.sigma[b] << '\n';
  return r;
}

HsiCube holdout_cube(const HarnessConfig& config) {
  if (config.test_region) {
    if (config.train_inputs.empty()) throw Error(ErrorCode::Config, "train.test_region needs paths.train");
    return crop(load_normalized(expand_inputs(config.train_inputs).front(), config.normalize), *config.test_region);
  }
  require_path(config.clean, "paths.clean (or train.test_region)");
  return load_normalized(config.clean, config.normalize);
}

TrainOutcome cmd_train(const HarnessConfig& config) {
  if (config.train_inputs.empty()) throw Error(ErrorCode::Config, "missing setting paths.train");
  require_path(config.checkpoint, "paths.checkpoint");
  config.arch.validate();

  std::vector<HsiCube> cubes;
  std::vector<PixelMask> masks;
  for (const auto& path : expand_inputs(config.train_inputs)) {
    HsiCube cube = load_normalized(path, config.normalize);
    if (config.test_region) {
      SpatialSplit split = split_spatial(cube, *config.test_region);
      cubes.push_back(std::move(split.train));
      masks.push_back(std::move(split.train_mask));
    } else {
      cubes.push_back(std::move(cube));
      masks.emplace_back();
    }
  }
  TrainingSetOptions options;
  options.grid = config.grid;
  options.K = config.arch.adjacent_bands;
  options.augment = config.augment;
  options.noise = config.noise;
  const PatchDataset dataset = build_training_set(cubes, masks, options);
  if (dataset.empty() && config.train.epochs > 0) {
    throw Error(ErrorCode::InvalidArgument, "training set is empty; check patch size, test region and inputs");
  }

  ModelParams<float> init;
  std::optional<AdamState<float>> resume;
  if (!config.resume.empty()) {
    Checkpoint ck = load_checkpoint(config.resume, config.arch);
    if (!ck.optimizer) throw Error(ErrorCode::InvalidArgument, config.resume.string() + " has no optimizer state to resume from");
    init = std::move(ck.params);
    resume = std::move(ck.optimizer);
  } else {
    init = init_params<float>(config.arch, config.init_seed);
  }

  const auto checkpoint_path = output_path(config.checkpoint);
  ensure_parent(checkpoint_path);
  const auto snapshot_dir = config.snapshot_dir.empty() ? checkpoint_path.parent_path() : output_path(config.snapshot_dir);
  SnapshotFn<float> snapshot = [&](std::uint64_t it, const ModelParams<float>& p, const AdamState<float>& s) {
    std::filesystem::create_directories(snapshot_dir.empty() ? "." : snapshot_dir);
    save_checkpoint(snapshot_dir / ("snapshot_" + std::to_string(it) + ".hsck"), config.arch, p, &s);
  };

  auto result = train<float>(dataset, config.arch, config.train, config.optim, std::move(init), std::move(resume), snapshot);
  save_checkpoint(checkpoint_path, config.arch, result.params, &result.state);
  const auto trace_path = output_path(config.loss_trace.empty() ? with_suffix(config.checkpoint, ".loss.csv") : config.loss_trace);
  ensure_parent(trace_path);
  write_loss_trace(result.trace, trace_path);
  return {config.arch, std::move(result.params), std::move(result.state), std::move(result.trace)};
}

HsiCube cmd_denoise(const DenoiseOptions& options) {
  const auto out_path = output_path(options.output);
  ensure_parent(out_path);
  HsiCube out = run_denoise_job({options.input, options.checkpoint, out_path, options.tiling});
  if (!options.emit_bands.empty()) {
    const bool colour = options.emit_bands.size() == 3;
    if (!colour && options.emit_bands.size() != 1) {
      throw Error(ErrorCode::InvalidArgument, "--emit-bands takes one band (PGM) or three bands (PPM)");
    }
    auto image = options.emit_path.empty() ? std::filesystem::path(out_path).replace_extension(colour ? ".ppm" : ".pgm")
                                            : output_path(options.emit_path);
    ensure_parent(image);
    if (colour) {
      emit_pseudocolor(out, {options.emit_bands[0], options.emit_bands[1], options.emit_bands[2]}, image);
    } else {
      emit_band_image(out, options.emit_bands[0], image);
    }
  }
  return out;
}

QualityReport cmd_evaluate(const std::filesystem::path& reference, const std::filesystem::path& test,
                           const std::filesystem::path& csv) {
  const QualityReport r = report(load_cube(reference), load_cube(test));
  const auto csv_path = output_path(csv);
  ensure_parent(csv_path);
  emit_csv(r, csv_path);
  return r;
}

GradcheckReport cmd_gradcheck(const GradcheckOptions& options, std::ostream& out) {
  const GradcheckReport r = run_gradcheck(options);
  out << std::scientific << std::setprecision(3);
  for (const auto& t : r.tensors) out << std::left << std::setw(20) << t.name << " worst_rel_err " << t.worst << " probes " << t.probes << '\n';
  out << "max_rel_err " << r.max_error << (r.passed() ? " PASS" : " FAIL") << " (tolerance 1e-5)\n";
  out << std::defaultfloat;
  return r;
}

HoldoutResult evaluate_holdout(const HsiCube& clean, const NoiseSpec& noise, const ArchitectureSpec& spec,
                               const ModelParams<float>& params) {
  const HsiCube noisy = add_noise(clean, noise);
  return {report(clean, noisy), report(clean, denoise_cube(noisy, params, spec))};
}

std::vector<KSweepRow> cmd_ksweep(const HarnessConfig& config, const std::vector<std::size_t>& ks,
                                  const std::filesystem::path& csv) {
  if (ks.empty()) throw Error(ErrorCode::InvalidArgument, "ksweep: empty K list");
  const HsiCube clean = holdout_cube(config);
  std::vector<KSweepRow> rows;
  for (std::size_t K : ks) {
    HarnessConfig run = config;
    apply_setting(run, "arch.K", std::to_string(K));
    run.arch.validate();
    run.checkpoint = config.output_dir / ("ksweep_K" + std::to_string(K) + ".hsck");
    run.loss_trace = config.output_dir / ("ksweep_K" + std::to_string(K) + ".loss.csv");
    const TrainOutcome t = cmd_train(run);
    const HoldoutResult h = evaluate_holdout(clean, config.noise, t.spec, t.params);
    rows.push_back({K, h.denoised.mpsnr, h.noisy.mpsnr, h.denoised.mssim, h.denoised.msa_degrees});
  }
  auto out = open_output(output_path(csv));
  out << std::setprecision(17) << "K,mpsnr,noisy_mpsnr,mssim,msa_deg\n";
  for (const auto& r : rows) {
    out << r.K << ',' << r.mpsnr << ',' << r.noisy_mpsnr << ',' << r.mssim << ',';
    if (r.msa_deg) {
      out << *r.msa_deg;
    } else {
      out << "NA";
    }
    out << '\n';
  }
  return rows;
}

HsiCube cmd_import_raw(const RawImport& options) {
  HsiCube cube = load_raw_bsq(options.input, options.width, options.height, options.bands, options.type, options.order);
  cube = normalize(cube, options.normalize).cube;
  const auto out = output_path(options.output);
  ensure_parent(out);
  save_cube(cube, out);
  return cube;
}

}  // namespace hsid
