// hsid: command-line harness for the hyperspectral denoiser.
//
//   hsid simulate  --config FILE
//   hsid train     --config FILE
//   hsid denoise   --checkpoint CK --input IN --output OUT [--tile N --overlap M] [--emit-bands 57,27,17]
//   hsid evaluate  --ref CLEAN --test CUBE --output CSV
//   hsid gradcheck [--K 4 --patch 8 --seed 1] [--corrupt-backward]
//   hsid ksweep    --config FILE --k-list 4,12,24 --output CSV
//   hsid import-raw --input RAW --width W --height H --bands B --type u16 [--byte-order big] --output CUBE
//
// Exit status: 0 success, 1 internal error (including training divergence),
// 2 bad input, path or configuration.

#include <iostream>
#include <sstream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "hsid/commands.hpp"
#include "hsid/error.hpp"

namespace {

constexpr int kExitInternal = 1;
constexpr int kExitInput = 2;

std::vector<std::size_t> parse_band_list(const std::string& text) {
  std::vector<std::size_t> out;
  std::stringstream ss(text);
  for (std::string item; std::getline(ss, item, ',');) {
    try {
      std::size_t used = 0;
      const unsigned long v = std::stoul(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(v);
    } catch (const std::exception&) {
      throw hsid::Error(hsid::ErrorCode::InvalidArgument, "'" + text + "' is not a comma-separated list of integers");
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hyperspectral denoising: simulate, train, denoise, evaluate"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  std::string config_path;
  auto* simulate = app.add_subcommand("simulate", "add simulated noise to a clean cube");
  simulate->add_option("--config", config_path, "harness config file")->required();

  auto* train = app.add_subcommand("train", "train a model and write a checkpoint and loss trace");
  train->add_option("--config", config_path, "harness config file")->required();

  hsid::DenoiseOptions denoise_opt;
  std::string emit_bands;
  auto* denoise = app.add_subcommand("denoise", "denoise a cube band by band");
  denoise->add_option("--checkpoint", denoise_opt.checkpoint)->required();
  denoise->add_option("--input", denoise_opt.input)->required();
  denoise->add_option("--output", denoise_opt.output)->required();
  denoise->add_option("--tile", denoise_opt.tiling.tile, "tile size in pixels, 0 = whole band");
  denoise->add_option("--overlap", denoise_opt.tiling.overlap, "context pixels around each tile");
  denoise->add_option("--emit-bands", emit_bands, "one band (PGM) or r,g,b bands (PPM), 0-based");
  denoise->add_option("--emit-path", denoise_opt.emit_path, "image path (default: output with .pgm/.ppm)");

  std::string ref_path, test_path, csv_path;
  auto* evaluate = app.add_subcommand("evaluate", "per-band PSNR/SSIM and MSA report");
  evaluate->add_option("--ref", ref_path)->required();
  evaluate->add_option("--test", test_path)->required();
  evaluate->add_option("--output", csv_path)->required();

  hsid::GradcheckOptions grad_opt;
  std::size_t grad_k = grad_opt.spec.adjacent_bands;
  bool no_multi_scale = false, no_multi_level = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference check of the full network gradient");
  gradcheck->add_option("--K", grad_k, "adjacent bands of the checked spec");
  gradcheck->add_option("--patch", grad_opt.patch);
  gradcheck->add_option("--batch", grad_opt.batch);
  gradcheck->add_option("--seed", grad_opt.seed);
  gradcheck->add_option("--step", grad_opt.step);
  gradcheck->add_flag("--no-multi-scale", no_multi_scale);
  gradcheck->add_flag("--no-multi-level", no_multi_level);
  gradcheck->add_flag("--corrupt-backward", grad_opt.corrupt_backward, "negative control: perturb one gradient");

  std::string k_list;
  auto* ksweep = app.add_subcommand("ksweep", "train and evaluate one model per K");
  ksweep->add_option("--config", config_path)->required();
  ksweep->add_option("--k-list", k_list)->required();
  ksweep->add_option("--output", csv_path)->required();

  hsid::RawImport raw;
  std::string raw_type = "u16", raw_order = "little", raw_norm = "band";
  auto* import_raw = app.add_subcommand("import-raw", "convert headerless BSQ to an HSIC cube");
  import_raw->add_option("--input", raw.input)->required();
  import_raw->add_option("--output", raw.output)->required();
  import_raw->add_option("--width", raw.width)->required();
  import_raw->add_option("--height", raw.height)->required();
  import_raw->add_option("--bands", raw.bands)->required();
  import_raw->add_option("--type", raw_type)->check(CLI::IsMember({"f32", "f64", "i16", "u16"}));
  import_raw->add_option("--byte-order", raw_order)->check(CLI::IsMember({"little", "big"}));
  import_raw->add_option("--normalize", raw_norm)->check(CLI::IsMember({"band", "global", "none"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitInput;
  }

  try {
    if (*simulate) {
      const auto r = hsid::cmd_simulate(hsid::load_config(config_path));
      std::cout << "wrote noisy cube with " << r.sigma.size() << " bands\n";
    } else if (*train) {
      const auto r = hsid::cmd_train(hsid::load_config(config_path));
      std::cout << "trained " << r.trace.size() << " iterations";
      if (!r.trace.empty()) std::cout << ", final loss " << r.trace.back().loss;
      std::cout << '\n';
    } else if (*denoise) {
      if (!emit_bands.empty()) denoise_opt.emit_bands = parse_band_list(emit_bands);
      const auto out = hsid::cmd_denoise(denoise_opt);
      std::cout << "denoised " << out.width() << "x" << out.height() << "x" << out.bands() << '\n';
    } else if (*evaluate) {
      const auto r = hsid::cmd_evaluate(ref_path, test_path, csv_path);
      std::cout << "mpsnr " << r.mpsnr << " mssim " << r.mssim << " msa ";
      if (r.msa_degrees) {
        std::cout << *r.msa_degrees << '\n';
      } else {
        std::cout << "NA\n";
      }
    } else if (*gradcheck) {
      grad_opt.spec = hsid::make_architecture(grad_k, !no_multi_scale, !no_multi_level);
      const auto r = hsid::cmd_gradcheck(grad_opt, std::cout);
      return r.passed() ? 0 : kExitInternal;
    } else if (*ksweep) {
      const auto rows = hsid::cmd_ksweep(hsid::load_config(config_path), parse_band_list(k_list), csv_path);
      for (const auto& r : rows) std::cout << "K=" << r.K << " mpsnr " << r.mpsnr << " (noisy " << r.noisy_mpsnr << ")\n";
    } else if (*import_raw) {
      static const std::map<std::string, hsid::SampleType> types{{"f32", hsid::SampleType::Float32},
                                                                 {"f64", hsid::SampleType::Float64},
                                                                 {"i16", hsid::SampleType::Int16},
                                                                 {"u16", hsid::SampleType::UInt16}};
      static const std::map<std::string, hsid::NormalizeMode> modes{{"band", hsid::NormalizeMode::PerBand},
                                                                    {"global", hsid::NormalizeMode::Global},
                                                                    {"none", hsid::NormalizeMode::None}};
      raw.type = types.at(raw_type);
      raw.order = raw_order == "big" ? hsid::ByteOrder::Big : hsid::ByteOrder::Little;
      raw.normalize = modes.at(raw_norm);
      const auto c = hsid::cmd_import_raw(raw);
      std::cout << "imported " << c.width() << "x" << c.height() << "x" << c.bands() << '\n';
    }
  } catch (const hsid::Error& e) {
    std::cerr << "hsid: " << e.what() << '\n';
    return hsid::is_input_error(e.code()) ? kExitInput : kExitInternal;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "hsid: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "hsid: internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return 0;
}
