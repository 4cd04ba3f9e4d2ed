// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances are fixed here and never adapted at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <algorithm>
#include <functional>
#include <memory>
#include <optional>
#include <sstream>
#include <string>

#include "hsid/checkpoint.hpp"
#include "hsid/commands.hpp"
#include "hsid/error.hpp"
#include "hsid/log.hpp"
#include "hsid/noise.hpp"
#include "hsid/pipeline.hpp"
#include "hsid/trainer.hpp"
#include "oracles.hpp"
#include "synthetic.hpp"
#include "test_util.hpp"

using namespace hsid;
using namespace hsid::testing;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

int failures = 0;

void criterion(const char* id, const std::function<Outcome()>& body) {
  Outcome o;
  const auto t0 = Clock::now();
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::printf("%s %-22s %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", id, o.detail.c_str(), seconds_since(t0));
  std::fflush(stdout);
}

// Desk-scale experiment, shared with the full-scale substitute line.
struct DeskResult {
  HoldoutResult holdout;
  double seconds = 0.0;
  std::size_t iterations = 0;
};
std::optional<DeskResult> desk;

DeskResult run_desk_scale(const TempDir& dir) {
  save_cube(synthetic_scene(64, 64, 31), dir / "scene.hsic");
  HarnessConfig cfg = parse_config(
      "noise.case = fixed\n"
      "noise.sigma = 25\n"
      "arch.K = 12\n"
      "train.patch = 20\n"
      "train.stride = 10\n"
      "train.rotations = 0,90,180,270\n"
      "train.scales = 1\n"
      "train.test_region = 40,0,24,64\n"
      "train.batch_size = 32\n"
      "train.epochs = 1000\n"
      "train.max_iterations = 300\n"
      "optim.alpha = 0.001\n");
  cfg.train_inputs = {dir / "scene.hsic"};
  cfg.checkpoint = dir / "desk.hsck";
  const auto t0 = Clock::now();
  const TrainOutcome t = cmd_train(cfg);
  DeskResult r;
  r.seconds = seconds_since(t0);
  r.iterations = t.trace.size();
  r.holdout = evaluate_holdout(holdout_cube(cfg), cfg.noise, t.spec, t.params);
  return r;
}

}  // namespace

int main() {
  set_warning_handler([](std::string_view) {});
  TempDir dir("acceptance");

  criterion("gradient_gate", [] {
    const auto t0 = Clock::now();
    std::ostringstream log;
    const GradcheckReport r = cmd_gradcheck({}, log);
    const double secs = seconds_since(t0);
    return Outcome{r.passed(1e-5) && secs < 300.0,
                   fmt("max relative error %.3e over %zu tensors (< 1e-5), %.1fs (< 300s)", r.max_error, r.tensors.size(), secs)};
  });

  criterion("residual_identity", [] {
    bool ok = true;
    for (auto [w, h, b, k] : {std::tuple<std::size_t, std::size_t, std::size_t, std::size_t>{31, 17, 9, 4},
                              {64, 64, 30, 24},
                              {8, 40, 3, 2}}) {
      const ArchitectureSpec spec = make_architecture(k);
      const HsiCube noisy = add_noise(random_cube(w, h, b, w * h), {FixedNoise{50.0}, 4});
      ok = ok && denoise_cube(noisy, ModelParams<double>::zeros(spec), spec) == noisy;
    }
    return Outcome{ok, "zero parameters: denoise_cube output bit-identical to input on 3 cubes (double)"};
  });

  criterion("energy_identity", [] {
    double worst = 0.0;
    for (auto [beta, eta, B] : {std::tuple{200.0, 30.0, 191}, {50.0, 10.0, 31}, {1.0, 1.0, 2}}) {
      double e = 0.0;
      for (double s : sigma_profile({GaussianCurveNoise{beta, eta}, 1}, static_cast<std::size_t>(B))) e += s * s;
      worst = std::max(worst, std::abs(e - beta * beta) / (beta * beta));
    }
    return Outcome{worst < 1e-9, fmt("worst relative |sum sigma^2 - beta^2| = %.3e (< 1e-9)", worst)};
  });

  criterion("noise_statistics", [] {
    const HsiCube flat(1000, 1000, 1, 0.5f);
    const HsiCube y = add_noise(flat, {FixedNoise{25.0}, 11});
    double s = 0, s2 = 0;
    for (float v : y.values()) {
      s += v - 0.5;
      s2 += (v - 0.5) * (v - 0.5);
    }
    const double n = 1e6, mean = s / n, sd = std::sqrt(s2 / n - mean * mean), target = 25.0 / 255.0;
    const double std_err = std::abs(sd - target) / target;

    const HsiCube clean = synthetic_scene(200, 200, 31);
    const double mpsnr = report(clean, add_noise(clean, {FixedNoise{25.0}, 12})).mpsnr;
    const double expected = 20.0 * std::log10(255.0 / 25.0);
    return Outcome{std_err < 0.02 && std::abs(mpsnr - expected) < 0.3,
                   fmt("std error %.3f%% (< 2%%); AWGN MPSNR %.3f dB vs %.3f dB (|diff| < 0.3)", 100 * std_err, mpsnr, expected)};
  });

  criterion("overfit", [] {
    const ArchitectureSpec spec = make_architecture(4);
    const HsiCube clean = synthetic_scene(32, 32, 6);
    const HsiCube noisy = add_noise(clean, {FixedNoise{25.0}, 1});
    const auto all = extract_patches(noisy, clean, {8, 8}, 4);
    PatchDataset d;
    for (std::size_t i = 0; i < 16; ++i) d.add_sample(all[i * all.size() / 16]);
    TrainConfig tc;
    tc.epochs = 1000;
    tc.batch_size = 16;
    const auto r = train<float>(d, spec, tc, OptimizerConfig{}, init_params<float>(spec, 2));
    const double first = r.trace.front().loss, last = r.trace.back().loss;

    // Residual-identity baseline (phi = 0) and the trained model on its own patches.
    double zero = 0.0, self = 0.0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const auto s = d.at(i);
      const auto x_hat = denoise_patch(s.y_spatial, s.y_spectral, r.params, spec);
      for (std::size_t j = 0; j < s.label_clean.size(); ++j) {
        zero += std::pow(s.label_clean[j] - s.y_spatial[j], 2) / 2;
        self += std::pow(x_hat[j] - s.label_clean[j], 2) / 2;
      }
    }
    zero /= 16;
    self /= 16;
    return Outcome{r.trace.size() <= 2000 && last < 0.01 * first && last < zero && self < 2 * last,
                   fmt("%zu iterations, alpha 0.01: final/first loss %.4f%% (< 1%%); final %.3e vs phi=0 %.3e; own-patch loss %.3e (< 2x final)",
                       r.trace.size(), 100 * last / first, last, zero, self)};
  });

  criterion("desk_scale", [&] {
    desk = run_desk_scale(dir);
    const auto& h = desk->holdout;
    const double gain = h.denoised.mpsnr - h.noisy.mpsnr;
    return Outcome{gain >= 2.0 && *h.denoised.msa_degrees < *h.noisy.msa_degrees && desk->seconds < 1800.0,
                   fmt("64x64x31, sigma 25, K 12, %zu iterations in %.0fs (< 1800s): MPSNR %.2f -> %.2f dB (+%.2f, >= 2), MSA %.2f -> %.2f deg",
                       desk->iterations, desk->seconds, h.noisy.mpsnr, h.denoised.mpsnr, gain, *h.noisy.msa_degrees,
                       *h.denoised.msa_degrees)};
  });

  criterion("full_scale_substitute", [] {
    // Full-scale reference magnitudes are recorded, not asserted; the property
    // suite and the desk-scale run stand in for them.
    if (!desk) return Outcome{false, "desk-scale run did not complete"};
    return Outcome{true, fmt("full-scale reference 33.050 dB / 0.9813 / 4.2641 deg after ~170k iterations; desk run measured %.2f dB / %.4f / %.2f deg (direction only)",
                             desk->holdout.denoised.mpsnr, desk->holdout.denoised.mssim, *desk->holdout.denoised.msa_degrees)};
  });

  criterion("metric_oracles", [] {
    double psnr_err = 0, ssim_err = 0, msa_err = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      const HsiCube a = random_cube(16, 16, 5, seed), b = random_cube(16, 16, 5, seed + 100);
      const HsiCube c = add_noise(a, {FixedNoise{40.0}, seed});
      for (const HsiCube* t : {&b, &c}) {
        for (std::size_t k = 0; k < 5; ++k) {
          psnr_err = std::max(psnr_err, std::abs(psnr(BandView::of(a, k), BandView::of(*t, k)) - psnr_oracle(a, *t, k)));
          ssim_err = std::max(ssim_err, std::abs(ssim(BandView::of(a, k), BandView::of(*t, k)) - ssim_oracle(a, *t, k)));
        }
        msa_err = std::max(msa_err, std::abs(*msa(a, *t).mean_degrees - msa_oracle(a, *t)));
      }
    }
    const HsiCube a = random_cube(16, 16, 3, 7);
    const QualityReport self = report(a, a);
    const HsiCube flat(16, 16, 1, 0.25f), shifted(16, 16, 1, 0.35f);
    const double offset_db = psnr(BandView::of(flat, 0), BandView::of(shifted, 0));
    const double offset_expected = -20.0 * std::log10(static_cast<double>(0.35f) - 0.25);
    HsiCube e1(4, 4, 2), e2(4, 4, 2);
    for (std::size_t i = 0; i < 16; ++i) {
      e1.values()[i] = 1.0f;
      e2.values()[16 + i] = 1.0f;
    }
    const double ortho = *msa(e1, e2).mean_degrees;
    const bool analytic = self.mpsnr == kPsnrCapDb && self.mssim == 1.0 && *self.msa_degrees == 0.0 &&
                          std::abs(offset_db - offset_expected) < 1e-10 && std::abs(offset_db - 20.0) < 1e-5 &&
                          std::abs(ortho - 90.0) < 1e-9;
    return Outcome{psnr_err < 1e-10 && ssim_err < 1e-9 && msa_err < 1e-9 && analytic,
                   fmt("oracle diffs psnr %.1e dB, ssim %.1e, msa %.1e deg; identical -> %.0f/%.1f/%.1f; +0.1 -> %.6f dB; orthogonal -> %.9f deg",
                       psnr_err, ssim_err, msa_err, self.mpsnr, self.mssim, *self.msa_degrees, offset_db, ortho)};
  });

  criterion("pipeline_counts", [] {
    const auto big = std::make_shared<HsiCube>(200, 200, 191, 0.5f);
    PatchDataset d;
    d.add_pair(big, big, {20, 20}, 24);
    bool excluded = true;
    for (std::size_t B = 2; B <= 64; ++B)
      for (std::size_t K = 1; K < B; ++K)
        for (std::size_t k = 0; k < B; ++k) {
          const auto idx = adjacent_band_indices(B, k, K);
          excluded = excluded && idx.size() == K && std::find(idx.begin(), idx.end(), k) == idx.end();
        }
    return Outcome{d.size() == 19100 && excluded,
                   fmt("200x200x191 p=s=20 -> %zu samples (19100); current band never in its window for all B <= 64: %s", d.size(),
                       excluded ? "yes" : "no")};
  });

  criterion("train_determinism", [&] {
    save_cube(synthetic_scene(24, 24, 6), dir / "small.hsic");
    auto run = [&](const std::string& tag) {
      HarnessConfig cfg = parse_config(
          "arch.K = 4\ntrain.patch = 8\ntrain.stride = 8\ntrain.epochs = 2\ntrain.batch_size = 8\n"
          "train.rotations = 0,90\ntrain.scales = 1,0.5\noptim.alpha = 0.001\n");
      cfg.train_inputs = {dir / "small.hsic"};
      cfg.checkpoint = dir / (tag + ".hsck");
      return cmd_train(cfg).trace.size();
    };
    const std::size_t n = run("det_a");
    run("det_b");
    const bool same_ck = read_bytes(dir / "det_a.hsck") == read_bytes(dir / "det_b.hsck");
    const bool same_trace = read_bytes(dir / "det_a.hsck.loss.csv") == read_bytes(dir / "det_b.hsck.loss.csv");
    return Outcome{same_ck && same_trace && n > 0,
                   fmt("two cmd_train runs, %zu iterations each: checkpoints %s, loss traces %s", n, same_ck ? "identical" : "differ",
                       same_trace ? "identical" : "differ")};
  });

  criterion("format_roundtrips", [&] {
    const HsiCube c = random_cube(13, 7, 5, 3);
    save_cube(c, dir / "r1.hsic");
    save_cube(load_cube(dir / "r1.hsic"), dir / "r2.hsic");
    const ArchitectureSpec spec = make_architecture(24);
    const auto p = init_params<float>(spec, 5);
    const AdamState<float> s{init_params<float>(spec, 6), init_params<float>(spec, 7), 1234};
    save_checkpoint(dir / "r1.hsck", spec, p, &s);
    const Checkpoint ck = load_checkpoint(dir / "r1.hsck");
    save_checkpoint(dir / "r2.hsck", ck.spec, ck.params, ck.optimizer ? &*ck.optimizer : nullptr);
    const bool cube_ok = read_bytes(dir / "r1.hsic") == read_bytes(dir / "r2.hsic");
    const bool ck_ok = read_bytes(dir / "r1.hsck") == read_bytes(dir / "r2.hsck");
    return Outcome{cube_ok && ck_ok, fmt("HSIC save-load-save %s; HSCK (with optimizer state) save-load-save %s",
                                         cube_ok ? "byte-identical" : "differs", ck_ok ? "byte-identical" : "differs")};
  });

  std::printf("%s: %d criterion(s) failed\n", failures ? "FAILED" : "OK", failures);
  return failures ? 1 : 0;
}
