#include "hsid/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numbers>
#include <string>

#include "hsid/error.hpp"

namespace hsid {
namespace {

void check_same(BandView a, BandView b, const char* op) {
  if (a.width != b.width || a.height != b.height || a.values.size() != b.values.size() ||
      a.values.size() != a.width * a.height) {
    throw Error(ErrorCode::ShapeMismatch, std::string(op) + ": bands differ in size (" + std::to_string(a.width) + "x" +
                                              std::to_string(a.height) + " vs " + std::to_string(b.width) + "x" +
                                              std::to_string(b.height) + ")");
  }
}

std::vector<double> gaussian_window(std::size_t n, double sigma) {
  std::vector<double> w1(n);
  const double c = static_cast<double>(n - 1) / 2.0;
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = static_cast<double>(i) - c;
    w1[i] = std::exp(-(d * d) / (2.0 * sigma * sigma));
  }
  std::vector<double> w(n * n);
  for (std::size_t y = 0; y < n; ++y)
    for (std::size_t x = 0; x < n; ++x) total += (w[y * n + x] = w1[y] * w1[x]);
  for (double& v : w) v /= total;
  return w;
}

}  // namespace

double psnr(BandView ref, BandView test, double peak) {
  check_same(ref, test, "psnr");
  if (!(peak > 0.0)) throw Error(ErrorCode::InvalidArgument, "psnr: peak must be positive");
  double sse = 0.0;
  for (std::size_t i = 0; i < ref.values.size(); ++i) {
    const double d = static_cast<double>(ref.values[i]) - static_cast<double>(test.values[i]);
    sse += d * d;
  }
  const double mse = sse / static_cast<double>(ref.values.size());
  if (mse == 0.0) return kPsnrCapDb;
  return 10.0 * std::log10(peak * peak / mse);
}

double ssim(BandView ref, BandView test, const SsimParams& params) {
  check_same(ref, test, "ssim");
  const std::size_t n = params.window;
  if (ref.width < n || ref.height < n) {
    throw Error(ErrorCode::InvalidArgument, "ssim: band " + std::to_string(ref.width) + "x" + std::to_string(ref.height) +
                                                " is smaller than the " + std::to_string(n) + "x" + std::to_string(n) + " window");
  }
  const std::vector<double> w = gaussian_window(n, params.gaussian_sigma);
  const double c1 = std::pow(params.k1 * params.dynamic_range, 2);
  const double c2 = std::pow(params.k2 * params.dynamic_range, 2);
  const std::size_t W = ref.width;
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t y0 = 0; y0 + n <= ref.height; ++y0) {
    for (std::size_t x0 = 0; x0 + n <= W; ++x0) {
      double mx = 0, my = 0, sxx = 0, syy = 0, sxy = 0;
      for (std::size_t dy = 0; dy < n; ++dy)
        for (std::size_t dx = 0; dx < n; ++dx) {
          const double wi = w[dy * n + dx];
          const double a = ref.values[(y0 + dy) * W + x0 + dx];
          const double b = test.values[(y0 + dy) * W + x0 + dx];
          mx += wi * a;
          my += wi * b;
          sxx += wi * a * a;
          syy += wi * b * b;
          sxy += wi * a * b;
        }
      const double vx = sxx - mx * mx, vy = syy - my * my, cxy = sxy - mx * my;
      total += ((2.0 * mx * my + c1) * (2.0 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

SpectralAngle msa(const HsiCube& ref, const HsiCube& test) {
  if (!ref.same_dims(test)) throw Error(ErrorCode::ShapeMismatch, "msa: cubes differ in size");
  SpectralAngle result;
  if (ref.bands() < 2) return result;
  double total = 0.0;
  std::size_t used = 0;
  for (std::size_t y = 0; y < ref.height(); ++y)
    for (std::size_t x = 0; x < ref.width(); ++x) {
      double dot = 0, na = 0, nb = 0;
      for (std::size_t b = 0; b < ref.bands(); ++b) {
        const double a = ref.at(x, y, b), c = test.at(x, y, b);
        dot += a * c;
        na += a * a;
        nb += c * c;
      }
      if (na == 0.0 || nb == 0.0) {
        ++result.skipped_pixels;
        continue;
      }
      const double cosine = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
      total += std::acos(cosine);
      ++used;
    }
  if (used > 0) result.mean_degrees = total / static_cast<double>(used) * 180.0 / std::numbers::pi;
  return result;
}

QualityReport report(const HsiCube& ref, const HsiCube& test) {
  if (!ref.same_dims(test)) throw Error(ErrorCode::ShapeMismatch, "report: cubes differ in size");
  QualityReport r;
  for (std::size_t b = 0; b < ref.bands(); ++b) {
    r.per_band_psnr.push_back(psnr(BandView::of(ref, b), BandView::of(test, b)));
    r.per_band_ssim.push_back(ssim(BandView::of(ref, b), BandView::of(test, b)));
  }
  double sp = 0, ss = 0;
  for (std::size_t b = 0; b < ref.bands(); ++b) {
    sp += r.per_band_psnr[b];
    ss += r.per_band_ssim[b];
  }
  r.mpsnr = sp / static_cast<double>(ref.bands());
  r.mssim = ss / static_cast<double>(ref.bands());
  const SpectralAngle angle = msa(ref, test);
  r.msa_degrees = angle.mean_degrees;
  r.msa_skipped_pixels = angle.skipped_pixels;
  return r;
}

void emit_csv(const QualityReport& report, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out << std::setprecision(17);
  out << "band,psnr_db,ssim\n";
  for (std::size_t b = 0; b < report.per_band_psnr.size(); ++b) {
    out << b << ',' << report.per_band_psnr[b] << ',' << report.per_band_ssim[b] << '\n';
  }
  out << "mpsnr,mssim,msa_deg\n";
  out << report.mpsnr << ',' << report.mssim << ',';
  if (report.msa_degrees) {
    out << *report.msa_degrees;
  } else {
    out << "NA";
  }
  out << '\n';
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace hsid
