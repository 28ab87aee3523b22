#include "fcaide/metrics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace fcaide {

namespace {

constexpr int kWindow = 11;
constexpr double kWindowSigma = 1.5;
constexpr double kK1 = 0.01;
constexpr double kK2 = 0.03;

std::array<double, kWindow * kWindow> gaussian_window() {
  std::array<double, kWindow * kWindow> w{};
  const int half = kWindow / 2;
  double total = 0.0;
  for (int r = 0; r < kWindow; ++r) {
    for (int c = 0; c < kWindow; ++c) {
      const double d2 = (r - half) * (r - half) + (c - half) * (c - half);
      w[r * kWindow + c] = std::exp(-d2 / (2.0 * kWindowSigma * kWindowSigma));
      total += w[r * kWindow + c];
    }
  }
  for (double& v : w) v /= total;
  return w;
}

void check_dims(const GrayImage& x, const GrayImage& y, const char* op) {
  if (x.height() != y.height() || x.width() != y.width()) {
    throw std::invalid_argument(std::string(op) + ": image dimensions differ");
  }
}

}  // namespace

double psnr(const GrayImage& x, const GrayImage& xhat, double peak) {
  check_dims(x, xhat, "psnr");
  const GrayImage a = x.to_raw();
  const GrayImage b = xhat.to_raw();
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a.pixels()[i] - b.pixels()[i];
    acc += d * d;
  }
  const double err = acc / static_cast<double>(a.size());
  if (err == 0.0) return kPsnrCap;
  return 10.0 * std::log10(peak * peak / err);
}

double ssim(const GrayImage& x, const GrayImage& xhat) {
  check_dims(x, xhat, "ssim");
  if (x.height() < kWindow || x.width() < kWindow) {
    throw std::invalid_argument("ssim: image smaller than the 11x11 window");
  }
  const GrayImage a = x.to_raw();
  const GrayImage b = xhat.to_raw();
  static const auto window = gaussian_window();
  const double c1 = (kK1 * kPixelPeak) * (kK1 * kPixelPeak);
  const double c2 = (kK2 * kPixelPeak) * (kK2 * kPixelPeak);

  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t top = 0; top + kWindow <= a.height(); ++top) {
    for (std::size_t left = 0; left + kWindow <= a.width(); ++left) {
      double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
      for (int r = 0; r < kWindow; ++r) {
        for (int c = 0; c < kWindow; ++c) {
          const double w = window[r * kWindow + c];
          const double va = a.at(top + r, left + c);
          const double vb = b.at(top + r, left + c);
          mu_a += w * va;
          mu_b += w * vb;
          aa += w * va * va;
          bb += w * vb * vb;
          ab += w * va * vb;
        }
      }
      const double var_a = aa - mu_a * mu_a;
      const double var_b = bb - mu_b * mu_b;
      const double cov = ab - mu_a * mu_b;
      total += ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
               ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

}  // namespace fcaide
