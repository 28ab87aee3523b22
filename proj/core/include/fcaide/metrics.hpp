#pragma once

#include "fcaide/image.hpp"

namespace fcaide {

inline constexpr double kPsnrCap = 100.0;

/// 10 log10(peak^2 / mse), capped at 100 dB when the images are identical.
/// Both images are compared in raw scale.
double psnr(const GrayImage& x, const GrayImage& xhat, double peak = kPixelPeak);

/// Mean SSIM over all valid 11x11 windows (Gaussian weights, std 1.5),
/// K1 = 0.01, K2 = 0.03, dynamic range 255.
double ssim(const GrayImage& x, const GrayImage& xhat);

}  // namespace fcaide
