#include "fcaide/denoiser.hpp"

#include <algorithm>
#include <array>

namespace fcaide {

namespace {

Tensor reconstruct(const NetworkParams& params, const Tensor& z) {
  return apply_polynomial_map(z, forward(params, z));
}

}  // namespace

GrayImage denoise_unclipped(const NetworkParams& params, const GrayImage& noisy, DenoiseMode mode) {
  const Tensor z = noisy.to_unit().to_tensor();
  Tensor result(z.shape(), 0.0);
  if (mode == DenoiseMode::Plain) {
    result = reconstruct(params, z);
  } else {
    std::array<Tensor, 4> restored;
    for (std::size_t k = 0; k < kAllFlips.size(); ++k) {
      restored[k] = flip(reconstruct(params, flip(z, kAllFlips[k])), kAllFlips[k]);
    }
    // Summing in ascending order makes the average independent of which flip
    // produced which term, so flip(denoise(Z)) == denoise(flip(Z)) bitwise.
    for (std::size_t i = 0; i < result.size(); ++i) {
      std::array<double, 4> terms{restored[0][i], restored[1][i], restored[2][i], restored[3][i]};
      std::sort(terms.begin(), terms.end());
      result[i] = (((terms[0] + terms[1]) + terms[2]) + terms[3]) * 0.25;
    }
  }
  return GrayImage::from_tensor(result, PixelScale::Unit).to_scale(noisy.scale());
}

GrayImage clip_to_range(const GrayImage& image) {
  GrayImage out = image;
  const double peak = image.scale() == PixelScale::Unit ? 1.0 : kPixelPeak;
  for (double& v : out.pixels()) v = std::clamp(v, 0.0, peak);
  return out;
}

GrayImage denoise(const NetworkParams& params, const GrayImage& noisy, DenoiseMode mode) {
  return clip_to_range(denoise_unclipped(params, noisy, mode).to_raw());
}

}  // namespace fcaide
