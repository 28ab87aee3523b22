#include "fcaide/pixelwise.hpp"

#include <stdexcept>

namespace fcaide {

Tensor apply_polynomial_map(const Tensor& z, const CoefficientMaps& coeffs) {
  if (coeffs.a.empty()) throw std::invalid_argument("apply_polynomial_map: no coefficients");
  for (const Tensor& a : coeffs.a) {
    if (a.shape() != z.shape()) {
      throw std::invalid_argument("apply_polynomial_map: coefficient shape " +
                                  shape_string(a.shape()) + " != image shape " +
                                  shape_string(z.shape()));
    }
  }
  Tensor out(z.shape(), 0.0);
  for (std::size_t i = 0; i < z.size(); ++i) {
    // Same evaluation order as the taped version.
    double acc = coeffs.a[0][i];
    double power = z[i];
    for (std::size_t m = 1; m < coeffs.a.size(); ++m) {
      acc = acc + coeffs.a[m][i] * power;
      power = power * z[i];
    }
    out[i] = acc;
  }
  return out;
}

Var apply_polynomial_map(Tape& tape, Var z, const std::vector<Var>& coeffs) {
  if (coeffs.empty()) throw std::invalid_argument("apply_polynomial_map: no coefficients");
  for (Var a : coeffs) {
    if (a.shape() != z.shape()) throw std::invalid_argument("apply_polynomial_map: shape mismatch");
  }
  Var out = coeffs[0];
  Var power = z;
  for (std::size_t m = 1; m < coeffs.size(); ++m) {
    out = tape.add(out, tape.mul(coeffs[m], power));
    if (m + 1 < coeffs.size()) power = tape.mul(power, z);
  }
  return out;
}

Tensor flip(const Tensor& image, Flip kind) {
  if (image.rank() != 2) throw std::invalid_argument("flip: expected [H,W]");
  const std::size_t h = image.extent(0);
  const std::size_t w = image.extent(1);
  const bool hor = kind == Flip::Horizontal || kind == Flip::Both;
  const bool ver = kind == Flip::Vertical || kind == Flip::Both;
  Tensor out(image.shape());
  for (std::size_t r = 0; r < h; ++r) {
    const std::size_t sr = ver ? h - 1 - r : r;
    for (std::size_t c = 0; c < w; ++c) {
      out.at(r, c) = image.at(sr, hor ? w - 1 - c : c);
    }
  }
  return out;
}

GrayImage flip(const GrayImage& image, Flip kind) {
  return GrayImage::from_tensor(flip(image.to_tensor(), kind), image.scale());
}

std::array<FlipVariant, 4> flip_augment(const GrayImage& image) {
  return {FlipVariant{Flip::None, image}, FlipVariant{Flip::Horizontal, flip(image, Flip::Horizontal)},
          FlipVariant{Flip::Vertical, flip(image, Flip::Vertical)},
          FlipVariant{Flip::Both, flip(image, Flip::Both)}};
}

}  // namespace fcaide
