#pragma once

#include <array>
#include <vector>

#include "fcaide/image.hpp"
#include "fcaide/network.hpp"
#include "fcaide/tape.hpp"

namespace fcaide {

/// X_i = sum_m a_m[i] * Z_i^m, elementwise, no clipping.
Tensor apply_polynomial_map(const Tensor& z, const CoefficientMaps& coeffs);
Var apply_polynomial_map(Tape& tape, Var z, const std::vector<Var>& coeffs);

enum class Flip { None, Horizontal, Vertical, Both };

inline constexpr std::array<Flip, 4> kAllFlips{Flip::None, Flip::Horizontal, Flip::Vertical,
                                               Flip::Both};

/// Every flip is an involution, so it is also its own inverse.
Tensor flip(const Tensor& image, Flip kind);
GrayImage flip(const GrayImage& image, Flip kind);

struct FlipVariant {
  Flip kind;
  GrayImage image;
  GrayImage undo(const GrayImage& result) const { return flip(result, kind); }
};

/// {identity, H-flip, V-flip, HV-flip} of `image`.
std::array<FlipVariant, 4> flip_augment(const GrayImage& image);

}  // namespace fcaide
