#pragma once

#include <vector>

#include "fcaide/network.hpp"
#include "fcaide/pixelwise.hpp"
#include "fcaide/tape.hpp"

namespace fcaide {

/// (1/n) ||x - xhat||^2
double mse(const Tensor& x, const Tensor& xhat);
Var mse(Tape& tape, Var x, Var xhat);

/// Unbiased estimate of the MSE of the pixelwise polynomial denoiser
/// X_i = sum_m a_m[i] Z_i^m from the noisy image alone:
///   (1/n)||Z - X||^2 + (sigma2/n) sum_i [ sum_{m=1}^{d} 2^m a_m[i] Z_i^{m-1} - 1 ]
/// `degree` must agree with the coefficients; for degree 1 a trailing a_2
/// map is accepted only when it is identically zero.
double estimated_loss(const Tensor& z, const CoefficientMaps& coeffs, double sigma2, int degree);
Var estimated_loss(Tape& tape, Var z, const std::vector<Var>& coeffs, double sigma2);

/// Gaussian SURE with the coefficients held constant in Z_i:
///   -sigma2 + (1/n)||Z - X||^2 + (2 sigma2/n) sum_i (a_1[i] + 2 a_2[i] Z_i)
double sure_gaussian(const Tensor& z, const CoefficientMaps& coeffs, double sigma2, int degree);

/// Per-variant reconstructions recorded by the taped augmented loss.
struct AugmentedTrace {
  std::array<Var, 4> reconstructions;  // in each variant's own orientation
};

/// Mean of estimated_loss over the four flips of Z, each denoised by the
/// network independently.
double augmented_estimated_loss(const Tensor& z, const NetworkParams& params, double sigma2);
Var augmented_estimated_loss(Tape& tape, const BoundParams& params, const NetworkConfig& config,
                             const Tensor& z, double sigma2, AugmentedTrace* trace = nullptr);

/// lambda * sum over parameters of ||w - w_anchor||^2
double l2sp_penalty(const NetworkParams& params, const NetworkParams& anchor, double lambda);
Var l2sp_penalty(Tape& tape, const BoundParams& params, const NetworkParams& anchor, double lambda);

}  // namespace fcaide
