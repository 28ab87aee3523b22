#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fcaide/image.hpp"
#include "fcaide/masks.hpp"
#include "fcaide/network.hpp"
#include "fcaide/noise.hpp"
#include "fcaide/rng.hpp"

namespace fcaide {

/// Acceptance band for Monte-Carlo checks, in standard errors.
inline constexpr double kStandardErrorBand = 4.0;

/// One line of the verification report.
struct CheckReport {
  std::string name;
  double statistic = 0.0;
  double threshold = 0.0;
  bool pass = false;
};

/// "name  statistic=...  threshold=...  PASS|FAIL"
std::string format_report_line(const CheckReport& report);

struct MomentIdentityResult {
  std::string name;
  double target = 0.0;                 // closed form in x and sigma
  double lhs_mean = 0.0, lhs_se = 0.0;
  double rhs_mean = 0.0, rhs_se = 0.0;
  double diff_mean = 0.0, diff_se = 0.0;
  bool pass = false;
};

/// Monte-Carlo check of the noise-moment identities behind the estimator's
/// unbiasedness, with Z = x + N:
///   E(Z^3 - 2 Z s^2) = E(x Z^2) = x^3 + x s^2
///   E(Z^2 - s^2)     = E(x Z)   = x^2
///   E(Z)             = x
/// An identity passes when both sides are within 4 SE of the closed form and
/// the paired difference is within 4 SE of zero. Units are those of x and
/// spec.sigma (no 255 rescaling). Requires trials >= 10^4.
std::vector<MomentIdentityResult> moment_identity_check(double x, const NoiseSpec& spec,
                                                        std::size_t trials, Rng& rng);

using CoefficientFn = std::function<CoefficientMaps(const Tensor& noisy_unit)>;
using EstimatorFn = std::function<double(const Tensor& z, const CoefficientMaps& coeffs,
                                         double sigma2, int degree)>;

struct UnbiasednessResult {
  std::size_t trials = 0;
  double mean_est_loss = 0.0;
  double mean_mse = 0.0;
  double mean_diff = 0.0;  // mean of (estimate - mse) over draws
  double se_diff = 0.0;
  bool pass = false;
};

class IndependenceViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Draws `trials` noise realizations of `clean` and compares the estimator
/// with the true MSE of the same reconstruction, per draw, in unit scale.
/// Passes when |mean difference| < 4 SE of the paired differences.
UnbiasednessResult unbiasedness_check(const GrayImage& clean, const CoefficientFn& coefficients,
                                      int degree, const NoiseSpec& spec, std::size_t trials,
                                      Rng& rng, const EstimatorFn& estimator = {});

/// Network version. Runs independence_probe first and throws
/// IndependenceViolation when it fails, since the estimator is then biased
/// by construction.
UnbiasednessResult unbiasedness_check(const GrayImage& clean, const NetworkParams& params,
                                      const NoiseSpec& spec, std::size_t trials, Rng& rng,
                                      const EstimatorFn& estimator = {},
                                      const QedMasks& masks = canonical_masks());

struct ProbeResult {
  bool pass = false;
  double worst = 0.0;               // max |d a_m[i] / d Z[i]|
  std::size_t probed_pixels = 0;
};

/// Autodiff probe of d a_m[i] / d Z[i] for every coefficient map. Probes
/// `samples` distinct random pixels, or every pixel when samples >= H*W.
/// Passes only if every probed derivative is exactly zero.
ProbeResult independence_probe(const NetworkParams& params, const Tensor& z, std::size_t samples,
                               Rng& rng, const QedMasks& masks = canonical_masks());

/// Perturbs every Z[j] in turn and returns the side of the smallest square
/// containing all j that change some a_m at (row, col). The k x k window for
/// the network depth must fit inside the image around the pixel.
int receptive_field_probe(const NetworkParams& params, const Tensor& z, std::size_t row,
                          std::size_t col, const QedMasks& masks = canonical_masks());

/// Small deterministic test image (raw scale) with smooth and oscillating
/// content.
GrayImage probe_image(std::size_t height, std::size_t width);

struct VerificationOptions {
  std::string suite = "all";  // moments | unbiasedness | independence | rf | all
  std::uint64_t seed = 20190601;
  std::size_t moment_trials = 1'000'000;
  std::size_t unbiasedness_trials = 2000;
};

/// Runs the selected suites and returns one report line per check.
std::vector<CheckReport> run_verification(const VerificationOptions& options);

}  // namespace fcaide
