#pragma once

#include <string>

#include "fcaide/image.hpp"
#include "fcaide/rng.hpp"

namespace fcaide {

enum class NoiseDistribution { Gaussian, Laplacian, UniformSymmetric };

std::string to_string(NoiseDistribution distribution);
NoiseDistribution parse_noise_distribution(const std::string& name);

/// Zero-mean, symmetric, i.i.d. additive noise. `sigma` is the standard
/// deviation in 0..255 intensity units.
struct NoiseSpec {
  double sigma = 25.0;
  NoiseDistribution distribution = NoiseDistribution::Gaussian;

  void validate() const;
};

/// One zero-mean draw with standard deviation `sigma` (units of the caller).
double draw_noise(NoiseDistribution distribution, double sigma, Rng& rng);

/// Z = x + N. Values are not clipped. `spec.sigma` is interpreted in raw
/// units and rescaled for Unit-scale images.
GrayImage corrupt(const GrayImage& clean, const NoiseSpec& spec, Rng& rng);

/// Uniform draw in [lo, hi] for blind training.
double sample_blind_sigma(Rng& rng, double lo, double hi);

}  // namespace fcaide
