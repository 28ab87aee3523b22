#include "fcaide/noise.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fcaide {

std::string to_string(NoiseDistribution distribution) {
  switch (distribution) {
    case NoiseDistribution::Gaussian: return "gaussian";
    case NoiseDistribution::Laplacian: return "laplacian";
    case NoiseDistribution::UniformSymmetric: return "uniform";
  }
  return "unknown";
}

NoiseDistribution parse_noise_distribution(const std::string& name) {
  if (name == "gaussian") return NoiseDistribution::Gaussian;
  if (name == "laplacian") return NoiseDistribution::Laplacian;
  if (name == "uniform") return NoiseDistribution::UniformSymmetric;
  throw std::invalid_argument("unknown noise distribution '" + name + "'");
}

void NoiseSpec::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("NoiseSpec: sigma must be >= 0");
  switch (distribution) {
    case NoiseDistribution::Gaussian:
    case NoiseDistribution::Laplacian:
    case NoiseDistribution::UniformSymmetric:
      return;
  }
  throw std::invalid_argument("NoiseSpec: unknown distribution");
}

double draw_noise(NoiseDistribution distribution, double sigma, Rng& rng) {
  switch (distribution) {
    case NoiseDistribution::Gaussian:
      return sigma * rng.normal();
    case NoiseDistribution::Laplacian:
      return rng.laplace(sigma / std::sqrt(2.0));
    case NoiseDistribution::UniformSymmetric: {
      const double half_width = sigma * std::sqrt(3.0);
      return rng.uniform(-half_width, half_width);
    }
  }
  throw std::invalid_argument("draw_noise: unknown distribution");
}

GrayImage corrupt(const GrayImage& clean, const NoiseSpec& spec, Rng& rng) {
  spec.validate();
  const double sigma = clean.scale() == PixelScale::Unit ? spec.sigma / kPixelPeak : spec.sigma;
  GrayImage noisy = clean;
  if (sigma == 0.0) return noisy;
  for (double& v : noisy.pixels()) v += draw_noise(spec.distribution, sigma, rng);
  return noisy;
}

double sample_blind_sigma(Rng& rng, double lo, double hi) {
  if (!(lo >= 0.0)) throw std::invalid_argument("sample_blind_sigma: lo must be >= 0");
  if (lo > hi) throw std::invalid_argument("sample_blind_sigma: lo > hi");
  if (lo == hi) return lo;
  return std::min(hi, rng.uniform(lo, hi));
}

}  // namespace fcaide
