#include <gtest/gtest.h>

#include <cmath>

#include "fcaide/metrics.hpp"
#include "fcaide/noise.hpp"
#include "fcaide/rng.hpp"
#include "textures.hpp"

using namespace fcaide;
using fcaide::testing::synthetic_texture;

namespace {

struct Stats {
  double mean, var, third;
};

Stats sample_stats(NoiseDistribution dist, double sigma, std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  double s1 = 0, s2 = 0, s3 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double v = draw_noise(dist, sigma, rng);
    s1 += v;
    s2 += v * v;
    s3 += v * v * v;
  }
  const double m = s1 / static_cast<double>(n);
  return {m, s2 / static_cast<double>(n) - m * m, s3 / static_cast<double>(n)};
}

}  // namespace

TEST(Rng, DeterministicAndPortable) {
  Rng a(5), b(5);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  // First output of mt19937_64 seeded with 5489 is fixed by the C++ standard.
  EXPECT_EQ(Rng(5489).next_u64(), 14514284786278117030ULL);
  Rng u(1);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform();
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
    EXPECT_LT(u.index(7), 7u);
  }
  EXPECT_NE(Rng(3).substream(1).next_u64(), Rng(3).substream(2).next_u64());
  EXPECT_EQ(Rng(3).substream(1).next_u64(), Rng(3).substream(1).next_u64());
}

TEST(Noise, ZeroSigmaIsExact) {
  const GrayImage x = synthetic_texture(6, 6, 1);
  Rng rng(1);
  EXPECT_EQ(corrupt(x, {0.0, NoiseDistribution::Gaussian}, rng), x);
}

TEST(Noise, GaussianMoments) {
  const Stats s = sample_stats(NoiseDistribution::Gaussian, 25.0, 1'000'000, 2);
  EXPECT_LT(std::abs(s.mean), 0.1);
  EXPECT_GE(std::sqrt(s.var), 24.9);
  EXPECT_LE(std::sqrt(s.var), 25.1);
}

TEST(Noise, LaplacianVariance) {
  const Stats s = sample_stats(NoiseDistribution::Laplacian, 50.0, 1'000'000, 3);
  EXPECT_NEAR(s.var, 2500.0, 25.0);
}

TEST(Noise, UniformVarianceAndSymmetry) {
  const Stats s = sample_stats(NoiseDistribution::UniformSymmetric, 10.0, 200'000, 4);
  EXPECT_NEAR(s.var, 100.0, 1.5);
  // Third moment SE for uniform is sqrt(E N^6 / n) = sqrt(sigma^6 * 27/7 / n).
  for (auto dist : {NoiseDistribution::Gaussian, NoiseDistribution::Laplacian, NoiseDistribution::UniformSymmetric}) {
    const Stats t = sample_stats(dist, 1.0, 200'000, 5);
    const double sixth = dist == NoiseDistribution::Gaussian ? 15.0 : dist == NoiseDistribution::Laplacian ? 90.0 : 27.0 / 7.0;
    EXPECT_LT(std::abs(t.third), 4.0 * std::sqrt(sixth / 200'000.0)) << to_string(dist);
  }
}

TEST(Noise, NotClippedAndScaleAware) {
  GrayImage black(16, 16, 0.0);
  Rng rng(6);
  const GrayImage z = corrupt(black, {25.0, NoiseDistribution::Gaussian}, rng);
  bool negative = false;
  for (double v : z.pixels()) negative |= v < 0.0;
  EXPECT_TRUE(negative);

  Rng r1(7), r2(7);
  const GrayImage raw = corrupt(black, {25.0, NoiseDistribution::Laplacian}, r1);
  const GrayImage unit = corrupt(black.to_unit(), {25.0, NoiseDistribution::Laplacian}, r2);
  EXPECT_EQ(unit.scale(), PixelScale::Unit);
  for (std::size_t i = 0; i < raw.size(); ++i) EXPECT_NEAR(unit.pixels()[i] * 255.0, raw.pixels()[i], 1e-9);
}

TEST(Noise, ParseAndValidate) {
  EXPECT_EQ(parse_noise_distribution("laplacian"), NoiseDistribution::Laplacian);
  EXPECT_EQ(parse_noise_distribution(to_string(NoiseDistribution::UniformSymmetric)), NoiseDistribution::UniformSymmetric);
  EXPECT_THROW(parse_noise_distribution("poisson"), std::invalid_argument);
  EXPECT_THROW((NoiseSpec{-1.0, NoiseDistribution::Gaussian}.validate()), std::invalid_argument);
}

TEST(BlindSigma, RangeAndMean) {
  Rng rng(8);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(sample_blind_sigma(rng, 25.0, 25.0), 25.0);
  double sum = 0;
  for (int i = 0; i < 100'000; ++i) {
    const double s = sample_blind_sigma(rng, 0.0, 55.0);
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, 55.0);
    sum += s;
  }
  EXPECT_GE(sum / 1e5, 26.5);
  EXPECT_LE(sum / 1e5, 28.5);
  EXPECT_THROW(sample_blind_sigma(rng, 5.0, 1.0), std::invalid_argument);
  EXPECT_THROW(sample_blind_sigma(rng, -1.0, 1.0), std::invalid_argument);
}

TEST(Psnr, Examples) {
  const GrayImage x = synthetic_texture(12, 12, 1);
  EXPECT_EQ(psnr(x, x), 100.0);
  GrayImage off = x;
  for (double& v : off.pixels()) v += 25.0;
  EXPECT_NEAR(psnr(x, off), 20.0 * std::log10(255.0 / 25.0), 1e-9);
  EXPECT_NEAR(psnr(x, off), 20.172, 1e-3);
  GrayImage far = x;
  for (double& v : far.pixels()) v += 255.0;
  EXPECT_NEAR(psnr(x, far), 0.0, 1e-12);
  EXPECT_THROW(psnr(x, synthetic_texture(12, 11, 1)), std::invalid_argument);
}

TEST(Psnr, StrictlyDecreasingInMse) {
  const GrayImage x = synthetic_texture(10, 10, 2);
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    GrayImage a = x, b = x;
    const double s = rng.uniform(0.001, 40.0);
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double e = rng.normal();
      a.pixels()[i] += s * e;
      b.pixels()[i] += 1.01 * s * e;
    }
    EXPECT_GT(psnr(x, a), psnr(x, b));
  }
}

TEST(Ssim, Examples) {
  const GrayImage x = synthetic_texture(24, 24, 4);
  EXPECT_NEAR(ssim(x, x), 1.0, 1e-12);

  GrayImage ramp(32, 32);
  for (std::size_t r = 0; r < 32; ++r) {
    for (std::size_t c = 0; c < 32; ++c) ramp.at(r, c) = 64.0 + 4.0 * static_cast<double>(c);
  }
  GrayImage inv = ramp;
  for (double& v : inv.pixels()) v = 255.0 - v;
  EXPECT_LT(ssim(ramp, inv), 0.5);

  const double m1 = 100.0, m2 = 140.0, c1 = (0.01 * 255) * (0.01 * 255);
  EXPECT_NEAR(ssim(GrayImage(16, 16, m1), GrayImage(16, 16, m2)), (2 * m1 * m2 + c1) / (m1 * m1 + m2 * m2 + c1), 1e-12);
  EXPECT_THROW(ssim(GrayImage(10, 30), GrayImage(10, 30)), std::invalid_argument);
}
