#include "fcaide/verification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "fcaide/losses.hpp"
#include "fcaide/pixelwise.hpp"
#include "fcaide/tape.hpp"

namespace fcaide {

namespace {

// Streaming mean and standard error.
struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  std::size_t n = 0;

  void add(double v) {
    sum += v;
    sum_sq += v * v;
    ++n;
  }
  double mean() const { return sum / static_cast<double>(n); }
  double standard_error() const {
    const double m = mean();
    const double var = std::max(0.0, (sum_sq - static_cast<double>(n) * m * m) /
                                         static_cast<double>(n - 1));
    return std::sqrt(var / static_cast<double>(n));
  }
};

bool within_band(double deviation, double se) {
  return deviation == 0.0 || std::abs(deviation) < kStandardErrorBand * se;
}

double z_score(double deviation, double se) {
  if (deviation == 0.0) return 0.0;
  return se > 0.0 ? std::abs(deviation) / se : INFINITY;
}

}  // namespace

std::string format_report_line(const CheckReport& report) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%-40s statistic=%-14.6g threshold=%-12.6g %s",
                report.name.c_str(), report.statistic, report.threshold,
                report.pass ? "PASS" : "FAIL");
  return buf;
}

std::vector<MomentIdentityResult> moment_identity_check(double x, const NoiseSpec& spec,
                                                        std::size_t trials, Rng& rng) {
  spec.validate();
  if (trials < 10000) throw std::invalid_argument("moment_identity_check: needs at least 10^4 trials");
  const double s2 = spec.sigma * spec.sigma;
  Moments lhs[3], rhs[3], diff[3];
  for (std::size_t t = 0; t < trials; ++t) {
    const double z = x + draw_noise(spec.distribution, spec.sigma, rng);
    const double l[3] = {z * z * z - 2.0 * z * s2, z * z - s2, z};
    const double r[3] = {x * z * z, x * z, x};
    for (int k = 0; k < 3; ++k) {
      lhs[k].add(l[k]);
      rhs[k].add(r[k]);
      diff[k].add(l[k] - r[k]);
    }
  }
  const char* names[3] = {"E(Z^3-2Z s^2)=E(xZ^2)", "E(Z^2-s^2)=E(xZ)", "E(Z)=E(x)"};
  const double targets[3] = {x * x * x + x * s2, x * x, x};
  std::vector<MomentIdentityResult> out;
  for (int k = 0; k < 3; ++k) {
    MomentIdentityResult r;
    r.name = names[k];
    r.target = targets[k];
    r.lhs_mean = lhs[k].mean();
    r.lhs_se = lhs[k].standard_error();
    r.rhs_mean = rhs[k].mean();
    r.rhs_se = rhs[k].standard_error();
    r.diff_mean = diff[k].mean();
    r.diff_se = diff[k].standard_error();
    r.pass = within_band(r.lhs_mean - r.target, r.lhs_se) &&
             within_band(r.rhs_mean - r.target, r.rhs_se) && within_band(r.diff_mean, r.diff_se);
    out.push_back(r);
  }
  return out;
}

UnbiasednessResult unbiasedness_check(const GrayImage& clean, const CoefficientFn& coefficients,
                                      int degree, const NoiseSpec& spec, std::size_t trials,
                                      Rng& rng, const EstimatorFn& estimator) {
  spec.validate();
  if (trials < 2) throw std::invalid_argument("unbiasedness_check: needs at least 2 trials");
  const EstimatorFn estimate = estimator ? estimator : EstimatorFn(
      [](const Tensor& z, const CoefficientMaps& c, double s2, int d) { return estimated_loss(z, c, s2, d); });
  const GrayImage clean_raw = clean.to_raw();
  const Tensor x = clean.to_unit().to_tensor();
  const double sigma_unit = spec.sigma / kPixelPeak;
  const double sigma2 = sigma_unit * sigma_unit;

  Moments est, err, diff;
  for (std::size_t t = 0; t < trials; ++t) {
    Rng trial_rng = rng.substream(t);
    const Tensor z = corrupt(clean_raw, spec, trial_rng).to_unit().to_tensor();
    const CoefficientMaps coeffs = coefficients(z);
    const double e = estimate(z, coeffs, sigma2, degree);
    const double m = mse(x, apply_polynomial_map(z, coeffs));
    est.add(e);
    err.add(m);
    diff.add(e - m);
  }
  // Consume one draw so back-to-back checks on the same generator differ.
  rng.next_u64();

  UnbiasednessResult r;
  r.trials = trials;
  r.mean_est_loss = est.mean();
  r.mean_mse = err.mean();
  r.mean_diff = diff.mean();
  r.se_diff = diff.standard_error();
  r.pass = within_band(r.mean_diff, r.se_diff);
  return r;
}

UnbiasednessResult unbiasedness_check(const GrayImage& clean, const NetworkParams& params,
                                      const NoiseSpec& spec, std::size_t trials, Rng& rng,
                                      const EstimatorFn& estimator, const QedMasks& masks) {
  Rng probe_rng = rng.substream(~std::uint64_t{0});
  const Tensor z0 = clean.to_unit().to_tensor();
  const ProbeResult probe = independence_probe(params, z0, 16, probe_rng, masks);
  if (!probe.pass) {
    throw IndependenceViolation("unbiasedness_check: coefficients depend on their own pixel (|d a/d Z_i| = " +
                                std::to_string(probe.worst) + "); the estimator would be biased");
  }
  const CoefficientFn coeffs = [&](const Tensor& z) { return forward(params, z, masks); };
  return unbiasedness_check(clean, coeffs, params.config.degree, spec, trials, rng, estimator);
}

ProbeResult independence_probe(const NetworkParams& params, const Tensor& z, std::size_t samples,
                               Rng& rng, const QedMasks& masks) {
  if (z.rank() != 2) throw std::invalid_argument("independence_probe: image must be [H,W]");
  const std::size_t n = z.size();
  std::vector<std::size_t> pixels(n);
  std::iota(pixels.begin(), pixels.end(), std::size_t{0});
  if (samples < n) {
    for (std::size_t i = 0; i < samples; ++i) std::swap(pixels[i], pixels[i + rng.index(n - i)]);
    pixels.resize(samples);
  }

  Tape tape;
  BoundParams bound = bind_parameters(tape, params, false);
  Var input = tape.variable(z, "input");
  std::vector<Var> coeffs = forward(tape, bound, params.config, input, masks);

  ProbeResult result;
  result.probed_pixels = pixels.size();
  for (std::size_t i : pixels) {
    for (Var a : coeffs) {
      const Gradients g = tape.backward(tape.element(a, i));
      result.worst = std::max(result.worst, std::abs(g.of(input)[i]));
    }
  }
  result.pass = result.worst == 0.0;
  return result;
}

int receptive_field_probe(const NetworkParams& params, const Tensor& z, std::size_t row,
                          std::size_t col, const QedMasks& masks) {
  if (z.rank() != 2) throw std::invalid_argument("receptive_field_probe: image must be [H,W]");
  const std::size_t h = z.extent(0);
  const std::size_t w = z.extent(1);
  const auto half = static_cast<std::size_t>(receptive_field_extent(params.config.depth) / 2);
  if (row < half || col < half || row + half >= h || col + half >= w) {
    throw std::invalid_argument("receptive_field_probe: pixel too close to the border for a " +
                                std::to_string(2 * half + 1) + "x" + std::to_string(2 * half + 1) +
                                " window");
  }
  const std::size_t target = row * w + col;
  const CoefficientMaps base = forward(params, z, masks);

  long r_min = static_cast<long>(h), r_max = -1, c_min = static_cast<long>(w), c_max = -1;
  Tensor probe = z;
  for (std::size_t j = 0; j < z.size(); ++j) {
    probe[j] = z[j] + 1.0;
    const CoefficientMaps moved = forward(params, probe, masks);
    probe[j] = z[j];
    bool changed = false;
    for (std::size_t m = 0; m < base.a.size(); ++m) changed |= moved.a[m][target] != base.a[m][target];
    if (!changed) continue;
    const long r = static_cast<long>(j / w);
    const long c = static_cast<long>(j % w);
    r_min = std::min(r_min, r);
    r_max = std::max(r_max, r);
    c_min = std::min(c_min, c);
    c_max = std::max(c_max, c);
  }
  if (r_max < 0) return 0;
  return static_cast<int>(std::max(r_max - r_min, c_max - c_min) + 1);
}

GrayImage probe_image(std::size_t height, std::size_t width) {
  GrayImage img(height, width);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c) {
      const double rr = static_cast<double>(r);
      const double cc = static_cast<double>(c);
      img.at(r, c) = 120.0 + 50.0 * std::sin(0.7 * rr) * std::cos(0.45 * cc) +
                     40.0 * (cc / static_cast<double>(width)) - 20.0 * ((r / 4 + c / 4) % 2);
    }
  }
  return img;
}

namespace {

QedMasks center_leaking_masks() {
  QedMasks masks = canonical_masks();
  masks[0].input_taps.push_back({0, 0});
  return masks;
}

void run_moments(const VerificationOptions& opt, std::vector<CheckReport>& out) {
  for (NoiseDistribution dist : {NoiseDistribution::Gaussian, NoiseDistribution::Laplacian}) {
    Rng rng = Rng(opt.seed).substream(100 + static_cast<std::uint64_t>(dist));
    const auto results = moment_identity_check(2.0, NoiseSpec{1.0, dist}, opt.moment_trials, rng);
    for (const MomentIdentityResult& r : results) {
      const double stat = std::max({z_score(r.lhs_mean - r.target, r.lhs_se),
                                    z_score(r.rhs_mean - r.target, r.rhs_se),
                                    z_score(r.diff_mean, r.diff_se)});
      out.push_back({"moments." + to_string(dist) + " " + r.name, stat, kStandardErrorBand, r.pass});
    }
  }
}

void run_unbiasedness(const VerificationOptions& opt, std::vector<CheckReport>& out) {
  const NetworkParams params = build_network(NetworkConfig{2, 8, 2, 8}, opt.seed);
  const GrayImage clean = probe_image(16, 16);
  for (NoiseDistribution dist : {NoiseDistribution::Gaussian, NoiseDistribution::Laplacian}) {
    Rng rng = Rng(opt.seed).substream(200 + static_cast<std::uint64_t>(dist));
    const UnbiasednessResult r = unbiasedness_check(clean, params, NoiseSpec{25.0, dist},
                                                    opt.unbiasedness_trials, rng);
    out.push_back({"unbiasedness." + to_string(dist), z_score(r.mean_diff, r.se_diff),
                   kStandardErrorBand, r.pass});
  }
  // Negative control: dropping the -1 term biases the estimate by +sigma^2.
  Rng rng = Rng(opt.seed).substream(210);
  const EstimatorFn biased = [](const Tensor& z, const CoefficientMaps& c, double s2, int d) {
    return estimated_loss(z, c, s2, d) + s2;
  };
  const UnbiasednessResult r = unbiasedness_check(clean, params, NoiseSpec{25.0, NoiseDistribution::Gaussian},
                                                  opt.unbiasedness_trials, rng, biased);
  out.push_back({"unbiasedness.negative_control(no -1 term)", z_score(r.mean_diff, r.se_diff),
                 kStandardErrorBand, !r.pass});
}

void run_independence(const VerificationOptions& opt, std::vector<CheckReport>& out) {
  const Tensor z = probe_image(8, 8).to_unit().to_tensor();
  for (int depth : {1, 2, 3}) {
    const NetworkParams params = build_network(NetworkConfig{depth, 4, 2, 4}, opt.seed + depth);
    Rng rng(opt.seed);
    const ProbeResult r = independence_probe(params, z, z.size(), rng);
    out.push_back({"independence.exhaustive_8x8.L" + std::to_string(depth), r.worst, 0.0, r.pass});
  }
  const QedMasks leaky = center_leaking_masks();
  const NetworkParams params = build_network(NetworkConfig{2, 4, 2, 4}, opt.seed, leaky);
  Rng rng(opt.seed);
  const ProbeResult r = independence_probe(params, z, z.size(), rng, leaky);
  out.push_back({"independence.negative_control(center tap)", r.worst, 0.0, !r.pass});
}

void run_receptive_field(const VerificationOptions& opt, std::vector<CheckReport>& out) {
  for (int depth = 1; depth <= 4; ++depth) {
    const int expected = receptive_field_extent(depth);
    const NetworkParams params = build_network(NetworkConfig{depth, 3, 2, 3}, opt.seed + 10 + depth);
    const std::size_t side = static_cast<std::size_t>(expected) + 4;
    const Tensor z = probe_image(side, side).to_unit().to_tensor();
    const int measured = receptive_field_probe(params, z, side / 2, side / 2);
    out.push_back({"rf.L" + std::to_string(depth), static_cast<double>(measured),
                   static_cast<double>(expected), measured == expected});
  }
}

}  // namespace

std::vector<CheckReport> run_verification(const VerificationOptions& options) {
  const std::string& s = options.suite;
  if (s != "all" && s != "moments" && s != "unbiasedness" && s != "independence" && s != "rf") {
    throw std::invalid_argument("unknown verification suite '" + s + "'");
  }
  std::vector<CheckReport> out;
  if (s == "all" || s == "moments") run_moments(options, out);
  if (s == "all" || s == "unbiasedness") run_unbiasedness(options, out);
  if (s == "all" || s == "independence") run_independence(options, out);
  if (s == "all" || s == "rf") run_receptive_field(options, out);
  return out;
}

}  // namespace fcaide
