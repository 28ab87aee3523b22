#include "fcaide/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace fcaide {

namespace {

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_string(a.shape()) +
                                " vs " + shape_string(b.shape()));
  }
}

void check_estimator_inputs(const Tensor& z, const CoefficientMaps& coeffs, double sigma2,
                            int degree, const char* op) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument(std::string(op) + ": sigma2 must be >= 0");
  if (degree != 1 && degree != 2) throw std::invalid_argument(std::string(op) + ": degree must be 1 or 2");
  const int have = coeffs.degree();
  if (have < degree) {
    throw std::invalid_argument(std::string(op) + ": degree " + std::to_string(degree) +
                                " needs " + std::to_string(degree + 1) + " coefficient maps");
  }
  if (have > 2) throw std::invalid_argument(std::string(op) + ": at most three coefficient maps");
  if (have == 2 && degree == 1) {
    for (double v : coeffs.a[2].data()) {
      if (v != 0.0) throw std::invalid_argument(std::string(op) + ": degree 1 with a nonzero a_2 map");
    }
  }
  for (const Tensor& a : coeffs.a) check_same_shape(z, a, op);
}

double pixel_estimate(const CoefficientMaps& coeffs, int degree, std::size_t i, double zi) {
  double xhat = coeffs.a[0][i];
  double power = zi;
  for (int m = 1; m <= degree; ++m) {
    xhat += coeffs.a[m][i] * power;
    power *= zi;
  }
  return xhat;
}

}  // namespace

double mse(const Tensor& x, const Tensor& xhat) {
  check_same_shape(x, xhat, "mse");
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - xhat[i];
    acc += d * d;
  }
  return acc / static_cast<double>(x.size());
}

Var mse(Tape& tape, Var x, Var xhat) {
  check_same_shape(x.value(), xhat.value(), "mse");
  return tape.reduce_mean(tape.square(tape.sub(x, xhat)));
}

double estimated_loss(const Tensor& z, const CoefficientMaps& coeffs, double sigma2, int degree) {
  check_estimator_inputs(z, coeffs, sigma2, degree, "estimated_loss");
  double acc = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    const double resid = zi - pixel_estimate(coeffs, degree, i, zi);
    double bracket = -1.0;
    double power = 1.0;  // Z_i^{m-1}
    double weight = 2.0; // 2^m
    for (int m = 1; m <= degree; ++m) {
      bracket += weight * coeffs.a[m][i] * power;
      power *= zi;
      weight *= 2.0;
    }
    acc += resid * resid + sigma2 * bracket;
  }
  return acc / static_cast<double>(z.size());
}

Var estimated_loss(Tape& tape, Var z, const std::vector<Var>& coeffs, double sigma2) {
  if (!(sigma2 >= 0.0)) throw std::invalid_argument("estimated_loss: sigma2 must be >= 0");
  if (coeffs.size() < 2 || coeffs.size() > 3) {
    throw std::invalid_argument("estimated_loss: degree must be 1 or 2");
  }
  Var xhat = apply_polynomial_map(tape, z, coeffs);
  Var fit = tape.reduce_mean(tape.square(tape.sub(z, xhat)));
  Var bracket = tape.scalar_mul(coeffs[1], 2.0);
  if (coeffs.size() == 3) bracket = tape.add(bracket, tape.scalar_mul(tape.mul(coeffs[2], z), 4.0));
  Var correction = tape.scalar_mul(tape.reduce_mean(tape.add_scalar(bracket, -1.0)), sigma2);
  return tape.add(fit, correction);
}

double sure_gaussian(const Tensor& z, const CoefficientMaps& coeffs, double sigma2, int degree) {
  check_estimator_inputs(z, coeffs, sigma2, degree, "sure_gaussian");
  const double n = static_cast<double>(z.size());
  double fit = 0.0;
  double divergence = 0.0;  // sum_i dX_i/dZ_i with coefficients held fixed
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double zi = z[i];
    const double resid = zi - pixel_estimate(coeffs, degree, i, zi);
    fit += resid * resid;
    divergence += coeffs.a[1][i];
    if (degree == 2) divergence += 2.0 * coeffs.a[2][i] * zi;
  }
  return -sigma2 + fit / n + 2.0 * sigma2 * divergence / n;
}

double augmented_estimated_loss(const Tensor& z, const NetworkParams& params, double sigma2) {
  double total = 0.0;
  for (Flip f : kAllFlips) {
    const Tensor variant = flip(z, f);
    total += estimated_loss(variant, forward(params, variant), sigma2, params.config.degree);
  }
  return total / 4.0;
}

Var augmented_estimated_loss(Tape& tape, const BoundParams& params, const NetworkConfig& config,
                             const Tensor& z, double sigma2, AugmentedTrace* trace) {
  Var total;
  for (std::size_t k = 0; k < kAllFlips.size(); ++k) {
    Var variant = tape.constant(flip(z, kAllFlips[k]));
    std::vector<Var> coeffs = forward(tape, params, config, variant);
    Var loss = estimated_loss(tape, variant, coeffs, sigma2);
    if (trace) trace->reconstructions[k] = apply_polynomial_map(tape, variant, coeffs);
    total = k == 0 ? loss : tape.add(total, loss);
  }
  return tape.scalar_mul(total, 0.25);
}

namespace {

void check_same_structure(const ParamMap& a, const ParamMap& b) {
  if (a.size() != b.size()) throw std::invalid_argument("l2sp_penalty: parameter sets differ in size");
  for (auto ia = a.begin(), ib = b.begin(); ia != a.end(); ++ia, ++ib) {
    if (ia->first != ib->first) {
      throw std::invalid_argument("l2sp_penalty: parameter '" + ia->first + "' vs '" + ib->first + "'");
    }
    if (ia->second.shape() != ib->second.shape()) {
      throw std::invalid_argument("l2sp_penalty: shape mismatch for '" + ia->first + "'");
    }
  }
}

}  // namespace

double l2sp_penalty(const NetworkParams& params, const NetworkParams& anchor, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("l2sp_penalty: lambda must be >= 0");
  check_same_structure(params.tensors, anchor.tensors);
  double acc = 0.0;
  for (const auto& [name, w] : params.tensors) {
    const Tensor& w0 = anchor.tensors.at(name);
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double d = w[i] - w0[i];
      acc += d * d;
    }
  }
  return lambda * acc;
}

Var l2sp_penalty(Tape& tape, const BoundParams& params, const NetworkParams& anchor, double lambda) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("l2sp_penalty: lambda must be >= 0");
  if (params.size() != anchor.tensors.size()) {
    throw std::invalid_argument("l2sp_penalty: parameter sets differ in size");
  }
  Var total;
  bool first = true;
  for (const auto& [name, w] : params) {
    auto it = anchor.tensors.find(name);
    if (it == anchor.tensors.end()) throw std::invalid_argument("l2sp_penalty: anchor lacks '" + name + "'");
    if (it->second.shape() != w.shape()) throw std::invalid_argument("l2sp_penalty: shape mismatch for '" + name + "'");
    Var term = tape.reduce_sum(tape.square(tape.sub(w, tape.constant(it->second))));
    total = first ? term : tape.add(total, term);
    first = false;
  }
  return tape.scalar_mul(total, lambda);
}

}  // namespace fcaide
