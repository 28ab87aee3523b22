#pragma once

#include <functional>

#include "fcaide/tensor.hpp"

namespace fcaide {

using ScalarFn = std::function<double(const Tensor&)>;

/// Central-difference gradient (f(x + eps e_i) - f(x - eps e_i)) / (2 eps),
/// one coordinate at a time.
Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double eps);

/// True when |a - b| <= rtol * max(|a|, |b|) + atol for every coordinate.
/// Writes the worst relative error seen into `worst` when provided.
bool gradients_close(const Tensor& a, const Tensor& b, double rtol, double atol,
                     double* worst = nullptr);

}  // namespace fcaide
