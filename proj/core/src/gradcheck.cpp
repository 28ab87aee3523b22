#include "fcaide/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fcaide {

Tensor finite_diff_grad(const ScalarFn& f, const Tensor& x, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_diff_grad: eps must be positive");
  Tensor probe = x;
  Tensor grad(x.shape());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + eps;
    const double up = f(probe);
    probe[i] = orig - eps;
    const double down = f(probe);
    probe[i] = orig;
    grad[i] = (up - down) / (2.0 * eps);
  }
  return grad;
}

bool gradients_close(const Tensor& a, const Tensor& b, double rtol, double atol, double* worst) {
  if (a.shape() != b.shape()) return false;
  bool ok = true;
  double worst_rel = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = std::abs(a[i] - b[i]);
    const double scale = std::max(std::abs(a[i]), std::abs(b[i]));
    if (diff > rtol * scale + atol) ok = false;
    if (scale > 0.0) worst_rel = std::max(worst_rel, diff / scale);
  }
  if (worst) *worst = worst_rel;
  return ok;
}

}  // namespace fcaide
