#pragma once

#include <map>
#include <stdexcept>
#include <string>

#include "fcaide/network.hpp"

namespace fcaide {

struct AdamState {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  ParamMap first_moment;   // lazily zero-initialized on the first step
  ParamMap second_moment;
};

class NonFiniteGradient : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Bias-corrected Adam:
///   m <- b1 m + (1-b1) g,  v <- b2 v + (1-b2) g^2,
///   w <- w - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps)
/// Every parameter must have a gradient of the same shape. Throws
/// NonFiniteGradient (naming the parameter) before touching any state if a
/// gradient holds NaN or Inf.
void adam_step(ParamMap& params, const std::map<std::string, Tensor>& grads, AdamState& state,
               double lr);

}  // namespace fcaide
