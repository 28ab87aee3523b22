#include "fcaide/adam.hpp"

#include <cmath>

namespace fcaide {

void adam_step(ParamMap& params, const std::map<std::string, Tensor>& grads, AdamState& state,
               double lr) {
  for (const auto& [name, w] : params) {
    auto it = grads.find(name);
    if (it == grads.end()) throw std::invalid_argument("adam_step: no gradient for '" + name + "'");
    if (it->second.shape() != w.shape()) {
      throw std::invalid_argument("adam_step: gradient shape mismatch for '" + name + "'");
    }
    const Tensor& g = it->second;
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        throw NonFiniteGradient("adam_step: non-finite gradient in '" + name + "' at index " +
                                std::to_string(i) + " (step " + std::to_string(state.step + 1) + ")");
      }
    }
  }

  ++state.step;
  const double correction1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto& [name, w] : params) {
    const Tensor& g = grads.at(name);
    auto [m_it, m_new] = state.first_moment.try_emplace(name, w.shape(), 0.0);
    auto [v_it, v_new] = state.second_moment.try_emplace(name, w.shape(), 0.0);
    Tensor& m = m_it->second;
    Tensor& v = v_it->second;
    for (std::size_t i = 0; i < w.size(); ++i) {
      m[i] = state.beta1 * m[i] + (1.0 - state.beta1) * g[i];
      v[i] = state.beta2 * v[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double m_hat = m[i] / correction1;
      const double v_hat = v[i] / correction2;
      w[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
    }
  }
}

}  // namespace fcaide
