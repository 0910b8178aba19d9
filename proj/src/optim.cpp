#include "spgseg/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace spgseg::nn {

void adam_step(std::vector<Parameter*>& params, AdamState& state,
               const AdamConfig& cfg) {
  if (state.m.empty()) {
    state.m.resize(params.size());
    state.v.resize(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
      state.m[p].assign(params[p]->tensor.size(), 0.0);
      state.v[p].assign(params[p]->tensor.size(), 0.0);
    }
  }
  if (state.m.size() != params.size())
    throw std::invalid_argument("adam state does not match parameter list");

  state.step += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

  for (std::size_t p = 0; p < params.size(); ++p) {
    auto& values = params[p]->tensor.leaf_values();
    const auto& grad = params[p]->tensor.grad();
    auto& m = state.m[p];
    auto& v = state.v[p];
    if (m.size() != values.size())
      throw std::invalid_argument("adam state size mismatch");
    for (std::size_t i = 0; i < values.size(); ++i) {
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * grad[i];
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * grad[i] * grad[i];
      const double mhat = m[i] / bc1;
      const double vhat = v[i] / bc2;
      values[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
    }
  }
}

}  // namespace spgseg::nn
