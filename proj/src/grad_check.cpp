#include "spgseg/grad_check.hpp"

#include <cmath>
#include <stdexcept>

namespace spgseg::nn {

double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                  std::vector<Tensor> inputs, double eps) {
  for (auto& t : inputs) {
    if (t.requires_grad()) t.zero_grad();
  }
  Tensor out = f(inputs);
  if (out.size() != 1)
    throw std::invalid_argument("grad_check: function must be scalar-valued");
  if (!std::isfinite(out.item()))
    throw std::runtime_error("grad_check: non-finite function value");
  out.backward();

  std::vector<std::vector<double>> analytic;
  analytic.reserve(inputs.size());
  for (auto& t : inputs)
    analytic.push_back(t.requires_grad() ? t.grad() : std::vector<double>{});

  double max_rel = 0.0;
  for (std::size_t p = 0; p < inputs.size(); ++p) {
    if (!inputs[p].requires_grad()) continue;
    auto& values = inputs[p].leaf_values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      double fp, fm;
      {
        NoGradGuard no_grad;
        values[i] = saved + eps;
        fp = f(inputs).item();
        values[i] = saved - eps;
        fm = f(inputs).item();
      }
      values[i] = saved;
      if (!std::isfinite(fp) || !std::isfinite(fm))
        throw std::runtime_error("grad_check: non-finite perturbed value");
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[p][i];
      if (!std::isfinite(a))
        throw std::runtime_error("grad_check: non-finite analytic gradient");
      // The floor must sit above central-difference cancellation noise,
      // about |f| * 2.2e-16 / eps, or exact-zero gradients (unselected
      // max rows, inactive relu units) read as spurious errors.
      const double denom = std::max({std::fabs(a), std::fabs(numeric), 1e-5});
      max_rel = std::max(max_rel, std::fabs(a - numeric) / denom);
    }
  }
  return max_rel;
}

}  // namespace spgseg::nn
