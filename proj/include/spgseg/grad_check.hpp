#pragma once

#include <functional>
#include <vector>

#include "spgseg/tensor.hpp"

namespace spgseg::nn {

// Compares the reverse-mode gradient of a scalar function against central
// finite differences, coordinate by coordinate, over every input that
// requires grad. Returns the max relative error with denominator
// max(|analytic|, |numeric|, 1e-5); the floor turns near-zero gradients
// into an absolute comparison so difference noise does not register.
// Throws on non-finite values.
double grad_check(const std::function<Tensor(const std::vector<Tensor>&)>& f,
                  std::vector<Tensor> inputs, double eps = 1e-5);

}  // namespace spgseg::nn
