#pragma once

#include <string>
#include <vector>

#include "spgseg/tensor.hpp"

namespace spgseg::nn {

struct Parameter {
  std::string name;
  Tensor tensor;  // leaf with requires_grad
};

struct AdamConfig {
  double lr = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::size_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;
};

// standard Adam with bias correction; reads tensor.grad(), updates values
void adam_step(std::vector<Parameter*>& params, AdamState& state,
               const AdamConfig& cfg);

}  // namespace spgseg::nn
