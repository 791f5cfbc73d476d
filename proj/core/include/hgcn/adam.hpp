#pragma once

#include <vector>

#include "hgcn/grad_check.hpp"

namespace hgcn {

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Adam over a fixed list of tensors. step() consumes and clears their
/// gradient buffers; a tensor with no gradient is treated as a zero gradient.
class Adam {
 public:
  Adam(std::vector<NamedTensor> params, AdamOptions options);

  void step();
  void zero_grad();
  std::size_t steps() const { return t_; }

 private:
  std::vector<NamedTensor> params_;
  AdamOptions options_;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
  std::size_t t_ = 0;
};

}  // namespace hgcn
