#pragma once

#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "hgcn/tape.hpp"

namespace hgcn {

struct NamedTensor {
  std::string name;
  Tensor* tensor = nullptr;
};

/// Builds a scalar on the given tape, reading parameters through Tape::param.
using ScalarProgram = std::function<Var(Tape&)>;

class NondeterministicError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-6;
  // Denominator floor for the relative error, so that gradients that are zero
  // up to rounding are compared absolutely.
  double floor = 1e-8;
};

struct ParamGradCheck {
  std::string name;
  std::size_t size = 0;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<ParamGradCheck> params;
  double max_rel_error = 0.0;
  bool passed = false;
};

double relative_error(double analytic, double numeric, double floor);

/// Compares reverse-mode gradients against central differences for every
/// coordinate of every listed tensor. The tensors are restored afterwards and
/// their gradient buffers hold the analytic gradient.
GradCheckReport grad_check(const ScalarProgram& program, const std::vector<NamedTensor>& params,
                           const GradCheckOptions& options = {});

}  // namespace hgcn
