#include "hgcn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

namespace hgcn {

namespace {

double evaluate(const ScalarProgram& program) {
  Tape tape;
  return program(tape).item();
}

}  // namespace

double relative_error(double analytic, double numeric, double floor) {
  const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
  return std::abs(analytic - numeric) / denom;
}

GradCheckReport grad_check(const ScalarProgram& program, const std::vector<NamedTensor>& params,
                           const GradCheckOptions& options) {
  const double first = evaluate(program);
  const double second = evaluate(program);
  if (std::memcmp(&first, &second, sizeof(double)) != 0) {
    throw NondeterministicError("grad_check: two forward evaluations differ (" + std::to_string(first) + " vs " +
                                std::to_string(second) + ")");
  }

  for (const auto& p : params) {
    p.tensor->ensure_grad();
    p.tensor->zero_grad();
  }
  {
    Tape tape;
    Var loss = program(tape);
    tape.backward(loss);
  }

  GradCheckReport report;
  for (const auto& p : params) {
    ParamGradCheck check;
    check.name = p.name;
    check.size = p.tensor->size();
    for (std::size_t i = 0; i < p.tensor->size(); ++i) {
      double& x = p.tensor->values[i];
      const double saved = x;
      x = saved + options.step;
      const double plus = evaluate(program);
      x = saved - options.step;
      const double minus = evaluate(program);
      x = saved;
      const double numeric = (plus - minus) / (2.0 * options.step);
      const double analytic = p.tensor->grad[i];
      const double err = relative_error(analytic, numeric, options.floor);
      if (err > check.max_rel_error || i == 0) {
        check.max_rel_error = err;
        check.worst_index = i;
        check.analytic = analytic;
        check.numeric = numeric;
      }
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.params.push_back(std::move(check));
  }
  report.passed = report.max_rel_error < options.tolerance;
  return report;
}

}  // namespace hgcn
