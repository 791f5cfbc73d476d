#include "hgcn/tensor.hpp"

#include <algorithm>
#include <functional>
#include <numeric>
#include <sstream>

namespace hgcn {

std::size_t numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << ", ";
    out << shape[i];
  }
  out << ']';
  return out.str();
}

ShapeError::ShapeError(const std::string& primitive, const Shape& lhs, const Shape& rhs)
    : std::invalid_argument(primitive + ": shape mismatch " + to_string(lhs) + " vs " + to_string(rhs)) {}

std::size_t rows_of(const Shape& shape) {
  if (shape.size() <= 1) return 1;
  return numel(shape) / shape.back();
}

std::size_t cols_of(const Shape& shape) {
  if (shape.empty()) return 1;
  return shape.back();
}

Tensor::Tensor(Shape s, double fill, bool rg) : shape(std::move(s)), values(numel(shape), fill), requires_grad(rg) {}

Tensor::Tensor(Shape s, std::vector<double> v, bool rg) : shape(std::move(s)), values(std::move(v)), requires_grad(rg) {
  if (values.size() != numel(shape)) {
    throw ShapeError("tensor: " + std::to_string(values.size()) + " values do not fill shape " + to_string(shape));
  }
}

Tensor Tensor::scalar(double v) { return Tensor(Shape{1}, std::vector<double>{v}); }

std::size_t Tensor::rows() const { return rows_of(shape); }
std::size_t Tensor::cols() const { return cols_of(shape); }

void Tensor::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() {
  if (grad.empty()) return;
  std::fill(grad.begin(), grad.end(), 0.0);
}

}  // namespace hgcn

namespace hgcn {

Tensor uniform_tensor(Shape shape, double range, std::mt19937_64& rng, bool requires_grad) {
  Tensor t(std::move(shape), 0.0, requires_grad);
  std::uniform_real_distribution<double> dist(-range, range);
  for (double& v : t.values) v = dist(rng);
  return t;
}

}  // namespace hgcn
