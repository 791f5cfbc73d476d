#pragma once

#include <cstddef>
#include <initializer_list>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hgcn {

using Shape = std::vector<std::size_t>;

std::size_t numel(const Shape& shape);
std::string to_string(const Shape& shape);

/// Raised by every primitive whose operand shapes do not conform. The message
/// names the primitive and both offending shapes.
class ShapeError : public std::invalid_argument {
 public:
  ShapeError(const std::string& primitive, const Shape& lhs, const Shape& rhs);
  explicit ShapeError(const std::string& message) : std::invalid_argument(message) {}
};

/// Dense row-major array of doubles with an optional gradient buffer.
///
/// Rank-1 tensors behave as a single row wherever a matrix is expected, so
/// a bias of shape [n] broadcasts over the leading axis of an [m, n] operand.
struct Tensor {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until the first accumulation
  bool requires_grad = false;

  Tensor() = default;
  explicit Tensor(Shape s, double fill = 0.0, bool requires_grad = false);
  Tensor(Shape s, std::vector<double> v, bool requires_grad = false);

  static Tensor scalar(double v);

  std::size_t size() const { return values.size(); }
  std::size_t rows() const;
  std::size_t cols() const;

  double& at(std::size_t r, std::size_t c) { return values[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return values[r * cols() + c]; }

  void ensure_grad();
  void zero_grad();
  bool has_grad() const { return !grad.empty(); }
};

std::size_t rows_of(const Shape& shape);
std::size_t cols_of(const Shape& shape);

/// Uniform initialization in [-range, range].
Tensor uniform_tensor(Shape shape, double range, std::mt19937_64& rng, bool requires_grad = true);

}  // namespace hgcn
