#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "hgcn/tensor.hpp"

namespace hgcn {

class Tape;

/// Handle to a value recorded on a Tape. Cheap to copy; only valid while the
/// owning tape is alive.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  Tape& tape() const { return *tape_; }
  int id() const { return id_; }
  bool valid() const { return tape_ != nullptr; }

  const Shape& shape() const;
  std::span<const double> values() const;
  std::size_t rows() const { return rows_of(shape()); }
  std::size_t cols() const { return cols_of(shape()); }
  std::size_t size() const { return values().size(); }
  double item() const;

  /// Gradient of the last backward pass w.r.t. this value (empty if none).
  std::span<const double> grad() const;

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

/// Reverse-mode computation tape.
///
/// Operations are appended in evaluation order, so the tape is topologically
/// sorted by construction and backward is a single reverse sweep. Leaves
/// created with param() write their gradients into the bound Tensor; all other
/// gradients live on the tape and are reset by every backward call.
class Tape {
 public:
  /// Called during backward with the output gradient already populated.
  using BackwardFn = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor t);
  Var constant(Shape shape, std::vector<double> values);
  Var param(Tensor& t);

  /// Appends a derived value. The backward closure is only kept when at least
  /// one input needs a gradient.
  Var record(Shape shape, std::vector<double> values, std::vector<int> inputs, BackwardFn backward);

  void backward(Var loss);

  std::size_t size() const { return nodes_.size(); }
  const Shape& shape(int id) const { return nodes_[id].shape; }
  std::span<const double> value(int id) const;
  bool needs_grad(int id) const { return nodes_[id].needs_grad; }
  /// Mutable gradient buffer for a node, allocated on first use.
  std::vector<double>& grad(int id);
  std::span<const double> grad_view(int id) const;
  const std::vector<int>& inputs(int id) const { return nodes_[id].inputs; }

 private:
  struct Node {
    Shape shape;
    std::vector<double> value;
    const Tensor* source = nullptr;  // param leaves reference their tensor
    Tensor* param = nullptr;
    std::vector<int> inputs;
    BackwardFn backward;
    std::vector<double> grad;
    bool needs_grad = false;
  };

  std::deque<Node> nodes_;  // deque keeps value spans stable across appends
  std::vector<std::pair<const Tensor*, int>> param_ids_;  // one leaf per bound tensor
};

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b);
/// a * b^T without materializing the transpose.
Var matmul_nt(Var a, Var b);
/// Elementwise sum; b may also be a single row broadcast over a's rows.
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double factor);

Var sigmoid(Var a);
Var tanh(Var a);
Var relu(Var a);
Var exp(Var a);
Var log(Var a);

/// Reduces over `axis` (0 = rows, 1 = columns, -1 = last).
Var logsumexp(Var a, int axis = -1);
/// Softmax over the last axis. Entries with mask == 0 get probability exactly 0
/// and take no part in normalization. Every row needs one unmasked entry.
Var masked_softmax(Var a, std::span<const std::uint8_t> mask);
Var softmax(Var a);

Var concat(Var a, Var b);
Var stack_rows(std::span<const Var> rows);
Var gather_rows(Var table, std::span<const int> ids);
Var row(Var a, std::size_t index);
Var slice_cols(Var a, std::size_t start, std::size_t count);
/// Mean of the selected rows, shape [1, cols].
Var mean_rows(Var a, std::span<const std::size_t> indices);
Var sum(Var a);
Var pick(Var a, std::size_t flat_index);

Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-5);
Var squared_l2(std::span<const Var> params);

/// Builds a rows x cols matrix whose (r, c) entries come from `values`; all
/// other entries are exactly zero. Each position must appear at most once.
Var scatter(Var values, std::span<const std::pair<std::size_t, std::size_t>> positions, std::size_t rows,
            std::size_t cols);

/// Inverted dropout. A rate of 0 returns the input unchanged.
Var dropout(Var a, double rate, std::mt19937_64& rng);

}  // namespace hgcn
