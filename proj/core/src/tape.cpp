#include "hgcn/tape.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hgcn {

namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(std::span<const double> v, std::size_t rows, std::size_t cols) {
  return ConstMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MutMap as_matrix(std::vector<double>& v, std::size_t rows, std::size_t cols) {
  return MutMap(v.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

Tape& same_tape(const char* primitive, Var a, Var b) {
  if (!a.valid() || !b.valid() || &a.tape() != &b.tape()) {
    throw std::invalid_argument(std::string(primitive) + ": operands live on different tapes");
  }
  return a.tape();
}

Tape& tape_of(const char* primitive, Var a) {
  if (!a.valid()) throw std::invalid_argument(std::string(primitive) + ": invalid operand");
  return a.tape();
}

Shape matrix_shape(std::size_t rows, std::size_t cols) { return Shape{rows, cols}; }

template <typename Forward, typename Derivative>
Var unary(const char* name, Var a, Forward f, Derivative df) {
  Tape& tape = tape_of(name, a);
  auto in = a.values();
  std::vector<double> out(in.size());
  for (std::size_t i = 0; i < in.size(); ++i) out[i] = f(in[i]);
  const int ia = a.id();
  return tape.record(a.shape(), std::move(out), {ia}, [ia, df](Tape& t, int self) {
    auto x = t.value(ia);
    auto y = t.value(self);
    auto gy = t.grad_view(self);
    auto& gx = t.grad(ia);
    for (std::size_t i = 0; i < x.size(); ++i) gx[i] += gy[i] * df(x[i], y[i]);
  });
}

double stable_sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

// ---- Var ------------------------------------------------------------------

const Shape& Var::shape() const { return tape_->shape(id_); }
std::span<const double> Var::values() const { return tape_->value(id_); }
std::span<const double> Var::grad() const { return tape_->grad_view(id_); }

double Var::item() const {
  auto v = values();
  if (v.size() != 1) throw ShapeError("item: expected a single value, got shape " + to_string(shape()));
  return v[0];
}

// ---- Tape -----------------------------------------------------------------

Var Tape::constant(Tensor t) {
  Node node;
  node.shape = std::move(t.shape);
  node.value = std::move(t.values);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

Var Tape::constant(Shape shape, std::vector<double> values) { return constant(Tensor(std::move(shape), std::move(values))); }

Var Tape::param(Tensor& t) {
  for (const auto& [ptr, id] : param_ids_) {
    if (ptr == &t) return Var(this, id);
  }
  if (t.values.size() != numel(t.shape)) {
    throw ShapeError("param: tensor holds " + std::to_string(t.values.size()) + " values for shape " + to_string(t.shape));
  }
  Node node;
  node.shape = t.shape;
  node.source = &t;
  node.param = &t;
  node.needs_grad = t.requires_grad;
  nodes_.push_back(std::move(node));
  const int id = static_cast<int>(nodes_.size() - 1);
  param_ids_.emplace_back(&t, id);
  return Var(this, id);
}

Var Tape::record(Shape shape, std::vector<double> values, std::vector<int> inputs, BackwardFn backward) {
  Node node;
  node.shape = std::move(shape);
  node.value = std::move(values);
  for (int in : inputs) node.needs_grad = node.needs_grad || nodes_[in].needs_grad;
  node.inputs = std::move(inputs);
  if (node.needs_grad) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var(this, static_cast<int>(nodes_.size() - 1));
}

std::span<const double> Tape::value(int id) const {
  const Node& node = nodes_[id];
  if (node.source) return std::span<const double>(node.source->values);
  return std::span<const double>(node.value);
}

std::vector<double>& Tape::grad(int id) {
  Node& node = nodes_[id];
  if (node.grad.empty()) node.grad.assign(numel(node.shape), 0.0);
  return node.grad;
}

std::span<const double> Tape::grad_view(int id) const { return std::span<const double>(nodes_[id].grad); }

void Tape::backward(Var loss) {
  if (&loss.tape() != this) throw std::invalid_argument("backward: loss is not on this tape");
  if (numel(loss.shape()) != 1) {
    throw std::invalid_argument("backward: loss must be a scalar, got shape " + to_string(loss.shape()));
  }
  for (Node& node : nodes_) node.grad.clear();
  grad(loss.id())[0] = 1.0;
  for (int id = loss.id(); id >= 0; --id) {
    Node& node = nodes_[id];
    if (!node.needs_grad || node.grad.empty()) continue;
    if (node.backward) {
      node.backward(*this, id);
    } else if (node.param) {
      node.param->ensure_grad();
      for (std::size_t i = 0; i < node.grad.size(); ++i) node.param->grad[i] += node.grad[i];
    }
  }
}

// ---- linear algebra -------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& tape = same_tape("matmul", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  if (b.rows() != k) throw ShapeError("matmul", a.shape(), b.shape());
  std::vector<double> out(m * n);
  as_matrix(out, m, n).noalias() = as_matrix(a.values(), m, k) * as_matrix(b.values(), k, n);
  const int ia = a.id(), ib = b.id();
  return tape.record(matrix_shape(m, n), std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& t, int self) {
    auto gy = as_matrix(t.grad_view(self), m, n);
    if (t.needs_grad(ia)) as_matrix(t.grad(ia), m, k).noalias() += gy * as_matrix(t.value(ib), k, n).transpose();
    if (t.needs_grad(ib)) as_matrix(t.grad(ib), k, n).noalias() += as_matrix(t.value(ia), m, k).transpose() * gy;
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& tape = same_tape("matmul_nt", a, b);
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  if (b.cols() != k) throw ShapeError("matmul_nt", a.shape(), b.shape());
  std::vector<double> out(m * n);
  as_matrix(out, m, n).noalias() = as_matrix(a.values(), m, k) * as_matrix(b.values(), n, k).transpose();
  const int ia = a.id(), ib = b.id();
  return tape.record(matrix_shape(m, n), std::move(out), {ia, ib}, [ia, ib, m, k, n](Tape& t, int self) {
    auto gy = as_matrix(t.grad_view(self), m, n);
    if (t.needs_grad(ia)) as_matrix(t.grad(ia), m, k).noalias() += gy * as_matrix(t.value(ib), n, k);
    if (t.needs_grad(ib)) as_matrix(t.grad(ib), n, k).noalias() += gy.transpose() * as_matrix(t.value(ia), m, k);
  });
}

Var add(Var a, Var b) {
  Tape& tape = same_tape("add", a, b);
  const auto av = a.values();
  const auto bv = b.values();
  const int ia = a.id(), ib = b.id();
  if (a.shape() == b.shape()) {
    std::vector<double> out(av.size());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] + bv[i];
    return tape.record(a.shape(), std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
      auto gy = t.grad_view(self);
      for (int in : {ia, ib}) {
        if (!t.needs_grad(in)) continue;
        auto& g = t.grad(in);
        for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
      }
    });
  }
  const std::size_t rows = a.rows(), cols = a.cols();
  if (b.rows() != 1 || b.cols() != cols) throw ShapeError("add", a.shape(), b.shape());
  std::vector<double> out(av.size());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = av[r * cols + c] + bv[c];
  }
  return tape.record(a.shape(), std::move(out), {ia, ib}, [ia, ib, rows, cols](Tape& t, int self) {
    auto gy = t.grad_view(self);
    if (t.needs_grad(ia)) {
      auto& g = t.grad(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
    }
    if (t.needs_grad(ib)) {
      auto& g = t.grad(ib);
      for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) g[c] += gy[r * cols + c];
      }
    }
  });
}

Var sub(Var a, Var b) {
  Tape& tape = same_tape("sub", a, b);
  if (a.shape() != b.shape()) throw ShapeError("sub", a.shape(), b.shape());
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] - bv[i];
  const int ia = a.id(), ib = b.id();
  return tape.record(a.shape(), std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
    auto gy = t.grad_view(self);
    if (t.needs_grad(ia)) {
      auto& g = t.grad(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i];
    }
    if (t.needs_grad(ib)) {
      auto& g = t.grad(ib);
      for (std::size_t i = 0; i < gy.size(); ++i) g[i] -= gy[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& tape = same_tape("mul", a, b);
  if (a.shape() != b.shape()) throw ShapeError("mul", a.shape(), b.shape());
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(av.size());
  for (std::size_t i = 0; i < av.size(); ++i) out[i] = av[i] * bv[i];
  const int ia = a.id(), ib = b.id();
  return tape.record(a.shape(), std::move(out), {ia, ib}, [ia, ib](Tape& t, int self) {
    auto gy = t.grad_view(self);
    if (t.needs_grad(ia)) {
      auto& g = t.grad(ia);
      auto other = t.value(ib);
      for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * other[i];
    }
    if (t.needs_grad(ib)) {
      auto& g = t.grad(ib);
      auto other = t.value(ia);
      for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * other[i];
    }
  });
}

Var scale(Var a, double factor) {
  return unary("scale", a, [factor](double x) { return x * factor; }, [factor](double, double) { return factor; });
}

// ---- elementwise ----------------------------------------------------------

Var sigmoid(Var a) {
  return unary("sigmoid", a, stable_sigmoid, [](double, double y) { return y * (1.0 - y); });
}

Var tanh(Var a) {
  return unary("tanh", a, [](double x) { return std::tanh(x); }, [](double, double y) { return 1.0 - y * y; });
}

// Subgradient 0 at the kink.
Var relu(Var a) {
  return unary("relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Var exp(Var a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Var log(Var a) {
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

// ---- reductions -----------------------------------------------------------

Var logsumexp(Var a, int axis) {
  Tape& tape = tape_of("logsumexp", a);
  const std::size_t rows = a.rows(), cols = a.cols();
  const bool over_cols = axis == -1 || axis == 1 || a.shape().size() <= 1;
  if (!over_cols && axis != 0) throw std::invalid_argument("logsumexp: axis must be 0, 1 or -1");
  const std::size_t groups = over_cols ? rows : cols;
  const std::size_t width = over_cols ? cols : rows;
  auto at = [over_cols, cols](std::size_t g, std::size_t k) { return over_cols ? g * cols + k : k * cols + g; };

  const auto x = a.values();
  std::vector<double> out(groups);
  for (std::size_t g = 0; g < groups; ++g) {
    double hi = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < width; ++k) hi = std::max(hi, x[at(g, k)]);
    if (std::isinf(hi)) {
      out[g] = hi;
      continue;
    }
    double s = 0.0;
    for (std::size_t k = 0; k < width; ++k) s += std::exp(x[at(g, k)] - hi);
    out[g] = hi + std::log(s);
  }
  Shape shape;
  if (a.shape().size() <= 1) shape = {1};
  else shape = over_cols ? Shape{rows, 1} : Shape{1, cols};
  const int ia = a.id();
  return tape.record(std::move(shape), std::move(out), {ia}, [ia, groups, width, at](Tape& t, int self) {
    auto xv = t.value(ia);
    auto y = t.value(self);
    auto gy = t.grad_view(self);
    auto& gx = t.grad(ia);
    for (std::size_t g = 0; g < groups; ++g) {
      if (std::isinf(y[g])) continue;
      for (std::size_t k = 0; k < width; ++k) gx[at(g, k)] += gy[g] * std::exp(xv[at(g, k)] - y[g]);
    }
  });
}

Var masked_softmax(Var a, std::span<const std::uint8_t> mask) {
  Tape& tape = tape_of("masked_softmax", a);
  const std::size_t rows = a.rows(), cols = a.cols();
  if (mask.size() != rows * cols) {
    throw ShapeError("masked_softmax", a.shape(), Shape{mask.size()});
  }
  const auto x = a.values();
  std::vector<double> out(rows * cols, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    double hi = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!mask[r * cols + c]) continue;
      any = true;
      hi = std::max(hi, x[r * cols + c]);
    }
    if (!any) throw std::invalid_argument("masked_softmax: row " + std::to_string(r) + " has no unmasked entry");
    double s = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      if (!mask[r * cols + c]) continue;
      out[r * cols + c] = std::exp(x[r * cols + c] - hi);
      s += out[r * cols + c];
    }
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] /= s;
  }
  const int ia = a.id();
  return tape.record(a.shape(), std::move(out), {ia}, [ia, rows, cols](Tape& t, int self) {
    auto p = t.value(self);
    auto gy = t.grad_view(self);
    auto& gx = t.grad(ia);
    for (std::size_t r = 0; r < rows; ++r) {
      double dot = 0.0;
      for (std::size_t c = 0; c < cols; ++c) dot += p[r * cols + c] * gy[r * cols + c];
      for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += p[r * cols + c] * (gy[r * cols + c] - dot);
    }
  });
}

Var softmax(Var a) {
  std::vector<std::uint8_t> all(a.size(), 1);
  return masked_softmax(a, all);
}

Var sum(Var a) {
  Tape& tape = tape_of("sum", a);
  double s = 0.0;
  for (double v : a.values()) s += v;
  const int ia = a.id();
  return tape.record(Shape{1}, {s}, {ia}, [ia](Tape& t, int self) {
    const double gy = t.grad_view(self)[0];
    auto& gx = t.grad(ia);
    for (double& g : gx) g += gy;
  });
}

Var pick(Var a, std::size_t flat_index) {
  Tape& tape = tape_of("pick", a);
  if (flat_index >= a.size()) throw std::out_of_range("pick: index " + std::to_string(flat_index) + " outside " + to_string(a.shape()));
  const int ia = a.id();
  return tape.record(Shape{1}, {a.values()[flat_index]}, {ia}, [ia, flat_index](Tape& t, int self) {
    t.grad(ia)[flat_index] += t.grad_view(self)[0];
  });
}

Var mean_rows(Var a, std::span<const std::size_t> indices) {
  Tape& tape = tape_of("mean_rows", a);
  if (indices.empty()) throw std::invalid_argument("mean_rows: empty row set");
  const std::size_t rows = a.rows(), cols = a.cols();
  const auto x = a.values();
  std::vector<double> out(cols, 0.0);
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  for (std::size_t r : idx) {
    if (r >= rows) throw std::out_of_range("mean_rows: row " + std::to_string(r) + " outside " + to_string(a.shape()));
    for (std::size_t c = 0; c < cols; ++c) out[c] += x[r * cols + c];
  }
  const double inv = 1.0 / static_cast<double>(idx.size());
  for (double& v : out) v *= inv;
  const int ia = a.id();
  return tape.record(Shape{1, cols}, std::move(out), {ia}, [ia, idx, cols, inv](Tape& t, int self) {
    auto gy = t.grad_view(self);
    auto& gx = t.grad(ia);
    for (std::size_t r : idx) {
      for (std::size_t c = 0; c < cols; ++c) gx[r * cols + c] += gy[c] * inv;
    }
  });
}

// ---- structural -----------------------------------------------------------

Var concat(Var a, Var b) {
  Tape& tape = same_tape("concat", a, b);
  const std::size_t rows = a.rows();
  if (b.rows() != rows) throw ShapeError("concat", a.shape(), b.shape());
  const std::size_t ca = a.cols(), cb = b.cols(), cc = ca + cb;
  const auto av = a.values();
  const auto bv = b.values();
  std::vector<double> out(rows * cc);
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(av.begin() + r * ca, ca, out.begin() + r * cc);
    std::copy_n(bv.begin() + r * cb, cb, out.begin() + r * cc + ca);
  }
  Shape shape = (a.shape().size() <= 1 && b.shape().size() <= 1) ? Shape{cc} : Shape{rows, cc};
  const int ia = a.id(), ib = b.id();
  return tape.record(std::move(shape), std::move(out), {ia, ib}, [ia, ib, rows, ca, cb, cc](Tape& t, int self) {
    auto gy = t.grad_view(self);
    if (t.needs_grad(ia)) {
      auto& g = t.grad(ia);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < ca; ++c) g[r * ca + c] += gy[r * cc + c];
    }
    if (t.needs_grad(ib)) {
      auto& g = t.grad(ib);
      for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cb; ++c) g[r * cb + c] += gy[r * cc + ca + c];
    }
  });
}

Var stack_rows(std::span<const Var> rows) {
  if (rows.empty()) throw std::invalid_argument("stack_rows: no rows");
  Tape& tape = tape_of("stack_rows", rows[0]);
  const std::size_t cols = rows[0].size();
  std::vector<double> out;
  out.reserve(rows.size() * cols);
  std::vector<int> ids;
  for (const Var& r : rows) {
    if (&r.tape() != &tape) throw std::invalid_argument("stack_rows: operands live on different tapes");
    if (r.rows() != 1 || r.size() != cols) throw ShapeError("stack_rows", rows[0].shape(), r.shape());
    auto v = r.values();
    out.insert(out.end(), v.begin(), v.end());
    ids.push_back(r.id());
  }
  return tape.record(Shape{rows.size(), cols}, std::move(out), ids, [ids, cols](Tape& t, int self) {
    auto gy = t.grad_view(self);
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (!t.needs_grad(ids[k])) continue;
      auto& g = t.grad(ids[k]);
      for (std::size_t c = 0; c < cols; ++c) g[c] += gy[k * cols + c];
    }
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Tape& tape = tape_of("gather_rows", table);
  const std::size_t rows = table.rows(), cols = table.cols();
  const auto x = table.values();
  std::vector<int> idx(ids.begin(), ids.end());
  std::vector<double> out(idx.size() * cols);
  for (std::size_t k = 0; k < idx.size(); ++k) {
    if (idx[k] < 0 || static_cast<std::size_t>(idx[k]) >= rows) {
      throw std::out_of_range("gather_rows: row " + std::to_string(idx[k]) + " outside " + to_string(table.shape()));
    }
    std::copy_n(x.begin() + idx[k] * cols, cols, out.begin() + k * cols);
  }
  const int it = table.id();
  return tape.record(Shape{idx.size(), cols}, std::move(out), {it}, [it, idx, cols](Tape& t, int self) {
    auto gy = t.grad_view(self);
    auto& g = t.grad(it);
    for (std::size_t k = 0; k < idx.size(); ++k)
      for (std::size_t c = 0; c < cols; ++c) g[idx[k] * cols + c] += gy[k * cols + c];
  });
}

Var row(Var a, std::size_t index) {
  const int id = static_cast<int>(index);
  return gather_rows(a, std::span<const int>(&id, 1));
}

Var slice_cols(Var a, std::size_t start, std::size_t count) {
  Tape& tape = tape_of("slice_cols", a);
  const std::size_t rows = a.rows(), cols = a.cols();
  if (start + count > cols) throw ShapeError("slice_cols", a.shape(), Shape{start, count});
  const auto x = a.values();
  std::vector<double> out(rows * count);
  for (std::size_t r = 0; r < rows; ++r) std::copy_n(x.begin() + r * cols + start, count, out.begin() + r * count);
  const int ia = a.id();
  return tape.record(Shape{rows, count}, std::move(out), {ia}, [ia, rows, cols, start, count](Tape& t, int self) {
    auto gy = t.grad_view(self);
    auto& g = t.grad(ia);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < count; ++c) g[r * cols + start + c] += gy[r * count + c];
  });
}

Var scatter(Var values, std::span<const std::pair<std::size_t, std::size_t>> positions, std::size_t rows,
            std::size_t cols) {
  Tape& tape = tape_of("scatter", values);
  if (values.size() != positions.size()) throw ShapeError("scatter", values.shape(), Shape{positions.size()});
  const auto v = values.values();
  std::vector<std::size_t> flat(positions.size());
  std::vector<double> out(rows * cols, 0.0);
  std::vector<std::uint8_t> seen(rows * cols, 0);
  for (std::size_t k = 0; k < positions.size(); ++k) {
    const auto [r, c] = positions[k];
    if (r >= rows || c >= cols) throw std::out_of_range("scatter: position outside target matrix");
    flat[k] = r * cols + c;
    if (seen[flat[k]]++) throw std::invalid_argument("scatter: duplicate position");
    out[flat[k]] = v[k];
  }
  const int iv = values.id();
  return tape.record(Shape{rows, cols}, std::move(out), {iv}, [iv, flat](Tape& t, int self) {
    auto gy = t.grad_view(self);
    auto& g = t.grad(iv);
    for (std::size_t k = 0; k < flat.size(); ++k) g[k] += gy[flat[k]];
  });
}

// ---- normalization --------------------------------------------------------

Var layer_norm(Var x, Var gain, Var bias, double eps) {
  Tape& tape = same_tape("layer_norm", x, gain);
  same_tape("layer_norm", x, bias);
  const std::size_t rows = x.rows(), cols = x.cols();
  if (gain.size() != cols) throw ShapeError("layer_norm", x.shape(), gain.shape());
  if (bias.size() != cols) throw ShapeError("layer_norm", x.shape(), bias.shape());
  const auto xv = x.values();
  const auto gv = gain.values();
  const auto bv = bias.values();
  std::vector<double> out(rows * cols);
  std::vector<double> normed(rows * cols);
  std::vector<double> inv_std(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    double mean = 0.0;
    for (std::size_t c = 0; c < cols; ++c) mean += xv[r * cols + c];
    mean /= static_cast<double>(cols);
    double var = 0.0;
    for (std::size_t c = 0; c < cols; ++c) {
      const double d = xv[r * cols + c] - mean;
      var += d * d;
    }
    var /= static_cast<double>(cols);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < cols; ++c) {
      normed[r * cols + c] = (xv[r * cols + c] - mean) * inv_std[r];
      out[r * cols + c] = gv[c] * normed[r * cols + c] + bv[c];
    }
  }
  const int ix = x.id(), ig = gain.id(), ib = bias.id();
  return tape.record(x.shape(), std::move(out), {ix, ig, ib},
                     [ix, ig, ib, rows, cols, normed = std::move(normed), inv_std = std::move(inv_std)](Tape& t, int self) {
                       auto gy = t.grad_view(self);
                       auto gv2 = t.value(ig);
                       if (t.needs_grad(ig)) {
                         auto& g = t.grad(ig);
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c) g[c] += gy[r * cols + c] * normed[r * cols + c];
                       }
                       if (t.needs_grad(ib)) {
                         auto& g = t.grad(ib);
                         for (std::size_t r = 0; r < rows; ++r)
                           for (std::size_t c = 0; c < cols; ++c) g[c] += gy[r * cols + c];
                       }
                       if (t.needs_grad(ix)) {
                         auto& g = t.grad(ix);
                         const double n = static_cast<double>(cols);
                         for (std::size_t r = 0; r < rows; ++r) {
                           double mean_d = 0.0, mean_dn = 0.0;
                           for (std::size_t c = 0; c < cols; ++c) {
                             const double d = gy[r * cols + c] * gv2[c];
                             mean_d += d;
                             mean_dn += d * normed[r * cols + c];
                           }
                           mean_d /= n;
                           mean_dn /= n;
                           for (std::size_t c = 0; c < cols; ++c) {
                             const double d = gy[r * cols + c] * gv2[c];
                             g[r * cols + c] += inv_std[r] * (d - mean_d - normed[r * cols + c] * mean_dn);
                           }
                         }
                       }
                     });
}

Var squared_l2(std::span<const Var> params) {
  if (params.empty()) throw std::invalid_argument("squared_l2: empty parameter set");
  Tape& tape = tape_of("squared_l2", params[0]);
  double s = 0.0;
  std::vector<int> ids;
  for (const Var& p : params) {
    if (&p.tape() != &tape) throw std::invalid_argument("squared_l2: operands live on different tapes");
    for (double v : p.values()) s += v * v;
    ids.push_back(p.id());
  }
  return tape.record(Shape{1}, {s}, ids, [ids](Tape& t, int self) {
    const double gy = t.grad_view(self)[0];
    for (int id : ids) {
      if (!t.needs_grad(id)) continue;
      auto v = t.value(id);
      auto& g = t.grad(id);
      for (std::size_t i = 0; i < v.size(); ++i) g[i] += 2.0 * v[i] * gy;
    }
  });
}

Var dropout(Var a, double rate, std::mt19937_64& rng) {
  if (rate <= 0.0) return a;
  if (rate >= 1.0) throw std::invalid_argument("dropout: rate must be < 1");
  Tape& tape = tape_of("dropout", a);
  std::bernoulli_distribution keep(1.0 - rate);
  const double factor = 1.0 / (1.0 - rate);
  std::vector<double> mask(a.size());
  for (double& m : mask) m = keep(rng) ? factor : 0.0;
  const auto x = a.values();
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = x[i] * mask[i];
  const int ia = a.id();
  return tape.record(a.shape(), std::move(out), {ia}, [ia, mask = std::move(mask)](Tape& t, int self) {
    auto gy = t.grad_view(self);
    auto& g = t.grad(ia);
    for (std::size_t i = 0; i < gy.size(); ++i) g[i] += gy[i] * mask[i];
  });
}

}  // namespace hgcn
