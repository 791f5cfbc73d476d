#include "hgcn/encoder.hpp"

#include <stdexcept>

namespace hgcn {

namespace {

LstmDirection make_direction(std::size_t input_dim, std::size_t hidden, double range, std::mt19937_64& rng) {
  LstmDirection d;
  d.input_weight = uniform_tensor(Shape{input_dim, 4 * hidden}, range, rng);
  d.recurrent_weight = uniform_tensor(Shape{hidden, 4 * hidden}, range, rng);
  d.bias = Tensor(Shape{4 * hidden}, 0.0, true);
  for (std::size_t i = hidden; i < 2 * hidden; ++i) d.bias.values[i] = 1.0;
  return d;
}

}  // namespace

BiLstmParams make_bilstm(std::size_t input_dim, std::size_t hidden, double range, std::mt19937_64& rng) {
  BiLstmParams p;
  p.forward = make_direction(input_dim, hidden, range, rng);
  p.backward = make_direction(input_dim, hidden, range, rng);
  return p;
}

Var run_lstm(Tape& tape, Var x, LstmDirection& params, bool reverse) {
  const std::size_t n = x.rows();
  const std::size_t hidden = params.recurrent_weight.rows();
  Var projected = add(matmul(x, tape.param(params.input_weight)), tape.param(params.bias));
  Var recurrent = tape.param(params.recurrent_weight);

  Var h = tape.constant(Tensor(Shape{1, hidden}));
  Var c = h;
  std::vector<Var> states(n);
  for (std::size_t step = 0; step < n; ++step) {
    const std::size_t t = reverse ? n - 1 - step : step;
    Var z = add(row(projected, t), matmul(h, recurrent));
    Var in_gate = sigmoid(slice_cols(z, 0, hidden));
    Var forget_gate = sigmoid(slice_cols(z, hidden, hidden));
    Var candidate = hgcn::tanh(slice_cols(z, 2 * hidden, hidden));
    Var out_gate = sigmoid(slice_cols(z, 3 * hidden, hidden));
    c = add(mul(forget_gate, c), mul(in_gate, candidate));
    h = mul(out_gate, hgcn::tanh(c));
    states[t] = h;
  }
  return stack_rows(states);
}

Var BiLstmEncoder::encode(Tape& tape, std::span<const int> token_ids) {
  if (token_ids.empty()) throw std::invalid_argument("encode: empty token sequence");
  Var x = gather_rows(tape.param(embeddings_), token_ids);
  if (dropout_ > 0.0 && rng_) x = dropout(x, dropout_, *rng_);
  Var forward = run_lstm(tape, x, params_.forward, false);
  Var backward = run_lstm(tape, x, params_.backward, true);
  return concat(forward, backward);
}

}  // namespace hgcn
