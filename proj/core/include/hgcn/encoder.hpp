#pragma once

#include <random>
#include <span>

#include "hgcn/tape.hpp"

namespace hgcn {

/// Turns a token-id sequence into contextual row vectors H (n x output_dim).
class ContextEncoder {
 public:
  virtual ~ContextEncoder() = default;
  virtual std::size_t output_dim() const = 0;
  virtual Var encode(Tape& tape, std::span<const int> token_ids) = 0;
};

/// Gate blocks are laid out [input | forget | candidate | output].
struct LstmDirection {
  Tensor input_weight;      // [input_dim, 4 * hidden]
  Tensor recurrent_weight;  // [hidden, 4 * hidden]
  Tensor bias;              // [4 * hidden]
};

struct BiLstmParams {
  LstmDirection forward;
  LstmDirection backward;
};

/// Uniform weights, zero biases except the forget gate (1.0).
BiLstmParams make_bilstm(std::size_t input_dim, std::size_t hidden, double range, std::mt19937_64& rng);

/// Runs one LSTM direction over the rows of `x`; returns states in token order.
Var run_lstm(Tape& tape, Var x, LstmDirection& params, bool reverse);

/// Embedding lookup followed by a single-layer bidirectional LSTM.
class BiLstmEncoder : public ContextEncoder {
 public:
  BiLstmEncoder(Tensor& embeddings, BiLstmParams& params, double dropout = 0.0, std::mt19937_64* rng = nullptr)
      : embeddings_(embeddings), params_(params), dropout_(dropout), rng_(rng) {}

  std::size_t output_dim() const override { return 2 * params_.forward.recurrent_weight.rows(); }
  Var encode(Tape& tape, std::span<const int> token_ids) override;

 private:
  Tensor& embeddings_;
  BiLstmParams& params_;
  double dropout_;
  std::mt19937_64* rng_;
};

}  // namespace hgcn
