#pragma once

#include <random>
#include <vector>

#include "hgcn/tape.hpp"

namespace hgcn {

/// One graph-convolution layer: h_i <- act(sum_j c_i A_ij (W h_j + b)),
/// optionally followed by layer normalization.
struct GcnLayer {
  Tensor weight;  // [in, out], applied as h W
  Tensor bias;    // [out]
  Tensor ln_gain;
  Tensor ln_bias;
};

GcnLayer make_gcn_layer(std::size_t width, double range, std::mt19937_64& rng, bool with_layer_norm);

/// `adjacency` must already carry the row normalization c_i.
Var gcn_layer(Tape& tape, Var h, Var adjacency, GcnLayer& layer, bool layer_norm);

/// Row-normalizes a dense 0/1 (or weighted) adjacency by its row sums.
Tensor row_normalize(const Tensor& adjacency);

}  // namespace hgcn
