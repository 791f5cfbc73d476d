#include "hgcn/gcn.hpp"

namespace hgcn {

GcnLayer make_gcn_layer(std::size_t width, double range, std::mt19937_64& rng, bool with_layer_norm) {
  GcnLayer layer;
  layer.weight = uniform_tensor(Shape{width, width}, range, rng);
  layer.bias = Tensor(Shape{width}, 0.0, true);
  if (with_layer_norm) {
    layer.ln_gain = Tensor(Shape{width}, 1.0, true);
    layer.ln_bias = Tensor(Shape{width}, 0.0, true);
  }
  return layer;
}

Var gcn_layer(Tape& tape, Var h, Var adjacency, GcnLayer& layer, bool layer_norm) {
  Var messages = add(matmul(h, tape.param(layer.weight)), tape.param(layer.bias));
  Var out = relu(matmul(adjacency, messages));
  if (layer_norm) out = hgcn::layer_norm(out, tape.param(layer.ln_gain), tape.param(layer.ln_bias));
  return out;
}

Tensor row_normalize(const Tensor& adjacency) {
  Tensor out = adjacency;
  const std::size_t n = adjacency.rows();
  for (std::size_t i = 0; i < n; ++i) {
    double d = 0.0;
    for (std::size_t j = 0; j < n; ++j) d += adjacency.at(i, j);
    if (d == 0.0) continue;
    for (std::size_t j = 0; j < n; ++j) out.at(i, j) /= d;
  }
  out.requires_grad = false;
  return out;
}

}  // namespace hgcn
