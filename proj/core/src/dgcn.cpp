#include "hgcn/dgcn.hpp"

namespace hgcn {

DgcnParams make_dgcn(std::size_t relations, std::size_t relation_dim, std::size_t width, std::size_t layers, double range,
                     std::mt19937_64& rng) {
  DgcnParams p;
  p.relation_embedding = uniform_tensor(Shape{relations, relation_dim}, range, rng);
  p.gate_weight = uniform_tensor(Shape{relation_dim, 1}, range, rng);
  p.gate_bias = Tensor(Shape{1}, 0.0, true);
  for (std::size_t l = 0; l < layers; ++l) p.layers.push_back(make_gcn_layer(width, range, rng, false));
  return p;
}

Vocabulary build_relation_vocab(const Corpus& corpus) {
  Vocabulary v(kUnknownRelation);
  v.add(kSelfRelation);
  for (const auto& s : corpus) {
    for (const auto& e : s.dependencies.edges) {
      if (e.head == kRootHead) continue;
      v.add(e.relation);
      v.add(kInversePrefix + e.relation);
    }
  }
  return v;
}

DependencyEdges dependency_edges(const DependencyGraph& graph, const Vocabulary& relations) {
  DependencyEdges out;
  out.tokens = graph.size();
  std::vector<double> count(out.tokens, 0.0);
  auto push = [&](std::size_t r, std::size_t c, const std::string& rel) {
    out.positions.emplace_back(r, c);
    out.relation_ids.push_back(relations.id(rel));
    count[r] += 1.0;
  };
  for (std::size_t i = 0; i < out.tokens; ++i) push(i, i, kSelfRelation);
  for (const auto& e : graph.edges) {
    if (e.head == kRootHead) continue;
    const auto head = static_cast<std::size_t>(e.head);
    const auto dep = static_cast<std::size_t>(e.dependent);
    push(head, dep, e.relation);
    push(dep, head, kInversePrefix + e.relation);
  }
  out.row_scale.resize(out.tokens);
  for (std::size_t i = 0; i < out.tokens; ++i) out.row_scale[i] = 1.0 / count[i];
  return out;
}

Var gated_adjacency(Tape& tape, const DependencyEdges& edges, DgcnParams& params) {
  Var rel = gather_rows(tape.param(params.relation_embedding), edges.relation_ids);
  Var logits = add(matmul(rel, tape.param(params.gate_weight)), tape.param(params.gate_bias));
  return scatter(sigmoid(logits), edges.positions, edges.tokens, edges.tokens);
}

Var dgcn_propagate(Tape& tape, const DependencyEdges& edges, Var gated, Var h, DgcnParams& params) {
  const std::size_t n = edges.tokens;
  Tensor scale_rows(Shape{n, n});
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) scale_rows.at(i, j) = edges.row_scale[i];
  Var adjacency = mul(gated, tape.constant(std::move(scale_rows)));
  Var out = h;
  for (auto& layer : params.layers) out = gcn_layer(tape, out, adjacency, layer, false);
  return out;
}

DgcnOutput dgcn_forward(Tape& tape, const DependencyGraph& graph, const Vocabulary& relations, Var h, DgcnParams& params) {
  const auto edges = dependency_edges(graph, relations);
  Var gated = gated_adjacency(tape, edges, params);
  return DgcnOutput{dgcn_propagate(tape, edges, gated, h, params), gated};
}

}  // namespace hgcn
