#include "hgcn/cgcn.hpp"

#include <cmath>
#include <stdexcept>

namespace hgcn {

CgcnParams make_cgcn(std::size_t labels, std::size_t label_dim, std::size_t width, std::size_t layers, double range,
                     std::mt19937_64& rng, bool layer_norm) {
  CgcnParams p;
  p.label_embedding = uniform_tensor(Shape{labels, label_dim}, range, rng);
  p.label_projection = uniform_tensor(Shape{label_dim, width}, range, rng);
  for (std::size_t l = 0; l < layers; ++l) p.layers.push_back(make_gcn_layer(width, range, rng, layer_norm));
  p.query_weight = uniform_tensor(Shape{width, width}, range, rng);
  p.key_weight = uniform_tensor(Shape{width, width}, range, rng);
  return p;
}

Vocabulary build_label_vocab(const Corpus& corpus) {
  Vocabulary v(kUnknownLabel);
  for (const auto& s : corpus) {
    for (const auto& n : s.tree.nodes()) {
      if (!n.terminal) v.add(n.label);
    }
  }
  return v;
}

Tensor ConstituentGraph::normalized() const { return row_normalize(adjacency); }

ConstituentGraph build_constituent_graph(const ConstituencyTree& tree) {
  ConstituentGraph g;
  g.nodes = tree.constituents();
  const std::size_t m = g.nodes.size();
  std::vector<int> index(tree.size(), -1);
  for (std::size_t i = 0; i < m; ++i) index[g.nodes[i]] = static_cast<int>(i);
  g.adjacency = Tensor(Shape{m, m});
  for (std::size_t i = 0; i < m; ++i) {
    g.adjacency.at(i, i) = 1.0;
    for (int child : tree.node(g.nodes[i]).children) {
      const int j = index[child];
      if (j < 0) continue;
      g.adjacency.at(i, j) = 1.0;
      g.adjacency.at(j, i) = 1.0;
    }
  }
  g.degree.assign(m, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) g.degree[i] += g.adjacency.at(i, j);
  return g;
}

std::vector<std::uint8_t> ct_attention_mask(const ConstituencyTree& tree, const ConstituentGraph& graph) {
  const std::size_t n = tree.word_count(), m = graph.size();
  std::vector<std::uint8_t> mask(n * m, 0);
  for (std::size_t c = 0; c < m; ++c) {
    const Span s = tree.node(graph.nodes[c]).span;
    for (std::size_t w = s.start; w < s.end; ++w) mask[w * m + c] = 1;
  }
  return mask;
}

CompositionPlan composition_plan(const ConstituencyTree& tree, const ConstituentGraph& graph, const Vocabulary& labels) {
  const std::size_t m = graph.size(), n = tree.word_count();
  CompositionPlan plan;
  struct Term {
    bool word;
    std::size_t index;
  };
  std::vector<std::vector<Term>> terms(m);
  for (std::size_t i = 0; i < m; ++i) {
    const TreeNode& node = tree.node(graph.nodes[i]);
    auto add_label = [&](const std::string& label) {
      plan.label_ids.push_back(labels.id(label));
      terms[i].push_back(Term{false, plan.label_ids.size() - 1});
    };
    add_label(node.label);
    for (int child_id : node.children) {
      const TreeNode& child = tree.node(child_id);
      if (child.terminal) {
        terms[i].push_back(Term{true, child.span.start});
        continue;
      }
      add_label(child.label);
      if (tree.is_preterminal(child_id)) terms[i].push_back(Term{true, child.span.start});
    }
  }
  plan.label_weights = Tensor(Shape{m, plan.label_ids.size()});
  plan.word_weights = Tensor(Shape{m, n});
  for (std::size_t i = 0; i < m; ++i) {
    const double w = 1.0 / static_cast<double>(terms[i].size());
    for (const Term& t : terms[i]) {
      if (t.word) plan.word_weights.at(i, t.index) += w;
      else plan.label_weights.at(i, t.index) += w;
    }
  }
  return plan;
}

Var constituent_encode(Tape& tape, const CompositionPlan& plan, Var h, CgcnParams& params) {
  Var labels = matmul(gather_rows(tape.param(params.label_embedding), plan.label_ids), tape.param(params.label_projection));
  Var from_labels = matmul(tape.constant(plan.label_weights), labels);
  Var from_words = matmul(tape.constant(plan.word_weights), h);
  return add(from_labels, from_words);
}

Var cgcn_propagate(Tape& tape, const ConstituentGraph& graph, Var initial, CgcnParams& params, bool layer_norm) {
  Var adjacency = tape.constant(graph.normalized());
  Var h = initial;
  for (auto& layer : params.layers) h = gcn_layer(tape, h, adjacency, layer, layer_norm);
  return h;
}

CtAttention ct_attention(Var queries, Var keys, Var values, std::span<const std::uint8_t> mask, Var query_weight,
                         Var key_weight) {
  const double d = static_cast<double>(queries.cols());
  Var scores = scale(matmul_nt(matmul(queries, query_weight), matmul(keys, key_weight)), 1.0 / std::sqrt(d));
  Var weights = masked_softmax(scores, mask);
  return CtAttention{weights, matmul(weights, values)};
}

CgcnOutput cgcn_forward(Tape& tape, const ConstituencyTree& tree, const Vocabulary& labels, Var h, CgcnParams& params,
                        bool layer_norm) {
  CgcnOutput out;
  out.graph = build_constituent_graph(tree);
  const auto plan = composition_plan(tree, out.graph, labels);
  Var initial = constituent_encode(tape, plan, h, params);
  out.constituent_states = cgcn_propagate(tape, out.graph, initial, params, layer_norm);
  const auto mask = ct_attention_mask(tree, out.graph);
  auto att = ct_attention(h, initial, out.constituent_states, mask, tape.param(params.query_weight),
                          tape.param(params.key_weight));
  out.token_states = att.output;
  out.attention = att.weights;
  return out;
}

}  // namespace hgcn
