#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hgcn/corpus.hpp"
#include "hgcn/gcn.hpp"
#include "hgcn/vocab.hpp"

namespace hgcn {

struct CgcnParams {
  Tensor label_embedding;   // [|labels|, label_dim]
  Tensor label_projection;  // [label_dim, width]
  std::vector<GcnLayer> layers;
  Tensor query_weight;  // [width, width]
  Tensor key_weight;    // [width, width]
};

CgcnParams make_cgcn(std::size_t labels, std::size_t label_dim, std::size_t width, std::size_t layers, double range,
                     std::mt19937_64& rng, bool layer_norm);

inline constexpr const char* kUnknownLabel = "<unk>";

/// "<unk>", then every non-terminal label (constituents and POS tags) in
/// corpus order.
Vocabulary build_label_vocab(const Corpus& corpus);

/// Graph over the constituents of one tree: parent-child edges in both
/// directions plus self-loops.
struct ConstituentGraph {
  std::vector<int> nodes;   // tree node ids, pre-order
  Tensor adjacency;         // [m, m] 0/1, symmetric, unit diagonal
  std::vector<double> degree;

  std::size_t size() const { return nodes.size(); }
  /// Row-normalized adjacency (c_i = 1 / d_i).
  Tensor normalized() const;
};

ConstituentGraph build_constituent_graph(const ConstituencyTree& tree);

/// [n, m] mask: word w may read from constituent c iff w is a leaf of c.
std::vector<std::uint8_t> ct_attention_mask(const ConstituencyTree& tree, const ConstituentGraph& graph);

/// Averaging plan for the constituent encoder. Each constituent averages its
/// own projected label embedding, the label embeddings of its constituent and
/// POS-level children, and the H rows of words below those POS children (or
/// directly below it).
struct CompositionPlan {
  std::vector<int> label_ids;  // label rows to gather
  Tensor label_weights;        // [m, label_ids.size()]
  Tensor word_weights;         // [m, n]
};

CompositionPlan composition_plan(const ConstituencyTree& tree, const ConstituentGraph& graph, const Vocabulary& labels);

/// [m, width] initial constituent representations.
Var constituent_encode(Tape& tape, const CompositionPlan& plan, Var h, CgcnParams& params);

Var cgcn_propagate(Tape& tape, const ConstituentGraph& graph, Var initial, CgcnParams& params, bool layer_norm);

struct CtAttention {
  Var weights;  // [n, m]
  Var output;   // [n, width]
};

/// softmax((Q Wq)(K Wk)^T / sqrt(d)) restricted to `mask`, then weights * V.
CtAttention ct_attention(Var queries, Var keys, Var values, std::span<const std::uint8_t> mask, Var query_weight,
                         Var key_weight);

struct CgcnOutput {
  Var token_states;  // H^cons, [n, width]
  Var attention;     // [n, m]
  Var constituent_states;  // H^c, [m, width]
  ConstituentGraph graph;
};

CgcnOutput cgcn_forward(Tape& tape, const ConstituencyTree& tree, const Vocabulary& labels, Var h, CgcnParams& params,
                        bool layer_norm);

}  // namespace hgcn
