#pragma once

#include <random>
#include <utility>
#include <vector>

#include "hgcn/corpus.hpp"
#include "hgcn/gcn.hpp"
#include "hgcn/vocab.hpp"

namespace hgcn {

inline constexpr const char* kSelfRelation = "self";
inline constexpr const char* kUnknownRelation = "<unk>";
inline constexpr const char* kInversePrefix = "inv:";

struct DgcnParams {
  Tensor relation_embedding;  // [|relations|, relation_dim]
  Tensor gate_weight;         // [relation_dim, 1]
  Tensor gate_bias;           // [1]
  std::vector<GcnLayer> layers;
};

DgcnParams make_dgcn(std::size_t relations, std::size_t relation_dim, std::size_t width, std::size_t layers, double range,
                     std::mt19937_64& rng);

/// "<unk>", "self", then every corpus relation r followed by "inv:r".
Vocabulary build_relation_vocab(const Corpus& corpus);

/// Structural edge set of one dependency graph. Entry (head, dependent)
/// carries the relation label, (dependent, head) its inverse, and every token
/// has a self-loop.
struct DependencyEdges {
  std::size_t tokens = 0;
  std::vector<std::pair<std::size_t, std::size_t>> positions;
  std::vector<int> relation_ids;
  /// 1 / (structural edges incident to row i, self-loop included).
  std::vector<double> row_scale;
};

DependencyEdges dependency_edges(const DependencyGraph& graph, const Vocabulary& relations);

/// A^d: sigmoid(r_ij W_r + b_r) on structural entries, exact zeros elsewhere.
Var gated_adjacency(Tape& tape, const DependencyEdges& edges, DgcnParams& params);

Var dgcn_propagate(Tape& tape, const DependencyEdges& edges, Var gated, Var h, DgcnParams& params);

struct DgcnOutput {
  Var token_states;  // H^deps
  Var adjacency;     // A^d before normalization
};

DgcnOutput dgcn_forward(Tape& tape, const DependencyGraph& graph, const Vocabulary& relations, Var h, DgcnParams& params);

}  // namespace hgcn
