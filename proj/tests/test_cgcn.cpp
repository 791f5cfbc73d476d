#include <gtest/gtest.h>

#include <cmath>

#include "hgcn/cgcn.hpp"
#include "hgcn/grad_check.hpp"
#include "hgcn/toy_corpus.hpp"
#include "support/random_tree.hpp"

using namespace hgcn;
using testing_support::TreeGenerator;

namespace {

Vocabulary labels_of(const ConstituencyTree& tree) {
  AnnotatedSentence s;
  s.tree = tree;
  return build_label_vocab({s});
}

}  // namespace

TEST(ConstituentGraph, EdgesAreParentChildAndSelf) {
  const auto tree = parse_ptb("(S (NP (JJ Great) (NN food)) (CC but) (S (NP (DT the) (NN service)) (VP (VBD was) (ADJP (JJ dreadful)))) (. !))");
  const auto g = build_constituent_graph(tree);
  // S, NP, S, NP, VP, ADJP (ADJP spans a single preterminal but is a phrase).
  ASSERT_EQ(g.size(), 6u);
  for (std::size_t i = 0; i < g.size(); ++i) {
    EXPECT_EQ(g.adjacency.at(i, i), 1.0);
    for (std::size_t j = 0; j < g.size(); ++j) EXPECT_EQ(g.adjacency.at(i, j), g.adjacency.at(j, i));
  }
  EXPECT_EQ(g.adjacency.at(0, 1), 1.0);  // S - NP
  EXPECT_EQ(g.adjacency.at(0, 2), 1.0);  // S - S
  EXPECT_EQ(g.adjacency.at(1, 2), 0.0);  // siblings are not linked
  const Tensor norm = g.normalized();
  for (std::size_t i = 0; i < g.size(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) s += norm.at(i, j);
    EXPECT_NEAR(s, 1.0, 1e-15);
  }
}

TEST(CompositionPlan, AveragesLabelsAndWords) {
  const auto tree = parse_ptb("(S (NP (DT the) (NN food)) (VP (VBD was) (JJ good)))");
  const auto labels = labels_of(tree);
  const auto g = build_constituent_graph(tree);
  const auto plan = composition_plan(tree, g, labels);
  // NP: own label + DT + NN labels + the two words = 5 terms.
  const std::size_t np = 1;
  double label_mass = 0.0, word_mass = 0.0;
  for (std::size_t c = 0; c < plan.label_ids.size(); ++c) label_mass += plan.label_weights.at(np, c);
  for (std::size_t w = 0; w < 4; ++w) word_mass += plan.word_weights.at(np, w);
  EXPECT_NEAR(label_mass, 3.0 / 5.0, 1e-15);
  EXPECT_NEAR(word_mass, 2.0 / 5.0, 1e-15);
  EXPECT_EQ(plan.word_weights.at(np, 2), 0.0);
  // Unknown labels map to the reserved row instead of failing.
  const auto other = parse_ptb("(FRAG (XX a))");
  EXPECT_NO_THROW(composition_plan(other, build_constituent_graph(other), labels));
}

TEST(CtAttention, MaskIsExactAndRowsNormalizeOnRandomTrees) {
  TreeGenerator gen(5);
  std::mt19937_64 rng(8);
  for (int i = 0; i < 200; ++i) {
    const auto g = gen.next();
    const auto tree = parse_ptb(g.ptb);
    const auto labels = labels_of(tree);
    const std::size_t width = 6;
    CgcnParams params = make_cgcn(labels.size(), 4, width, 2, 0.5, rng, true);
    Tensor h = uniform_tensor(Shape{tree.word_count(), width}, 1.0, rng, false);
    Tape tape;
    const auto out = cgcn_forward(tape, tree, labels, tape.constant(h), params, true);
    const std::size_t n = tree.word_count(), m = out.graph.size();
    const auto w = out.attention.values();
    // Ancestry from the generator's structure, not the parsed tree.
    const auto cons = testing_support::constituent_ids(g);
    ASSERT_EQ(cons.size(), m);
    for (std::size_t word = 0; word < n; ++word) {
      double row = 0.0;
      for (std::size_t c = 0; c < m; ++c) {
        const auto& node = g.nodes[cons[c]];
        const bool below = node.start <= word && word < node.end;
        if (!below) EXPECT_EQ(w[word * m + c], 0.0) << g.ptb;
        row += w[word * m + c];
      }
      EXPECT_NEAR(row, 1.0, 1e-12) << g.ptb;
    }
  }
}

TEST(Cgcn, GradientsMatchFiniteDifferences) {
  const auto s = example_sentence();
  const auto labels = labels_of(s.tree);
  std::mt19937_64 rng(12);
  CgcnParams params = make_cgcn(labels.size(), 3, 4, 2, 0.5, rng, true);
  Tensor h = uniform_tensor(Shape{s.tokens.size(), 4}, 1.0, rng);
  for (auto& layer : params.layers) layer.bias = uniform_tensor(layer.bias.shape, 0.2, rng);
  std::vector<NamedTensor> named = {{"h", &h},
                                    {"label_embedding", &params.label_embedding},
                                    {"label_projection", &params.label_projection},
                                    {"query", &params.query_weight},
                                    {"key", &params.key_weight}};
  for (std::size_t l = 0; l < params.layers.size(); ++l) {
    named.push_back({"w" + std::to_string(l), &params.layers[l].weight});
    named.push_back({"b" + std::to_string(l), &params.layers[l].bias});
    named.push_back({"g" + std::to_string(l), &params.layers[l].ln_gain});
  }
  const auto report = grad_check(
      [&](Tape& t) {
        auto out = cgcn_forward(t, s.tree, labels, t.param(h), params, true);
        return sum(hgcn::tanh(out.token_states));
      },
      named, GradCheckOptions{1e-5, 1e-5, 1e-5});
  for (const auto& p : report.params) EXPECT_LT(p.max_rel_error, 1e-5) << p.name;
}
