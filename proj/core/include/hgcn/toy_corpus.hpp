#pragma once

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "hgcn/corpus.hpp"

namespace hgcn {

/// Synthetic clause-structured sentences. Each target sits in its own clause
/// next to one opinion word, so the polarity cue always lies inside the gold
/// scope and every other clause carries a competing cue.
struct ToyOptions {
  std::size_t size = 50;  // sentences
  std::uint64_t seed = 7;
  std::size_t min_targets = 2;
  std::size_t max_targets = 2;
  /// Fill scope_bio from the scope oracle.
  bool gold_scopes = true;
};

Corpus make_toy_corpus(const ToyOptions& options);

/// Every word the generator can emit, sorted.
std::vector<std::string> toy_vocabulary();
/// Opinion words of the generator (lower case), one per line when written.
std::vector<std::string> toy_lexicon();

/// Random "word v1 ... vd" table covering toy_vocabulary().
void write_toy_embeddings(std::ostream& out, std::size_t dim, std::uint64_t seed);

/// "Great food but the service was dreadful !" with targets food (positive)
/// and service (negative), no scope annotation.
AnnotatedSentence example_sentence();

}  // namespace hgcn
