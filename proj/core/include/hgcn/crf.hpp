#pragma once

#include <random>
#include <span>
#include <vector>

#include "hgcn/corpus.hpp"
#include "hgcn/tape.hpp"

namespace hgcn {

struct CrfParams {
  Tensor emission_weight;  // [input, 3]
  Tensor emission_bias;    // [3]
  Tensor transitions;      // [3, 3], row = previous tag
  Tensor start;            // [3]
  Tensor end;              // [3]
};

CrfParams make_crf(std::size_t input, double range, std::mt19937_64& rng);

/// Plain-value view of the scoring tables. `emissions` is n x 3 row-major.
struct CrfScores {
  std::vector<double> emissions;
  std::vector<double> transitions;
  std::vector<double> start;
  std::vector<double> end;
  bool hard_bio = false;

  std::size_t length() const { return emissions.size() / kNumTags; }
  double emission(std::size_t t, std::size_t y) const { return emissions[t * kNumTags + y]; }
  /// Transition score with the hard-BIO constraint applied.
  double transition(std::size_t from, std::size_t to) const;
  double start_score(std::size_t y) const;
};

double sequence_score(const CrfScores& s, const std::vector<Tag>& tags);
double log_partition(const CrfScores& s);
double crf_nll(const CrfScores& s, const std::vector<Tag>& tags);

struct CrfMarginals {
  std::vector<double> unary;     // n x 3
  std::vector<double> pairwise;  // (n-1) x 3 x 3
  double log_z = 0.0;
};

CrfMarginals crf_marginals(const CrfScores& s);

struct ViterbiResult {
  std::vector<Tag> tags;
  double score = 0.0;
};

/// Highest-scoring sequence; ties go to the lower tag index.
ViterbiResult viterbi_decode(const CrfScores& s);

/// Emission projection H W + b, [n, 3].
Var crf_emissions(Tape& tape, Var h, CrfParams& params);

CrfScores crf_scores(std::span<const double> emissions, const CrfParams& params, bool hard_bio);

/// Negative log-likelihood of `gold` as a single tape node. Gradients reach the
/// emissions and the transition, start and end tables.
Var crf_nll(Tape& tape, Var emissions, const std::vector<Tag>& gold, CrfParams& params, bool hard_bio);

}  // namespace hgcn
