#include "hgcn/crf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace hgcn {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr std::size_t K = kNumTags;
constexpr std::size_t kB = static_cast<std::size_t>(Tag::kB);
constexpr std::size_t kI = static_cast<std::size_t>(Tag::kI);
constexpr std::size_t kO = static_cast<std::size_t>(Tag::kO);

double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double m = std::max(a, b);
  return m + std::log(std::exp(a - m) + std::exp(b - m));
}

void check_length(const CrfScores& s) {
  if (s.length() == 0) throw std::invalid_argument("crf: empty sequence");
}

// alpha[t][y]: log-sum of all prefixes ending in y at t.
std::vector<double> forward_table(const CrfScores& s) {
  const std::size_t n = s.length();
  std::vector<double> alpha(n * K, kNegInf);
  for (std::size_t y = 0; y < K; ++y) alpha[y] = s.start_score(y) + s.emission(0, y);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t y = 0; y < K; ++y) {
      double acc = kNegInf;
      for (std::size_t p = 0; p < K; ++p) acc = log_add(acc, alpha[(t - 1) * K + p] + s.transition(p, y));
      alpha[t * K + y] = acc + s.emission(t, y);
    }
  }
  return alpha;
}

std::vector<double> backward_table(const CrfScores& s) {
  const std::size_t n = s.length();
  std::vector<double> beta(n * K, kNegInf);
  for (std::size_t y = 0; y < K; ++y) beta[(n - 1) * K + y] = s.end[y];
  for (std::size_t t = n - 1; t-- > 0;) {
    for (std::size_t y = 0; y < K; ++y) {
      double acc = kNegInf;
      for (std::size_t nx = 0; nx < K; ++nx)
        acc = log_add(acc, s.transition(y, nx) + s.emission(t + 1, nx) + beta[(t + 1) * K + nx]);
      beta[t * K + y] = acc;
    }
  }
  return beta;
}

double safe_exp(double x) { return x == kNegInf ? 0.0 : std::exp(x); }

}  // namespace

CrfParams make_crf(std::size_t input, double range, std::mt19937_64& rng) {
  CrfParams p;
  p.emission_weight = uniform_tensor(Shape{input, K}, range, rng);
  p.emission_bias = Tensor(Shape{K}, 0.0, true);
  p.transitions = Tensor(Shape{K, K}, 0.0, true);
  p.start = Tensor(Shape{K}, 0.0, true);
  p.end = Tensor(Shape{K}, 0.0, true);
  return p;
}

double CrfScores::transition(std::size_t from, std::size_t to) const {
  if (hard_bio && from == kO && to == kI) return kNegInf;
  return transitions[from * K + to];
}

double CrfScores::start_score(std::size_t y) const {
  if (hard_bio && y == kI) return kNegInf;
  return start[y];
}

double sequence_score(const CrfScores& s, const std::vector<Tag>& tags) {
  check_length(s);
  if (tags.size() != s.length())
    throw std::invalid_argument("crf: gold length " + std::to_string(tags.size()) + " != sequence length " +
                                std::to_string(s.length()));
  const auto y = [&](std::size_t t) { return static_cast<std::size_t>(tags[t]); };
  double score = s.start_score(y(0)) + s.emission(0, y(0));
  for (std::size_t t = 1; t < tags.size(); ++t) score += s.transition(y(t - 1), y(t)) + s.emission(t, y(t));
  return score + s.end[y(tags.size() - 1)];
}

double log_partition(const CrfScores& s) {
  check_length(s);
  const auto alpha = forward_table(s);
  const std::size_t last = s.length() - 1;
  double z = kNegInf;
  for (std::size_t y = 0; y < K; ++y) z = log_add(z, alpha[last * K + y] + s.end[y]);
  return z;
}

double crf_nll(const CrfScores& s, const std::vector<Tag>& tags) { return log_partition(s) - sequence_score(s, tags); }

CrfMarginals crf_marginals(const CrfScores& s) {
  check_length(s);
  const std::size_t n = s.length();
  const auto alpha = forward_table(s);
  const auto beta = backward_table(s);
  CrfMarginals m;
  m.log_z = kNegInf;
  for (std::size_t y = 0; y < K; ++y) m.log_z = log_add(m.log_z, alpha[(n - 1) * K + y] + s.end[y]);
  m.unary.assign(n * K, 0.0);
  for (std::size_t t = 0; t < n; ++t)
    for (std::size_t y = 0; y < K; ++y) m.unary[t * K + y] = safe_exp(alpha[t * K + y] + beta[t * K + y] - m.log_z);
  m.pairwise.assign((n > 0 ? n - 1 : 0) * K * K, 0.0);
  for (std::size_t t = 0; t + 1 < n; ++t)
    for (std::size_t p = 0; p < K; ++p)
      for (std::size_t y = 0; y < K; ++y)
        m.pairwise[(t * K + p) * K + y] = safe_exp(alpha[t * K + p] + s.transition(p, y) + s.emission(t + 1, y) +
                                                   beta[(t + 1) * K + y] - m.log_z);
  return m;
}

ViterbiResult viterbi_decode(const CrfScores& s) {
  check_length(s);
  const std::size_t n = s.length();
  std::vector<double> delta(n * K, kNegInf);
  std::vector<std::size_t> back(n * K, 0);
  for (std::size_t y = 0; y < K; ++y) delta[y] = s.start_score(y) + s.emission(0, y);
  for (std::size_t t = 1; t < n; ++t) {
    for (std::size_t y = 0; y < K; ++y) {
      double best = kNegInf;
      std::size_t arg = 0;
      for (std::size_t p = 0; p < K; ++p) {
        const double v = delta[(t - 1) * K + p] + s.transition(p, y);
        if (v > best) best = v, arg = p;
      }
      delta[t * K + y] = best + s.emission(t, y);
      back[t * K + y] = arg;
    }
  }
  // Strict '>' keeps the lowest index among equal scores.
  double best = kNegInf;
  std::size_t last = 0;
  for (std::size_t y = 0; y < K; ++y) {
    const double v = delta[(n - 1) * K + y] + s.end[y];
    if (v > best) best = v, last = y;
  }
  ViterbiResult r;
  r.score = best;
  r.tags.resize(n);
  std::size_t y = last;
  for (std::size_t t = n; t-- > 0;) {
    r.tags[t] = static_cast<Tag>(y);
    y = back[t * K + y];
  }
  return r;
}

Var crf_emissions(Tape& tape, Var h, CrfParams& params) {
  return add(matmul(h, tape.param(params.emission_weight)), tape.param(params.emission_bias));
}

CrfScores crf_scores(std::span<const double> emissions, const CrfParams& params, bool hard_bio) {
  CrfScores s;
  s.emissions.assign(emissions.begin(), emissions.end());
  s.transitions = params.transitions.values;
  s.start = params.start.values;
  s.end = params.end.values;
  s.hard_bio = hard_bio;
  return s;
}

Var crf_nll(Tape& tape, Var emissions, const std::vector<Tag>& gold, CrfParams& params, bool hard_bio) {
  if (emissions.cols() != K) throw ShapeError("crf_nll", emissions.shape(), Shape{emissions.rows(), K});
  Var trans = tape.param(params.transitions);
  Var start = tape.param(params.start);
  Var end = tape.param(params.end);
  CrfScores s = crf_scores(emissions.values(), params, hard_bio);
  const double loss = crf_nll(s, gold);
  const int ie = emissions.id(), it = trans.id(), is = start.id(), ien = end.id();
  return tape.record(Shape{1}, {loss}, {ie, it, is, ien},
                     [s = std::move(s), gold, ie, it, is, ien](Tape& t, int self) {
                       const double g = t.grad_view(self)[0];
                       const auto m = crf_marginals(s);
                       const std::size_t n = s.length();
                       const auto y = [&](std::size_t i) { return static_cast<std::size_t>(gold[i]); };
                       if (t.needs_grad(ie)) {
                         auto& ge = t.grad(ie);
                         for (std::size_t i = 0; i < n * K; ++i) ge[i] += g * m.unary[i];
                         for (std::size_t i = 0; i < n; ++i) ge[i * K + y(i)] -= g;
                       }
                       if (t.needs_grad(it)) {
                         auto& gt = t.grad(it);
                         for (std::size_t i = 0; i + 1 < n; ++i)
                           for (std::size_t k = 0; k < K * K; ++k) gt[k] += g * m.pairwise[i * K * K + k];
                         for (std::size_t i = 0; i + 1 < n; ++i) gt[y(i) * K + y(i + 1)] -= g;
                       }
                       if (t.needs_grad(is)) {
                         auto& gs = t.grad(is);
                         for (std::size_t k = 0; k < K; ++k) gs[k] += g * m.unary[k];
                         gs[y(0)] -= g;
                       }
                       if (t.needs_grad(ien)) {
                         auto& gn = t.grad(ien);
                         for (std::size_t k = 0; k < K; ++k) gn[k] += g * m.unary[(n - 1) * K + k];
                         gn[y(n - 1)] -= g;
                       }
                     });
}

}  // namespace hgcn
