#include <gtest/gtest.h>

#include "hgcn/metrics.hpp"
#include "hgcn/toy_corpus.hpp"

#include "json.hpp"

using namespace hgcn;

namespace {

Corpus corpus() {
  ToyOptions o;
  o.size = 10;
  o.seed = 4;
  o.min_targets = 2;
  o.max_targets = 3;
  return make_toy_corpus(o);
}

std::vector<InstancePrediction> gold_predictions(const Corpus& c) {
  std::vector<InstancePrediction> out;
  for (const auto& s : c) {
    for (const auto& t : s.targets) out.push_back({t.polarity, *t.scope_bio});
  }
  return out;
}

}  // namespace

TEST(Metrics, AllCorrect) {
  const Corpus c = corpus();
  const auto r = score_predictions(c, gold_predictions(c));
  EXPECT_EQ(r.polarity.accuracy(), 1.0);
  EXPECT_EQ(r.scope.precision(), 1.0);
  EXPECT_EQ(r.scope.recall(), 1.0);
  EXPECT_EQ(r.scope.f1(), 1.0);
  std::size_t total = 0;
  for (const auto& [k, count] : r.by_target_count) {
    EXPECT_GE(k, 2u);
    EXPECT_LE(k, 3u);
    EXPECT_EQ(count.accuracy(), 1.0);
    total += count.total;
  }
  EXPECT_EQ(total, r.polarity.total);
}

TEST(Metrics, MajorityClassBaseline) {
  const Corpus c = corpus();
  auto preds = gold_predictions(c);
  std::size_t positives = 0;
  for (auto& p : preds) {
    positives += p.polarity == Polarity::kPositive;
    p.polarity = Polarity::kPositive;
  }
  const auto r = score_predictions(c, preds);
  EXPECT_EQ(r.polarity.correct, positives);
  EXPECT_DOUBLE_EQ(r.polarity.accuracy(), static_cast<double>(positives) / static_cast<double>(preds.size()));
}

TEST(Metrics, OffByOneScopeScoresZero) {
  const Corpus c = corpus();
  auto preds = gold_predictions(c);
  for (auto& p : preds) {
    const Span s = spans_of_bio(p.bio).front();
    // Shrink or grow by one token at the right edge.
    const Span moved = s.length() > 1 ? Span{s.start, s.end - 1} : Span{s.start, s.end + 1};
    p.bio = to_bio(moved, p.bio.size());
  }
  const auto r = score_predictions(c, preds);
  EXPECT_EQ(r.scope.true_positives, 0u);
  EXPECT_EQ(r.scope.f1(), 0.0);
  EXPECT_EQ(r.scope.predicted, preds.size());
}

TEST(Metrics, SpanScoreArithmetic) {
  SpanScore s{3, 4, 6};
  EXPECT_DOUBLE_EQ(s.precision(), 0.75);
  EXPECT_DOUBLE_EQ(s.recall(), 0.5);
  EXPECT_DOUBLE_EQ(s.f1(), 0.6);
  EXPECT_EQ(SpanScore{}.f1(), 0.0);
}

TEST(Metrics, RejectsMismatchedPredictionCount) {
  const Corpus c = corpus();
  auto preds = gold_predictions(c);
  preds.pop_back();
  EXPECT_THROW(score_predictions(c, preds), std::invalid_argument);
}

TEST(Metrics, JsonReport) {
  const Corpus c = corpus();
  const auto j = nlohmann::json::parse(metrics_to_json(score_predictions(c, gold_predictions(c))));
  EXPECT_EQ(j["accuracy"], 1.0);
  EXPECT_EQ(j["scope"]["f1"], 1.0);
  EXPECT_TRUE(j["accuracy_by_target_count"].contains("2"));
}
