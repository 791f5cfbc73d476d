#include "hgcn/metrics.hpp"

#include <algorithm>
#include <stdexcept>

#include "hgcn/scope.hpp"
#include "json.hpp"

namespace hgcn {

namespace {

double ratio(std::size_t a, std::size_t b) { return b == 0 ? 0.0 : static_cast<double>(a) / static_cast<double>(b); }

}  // namespace

double SpanScore::precision() const { return ratio(true_positives, predicted); }
double SpanScore::recall() const { return ratio(true_positives, gold); }
double SpanScore::f1() const {
  const double p = precision(), r = recall();
  return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r);
}

MetricsReport score_predictions(const Corpus& corpus, const std::vector<InstancePrediction>& predictions) {
  MetricsReport report;
  std::size_t k = 0;
  for (const auto& sentence : corpus) {
    const std::size_t bucket = sentence.targets.size();
    for (const auto& target : sentence.targets) {
      if (k >= predictions.size()) throw std::invalid_argument("score_predictions: fewer predictions than instances");
      const auto& pred = predictions[k++];
      const bool correct = pred.polarity == target.polarity;
      report.polarity.total++;
      report.polarity.correct += correct;
      auto& b = report.by_target_count[bucket];
      b.total++;
      b.correct += correct;
      if (!target.scope_bio) continue;
      report.scoped_instances++;
      const auto gold = spans_of_bio(*target.scope_bio);
      const auto guess = spans_of_bio(pred.bio);
      report.scope.gold += gold.size();
      report.scope.predicted += guess.size();
      for (const auto& s : guess) report.scope.true_positives += std::count(gold.begin(), gold.end(), s) > 0;
    }
  }
  if (k != predictions.size()) throw std::invalid_argument("score_predictions: more predictions than instances");
  return report;
}

MetricsReport evaluate(HgcnModel& model, const Corpus& corpus) {
  std::vector<InstancePrediction> preds;
  for (const auto& sentence : corpus)
    for (auto& p : model.predict_all(sentence)) preds.push_back({p.polarity, std::move(p.bio)});
  return score_predictions(corpus, preds);
}

std::string metrics_to_json(const MetricsReport& r) {
  nlohmann::ordered_json j;
  j["instances"] = r.polarity.total;
  j["accuracy"] = r.polarity.accuracy();
  nlohmann::ordered_json buckets = nlohmann::ordered_json::object();
  for (const auto& [count, c] : r.by_target_count)
    buckets[std::to_string(count)] = {{"total", c.total}, {"correct", c.correct}, {"accuracy", c.accuracy()}};
  j["accuracy_by_target_count"] = buckets;
  j["scope"] = {{"instances", r.scoped_instances}, {"precision", r.scope.precision()},
                {"recall", r.scope.recall()},      {"f1", r.scope.f1()},
                {"true_positives", r.scope.true_positives}, {"predicted", r.scope.predicted},
                {"gold", r.scope.gold}};
  return j.dump(2);
}

}  // namespace hgcn
