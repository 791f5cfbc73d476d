#pragma once

#include <map>
#include <string>
#include <vector>

#include "hgcn/corpus.hpp"
#include "hgcn/model.hpp"

namespace hgcn {

struct Count {
  std::size_t total = 0;
  std::size_t correct = 0;
  double accuracy() const { return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total); }
};

struct SpanScore {
  std::size_t true_positives = 0;
  std::size_t predicted = 0;
  std::size_t gold = 0;
  double precision() const;
  double recall() const;
  double f1() const;
};

struct MetricsReport {
  Count polarity;
  /// Keyed by the number of targets in the instance's sentence.
  std::map<std::size_t, Count> by_target_count;
  SpanScore scope;
  std::size_t scoped_instances = 0;
};

/// One prediction per instance, in instances_of(corpus) order.
struct InstancePrediction {
  Polarity polarity = Polarity::kNeutral;
  std::vector<Tag> bio;
};

/// Exact-span scope matching: a predicted chunk counts only if a gold chunk
/// has the same start and end. Instances without gold BIO are skipped for the
/// scope score.
MetricsReport score_predictions(const Corpus& corpus, const std::vector<InstancePrediction>& predictions);

MetricsReport evaluate(HgcnModel& model, const Corpus& corpus);

std::string metrics_to_json(const MetricsReport& report);

}  // namespace hgcn
