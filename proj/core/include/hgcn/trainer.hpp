#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hgcn/metrics.hpp"
#include "hgcn/model.hpp"

namespace hgcn {

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double loss = 0.0;      // summed over batches, L2 term included
  double polarity_loss = 0.0;
  double scope_loss = 0.0;
  double train_accuracy = 0.0;
  double train_scope_f1 = 0.0;
  std::optional<double> dev_accuracy;
  std::optional<double> dev_scope_f1;
  double seconds = 0.0;
};

std::string epoch_to_json(const EpochRecord& record);

struct TrainOptions {
  const Corpus* dev = nullptr;
  /// Score the training set after each epoch (a forward-only pass).
  bool evaluate_train = true;
  std::function<void(const EpochRecord&)> on_epoch;
  /// Called when the dev accuracy improves; use it to write a checkpoint.
  std::function<void(const EpochRecord&)> on_best;
  /// Return true to stop after this epoch.
  std::function<bool(const EpochRecord&)> stop;
};

struct TrainResult {
  std::vector<EpochRecord> log;
  std::optional<std::size_t> best_epoch;
  std::optional<double> best_dev_accuracy;
};

/// Mini-batch Adam. Each sentence gets its own tape carrying the losses of all
/// its targets; gradients accumulate over a batch of at most batch_size target
/// instances before one update. Sentence order is reshuffled every epoch from
/// config.seed.
TrainResult train(HgcnModel& model, const Corpus& corpus, const TrainOptions& options = {});

}  // namespace hgcn
