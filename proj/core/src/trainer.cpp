#include "hgcn/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>
#include <random>
#include <stdexcept>

#include "hgcn/adam.hpp"
#include "json.hpp"

namespace hgcn {

std::string epoch_to_json(const EpochRecord& r) {
  nlohmann::ordered_json j;
  j["epoch"] = r.epoch;
  j["loss"] = r.loss;
  j["polarity_loss"] = r.polarity_loss;
  j["scope_loss"] = r.scope_loss;
  j["train_accuracy"] = r.train_accuracy;
  j["train_scope_f1"] = r.train_scope_f1;
  if (r.dev_accuracy) j["dev_accuracy"] = *r.dev_accuracy;
  if (r.dev_scope_f1) j["dev_scope_f1"] = *r.dev_scope_f1;
  j["seconds"] = r.seconds;
  return j.dump();
}

namespace {

// Whole sentences in shuffled order, packed so that no batch holds more than
// batch_size target instances (a sentence with more targets than that forms
// a batch on its own).
std::vector<std::vector<std::size_t>> pack_batches(const Corpus& corpus, const std::vector<std::size_t>& order,
                                                   std::size_t batch_size) {
  std::vector<std::vector<std::size_t>> batches;
  std::size_t filled = 0;
  for (std::size_t idx : order) {
    const std::size_t k = corpus[idx].targets.size();
    if (k == 0) continue;
    if (batches.empty() || filled + k > batch_size) {
      batches.emplace_back();
      filled = 0;
    }
    batches.back().push_back(idx);
    filled += k;
  }
  return batches;
}

}  // namespace

TrainResult train(HgcnModel& model, const Corpus& corpus, const TrainOptions& options) {
  const ModelConfig& config = model.config();
  if (instances_of(corpus).empty()) throw std::invalid_argument("train: corpus has no target instances");

  Adam adam(model.parameters().trainable(), AdamOptions{config.learning_rate, 0.9, 0.999, 1e-8});
  adam.zero_grad();
  std::mt19937_64 order_rng(config.seed);
  std::mt19937_64 dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::mt19937_64* drop = config.dropout > 0.0 ? &dropout_rng : nullptr;

  std::vector<std::size_t> order(corpus.size());
  TrainResult result;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), order_rng);

    EpochRecord rec;
    rec.epoch = epoch;
    for (const auto& batch : pack_batches(corpus, order, config.batch_size)) {
      for (std::size_t idx : batch) {
        const auto& sentence = corpus[idx];
        std::vector<std::size_t> targets(sentence.targets.size());
        std::iota(targets.begin(), targets.end(), std::size_t{0});
        Tape tape;
        LossParts parts;
        Var loss = model.sentence_loss(tape, sentence, targets, &parts, drop);
        tape.backward(loss);
        rec.loss += loss.item();
        rec.polarity_loss += parts.polarity;
        rec.scope_loss += parts.scope;
      }
      if (config.lambda > 0.0) {
        Tape tape;
        Var l2 = model.l2_term(tape);
        tape.backward(l2);
        rec.loss += l2.item();
      }
      adam.step();
    }
    if (options.evaluate_train) {
      const auto m = evaluate(model, corpus);
      rec.train_accuracy = m.polarity.accuracy();
      rec.train_scope_f1 = m.scope.f1();
    }
    bool improved = false;
    if (options.dev) {
      const auto m = evaluate(model, *options.dev);
      rec.dev_accuracy = m.polarity.accuracy();
      rec.dev_scope_f1 = m.scope.f1();
      if (!result.best_dev_accuracy || *rec.dev_accuracy > *result.best_dev_accuracy) {
        result.best_dev_accuracy = rec.dev_accuracy;
        result.best_epoch = epoch;
        improved = true;
      }
    }
    rec.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    result.log.push_back(rec);
    if (options.on_epoch) options.on_epoch(rec);
    if (improved && options.on_best) options.on_best(rec);
    if (options.stop && options.stop(rec)) break;
  }
  return result;
}

}  // namespace hgcn
