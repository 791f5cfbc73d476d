#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "hgcn/cgcn.hpp"
#include "hgcn/corpus.hpp"
#include "hgcn/crf.hpp"
#include "hgcn/dgcn.hpp"
#include "hgcn/encoder.hpp"
#include "hgcn/grad_check.hpp"
#include "hgcn/scope.hpp"
#include "hgcn/vocab.hpp"

namespace hgcn {

enum class Branches { kHybrid, kCgcnOnly, kDgcnOnly };
std::string_view to_string(Branches b);
Branches parse_branches(std::string_view s);

struct ModelConfig {
  std::size_t embedding_dim = 300;
  std::size_t hidden = 100;  // per LSTM direction
  std::size_t label_dim = 100;
  std::size_t relation_dim = 30;
  std::size_t cgcn_layers = 2;
  std::size_t dgcn_layers = 2;
  double learning_rate = 0.01;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  double lambda = 1e-4;
  double gamma = 3e-2;
  std::uint64_t seed = 1;
  bool hard_bio = false;
  bool target_indicator = true;
  double dropout = 0.0;
  Branches branches = Branches::kHybrid;
  bool freeze_embeddings = true;
  bool layer_norm = true;
  double init_range = 0.1;

  std::size_t encoder_width() const { return 2 * hidden; }
  /// Width of H^syn: both branch outputs, or one of them in an ablation.
  std::size_t syntax_width() const { return branches == Branches::kHybrid ? 2 * encoder_width() : encoder_width(); }
  void validate() const;
};

/// JSON object whose keys mirror the field names. Missing keys keep defaults.
ModelConfig parse_config(std::string_view json);
ModelConfig load_config(const std::string& path);
std::string config_to_json(const ModelConfig& config);

struct Vocabularies {
  Vocabulary words;      // with "<unk>" at id 0
  Vocabulary labels;     // non-terminal labels
  Vocabulary relations;  // "<unk>", "self", r, inv:r, ...
};

Vocabularies build_vocabularies(const Corpus& corpus);

struct ModelParameters {
  Tensor embeddings;  // [|words|, embedding_dim]
  BiLstmParams encoder;
  std::optional<CgcnParams> cgcn;
  std::optional<DgcnParams> dgcn;
  CrfParams crf;
  Tensor polarity_weight;  // [syntax_width, 3]
  Tensor polarity_bias;    // [3]

  /// Every tensor with a stable dotted name, in a fixed order.
  std::vector<NamedTensor> named();
  /// named() minus tensors with requires_grad off (frozen embeddings).
  std::vector<NamedTensor> trainable();
};

ModelParameters init_parameters(const ModelConfig& config, const Vocabularies& vocabs, Tensor embeddings);

struct ScopePrediction {
  std::vector<Tag> bio;
  std::optional<Span> span;  // first decoded chunk
  std::vector<double> distribution;  // over positive, neutral, negative
  Polarity polarity = Polarity::kNeutral;
  double path_score = 0.0;
};

struct ForwardResult {
  Var syntax;     // H^syn, [n, syntax_width]
  Var emissions;  // [n, 3]
  Var logits;     // [1, 3]
  Var probabilities;
  std::optional<Var> attention;  // C-T weights when the CGCN branch runs
};

/// Target-independent part of the forward pass.
struct SentenceEncoding {
  Var syntax;                    // H^syn
  std::optional<Var> attention;  // C-T weights when the CGCN branch runs
};

struct LossParts {
  double polarity = 0.0;
  double scope = 0.0;
  bool has_scope = false;
};

class HgcnModel {
 public:
  HgcnModel(ModelConfig config, Vocabularies vocabs, ModelParameters params);
  HgcnModel(const HgcnModel&) = delete;
  HgcnModel& operator=(const HgcnModel&) = delete;

  /// Fresh parameters from config.seed.
  static std::unique_ptr<HgcnModel> create(const ModelConfig& config, Vocabularies vocabs, Tensor embeddings);

  const ModelConfig& config() const { return config_; }
  ModelConfig& mutable_config() { return config_; }
  const Vocabularies& vocabularies() const { return vocabs_; }
  ModelParameters& parameters() { return params_; }

  std::vector<int> token_ids(const AnnotatedSentence& sentence) const;

  /// Encoder, CGCN and DGCN. Dropout is applied only when `rng` is given and
  /// the configured rate is positive.
  SentenceEncoding encode(Tape& tape, const AnnotatedSentence& sentence, std::mt19937_64* rng = nullptr);
  /// Target-specific heads on top of a shared encoding.
  ForwardResult head(Tape& tape, const SentenceEncoding& encoding, const AnnotatedSentence& sentence,
                     std::size_t target);
  ForwardResult forward(Tape& tape, const AnnotatedSentence& sentence, std::size_t target,
                        std::mt19937_64* rng = nullptr);

  /// -log p(gold) + gamma * crf_nll(gold scope); the scope term is skipped
  /// when the target has no gold BIO.
  Var instance_loss(Tape& tape, const AnnotatedSentence& sentence, std::size_t target, LossParts* parts = nullptr,
                    std::mt19937_64* rng = nullptr);

  /// Sum of instance losses over the listed targets of one sentence, sharing
  /// a single encoding.
  Var sentence_loss(Tape& tape, const AnnotatedSentence& sentence, std::span<const std::size_t> targets,
                    LossParts* parts = nullptr, std::mt19937_64* rng = nullptr);

  /// lambda * ||Theta||^2 over the trainable tensors.
  Var l2_term(Tape& tape);

  struct InstanceRef {
    const AnnotatedSentence* sentence;
    std::size_t target;
  };
  /// Sum of instance losses plus the L2 term, on one tape.
  Var joint_loss(Tape& tape, std::span<const InstanceRef> batch);

  ScopePrediction predict(const AnnotatedSentence& sentence, std::size_t target);
  /// Predictions for every target of a sentence from one encoding.
  std::vector<ScopePrediction> predict_all(const AnnotatedSentence& sentence);

 private:
  void check_target(const AnnotatedSentence& sentence, std::size_t target) const;
  Var target_loss(Tape& tape, const ForwardResult& f, const TargetInstance& inst, LossParts& parts);
  ScopePrediction decode(const ForwardResult& f) const;

  ModelConfig config_;
  Vocabularies vocabs_;
  ModelParameters params_;
};

/// All (sentence, target) pairs of a corpus, in order.
std::vector<HgcnModel::InstanceRef> instances_of(const Corpus& corpus);

}  // namespace hgcn
