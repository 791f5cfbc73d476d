#include "hgcn/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace hgcn {

using nlohmann::json;

std::string_view to_string(Branches b) {
  switch (b) {
    case Branches::kHybrid: return "hybrid";
    case Branches::kCgcnOnly: return "cgcn";
    case Branches::kDgcnOnly: return "dgcn";
  }
  return "hybrid";
}

Branches parse_branches(std::string_view s) {
  if (s == "hybrid") return Branches::kHybrid;
  if (s == "cgcn") return Branches::kCgcnOnly;
  if (s == "dgcn") return Branches::kDgcnOnly;
  throw std::invalid_argument("unknown branches value '" + std::string(s) + "' (expected hybrid, cgcn or dgcn)");
}

void ModelConfig::validate() const {
  auto positive = [](std::size_t v, const char* name) {
    if (v == 0) throw std::invalid_argument(std::string("config: ") + name + " must be positive");
  };
  positive(embedding_dim, "embedding_dim");
  positive(hidden, "hidden");
  positive(label_dim, "label_dim");
  positive(relation_dim, "relation_dim");
  positive(batch_size, "batch_size");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("config: learning_rate must be positive");
  if (lambda < 0.0) throw std::invalid_argument("config: lambda must be >= 0");
  if (gamma < 0.0) throw std::invalid_argument("config: gamma must be >= 0");
  if (dropout < 0.0 || dropout >= 1.0) throw std::invalid_argument("config: dropout must be in [0, 1)");
  if (!(init_range > 0.0)) throw std::invalid_argument("config: init_range must be positive");
}

namespace {

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("config: field '") + key + "': " + e.what());
  }
}

}  // namespace

ModelConfig parse_config(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config: ") + e.what());
  }
  if (!j.is_object()) throw std::invalid_argument("config: expected a JSON object");
  static const char* known[] = {"embedding_dim", "hidden",       "label_dim",  "relation_dim", "cgcn_layers",
                                "dgcn_layers",   "learning_rate", "epochs",    "batch_size",   "lambda",
                                "gamma",         "seed",          "hard_bio",  "target_indicator", "dropout",
                                "branches",      "freeze_embeddings", "layer_norm", "init_range"};
  for (const auto& [key, _] : j.items()) {
    bool found = false;
    for (const char* k : known) found = found || key == k;
    if (!found) throw std::invalid_argument("config: unknown field '" + key + "'");
  }
  ModelConfig c;
  read_field(j, "embedding_dim", c.embedding_dim);
  read_field(j, "hidden", c.hidden);
  read_field(j, "label_dim", c.label_dim);
  read_field(j, "relation_dim", c.relation_dim);
  read_field(j, "cgcn_layers", c.cgcn_layers);
  read_field(j, "dgcn_layers", c.dgcn_layers);
  read_field(j, "learning_rate", c.learning_rate);
  read_field(j, "epochs", c.epochs);
  read_field(j, "batch_size", c.batch_size);
  read_field(j, "lambda", c.lambda);
  read_field(j, "gamma", c.gamma);
  read_field(j, "seed", c.seed);
  read_field(j, "hard_bio", c.hard_bio);
  read_field(j, "target_indicator", c.target_indicator);
  read_field(j, "dropout", c.dropout);
  std::string branches(to_string(c.branches));
  read_field(j, "branches", branches);
  c.branches = parse_branches(branches);
  read_field(j, "freeze_embeddings", c.freeze_embeddings);
  read_field(j, "layer_norm", c.layer_norm);
  read_field(j, "init_range", c.init_range);
  c.validate();
  return c;
}

ModelConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_json(const ModelConfig& c) {
  json j = {{"embedding_dim", c.embedding_dim},
            {"hidden", c.hidden},
            {"label_dim", c.label_dim},
            {"relation_dim", c.relation_dim},
            {"cgcn_layers", c.cgcn_layers},
            {"dgcn_layers", c.dgcn_layers},
            {"learning_rate", c.learning_rate},
            {"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"lambda", c.lambda},
            {"gamma", c.gamma},
            {"seed", c.seed},
            {"hard_bio", c.hard_bio},
            {"target_indicator", c.target_indicator},
            {"dropout", c.dropout},
            {"branches", std::string(to_string(c.branches))},
            {"freeze_embeddings", c.freeze_embeddings},
            {"layer_norm", c.layer_norm},
            {"init_range", c.init_range}};
  return j.dump(2);
}

Vocabularies build_vocabularies(const Corpus& corpus) {
  return Vocabularies{build_vocab(corpus), build_label_vocab(corpus), build_relation_vocab(corpus)};
}

std::vector<NamedTensor> ModelParameters::named() {
  std::vector<NamedTensor> out;
  out.push_back({"embeddings", &embeddings});
  auto lstm = [&](const std::string& prefix, LstmDirection& d) {
    out.push_back({prefix + ".input_weight", &d.input_weight});
    out.push_back({prefix + ".recurrent_weight", &d.recurrent_weight});
    out.push_back({prefix + ".bias", &d.bias});
  };
  lstm("encoder.forward", encoder.forward);
  lstm("encoder.backward", encoder.backward);
  auto gcn = [&](const std::string& prefix, std::vector<GcnLayer>& layers) {
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const std::string p = prefix + ".layers." + std::to_string(l);
      out.push_back({p + ".weight", &layers[l].weight});
      out.push_back({p + ".bias", &layers[l].bias});
      if (!layers[l].ln_gain.values.empty()) {
        out.push_back({p + ".ln_gain", &layers[l].ln_gain});
        out.push_back({p + ".ln_bias", &layers[l].ln_bias});
      }
    }
  };
  if (cgcn) {
    out.push_back({"cgcn.label_embedding", &cgcn->label_embedding});
    out.push_back({"cgcn.label_projection", &cgcn->label_projection});
    gcn("cgcn", cgcn->layers);
    out.push_back({"cgcn.query_weight", &cgcn->query_weight});
    out.push_back({"cgcn.key_weight", &cgcn->key_weight});
  }
  if (dgcn) {
    out.push_back({"dgcn.relation_embedding", &dgcn->relation_embedding});
    out.push_back({"dgcn.gate_weight", &dgcn->gate_weight});
    out.push_back({"dgcn.gate_bias", &dgcn->gate_bias});
    gcn("dgcn", dgcn->layers);
  }
  out.push_back({"crf.emission_weight", &crf.emission_weight});
  out.push_back({"crf.emission_bias", &crf.emission_bias});
  out.push_back({"crf.transitions", &crf.transitions});
  out.push_back({"crf.start", &crf.start});
  out.push_back({"crf.end", &crf.end});
  out.push_back({"polarity.weight", &polarity_weight});
  out.push_back({"polarity.bias", &polarity_bias});
  return out;
}

std::vector<NamedTensor> ModelParameters::trainable() {
  std::vector<NamedTensor> out;
  for (auto& nt : named())
    if (nt.tensor->requires_grad) out.push_back(nt);
  return out;
}

ModelParameters init_parameters(const ModelConfig& config, const Vocabularies& vocabs, Tensor embeddings) {
  config.validate();
  if (embeddings.shape != Shape{vocabs.words.size(), config.embedding_dim}) {
    throw ShapeError("init_parameters: embeddings", embeddings.shape, Shape{vocabs.words.size(), config.embedding_dim});
  }
  std::mt19937_64 rng(config.seed);
  const double r = config.init_range;
  const std::size_t width = config.encoder_width();
  ModelParameters p;
  p.embeddings = std::move(embeddings);
  p.embeddings.requires_grad = !config.freeze_embeddings;
  p.encoder = make_bilstm(config.embedding_dim, config.hidden, r, rng);
  if (config.branches != Branches::kDgcnOnly)
    p.cgcn = make_cgcn(vocabs.labels.size(), config.label_dim, width, config.cgcn_layers, r, rng, config.layer_norm);
  if (config.branches != Branches::kCgcnOnly)
    p.dgcn = make_dgcn(vocabs.relations.size(), config.relation_dim, width, config.dgcn_layers, r, rng);
  p.crf = make_crf(config.syntax_width() + (config.target_indicator ? 1 : 0), r, rng);
  p.polarity_weight = uniform_tensor(Shape{config.syntax_width(), kNumPolarities}, r, rng);
  p.polarity_bias = Tensor(Shape{kNumPolarities}, 0.0, true);
  return p;
}

HgcnModel::HgcnModel(ModelConfig config, Vocabularies vocabs, ModelParameters params)
    : config_(std::move(config)), vocabs_(std::move(vocabs)), params_(std::move(params)) {
  config_.validate();
}

std::unique_ptr<HgcnModel> HgcnModel::create(const ModelConfig& config, Vocabularies vocabs, Tensor embeddings) {
  auto params = init_parameters(config, vocabs, std::move(embeddings));
  return std::make_unique<HgcnModel>(config, std::move(vocabs), std::move(params));
}

std::vector<int> HgcnModel::token_ids(const AnnotatedSentence& sentence) const {
  std::vector<int> ids;
  ids.reserve(sentence.tokens.size());
  for (const auto& t : sentence.tokens) ids.push_back(vocabs_.words.id(t));
  return ids;
}

void HgcnModel::check_target(const AnnotatedSentence& sentence, std::size_t target) const {
  if (target >= sentence.targets.size())
    throw std::out_of_range("forward: target " + std::to_string(target) + " of sentence '" + sentence.id + "' has " +
                            std::to_string(sentence.targets.size()) + " targets");
  const Span span = sentence.targets[target].span;
  if (span.empty()) throw std::invalid_argument("forward: empty target span");
  if (span.end > sentence.tokens.size()) throw std::out_of_range("forward: target span beyond sentence end");
}

SentenceEncoding HgcnModel::encode(Tape& tape, const AnnotatedSentence& sentence, std::mt19937_64* rng) {
  const double rate = rng ? config_.dropout : 0.0;
  BiLstmEncoder encoder(params_.embeddings, params_.encoder, rate, rng);
  const auto ids = token_ids(sentence);
  Var h = encoder.encode(tape, ids);

  SentenceEncoding out;
  std::optional<Var> cons, deps;
  if (params_.cgcn) {
    auto c = cgcn_forward(tape, sentence.tree, vocabs_.labels, h, *params_.cgcn, config_.layer_norm);
    cons = c.token_states;
    out.attention = c.attention;
  }
  if (params_.dgcn) deps = dgcn_forward(tape, sentence.dependencies, vocabs_.relations, h, *params_.dgcn).token_states;
  out.syntax = cons && deps ? concat(*cons, *deps) : (cons ? *cons : *deps);
  if (rate > 0.0) out.syntax = dropout(out.syntax, rate, *rng);
  return out;
}

ForwardResult HgcnModel::head(Tape& tape, const SentenceEncoding& encoding, const AnnotatedSentence& sentence,
                              std::size_t target) {
  check_target(sentence, target);
  const Span span = sentence.targets[target].span;
  const std::size_t n = sentence.tokens.size();

  ForwardResult out;
  out.syntax = encoding.syntax;
  out.attention = encoding.attention;
  Var emission_input = out.syntax;
  if (config_.target_indicator) {
    Tensor indicator(Shape{n, 1});
    for (std::size_t i = span.start; i < span.end; ++i) indicator.values[i] = 1.0;
    emission_input = concat(out.syntax, tape.constant(std::move(indicator)));
  }
  out.emissions = crf_emissions(tape, emission_input, params_.crf);

  std::vector<std::size_t> rows;
  for (std::size_t i = span.start; i < span.end; ++i) rows.push_back(i);
  Var senti = mean_rows(out.syntax, rows);
  out.logits = add(matmul(senti, tape.param(params_.polarity_weight)), tape.param(params_.polarity_bias));
  out.probabilities = softmax(out.logits);
  return out;
}

ForwardResult HgcnModel::forward(Tape& tape, const AnnotatedSentence& sentence, std::size_t target,
                                 std::mt19937_64* rng) {
  check_target(sentence, target);
  return head(tape, encode(tape, sentence, rng), sentence, target);
}

Var HgcnModel::target_loss(Tape& tape, const ForwardResult& f, const TargetInstance& inst, LossParts& parts) {
  Var polarity = sub(pick(logsumexp(f.logits), 0), pick(f.logits, static_cast<std::size_t>(inst.polarity)));
  Var loss = polarity;
  parts.polarity += polarity.item();
  if (inst.scope_bio && config_.gamma > 0.0) {
    Var scope = crf_nll(tape, f.emissions, *inst.scope_bio, params_.crf, config_.hard_bio);
    parts.scope += scope.item();
    parts.has_scope = true;
    loss = add(loss, scale(scope, config_.gamma));
  }
  return loss;
}

Var HgcnModel::instance_loss(Tape& tape, const AnnotatedSentence& sentence, std::size_t target, LossParts* parts,
                             std::mt19937_64* rng) {
  const std::size_t targets[] = {target};
  return sentence_loss(tape, sentence, targets, parts, rng);
}

Var HgcnModel::sentence_loss(Tape& tape, const AnnotatedSentence& sentence, std::span<const std::size_t> targets,
                             LossParts* parts, std::mt19937_64* rng) {
  if (targets.empty()) throw std::invalid_argument("sentence_loss: no targets");
  for (std::size_t k : targets) check_target(sentence, k);
  const auto encoding = encode(tape, sentence, rng);
  LossParts local;
  std::optional<Var> total;
  for (std::size_t k : targets) {
    Var loss = target_loss(tape, head(tape, encoding, sentence, k), sentence.targets[k], local);
    total = total ? add(*total, loss) : loss;
  }
  if (parts) *parts = local;
  return *total;
}

Var HgcnModel::l2_term(Tape& tape) {
  std::vector<Var> vars;
  for (auto& nt : params_.trainable()) vars.push_back(tape.param(*nt.tensor));
  return scale(squared_l2(vars), config_.lambda);
}

Var HgcnModel::joint_loss(Tape& tape, std::span<const InstanceRef> batch) {
  Var total = l2_term(tape);
  for (const auto& ref : batch) total = add(total, instance_loss(tape, *ref.sentence, ref.target));
  return total;
}

ScopePrediction HgcnModel::decode(const ForwardResult& f) const {
  ScopePrediction p;
  const auto probs = f.probabilities.values();
  p.distribution.assign(probs.begin(), probs.end());
  std::size_t best = 0;
  for (std::size_t k = 1; k < p.distribution.size(); ++k)
    if (p.distribution[k] > p.distribution[best]) best = k;
  p.polarity = static_cast<Polarity>(best);
  const auto decoded = viterbi_decode(crf_scores(f.emissions.values(), params_.crf, config_.hard_bio));
  p.bio = decoded.tags;
  p.path_score = decoded.score;
  const auto spans = spans_of_bio(p.bio);
  if (!spans.empty()) p.span = spans.front();
  return p;
}

ScopePrediction HgcnModel::predict(const AnnotatedSentence& sentence, std::size_t target) {
  Tape tape;
  return decode(forward(tape, sentence, target));
}

std::vector<ScopePrediction> HgcnModel::predict_all(const AnnotatedSentence& sentence) {
  std::vector<ScopePrediction> out;
  if (sentence.targets.empty()) return out;
  Tape tape;
  const auto encoding = encode(tape, sentence);
  for (std::size_t k = 0; k < sentence.targets.size(); ++k) out.push_back(decode(head(tape, encoding, sentence, k)));
  return out;
}

std::vector<HgcnModel::InstanceRef> instances_of(const Corpus& corpus) {
  std::vector<HgcnModel::InstanceRef> out;
  for (const auto& s : corpus)
    for (std::size_t t = 0; t < s.targets.size(); ++t) out.push_back({&s, t});
  return out;
}

}  // namespace hgcn
