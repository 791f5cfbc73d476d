#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>

#include "json.hpp"

#include "hgcn/checkpoint.hpp"
#include "hgcn/model.hpp"
#include "hgcn/toy_corpus.hpp"
#include "hgcn/trainer.hpp"

using namespace hgcn;

namespace {

ModelConfig small_config() {
  ModelConfig c;
  c.embedding_dim = 4;
  c.hidden = 3;
  c.label_dim = 3;
  c.relation_dim = 2;
  c.init_range = 0.3;
  c.batch_size = 4;
  c.seed = 3;
  return c;
}

Corpus small_corpus(std::size_t size = 6) {
  ToyOptions o;
  o.size = size;
  o.seed = 21;
  return make_toy_corpus(o);
}

AnnotatedSentence six_token_sentence() {
  TargetInstance food;
  food.span = Span{1, 2};
  food.polarity = Polarity::kPositive;
  food.scope_bio = std::vector<Tag>{Tag::kB, Tag::kI, Tag::kI, Tag::kI, Tag::kI, Tag::kO};
  return make_sentence("(S (NP (DT the) (NN food)) (VP (VBD was) (ADJP (RB very) (JJ good))) (. .))",
                       "1\tthe\t_\tDT\tDT\t_\t2\tdet\t_\t_\n"
                       "2\tfood\t_\tNN\tNN\t_\t5\tnsubj\t_\t_\n"
                       "3\twas\t_\tVBD\tVBD\t_\t5\tcop\t_\t_\n"
                       "4\tvery\t_\tRB\tRB\t_\t5\tadvmod\t_\t_\n"
                       "5\tgood\t_\tJJ\tJJ\t_\t0\troot\t_\t_\n"
                       "6\t.\t_\t.\t.\t_\t5\tpunct\t_\t_\n",
                       {food}, "six");
}

std::unique_ptr<HgcnModel> make_model(const ModelConfig& config, const Corpus& corpus) {
  auto vocabs = build_vocabularies(corpus);
  std::mt19937_64 rng(99);
  Tensor emb = uniform_tensor(Shape{vocabs.words.size(), config.embedding_dim}, 0.5, rng, false);
  return HgcnModel::create(config, std::move(vocabs), std::move(emb));
}

bool bitwise_equal(const std::vector<double>& a, const std::vector<double>& b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

double sum_abs(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

}  // namespace

TEST(Model, ZeroPolarityHeadGivesUniformDistribution) {
  const Corpus corpus = small_corpus();
  auto model = make_model(small_config(), corpus);
  auto& p = model->parameters();
  std::fill(p.polarity_weight.values.begin(), p.polarity_weight.values.end(), 0.0);
  std::fill(p.polarity_bias.values.begin(), p.polarity_bias.values.end(), 0.0);
  const auto pred = model->predict(corpus[0], 0);
  for (double v : pred.distribution) EXPECT_EQ(v, 1.0 / 3.0);
  model->mutable_config().gamma = 0.0;
  Tape tape;
  Var loss = model->instance_loss(tape, corpus[0], 0);
  EXPECT_NEAR(loss.values()[0], std::log(3.0), 1e-15);
}

TEST(Model, PureCrossEntropyWhenScopeAndL2AreOff) {
  const Corpus corpus = small_corpus();
  ModelConfig c = small_config();
  c.gamma = 0.0;
  c.lambda = 0.0;
  auto model = make_model(c, corpus);
  for (std::size_t k = 0; k < corpus[1].targets.size(); ++k) {
    const auto pred = model->predict(corpus[1], k);
    const double p_gold = pred.distribution[static_cast<std::size_t>(corpus[1].targets[k].polarity)];
    Tape tape;
    LossParts parts;
    Var loss = model->instance_loss(tape, corpus[1], k, &parts);
    EXPECT_NEAR(loss.values()[0], -std::log(p_gold), 1e-12);
    EXPECT_EQ(parts.scope, 0.0);
  }
  const auto refs = instances_of(corpus);
  Tape tape;
  Var joint = model->joint_loss(tape, refs);
  double expected = 0.0;
  for (const auto& r : refs) {
    const auto pred = model->predict(*r.sentence, r.target);
    expected -= std::log(pred.distribution[static_cast<std::size_t>(r.sentence->targets[r.target].polarity)]);
  }
  EXPECT_NEAR(joint.values()[0], expected, 1e-10);
}

TEST(Model, JointLossAddsScopeAndL2Terms) {
  const Corpus corpus = small_corpus();
  ModelConfig c = small_config();
  c.lambda = 0.01;
  c.gamma = 0.5;
  auto model = make_model(c, corpus);
  const auto refs = instances_of(corpus);
  double instances = 0.0;
  for (const auto& r : refs) {
    Tape t;
    instances += model->instance_loss(t, *r.sentence, r.target).values()[0];
  }
  double norm = 0.0;
  for (const auto& p : model->parameters().trainable()) {
    for (double v : p.tensor->values) norm += v * v;
  }
  Tape tape;
  EXPECT_NEAR(model->joint_loss(tape, refs).values()[0], instances + 0.01 * norm, 1e-9);
  // Frozen embeddings are not regularized.
  for (const auto& p : model->parameters().trainable()) EXPECT_NE(p.name, "embeddings");
}

TEST(Model, SentenceLossEqualsSumOfInstanceLosses) {
  const Corpus corpus = small_corpus();
  auto model = make_model(small_config(), corpus);
  const auto& s = corpus[2];
  std::vector<std::size_t> all(s.targets.size());
  double expected = 0.0;
  for (std::size_t k = 0; k < all.size(); ++k) {
    all[k] = k;
    Tape t;
    expected += model->instance_loss(t, s, k).values()[0];
  }
  Tape tape;
  EXPECT_NEAR(model->sentence_loss(tape, s, all).values()[0], expected, 1e-12);
}

TEST(Model, ScopeTermControlsTransitionGradients) {
  const Corpus corpus = small_corpus();
  for (double gamma : {0.0, 0.03}) {
    ModelConfig c = small_config();
    c.gamma = gamma;
    auto model = make_model(c, corpus);
    auto& p = model->parameters();
    for (auto& n : p.named()) n.tensor->zero_grad();
    Tape tape;
    Var loss = model->instance_loss(tape, corpus[0], 0);
    tape.backward(loss);
    const double mass = sum_abs(p.crf.transitions.grad) + sum_abs(p.crf.start.grad) + sum_abs(p.crf.end.grad) +
                        sum_abs(p.crf.emission_weight.grad);
    if (gamma == 0.0) {
      EXPECT_EQ(mass, 0.0);
    } else {
      EXPECT_GT(sum_abs(p.crf.transitions.grad), 0.0);
      EXPECT_GT(sum_abs(p.crf.emission_weight.grad), 0.0);
    }
  }
}

TEST(Model, FullModelGradientsMatchFiniteDifferences) {
  const Corpus corpus = {six_token_sentence()};
  ModelConfig c = small_config();
  c.embedding_dim = 3;
  c.hidden = 2;
  c.label_dim = 2;
  c.freeze_embeddings = false;
  c.gamma = 0.5;
  c.lambda = 0.01;
  for (Branches b : {Branches::kHybrid, Branches::kCgcnOnly, Branches::kDgcnOnly}) {
    c.branches = b;
    auto model = make_model(c, corpus);
    // Zero-initialized biases put dead ReLU rows exactly on the kink.
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-0.2, 0.2);
    for (auto& p : model->parameters().trainable()) {
      if (p.name.ends_with("bias")) {
        for (double& v : p.tensor->values) v = u(rng);
      }
    }
    const auto refs = instances_of(corpus);
    const auto report = grad_check([&](Tape& t) { return model->joint_loss(t, refs); }, model->parameters().trainable(),
                                   GradCheckOptions{1e-5, 1e-4, 1e-6});
    for (const auto& p : report.params) EXPECT_LT(p.max_rel_error, 1e-4) << to_string(b) << " " << p.name;
  }
}

TEST(Model, AblationsUseOneBranch) {
  const Corpus corpus = small_corpus();
  ModelConfig c = small_config();
  c.branches = Branches::kCgcnOnly;
  auto cgcn = make_model(c, corpus);
  EXPECT_TRUE(cgcn->parameters().cgcn.has_value());
  EXPECT_FALSE(cgcn->parameters().dgcn.has_value());
  c.branches = Branches::kDgcnOnly;
  auto dgcn = make_model(c, corpus);
  EXPECT_FALSE(dgcn->parameters().cgcn.has_value());
  EXPECT_TRUE(dgcn->parameters().dgcn.has_value());
  Tape tape;
  EXPECT_EQ(dgcn->forward(tape, corpus[0], 0).syntax.shape()[1], c.encoder_width());
  EXPECT_FALSE(dgcn->forward(tape, corpus[0], 0).attention.has_value());
}

TEST(Model, RejectsBadTargets) {
  const Corpus corpus = small_corpus();
  auto model = make_model(small_config(), corpus);
  Tape tape;
  EXPECT_THROW(model->instance_loss(tape, corpus[0], 99), std::out_of_range);
}

TEST(Model, SameSeedTrainsBitIdentically) {
  const Corpus corpus = small_corpus();
  ModelConfig c = small_config();
  c.epochs = 2;
  c.dropout = 0.2;
  auto a = make_model(c, corpus);
  auto b = make_model(c, corpus);
  const auto la = train(*a, corpus, {});
  const auto lb = train(*b, corpus, {});
  ASSERT_EQ(la.log.size(), 2u);
  EXPECT_EQ(std::memcmp(&la.log[1].loss, &lb.log[1].loss, sizeof(double)), 0);
  auto na = a->parameters().named();
  auto nb = b->parameters().named();
  for (std::size_t i = 0; i < na.size(); ++i) EXPECT_TRUE(bitwise_equal(na[i].tensor->values, nb[i].tensor->values)) << na[i].name;
}

TEST(Model, TrainingReducesLoss) {
  const Corpus corpus = small_corpus(8);
  ModelConfig c = small_config();
  c.epochs = 15;
  auto model = make_model(c, corpus);
  const auto result = train(*model, corpus, {});
  EXPECT_LT(result.log.back().loss, result.log.front().loss);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  const Corpus corpus = small_corpus();
  ModelConfig c = small_config();
  c.epochs = 1;
  auto model = make_model(c, corpus);
  train(*model, corpus, {});
  const auto path = std::filesystem::temp_directory_path() / "hgcn_test_checkpoint.json";
  save_checkpoint(*model, path.string());
  auto loaded = load_checkpoint(path.string());
  std::filesystem::remove(path);
  auto na = model->parameters().named();
  auto nb = loaded->parameters().named();
  ASSERT_EQ(na.size(), nb.size());
  for (std::size_t i = 0; i < na.size(); ++i) {
    EXPECT_EQ(na[i].name, nb[i].name);
    EXPECT_EQ(na[i].tensor->shape, nb[i].tensor->shape);
    EXPECT_TRUE(bitwise_equal(na[i].tensor->values, nb[i].tensor->values)) << na[i].name;
  }
  for (const auto& s : corpus) {
    for (std::size_t k = 0; k < s.targets.size(); ++k) {
      const auto pa = model->predict(s, k);
      const auto pb = loaded->predict(s, k);
      EXPECT_TRUE(bitwise_equal(pa.distribution, pb.distribution));
      EXPECT_EQ(pa.bio, pb.bio);
    }
  }
  EXPECT_EQ(config_to_json(model->config()), config_to_json(loaded->config()));
  EXPECT_EQ(serialize_checkpoint(*model), serialize_checkpoint(*loaded));
}

TEST(Checkpoint, RejectsShapeMismatchAndMissingTensors) {
  const Corpus corpus = small_corpus();
  auto model = make_model(small_config(), corpus);
  const auto doc = nlohmann::json::parse(serialize_checkpoint(*model));

  auto bad_shape = doc;
  for (auto& p : bad_shape["parameters"]) {
    if (p["name"] == "crf.transitions") p["shape"] = {3, 4};
  }
  EXPECT_THROW(parse_checkpoint(bad_shape.dump()), CheckpointError);

  auto missing = doc;
  missing["parameters"].erase(0);
  EXPECT_THROW(parse_checkpoint(missing.dump()), CheckpointError);

  auto version = doc;
  version["version"] = kCheckpointVersion + 1;
  EXPECT_THROW(parse_checkpoint(version.dump()), CheckpointError);

  EXPECT_THROW(parse_checkpoint("{not json"), CheckpointError);
}

TEST(Config, JsonRoundTripAndValidation) {
  ModelConfig c = small_config();
  c.branches = Branches::kDgcnOnly;
  c.hard_bio = true;
  c.gamma = 0.125;
  const ModelConfig back = parse_config(config_to_json(c));
  EXPECT_EQ(config_to_json(back), config_to_json(c));
  EXPECT_EQ(back.branches, Branches::kDgcnOnly);

  const ModelConfig defaults = parse_config("{}");
  EXPECT_EQ(defaults.hidden, 100u);
  EXPECT_EQ(defaults.learning_rate, 0.01);
  EXPECT_EQ(defaults.lambda, 1e-4);
  EXPECT_EQ(defaults.gamma, 3e-2);
  EXPECT_EQ(defaults.batch_size, 32u);
  EXPECT_EQ(defaults.epochs, 100u);

  EXPECT_THROW(parse_config(R"({"hiden": 3})"), std::invalid_argument);
  EXPECT_THROW(parse_config(R"({"branches": "both"})"), std::invalid_argument);
  EXPECT_THROW(parse_config(R"({"gamma": -1})"), std::invalid_argument);
}
