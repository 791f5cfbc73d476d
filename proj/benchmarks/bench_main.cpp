#include <benchmark/benchmark.h>

#include <random>
#include <sstream>

#include "hgcn/crf.hpp"
#include "hgcn/model.hpp"
#include "hgcn/scope.hpp"
#include "hgcn/tape.hpp"
#include "hgcn/toy_corpus.hpp"
#include "hgcn/vocab.hpp"

using namespace hgcn;

namespace {

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(1);
  Tensor a = uniform_tensor(Shape{n, n}, 1.0, rng);
  Tensor b = uniform_tensor(Shape{n, n}, 1.0, rng);
  for (auto _ : state) {
    Tape tape;
    Var out = sum(matmul(tape.param(a), tape.param(b)));
    tape.backward(out);
    benchmark::DoNotOptimize(a.grad.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(32)->Arg(100)->Arg(200);

void BM_CrfForwardBackward(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(2);
  CrfParams params = make_crf(8, 0.5, rng);
  Tensor e = uniform_tensor(Shape{n, kNumTags}, 2.0, rng);
  std::vector<Tag> gold(n, Tag::kO);
  gold[0] = Tag::kB;
  for (auto _ : state) {
    Tape tape;
    tape.backward(crf_nll(tape, tape.param(e), gold, params, false));
  }
}
BENCHMARK(BM_CrfForwardBackward)->Arg(10)->Arg(40)->Arg(100);

void BM_Viterbi(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-2, 2);
  CrfScores s;
  for (std::size_t i = 0; i < n * kNumTags; ++i) s.emissions.push_back(u(rng));
  s.transitions.assign(9, 0.1);
  s.start.assign(3, 0.0);
  s.end.assign(3, 0.0);
  for (auto _ : state) benchmark::DoNotOptimize(viterbi_decode(s));
}
BENCHMARK(BM_Viterbi)->Arg(40);

void BM_SelectScope(benchmark::State& state) {
  const AnnotatedSentence s = example_sentence();
  const std::vector<Span> opinions = {Span{6, 7}};
  const auto policy = ExclusionPolicy::standard();
  for (auto _ : state) benchmark::DoNotOptimize(select_scope(s.tree, Span{4, 5}, opinions, policy));
}
BENCHMARK(BM_SelectScope);

// One training step (forward + backward) of the full model on a toy sentence at
// the default dimensions.
void BM_SentenceLoss(benchmark::State& state) {
  ToyOptions o;
  o.size = 4;
  const Corpus corpus = make_toy_corpus(o);
  ModelConfig config;
  auto vocabs = build_vocabularies(corpus);
  std::stringstream emb;
  write_toy_embeddings(emb, config.embedding_dim, 7);
  Tensor table = read_embeddings(emb, vocabs.words, config.embedding_dim, UnknownInit::kMean);
  auto model = HgcnModel::create(config, std::move(vocabs), std::move(table));
  const std::vector<std::size_t> targets = {0, 1};
  for (auto _ : state) {
    Tape tape;
    tape.backward(model->sentence_loss(tape, corpus[0], targets));
  }
  state.counters["tokens"] = static_cast<double>(corpus[0].tokens.size());
}
BENCHMARK(BM_SentenceLoss)->Unit(benchmark::kMillisecond);

void BM_PredictAll(benchmark::State& state) {
  ToyOptions o;
  o.size = 4;
  const Corpus corpus = make_toy_corpus(o);
  ModelConfig config;
  auto vocabs = build_vocabularies(corpus);
  std::mt19937_64 rng(4);
  Tensor table = uniform_tensor(Shape{vocabs.words.size(), config.embedding_dim}, 0.5, rng, false);
  auto model = HgcnModel::create(config, std::move(vocabs), std::move(table));
  for (auto _ : state) benchmark::DoNotOptimize(model->predict_all(corpus[0]));
}
BENCHMARK(BM_PredictAll)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
