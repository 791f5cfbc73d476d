#include "commands.hpp"

#include <csignal>
#include <fstream>
#include <iostream>
#include <sstream>

#include "hgcn/annotate_server.hpp"
#include "hgcn/checkpoint.hpp"
#include "hgcn/metrics.hpp"
#include "hgcn/scope.hpp"
#include "hgcn/toy_corpus.hpp"
#include "hgcn/trainer.hpp"
#include "json.hpp"

namespace hgcn::cli {

using nlohmann::ordered_json;

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  if (!out) throw std::runtime_error("write failed: " + path);
}

ordered_json span_json(const Span& s) { return ordered_json::array({s.start, s.end - 1}); }

ordered_json tags_json(const std::vector<Tag>& tags) {
  ordered_json a = ordered_json::array();
  for (Tag t : tags) a.push_back(std::string(to_string(t)));
  return a;
}

}  // namespace

int run_train(const TrainArgs& a) {
  ModelConfig config = a.config.empty() ? ModelConfig{} : load_config(a.config);
  if (a.epochs) config.epochs = *a.epochs;
  const Corpus corpus = load_dataset(a.data);
  std::optional<Corpus> dev;
  if (!a.dev.empty()) dev = load_dataset(a.dev);

  Vocabularies vocabs = build_vocabularies(corpus);
  EmbeddingReport report;
  Tensor table = load_embeddings(a.emb, vocabs.words, config.embedding_dim, UnknownInit::kMean, &report);
  std::cerr << "embeddings: " << report.matched << "/" << vocabs.words.size() << " vocabulary entries matched, "
            << report.oov.size() << " filled with the mean vector\n";
  auto model = HgcnModel::create(config, std::move(vocabs), std::move(table));

  const std::string log_path = a.log.empty() ? a.out + ".log.jsonl" : a.log;
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw std::runtime_error("cannot write " + log_path);

  TrainOptions options;
  if (dev) options.dev = &*dev;
  options.on_epoch = [&](const EpochRecord& r) {
    log << epoch_to_json(r) << '\n';
    log.flush();
    std::cerr << "epoch " << r.epoch << " loss " << r.loss << " train_acc " << r.train_accuracy << " scope_f1 "
              << r.train_scope_f1;
    if (r.dev_accuracy) std::cerr << " dev_acc " << *r.dev_accuracy;
    std::cerr << " (" << r.seconds << "s)\n";
  };
  options.on_best = [&](const EpochRecord& r) {
    save_checkpoint(*model, a.out + ".best");
    std::cerr << "best dev accuracy so far at epoch " << r.epoch << '\n';
  };
  const auto result = train(*model, corpus, options);
  save_checkpoint(*model, a.out);
  if (result.best_epoch) std::cerr << "best epoch " << *result.best_epoch << " written to " << a.out << ".best\n";
  std::cerr << "checkpoint written to " << a.out << '\n';
  return 0;
}

int run_eval(const EvalArgs& a) {
  auto model = load_checkpoint(a.ckpt);
  const Corpus corpus = load_dataset(a.data);
  std::cout << metrics_to_json(evaluate(*model, corpus)) << '\n';
  return 0;
}

int run_predict(const PredictArgs& a) {
  auto model = load_checkpoint(a.ckpt);
  const Corpus corpus = load_dataset(a.data);
  ordered_json out = ordered_json::array();
  for (const auto& ref : instances_of(corpus)) {
    const auto p = model->predict(*ref.sentence, ref.target);
    ordered_json j;
    j["id"] = ref.sentence->id;
    j["target"] = ref.target;
    j["span"] = span_json(ref.sentence->targets[ref.target].span);
    j["scope_bio"] = tags_json(p.bio);
    j["scope"] = p.span ? span_json(*p.span) : ordered_json();
    j["distribution"] = {{"positive", p.distribution[0]}, {"neutral", p.distribution[1]}, {"negative", p.distribution[2]}};
    j["polarity"] = std::string(to_string(p.polarity));
    out.push_back(std::move(j));
  }
  write_text(a.out, out.dump(1) + "\n");
  std::cerr << out.size() << " predictions written to " << a.out << '\n';
  return 0;
}

int run_annotate(const AnnotateArgs& a) {
  Corpus corpus = load_dataset(a.data);
  const Lexicon lexicon = Lexicon::load(a.lexicon);
  PreAnnotateOptions options;
  options.clause_hits = a.clause_hits;
  std::size_t filled = 0, weak = 0;
  for (auto& s : corpus) {
    for (std::size_t k = 0; k < s.targets.size(); ++k) {
      auto& t = s.targets[k];
      if (t.scope_bio && !a.overwrite) continue;
      auto p = pre_annotate_target(s, k, lexicon, options);
      t.scope_bio = p.bio;
      t.provenance = std::string(to_string(p.provenance));
      if (t.opinion_spans.empty()) t.opinion_spans = p.opinions;
      ++filled;
      weak += p.provenance == Provenance::kAutoWeak;
    }
  }
  save_dataset(corpus, a.out);
  std::cerr << filled << " scopes proposed (" << weak << " without a lexicon hit)\n";
  return 0;
}

int run_attention(const AttentionArgs& a) {
  auto model = load_checkpoint(a.ckpt);
  const Corpus corpus = load_dataset(a.data);
  if (a.sentence >= corpus.size())
    throw std::out_of_range("sentence " + std::to_string(a.sentence) + " outside a corpus of " +
                            std::to_string(corpus.size()));
  if (model->config().branches == Branches::kDgcnOnly) throw std::invalid_argument("checkpoint has no CGCN branch");
  const auto& s = corpus[a.sentence];
  if (s.targets.empty()) throw std::invalid_argument("sentence has no targets");
  Tape tape;
  const auto f = model->forward(tape, s, 0);
  const auto graph = build_constituent_graph(s.tree);
  const std::size_t n = s.tokens.size(), m = graph.size();
  const auto w = f.attention->values();

  ordered_json j;
  j["id"] = s.id;
  j["tokens"] = s.tokens;
  ordered_json constituents = ordered_json::array();
  for (int id : graph.nodes) {
    const auto& node = s.tree.node(id);
    constituents.push_back({{"node", id}, {"label", node.label}, {"span", span_json(node.span)}});
  }
  j["constituents"] = std::move(constituents);
  ordered_json rows = ordered_json::array();
  for (std::size_t i = 0; i < n; ++i) rows.push_back(std::vector<double>(w.begin() + i * m, w.begin() + (i + 1) * m));
  j["weights"] = std::move(rows);
  write_text(a.out, j.dump(1) + "\n");
  std::cerr << "attention " << n << "x" << m << " written to " << a.out << '\n';
  return 0;
}

int run_gen_toy(const ToyArgs& a) {
  ToyOptions options;
  options.size = a.size;
  options.seed = a.seed;
  options.min_targets = a.min_targets;
  options.max_targets = a.max_targets;
  options.gold_scopes = !a.no_scopes;
  save_dataset(make_toy_corpus(options), a.out);
  if (!a.emb.empty()) {
    std::ostringstream out;
    write_toy_embeddings(out, a.dim, a.seed);
    write_text(a.emb, out.str());
  }
  if (!a.lexicon.empty()) {
    std::string text;
    for (const auto& w : toy_lexicon()) text += w + "\n";
    write_text(a.lexicon, text);
  }
  std::cerr << a.size << " sentences written to " << a.out << '\n';
  return 0;
}

namespace {
AnnotateServer* active_server = nullptr;
void on_signal(int) {
  if (active_server) active_server->stop();
}
}  // namespace

int run_serve(const ServeArgs& a) {
  Lexicon lexicon = a.lexicon.empty() ? Lexicon{} : Lexicon::load(a.lexicon);
  AnnotationStore store(a.store, std::move(lexicon));
  if (!a.data.empty()) {
    const auto written = store.import(load_dataset(a.data));
    std::cerr << written << " documents imported into " << a.store << '\n';
  }
  ServerOptions options;
  options.host = a.host;
  options.port = a.port;
  if (!a.ui.empty()) options.ui_dir = a.ui;
  AnnotateServer server(store, options);
  const int port = server.bind();
  active_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cerr << "listening on http://" << a.host << ":" << port << '\n';
  server.run();
  active_server = nullptr;
  return 0;
}

}  // namespace hgcn::cli
