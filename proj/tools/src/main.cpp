#include <exception>
#include <iostream>

#include "CLI11.hpp"
#include "commands.hpp"

using namespace hgcn::cli;

int main(int argc, char** argv) {
  CLI::App app{"HGCN aspect sentiment with scope extraction"};
  app.require_subcommand(1);

  TrainArgs train;
  auto* t = app.add_subcommand("train", "Train a model and write a checkpoint");
  t->add_option("--data", train.data, "Training dataset (JSON)")->required()->check(CLI::ExistingFile);
  t->add_option("--emb", train.emb, "Word vectors, one 'word v1 ... vd' per line")->required()->check(CLI::ExistingFile);
  t->add_option("--config", train.config, "Model config (JSON)")->check(CLI::ExistingFile);
  t->add_option("--out", train.out, "Checkpoint path")->required();
  t->add_option("--dev", train.dev, "Dev dataset for best-epoch selection")->check(CLI::ExistingFile);
  t->add_option("--log", train.log, "Epoch log, JSON lines (default: <out>.log.jsonl)");
  t->add_option("--epochs", train.epochs, "Override config epochs");

  EvalArgs eval;
  auto* e = app.add_subcommand("eval", "Print a metrics report as JSON");
  e->add_option("--data", eval.data)->required()->check(CLI::ExistingFile);
  e->add_option("--ckpt", eval.ckpt)->required()->check(CLI::ExistingFile);

  PredictArgs predict;
  auto* p = app.add_subcommand("predict", "Write per-instance predictions");
  p->add_option("--data", predict.data)->required()->check(CLI::ExistingFile);
  p->add_option("--ckpt", predict.ckpt)->required()->check(CLI::ExistingFile);
  p->add_option("--out", predict.out)->required();

  AnnotateArgs annotate;
  auto* a = app.add_subcommand("annotate-auto", "Fill scope_bio with rule-based proposals");
  a->add_option("--data", annotate.data)->required()->check(CLI::ExistingFile);
  a->add_option("--lexicon", annotate.lexicon, "Opinion words, one per line")->required()->check(CLI::ExistingFile);
  a->add_option("--out", annotate.out)->required();
  a->add_flag("--clause-hits", annotate.clause_hits, "Use every lexicon hit in the target's clause");
  a->add_flag("--overwrite", annotate.overwrite, "Replace existing scopes too");

  AttentionArgs attention;
  auto* d = app.add_subcommand("dump-attention", "Write the word-to-constituent attention matrix");
  d->add_option("--data", attention.data)->required()->check(CLI::ExistingFile);
  d->add_option("--ckpt", attention.ckpt)->required()->check(CLI::ExistingFile);
  d->add_option("--sentence", attention.sentence, "0-based sentence index")->required();
  d->add_option("--out", attention.out)->required();

  ToyArgs toy;
  auto* g = app.add_subcommand("gen-toy", "Generate the synthetic clause corpus");
  g->add_option("--out", toy.out, "Dataset path")->required();
  g->add_option("--seed", toy.seed);
  g->add_option("--size", toy.size, "Number of sentences");
  g->add_option("--min-targets", toy.min_targets);
  g->add_option("--max-targets", toy.max_targets);
  g->add_option("--emb", toy.emb, "Also write random word vectors here");
  g->add_option("--dim", toy.dim, "Word vector dimension");
  g->add_option("--lexicon", toy.lexicon, "Also write the opinion lexicon here");
  g->add_flag("--no-scopes", toy.no_scopes, "Leave scope_bio empty");

  ServeArgs serve;
  auto* s = app.add_subcommand("serve", "Run the annotation HTTP service");
  s->add_option("--data", serve.data, "Dataset imported into the store")->check(CLI::ExistingFile);
  s->add_option("--store", serve.store, "Store directory")->required();
  s->add_option("--port", serve.port);
  s->add_option("--host", serve.host);
  s->add_option("--lexicon", serve.lexicon)->check(CLI::ExistingFile);
  s->add_option("--ui", serve.ui, "Built UI bundle served at /")->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*t) return run_train(train);
    if (*e) return run_eval(eval);
    if (*p) return run_predict(predict);
    if (*a) return run_annotate(annotate);
    if (*d) return run_attention(attention);
    if (*g) return run_gen_toy(toy);
    if (*s) return run_serve(serve);
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return 1;
  }
  return 1;
}
