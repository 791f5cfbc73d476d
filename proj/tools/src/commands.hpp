#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace hgcn::cli {

struct TrainArgs {
  std::string data, emb, config, out, dev, log;
  std::optional<std::size_t> epochs;
};
struct EvalArgs {
  std::string data, ckpt;
};
struct PredictArgs {
  std::string data, ckpt, out;
};
struct AnnotateArgs {
  std::string data, lexicon, out;
  bool clause_hits = false;
  bool overwrite = false;
};
struct AttentionArgs {
  std::string data, ckpt, out;
  std::size_t sentence = 0;
};
struct ToyArgs {
  std::string out, emb, lexicon;
  std::uint64_t seed = 7;
  std::size_t size = 50;
  std::size_t min_targets = 2;
  std::size_t max_targets = 2;
  std::size_t dim = 300;
  bool no_scopes = false;
};
struct ServeArgs {
  std::string data, store, lexicon, ui, host = "127.0.0.1";
  int port = 8080;
};

int run_train(const TrainArgs& a);
int run_eval(const EvalArgs& a);
int run_predict(const PredictArgs& a);
int run_annotate(const AnnotateArgs& a);
int run_attention(const AttentionArgs& a);
int run_gen_toy(const ToyArgs& a);
int run_serve(const ServeArgs& a);

}  // namespace hgcn::cli
