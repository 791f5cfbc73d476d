#include "hgcn/toy_corpus.hpp"

#include <algorithm>
#include <iomanip>
#include <random>
#include <set>
#include <sstream>

#include "hgcn/scope.hpp"

namespace hgcn {

namespace {

const std::vector<std::string> kAspects = {"food",  "service", "staff",  "pizza",   "wine",       "price",
                                           "decor", "menu",    "music",  "dessert", "battery",    "screen",
                                           "keyboard", "waiter", "coffee", "atmosphere"};
const std::vector<std::string> kPositiveAdj = {"great", "excellent", "delicious", "friendly",
                                               "amazing", "fantastic", "good", "superb"};
const std::vector<std::string> kNegativeAdj = {"terrible", "awful", "dreadful", "rude",
                                               "bland", "horrible", "poor", "slow"};
const std::vector<std::string> kPositiveVerb = {"loved", "enjoyed", "liked", "adored"};
const std::vector<std::string> kNegativeVerb = {"hated", "disliked", "despised", "loathed"};
const std::vector<std::string> kFunctionWords = {"the", "was", "is", "really", "i", "but", "and", ",", ".", "!"};

struct Dep {
  int head;  // clause-local index, or -1 for the clause head
  std::string relation;
};

struct Clause {
  std::string ptb;
  std::vector<std::string> tags;
  std::vector<std::string> words;
  std::vector<Dep> deps;
  int head = 0;
  std::size_t target = 0;
  std::size_t opinion = 0;
  Polarity polarity = Polarity::kNeutral;
};

std::string leaf(const std::string& tag, const std::string& word) { return "(" + tag + " " + word + ")"; }

Clause make_clause(int kind, const std::string& aspect, const std::string& opinion, Polarity polarity) {
  Clause c;
  c.polarity = polarity;
  switch (kind) {
    case 0:  // the X was A
      c.words = {"the", aspect, "was", opinion};
      c.tags = {"DT", "NN", "VBD", "JJ"};
      c.ptb = "(S (NP " + leaf("DT", "the") + " " + leaf("NN", aspect) + ") (VP " + leaf("VBD", "was") + " (ADJP " +
              leaf("JJ", opinion) + ")))";
      c.deps = {{1, "det"}, {3, "nsubj"}, {3, "cop"}, {-1, ""}};
      c.head = 3, c.target = 1, c.opinion = 3;
      break;
    case 1:  // the X is really A
      c.words = {"the", aspect, "is", "really", opinion};
      c.tags = {"DT", "NN", "VBZ", "RB", "JJ"};
      c.ptb = "(S (NP " + leaf("DT", "the") + " " + leaf("NN", aspect) + ") (VP " + leaf("VBZ", "is") + " (ADJP " +
              leaf("RB", "really") + " " + leaf("JJ", opinion) + ")))";
      c.deps = {{1, "det"}, {4, "nsubj"}, {4, "cop"}, {4, "advmod"}, {-1, ""}};
      c.head = 4, c.target = 1, c.opinion = 4;
      break;
    case 2:  // i V the X
      c.words = {"i", opinion, "the", aspect};
      c.tags = {"PRP", "VBD", "DT", "NN"};
      c.ptb = "(S (NP " + leaf("PRP", "i") + ") (VP " + leaf("VBD", opinion) + " (NP " + leaf("DT", "the") + " " +
              leaf("NN", aspect) + ")))";
      c.deps = {{1, "nsubj"}, {-1, ""}, {3, "det"}, {1, "obj"}};
      c.head = 1, c.target = 3, c.opinion = 1;
      break;
    default:  // A X
      c.words = {opinion, aspect};
      c.tags = {"JJ", "NN"};
      c.ptb = "(NP " + leaf("JJ", opinion) + " " + leaf("NN", aspect) + ")";
      c.deps = {{1, "amod"}, {-1, ""}};
      c.head = 1, c.target = 1, c.opinion = 0;
      break;
  }
  return c;
}

template <typename T>
const T& choose(const std::vector<T>& v, std::mt19937_64& rng) {
  return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
}

struct Token {
  std::string word;
  std::string tag;
  int head;  // global 0-based, -1 root
  std::string relation;
};

AnnotatedSentence assemble(const std::vector<Clause>& clauses, const std::vector<std::string>& connectors,
                           const std::string& final_punct, const std::string& id, bool gold_scopes) {
  std::vector<Token> tokens;
  std::vector<std::size_t> offsets, heads;
  std::string ptb = "(S";
  for (std::size_t k = 0; k < clauses.size(); ++k) {
    if (k > 0) {
      const std::string& conn = connectors[k - 1];
      if (conn.front() == ',') {
        ptb += " (, ,)";
        tokens.push_back({",", ",", -2, "punct"});
      }
      const std::string word = conn.front() == ',' ? conn.substr(2) : conn;
      ptb += " (CC " + word + ")";
      tokens.push_back({word, "CC", -2, "cc"});
    }
    const Clause& c = clauses[k];
    offsets.push_back(tokens.size());
    heads.push_back(tokens.size() + static_cast<std::size_t>(c.head));
    ptb += " " + c.ptb;
    for (std::size_t i = 0; i < c.words.size(); ++i) {
      const Dep& d = c.deps[i];
      const int head = d.head < 0 ? -3 : static_cast<int>(offsets.back()) + d.head;
      tokens.push_back({c.words[i], c.tags[i], head, d.relation});
    }
  }
  const std::string punct_tag = ".";
  ptb += " (" + punct_tag + " " + final_punct + "))";
  tokens.push_back({final_punct, ".", static_cast<int>(heads[0]), "punct"});

  // Connectors attach to the head of the clause that follows them; clause
  // heads after the first are conjuncts of the first.
  std::size_t clause = 0;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    while (clause + 1 < offsets.size() && i >= offsets[clause + 1]) ++clause;
    if (tokens[i].head == -2) {
      std::size_t next = 0;
      while (next < offsets.size() && offsets[next] <= i) ++next;
      tokens[i].head = static_cast<int>(heads[next]);
    } else if (tokens[i].head == -3) {
      if (clause == 0) {
        tokens[i].head = -1;
        tokens[i].relation = "root";
      } else {
        tokens[i].head = static_cast<int>(heads[0]);
        tokens[i].relation = "conj";
      }
    }
  }

  std::ostringstream conllu;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const Token& t = tokens[i];
    conllu << i + 1 << '\t' << t.word << "\t_\t" << t.tag << '\t' << t.tag << "\t_\t" << t.head + 1 << '\t'
           << t.relation << "\t_\t_\n";
  }

  std::vector<TargetInstance> targets;
  for (std::size_t k = 0; k < clauses.size(); ++k) {
    TargetInstance t;
    const std::size_t at = offsets[k] + clauses[k].target;
    const std::size_t op = offsets[k] + clauses[k].opinion;
    t.span = Span{at, at + 1};
    t.polarity = clauses[k].polarity;
    t.opinion_spans = {Span{op, op + 1}};
    targets.push_back(std::move(t));
  }
  AnnotatedSentence s = make_sentence(ptb, conllu.str(), {}, id);
  if (gold_scopes) {
    for (auto& t : targets) {
      const auto scope = select_scope(s.tree, t.span, t.opinion_spans, ExclusionPolicy::standard());
      t.scope_bio = to_bio(scope.span, s.tokens.size());
    }
  }
  s.targets = std::move(targets);
  validate_sentence(s, 0);
  return s;
}

}  // namespace

Corpus make_toy_corpus(const ToyOptions& options) {
  if (options.min_targets < 1 || options.max_targets < options.min_targets || options.max_targets > kAspects.size())
    throw std::invalid_argument("toy corpus: invalid target range");
  std::mt19937_64 rng(options.seed);
  Corpus corpus;
  for (std::size_t i = 0; i < options.size; ++i) {
    const std::size_t k =
        std::uniform_int_distribution<std::size_t>(options.min_targets, options.max_targets)(rng);
    std::vector<std::string> aspects = kAspects;
    std::shuffle(aspects.begin(), aspects.end(), rng);

    // Mixed polarity: alternate from a random start, then shuffle, so every
    // sentence has both a positive and a negative target.
    std::vector<Polarity> polarities(k);
    const bool positive_first = std::uniform_int_distribution<int>(0, 1)(rng) == 1;
    for (std::size_t j = 0; j < k; ++j)
      polarities[j] = ((j % 2 == 0) == positive_first) ? Polarity::kPositive : Polarity::kNegative;
    std::shuffle(polarities.begin(), polarities.end(), rng);

    std::vector<Clause> clauses;
    for (std::size_t j = 0; j < k; ++j) {
      const int kind = std::uniform_int_distribution<int>(0, 3)(rng);
      const bool pos = polarities[j] == Polarity::kPositive;
      const auto& words = kind == 2 ? (pos ? kPositiveVerb : kNegativeVerb) : (pos ? kPositiveAdj : kNegativeAdj);
      clauses.push_back(make_clause(kind, aspects[j], choose(words, rng), polarities[j]));
    }
    std::vector<std::string> connectors;
    for (std::size_t j = 1; j < k; ++j) {
      static const std::vector<std::string> kConnectors = {"but", "and", ", but", ", and"};
      connectors.push_back(choose(kConnectors, rng));
    }
    const std::string punct = std::uniform_int_distribution<int>(0, 3)(rng) == 0 ? "!" : ".";
    std::ostringstream id;
    id << "toy-" << std::setw(4) << std::setfill('0') << i;
    corpus.push_back(assemble(clauses, connectors, punct, id.str(), options.gold_scopes));
  }
  return corpus;
}

std::vector<std::string> toy_vocabulary() {
  std::set<std::string> words;
  for (const auto* list : {&kAspects, &kPositiveAdj, &kNegativeAdj, &kPositiveVerb, &kNegativeVerb, &kFunctionWords})
    words.insert(list->begin(), list->end());
  return {words.begin(), words.end()};
}

std::vector<std::string> toy_lexicon() {
  std::set<std::string> words;
  for (const auto* list : {&kPositiveAdj, &kNegativeAdj, &kPositiveVerb, &kNegativeVerb})
    words.insert(list->begin(), list->end());
  return {words.begin(), words.end()};
}

void write_toy_embeddings(std::ostream& out, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  out << std::setprecision(6);
  for (const auto& w : toy_vocabulary()) {
    out << w;
    for (std::size_t d = 0; d < dim; ++d) out << ' ' << dist(rng);
    out << '\n';
  }
}

AnnotatedSentence example_sentence() {
  const std::string ptb =
      "(S (NP (JJ Great) (NN food)) (CC but) (S (NP (DT the) (NN service)) (VP (VBD was) (ADJP (JJ dreadful)))) (. !))";
  const std::string conllu =
      "1\tGreat\t_\tJJ\tJJ\t_\t2\tamod\t_\t_\n"
      "2\tfood\t_\tNN\tNN\t_\t0\troot\t_\t_\n"
      "3\tbut\t_\tCC\tCC\t_\t7\tcc\t_\t_\n"
      "4\tthe\t_\tDT\tDT\t_\t5\tdet\t_\t_\n"
      "5\tservice\t_\tNN\tNN\t_\t7\tnsubj\t_\t_\n"
      "6\twas\t_\tVBD\tVBD\t_\t7\tcop\t_\t_\n"
      "7\tdreadful\t_\tJJ\tJJ\t_\t2\tconj\t_\t_\n"
      "8\t!\t_\t.\t.\t_\t2\tpunct\t_\t_\n";
  TargetInstance food;
  food.span = Span{1, 2};
  food.polarity = Polarity::kPositive;
  TargetInstance service;
  service.span = Span{4, 5};
  service.polarity = Polarity::kNegative;
  return make_sentence(ptb, conllu, {food, service}, "great-food");
}

}  // namespace hgcn
