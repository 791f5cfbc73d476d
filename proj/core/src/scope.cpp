#include "hgcn/scope.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <stdexcept>
#include <tuple>

namespace hgcn {

namespace {

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

void check_bounds(const ConstituencyTree& tree, Span s, const char* what) {
  if (s.empty() || s.end > tree.word_count()) {
    throw std::out_of_range(std::string(what) + " span [" + std::to_string(s.start) + ", " + std::to_string(s.end) +
                            ") outside sentence of " + std::to_string(tree.word_count()) + " tokens");
  }
}

const std::set<std::string> kClauseLabels{"S", "SBAR", "SINV", "SQ", "SBARQ"};

std::size_t token_distance(std::size_t token, Span target) {
  if (token < target.start) return target.start - token;
  if (token >= target.end) return token - (target.end - 1);
  return 0;
}

}  // namespace

ExclusionPolicy ExclusionPolicy::standard() {
  return ExclusionPolicy{{".", ",", ":", "''", "``", "-LRB-", "-RRB-", "PRN"}};
}

std::vector<int> candidate_set(const ConstituencyTree& tree, Span target, std::span<const Span> opinions) {
  check_bounds(tree, target, "target");
  for (const Span& o : opinions) check_bounds(tree, o, "opinion");
  std::vector<int> out;
  for (int id : tree.constituents()) {
    const Span& s = tree.node(id).span;
    if (!s.contains(target)) continue;
    if (std::all_of(opinions.begin(), opinions.end(), [&](const Span& o) { return s.contains(o); })) out.push_back(id);
  }
  return out;
}

std::size_t effective_leaf_count(const ConstituencyTree& tree, int node, const ExclusionPolicy& policy) {
  const Span span = tree.node(node).span;
  std::size_t count = 0;
  for (std::size_t w = span.start; w < span.end; ++w) {
    bool excluded = false;
    for (int cur = tree.node(tree.leaf_of_word(w)).parent; cur != node && cur >= 0; cur = tree.node(cur).parent) {
      if (policy.excludes(tree.node(cur).label)) {
        excluded = true;
        break;
      }
    }
    if (!excluded) ++count;
  }
  return count;
}

ScopeSpan select_scope(const ConstituencyTree& tree, Span target, std::span<const Span> opinions,
                       const ExclusionPolicy& policy) {
  const auto candidates = candidate_set(tree, target, opinions);
  ScopeSpan best;
  auto key = [&](int id, std::size_t count) {
    const TreeNode& n = tree.node(id);
    return std::make_tuple(count, n.span.length(), -n.depth, n.span.start, id);
  };
  bool first = true;
  for (int id : candidates) {
    const std::size_t count = effective_leaf_count(tree, id, policy);
    if (first || key(id, count) < key(best.node, best.effective_count)) {
      best = ScopeSpan{tree.node(id).span, id, count};
      first = false;
    }
  }
  return best;
}

std::vector<Tag> to_bio(Span span, std::size_t n) {
  if (span.empty()) throw std::invalid_argument("to_bio: empty span");
  if (span.end > n) throw std::out_of_range("to_bio: span exceeds sentence length");
  std::vector<Tag> tags(n, Tag::kO);
  tags[span.start] = Tag::kB;
  for (std::size_t i = span.start + 1; i < span.end; ++i) tags[i] = Tag::kI;
  return tags;
}

std::vector<Span> spans_of_bio(const std::vector<Tag>& tags) {
  std::vector<Span> out;
  std::size_t i = 0;
  while (i < tags.size()) {
    if (tags[i] == Tag::kO) {
      ++i;
      continue;
    }
    const std::size_t start = i++;
    while (i < tags.size() && tags[i] == Tag::kI) ++i;
    out.push_back(Span{start, i});
  }
  return out;
}

Lexicon::Lexicon(const std::vector<std::string>& words) {
  for (const auto& w : words) words_.insert(lowercase(w));
}

Lexicon Lexicon::read(std::istream& in) {
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    const auto a = line.find_first_not_of(" \t\r");
    if (a == std::string::npos || line[a] == '#') continue;
    const auto b = line.find_last_not_of(" \t\r");
    words.push_back(line.substr(a, b - a + 1));
  }
  return Lexicon(words);
}

Lexicon Lexicon::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open lexicon file '" + path + "'");
  return read(in);
}

bool Lexicon::contains(std::string_view token) const { return words_.count(lowercase(token)) > 0; }

std::string_view to_string(Provenance p) {
  switch (p) {
    case Provenance::kAuto: return "auto";
    case Provenance::kAutoWeak: return "auto-weak";
    case Provenance::kHuman: return "human";
  }
  return "auto";
}

Provenance parse_provenance(std::string_view s) {
  if (s == "auto") return Provenance::kAuto;
  if (s == "auto-weak") return Provenance::kAutoWeak;
  if (s == "human") return Provenance::kHuman;
  throw std::invalid_argument("unknown provenance '" + std::string(s) + "'");
}

PreAnnotation pre_annotate_target(const AnnotatedSentence& sentence, std::size_t target, const Lexicon& lexicon,
                                  const PreAnnotateOptions& options) {
  const Span t = sentence.targets.at(target).span;
  const ConstituencyTree& tree = sentence.tree;
  std::vector<std::size_t> hits;
  for (std::size_t i = 0; i < sentence.tokens.size(); ++i) {
    if (i >= t.start && i < t.end) continue;
    if (lexicon.contains(sentence.tokens[i])) hits.push_back(i);
  }

  PreAnnotation out;
  if (options.clause_hits && !hits.empty()) {
    Span clause = tree.node(tree.root()).span;
    std::size_t best_len = std::numeric_limits<std::size_t>::max();
    for (int id : tree.constituents()) {
      const TreeNode& n = tree.node(id);
      if (kClauseLabels.count(n.label) && n.span.contains(t) && n.span.length() < best_len) {
        clause = n.span;
        best_len = n.span.length();
      }
    }
    for (std::size_t h : hits) {
      if (h >= clause.start && h < clause.end) out.opinions.push_back(Span{h, h + 1});
    }
  }
  if (out.opinions.empty() && !hits.empty()) {
    std::size_t best = hits.front();
    for (std::size_t h : hits) {
      if (token_distance(h, t) < token_distance(best, t)) best = h;
    }
    out.opinions.push_back(Span{best, best + 1});
  }
  out.provenance = out.opinions.empty() ? Provenance::kAutoWeak : Provenance::kAuto;
  out.scope = select_scope(tree, t, out.opinions, options.policy);
  out.bio = to_bio(out.scope.span, sentence.tokens.size());
  return out;
}

std::vector<PreAnnotation> pre_annotate(const AnnotatedSentence& sentence, const Lexicon& lexicon,
                                        const PreAnnotateOptions& options) {
  std::vector<PreAnnotation> out;
  for (std::size_t k = 0; k < sentence.targets.size(); ++k) {
    out.push_back(pre_annotate_target(sentence, k, lexicon, options));
  }
  return out;
}

AnnotationStats annotation_stats(const Corpus& corpus) {
  AnnotationStats stats;
  for (const auto& s : corpus) {
    for (const auto& t : s.targets) {
      if (!t.provenance) continue;
      ++stats.total;
      switch (parse_provenance(*t.provenance)) {
        case Provenance::kAuto: ++stats.automatic; break;
        case Provenance::kAutoWeak:
          ++stats.automatic;
          ++stats.weak;
          break;
        case Provenance::kHuman: ++stats.human; break;
      }
    }
  }
  return stats;
}

}  // namespace hgcn
