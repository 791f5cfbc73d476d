#pragma once

#include <istream>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "hgcn/corpus.hpp"

namespace hgcn {

/// Node labels whose leaves do not count towards a constituent's size.
struct ExclusionPolicy {
  std::set<std::string> labels;

  /// Punctuation POS tags plus parentheticals (PRN). Adjunct labels are not
  /// excluded by default.
  static ExclusionPolicy standard();
  bool excludes(const std::string& label) const { return labels.count(label) > 0; }
};

struct ScopeSpan {
  Span span;
  int node = -1;
  std::size_t effective_count = 0;
};

/// Constituents whose leaf span contains the target and every opinion span,
/// in pre-order. Never empty: the root always qualifies.
std::vector<int> candidate_set(const ConstituencyTree& tree, Span target, std::span<const Span> opinions);

/// Leaves under `node` not governed by an excluded label. Labels from the
/// leaf's preterminal up to, but not including, `node` itself are consulted.
std::size_t effective_leaf_count(const ConstituencyTree& tree, int node, const ExclusionPolicy& policy);

/// The candidate with the fewest effective leaves. Ties go to the smaller raw
/// span, then the deeper node, then the leftmost.
ScopeSpan select_scope(const ConstituencyTree& tree, Span target, std::span<const Span> opinions,
                       const ExclusionPolicy& policy);

std::vector<Tag> to_bio(Span span, std::size_t n);
/// Chunks of a BIO sequence. An I that follows O opens a new chunk.
std::vector<Span> spans_of_bio(const std::vector<Tag>& tags);

// ---- rule-based pre-annotation ------------------------------------------

/// Opinion-word list, matched case-insensitively against single tokens.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(const std::vector<std::string>& words);
  static Lexicon read(std::istream& in);
  static Lexicon load(const std::string& path);

  bool contains(std::string_view token) const;
  std::size_t size() const { return words_.size(); }

 private:
  std::unordered_set<std::string> words_;
};

enum class Provenance { kAuto, kAutoWeak, kHuman };
std::string_view to_string(Provenance p);
Provenance parse_provenance(std::string_view s);

struct PreAnnotateOptions {
  ExclusionPolicy policy = ExclusionPolicy::standard();
  /// Use every lexicon hit inside the target's minimal clause instead of only
  /// the nearest hit.
  bool clause_hits = false;
};

struct PreAnnotation {
  std::vector<Tag> bio;
  ScopeSpan scope;
  std::vector<Span> opinions;
  Provenance provenance = Provenance::kAuto;
};

PreAnnotation pre_annotate_target(const AnnotatedSentence& sentence, std::size_t target, const Lexicon& lexicon,
                                  const PreAnnotateOptions& options = {});
std::vector<PreAnnotation> pre_annotate(const AnnotatedSentence& sentence, const Lexicon& lexicon,
                                        const PreAnnotateOptions& options = {});

struct AnnotationStats {
  std::size_t total = 0;
  std::size_t automatic = 0;  // auto + auto-weak
  std::size_t weak = 0;
  std::size_t human = 0;
  /// human / total; the fraction of proposals annotators changed.
  double adjustment_ratio() const { return total == 0 ? 0.0 : static_cast<double>(human) / static_cast<double>(total); }
};

/// Counts target provenance flags over a corpus (targets without a flag are
/// not counted).
AnnotationStats annotation_stats(const Corpus& corpus);

}  // namespace hgcn
