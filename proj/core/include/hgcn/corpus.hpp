#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hgcn {

/// Half-open token range [start, end).
struct Span {
  std::size_t start = 0;
  std::size_t end = 0;

  std::size_t length() const { return end - start; }
  bool empty() const { return end <= start; }
  bool contains(const Span& other) const { return start <= other.start && other.end <= end; }
  friend bool operator==(const Span&, const Span&) = default;
};

enum class Polarity { kPositive = 0, kNeutral = 1, kNegative = 2 };
inline constexpr std::size_t kNumPolarities = 3;

std::string_view to_string(Polarity p);
Polarity parse_polarity(std::string_view s);

enum class Tag { kB = 0, kI = 1, kO = 2 };
inline constexpr std::size_t kNumTags = 3;

std::string_view to_string(Tag t);
Tag parse_tag(std::string_view s);

// ---- constituency ---------------------------------------------------------

struct TreeNode {
  int id = -1;
  std::string label;  // constituent / POS label, or the word for terminals
  std::vector<int> children;
  int parent = -1;
  Span span;
  bool terminal = false;
  int depth = 0;
};

/// Ordered phrase-structure tree. Node ids are assigned in pre-order, so a
/// parent always has a smaller id than its descendants.
class ConstituencyTree {
 public:
  ConstituencyTree() = default;
  ConstituencyTree(std::vector<TreeNode> nodes, int root);

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const TreeNode& node(int id) const { return nodes_.at(static_cast<std::size_t>(id)); }
  int root() const { return root_; }
  std::size_t size() const { return nodes_.size(); }

  /// Leaf words left to right.
  std::vector<std::string> words() const;
  std::size_t word_count() const { return leaf_of_word_.size(); }
  int leaf_of_word(std::size_t word) const { return leaf_of_word_.at(word); }

  /// A non-terminal with exactly one child, which is a terminal.
  bool is_preterminal(int id) const;
  /// Non-terminal above the part-of-speech level. The root always counts, even
  /// for a single-word tree whose root is itself a preterminal.
  bool is_constituent(int id) const;
  /// Constituent node ids in pre-order.
  std::vector<int> constituents() const;

 private:
  std::vector<TreeNode> nodes_;
  int root_ = -1;
  std::vector<int> leaf_of_word_;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Parses a Penn-Treebank bracketed tree. Bracket escapes in words
/// (-LRB-, -RRB-, -LSB-, -RSB-, -LCB-, -RCB-) are decoded.
ConstituencyTree parse_ptb(std::string_view text);
/// Inverse of parse_ptb (words are re-escaped).
std::string to_ptb(const ConstituencyTree& tree);

// ---- dependency -----------------------------------------------------------

inline constexpr int kRootHead = -1;

struct DependencyEdge {
  int head = kRootHead;  // 0-based token index, or kRootHead
  int dependent = 0;
  std::string relation;
};

/// One edge per token, indexed by dependent.
struct DependencyGraph {
  std::vector<DependencyEdge> edges;

  std::size_t size() const { return edges.size(); }
  int root() const;
};

class ConlluError : public std::runtime_error {
 public:
  ConlluError(const std::string& what, std::size_t line);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Reads one CoNLL-U sentence block. Comment lines, multi-word token ranges
/// (1-2) and empty nodes (1.1) are skipped. Columns may be tab or whitespace
/// separated. Errors carry the 1-based line number within the block.
DependencyGraph parse_conllu(std::string_view block, std::vector<std::string>* forms = nullptr);
std::string to_conllu(const DependencyGraph& graph, const std::vector<std::string>& forms);

// ---- dataset --------------------------------------------------------------

struct TargetInstance {
  Span span;  // stored half-open; the file format uses inclusive [i, j]
  Polarity polarity = Polarity::kNeutral;
  std::optional<std::vector<Tag>> scope_bio;
  std::vector<Span> opinion_spans;
  std::optional<std::string> provenance;
};

struct AnnotatedSentence {
  std::string id;
  std::vector<std::string> tokens;
  ConstituencyTree tree;
  DependencyGraph dependencies;
  std::vector<TargetInstance> targets;
  // Original text of the parses, kept so files round-trip untouched.
  std::string ptb;
  std::string conllu;
};

using Corpus = std::vector<AnnotatedSentence>;

class DatasetError : public std::runtime_error {
 public:
  DatasetError(const std::string& what, std::size_t record, std::string field);
  std::size_t record() const { return record_; }
  const std::string& field() const { return field_; }

 private:
  std::size_t record_;
  std::string field_;
};

/// Validates BIO well-formedness: no I directly after O or at position 0.
/// Returns the violated rule, or an empty string when valid.
std::string bio_violation(const std::vector<Tag>& tags);

/// Checks every cross-structure invariant of a sentence; throws DatasetError.
void validate_sentence(const AnnotatedSentence& sentence, std::size_t record);

/// Parses dataset text: a JSON array of sentence objects, or one object per
/// line. Empty input yields an empty corpus.
Corpus parse_dataset(std::string_view text);
Corpus load_dataset(const std::string& path);
std::string serialize_dataset(const Corpus& corpus);
void save_dataset(const Corpus& corpus, const std::string& path);

/// One record as a compact JSON object, in the dataset file layout.
std::string sentence_to_json(const AnnotatedSentence& sentence);
AnnotatedSentence sentence_from_json(std::string_view text);

/// Builds a full sentence record from tokens and the two parses.
AnnotatedSentence make_sentence(std::string ptb, std::string conllu, std::vector<TargetInstance> targets,
                                std::string id = {});

}  // namespace hgcn
