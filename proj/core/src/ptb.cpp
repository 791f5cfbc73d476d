#include <algorithm>
#include <array>
#include <cctype>
#include <functional>
#include <utility>

#include "hgcn/corpus.hpp"

namespace hgcn {

namespace {

constexpr std::array<std::pair<std::string_view, std::string_view>, 6> kEscapes{{
    {"-LRB-", "("},
    {"-RRB-", ")"},
    {"-LSB-", "["},
    {"-RSB-", "]"},
    {"-LCB-", "{"},
    {"-RCB-", "}"},
}};

std::string decode_word(std::string_view w) {
  for (const auto& [escaped, raw] : kEscapes) {
    if (w == escaped) return std::string(raw);
  }
  return std::string(w);
}

std::string encode_word(const std::string& w) {
  for (const auto& [escaped, raw] : kEscapes) {
    if (w == raw) return std::string(escaped);
  }
  if (w.empty() || std::any_of(w.begin(), w.end(), [](unsigned char c) { return c == '(' || c == ')' || std::isspace(c); })) {
    throw std::invalid_argument("to_ptb: word '" + w + "' cannot be written in bracketed form");
  }
  return w;
}

class PtbReader {
 public:
  explicit PtbReader(std::string_view text) : text_(text) {}

  ConstituencyTree read() {
    skip_space();
    if (pos_ >= text_.size()) throw ParseError("empty input", 0);
    if (text_[pos_] != '(') throw ParseError("expected '('", pos_);
    int root = read_node(0);
    skip_space();
    if (pos_ < text_.size()) {
      if (text_[pos_] == ')') throw ParseError("unbalanced parentheses: unexpected ')'", pos_);
      throw ParseError("trailing input after tree", pos_);
    }
    // "( (S ...) )" wraps the real tree in an unlabeled bracket.
    if (nodes_[root].label.empty() && nodes_[root].children.size() == 1 && !nodes_[nodes_[root].children[0]].terminal) {
      return ConstituencyTree(renumber(nodes_[root].children[0]), 0);
    }
    if (nodes_[root].label.empty()) throw ParseError("root bracket has no label", 0);
    return ConstituencyTree(std::move(nodes_), root);
  }

 private:
  int read_node(int depth) {
    const std::size_t open = pos_;
    ++pos_;  // '('
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(TreeNode{});
    nodes_[id].id = id;
    nodes_[id].depth = depth;
    skip_space();
    if (pos_ < text_.size() && text_[pos_] != '(' && text_[pos_] != ')') nodes_[id].label = read_atom();
    while (true) {
      skip_space();
      if (pos_ >= text_.size()) throw ParseError("unbalanced parentheses: missing ')'", text_.size());
      const char c = text_[pos_];
      if (c == ')') {
        ++pos_;
        break;
      }
      int child;
      if (c == '(') {
        child = read_node(depth + 1);
      } else {
        const std::size_t at = pos_;
        std::string word = read_atom();
        if (nodes_[id].label.empty()) throw ParseError("word outside a labeled bracket", at);
        child = static_cast<int>(nodes_.size());
        TreeNode leaf;
        leaf.id = child;
        leaf.label = decode_word(word);
        leaf.terminal = true;
        leaf.depth = depth + 1;
        nodes_.push_back(std::move(leaf));
      }
      nodes_[child].parent = id;
      nodes_[id].children.push_back(child);
    }
    if (nodes_[id].children.empty()) throw ParseError("empty constituent", open);
    return id;
  }

  std::string read_atom() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() && !std::isspace(static_cast<unsigned char>(text_[pos_])) && text_[pos_] != '(' &&
           text_[pos_] != ')') {
      ++pos_;
    }
    return std::string(text_.substr(start, pos_ - start));
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::vector<TreeNode> renumber(int new_root) {
    std::vector<TreeNode> out;
    std::function<int(int, int)> copy = [&](int old, int parent) {
      const int id = static_cast<int>(out.size());
      TreeNode n = nodes_[old];
      n.id = id;
      n.parent = parent;
      n.children.clear();
      out.push_back(std::move(n));
      for (int c : nodes_[old].children) {
        const int cid = copy(c, id);
        out[id].children.push_back(cid);
      }
      return id;
    };
    copy(new_root, -1);
    return out;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<TreeNode> nodes_;
};

void write_node(const ConstituencyTree& tree, int id, std::string& out) {
  const TreeNode& n = tree.node(id);
  if (n.terminal) {
    out += encode_word(n.label);
    return;
  }
  out += '(';
  out += n.label;
  for (int c : n.children) {
    out += ' ';
    write_node(tree, c, out);
  }
  out += ')';
}

}  // namespace

ParseError::ParseError(const std::string& what, std::size_t offset)
    : std::runtime_error("ptb parse error at offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

ConstituencyTree::ConstituencyTree(std::vector<TreeNode> nodes, int root) : nodes_(std::move(nodes)), root_(root) {
  // Recompute derived fields from the child lists so that every tree,
  // however it was built, satisfies the same invariants.
  std::function<void(int, int, int)> visit = [&](int id, int parent, int depth) {
    TreeNode& n = nodes_[id];
    n.parent = parent;
    n.depth = depth;
    if (n.terminal) {
      n.span = Span{leaf_of_word_.size(), leaf_of_word_.size() + 1};
      leaf_of_word_.push_back(id);
      return;
    }
    if (n.children.empty()) throw std::invalid_argument("constituency tree: non-terminal without children");
    for (int c : n.children) visit(c, id, depth + 1);
    n.span = Span{nodes_[n.children.front()].span.start, nodes_[n.children.back()].span.end};
  };
  visit(root_, -1, 0);
}

std::vector<std::string> ConstituencyTree::words() const {
  std::vector<std::string> out;
  out.reserve(leaf_of_word_.size());
  for (int id : leaf_of_word_) out.push_back(nodes_[id].label);
  return out;
}

bool ConstituencyTree::is_preterminal(int id) const {
  const TreeNode& n = node(id);
  return !n.terminal && n.children.size() == 1 && node(n.children[0]).terminal;
}

bool ConstituencyTree::is_constituent(int id) const {
  const TreeNode& n = node(id);
  if (n.terminal) return false;
  return id == root_ || !is_preterminal(id);
}

std::vector<int> ConstituencyTree::constituents() const {
  std::vector<int> out;
  for (const TreeNode& n : nodes_) {
    if (is_constituent(n.id)) out.push_back(n.id);
  }
  std::sort(out.begin(), out.end());
  return out;
}

ConstituencyTree parse_ptb(std::string_view text) { return PtbReader(text).read(); }

std::string to_ptb(const ConstituencyTree& tree) {
  std::string out;
  write_node(tree, tree.root(), out);
  return out;
}

}  // namespace hgcn
