#include <charconv>
#include <sstream>

#include "hgcn/corpus.hpp"

namespace hgcn {

namespace {

std::vector<std::string_view> split_columns(std::string_view line) {
  std::vector<std::string_view> cols;
  const bool tabbed = line.find('\t') != std::string_view::npos;
  std::size_t i = 0;
  while (i <= line.size()) {
    if (tabbed) {
      const std::size_t next = line.find('\t', i);
      const std::size_t end = next == std::string_view::npos ? line.size() : next;
      cols.push_back(line.substr(i, end - i));
      if (next == std::string_view::npos) break;
      i = next + 1;
    } else {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\r')) ++i;
      if (i >= line.size()) break;
      std::size_t end = i;
      while (end < line.size() && line[end] != ' ' && line[end] != '\r') ++end;
      cols.push_back(line.substr(i, end - i));
      i = end;
    }
  }
  if (tabbed && !cols.empty() && !cols.back().empty() && cols.back().back() == '\r') {
    cols.back().remove_suffix(1);
  }
  return cols;
}

bool parse_int(std::string_view s, int& out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool blank(std::string_view line) {
  return line.find_first_not_of(" \t\r") == std::string_view::npos;
}

}  // namespace

ConlluError::ConlluError(const std::string& what, std::size_t line)
    : std::runtime_error("conllu error at line " + std::to_string(line) + ": " + what), line_(line) {}

int DependencyGraph::root() const {
  for (const auto& e : edges) {
    if (e.head == kRootHead) return e.dependent;
  }
  return -1;
}

DependencyGraph parse_conllu(std::string_view block, std::vector<std::string>* forms) {
  struct Row {
    int head;
    std::string relation;
    std::size_t line;
  };
  std::vector<Row> rows;
  std::vector<std::string> words;
  std::size_t line_no = 0;
  std::size_t last_line = 0;
  std::size_t start = 0;
  while (start <= block.size()) {
    const std::size_t nl = block.find('\n', start);
    const std::size_t end = nl == std::string_view::npos ? block.size() : nl;
    std::string_view line = block.substr(start, end - start);
    ++line_no;
    start = end + 1;
    if (nl == std::string_view::npos) start = block.size() + 1;

    if (blank(line) || line.front() == '#') continue;
    auto cols = split_columns(line);
    if (cols.size() < 8) {
      throw ConlluError("expected at least 8 columns, found " + std::to_string(cols.size()), line_no);
    }
    const std::string_view id_col = cols[0];
    if (id_col.find('-') != std::string_view::npos || id_col.find('.') != std::string_view::npos) continue;
    int id = 0;
    if (!parse_int(id_col, id) || id < 1) throw ConlluError("malformed token id '" + std::string(id_col) + "'", line_no);
    const int expected = static_cast<int>(rows.size()) + 1;
    if (id < expected) throw ConlluError("duplicate token id " + std::to_string(id), line_no);
    if (id > expected) {
      throw ConlluError("non-contiguous token id " + std::to_string(id) + " (expected " + std::to_string(expected) + ")",
                        line_no);
    }
    int head = 0;
    if (!parse_int(cols[6], head)) throw ConlluError("malformed HEAD '" + std::string(cols[6]) + "'", line_no);
    if (head < 0) throw ConlluError("negative HEAD " + std::to_string(head), line_no);
    if (head == id) throw ConlluError("token " + std::to_string(id) + " is its own head", line_no);
    if (cols[7].empty() || cols[7] == "_") throw ConlluError("missing DEPREL", line_no);
    rows.push_back(Row{head, std::string(cols[7]), line_no});
    words.emplace_back(cols[1]);
    last_line = line_no;
  }
  if (rows.empty()) throw ConlluError("no token lines", line_no);

  const int n = static_cast<int>(rows.size());
  DependencyGraph graph;
  int root_line = -1;
  for (int i = 0; i < n; ++i) {
    const Row& r = rows[i];
    if (r.head > n) {
      throw ConlluError("HEAD " + std::to_string(r.head) + " out of range for " + std::to_string(n) + " tokens", r.line);
    }
    if (r.head == 0) {
      if (root_line >= 0) throw ConlluError("multiple ROOT tokens", r.line);
      root_line = static_cast<int>(r.line);
    }
    graph.edges.push_back(DependencyEdge{r.head == 0 ? kRootHead : r.head - 1, i, r.relation});
  }
  if (root_line < 0) throw ConlluError("missing ROOT (no token with HEAD 0)", last_line);

  // Every token must reach the root.
  for (int i = 0; i < n; ++i) {
    int cur = i;
    for (int steps = 0; cur != kRootHead; ++steps) {
      if (steps > n) throw ConlluError("cycle through token " + std::to_string(i + 1), rows[i].line);
      cur = graph.edges[cur].head;
    }
  }
  if (forms) *forms = std::move(words);
  return graph;
}

std::string to_conllu(const DependencyGraph& graph, const std::vector<std::string>& forms) {
  std::ostringstream out;
  for (std::size_t i = 0; i < graph.edges.size(); ++i) {
    const auto& e = graph.edges[i];
    out << (i + 1) << '\t' << (i < forms.size() ? forms[i] : "_") << "\t_\t_\t_\t_\t" << (e.head + 1) << '\t'
        << e.relation << "\t_\t_\n";
  }
  return out.str();
}

}  // namespace hgcn
