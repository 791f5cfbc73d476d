#pragma once

// Brute-force scope selection over the generator's own node structure.

#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "hgcn/corpus.hpp"
#include "support/random_tree.hpp"

namespace testing_support {

struct OracleScope {
  int node;
  std::size_t start, end, count;
};

inline bool covers(const GenNode& n, std::size_t s, std::size_t e) { return n.start <= s && e <= n.end; }

// Terminals below node, skipping those under an excluded label strictly below it.
inline std::size_t oracle_count(const GenTree& t, int node, const std::set<std::string>& excluded) {
  std::size_t count = 0;
  std::vector<std::pair<int, bool>> stack{{node, false}};
  while (!stack.empty()) {
    auto [id, hidden] = stack.back();
    stack.pop_back();
    const auto& n = t.nodes[id];
    if (n.terminal) {
      count += hidden ? 0 : 1;
      continue;
    }
    const bool h = hidden || (id != node && excluded.count(n.label) > 0);
    for (int c : n.children) stack.push_back({c, h});
  }
  return count;
}

inline OracleScope oracle_scope(const GenTree& t, std::size_t ts, std::size_t te, const std::vector<hgcn::Span>& opinions,
                                const std::set<std::string>& excluded) {
  std::optional<std::tuple<std::size_t, std::size_t, int, std::size_t, int>> best;
  for (int id : constituent_ids(t)) {
    const auto& n = t.nodes[id];
    if (!covers(n, ts, te)) continue;
    bool ok = true;
    for (const auto& o : opinions) ok = ok && covers(n, o.start, o.end);
    if (!ok) continue;
    auto key = std::make_tuple(oracle_count(t, id, excluded), n.end - n.start, -n.depth, n.start, id);
    if (!best || key < *best) best = key;
  }
  const int id = std::get<4>(*best);
  return {id, t.nodes[id].start, t.nodes[id].end, std::get<0>(*best)};
}

}  // namespace testing_support
