//
// Copyright 2026 The dppml Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//

// Privacy distance kappa of a pair graph: the number of edges a worst-case
// attacker must be missing so that no target relation can be inferred from
// prior knowledge alone.

#ifndef DPPML_KAPPA_HPP_
#define DPPML_KAPPA_HPP_

#include <algorithm>
#include <deque>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dppml/common.hpp"
#include "dppml/pairgraph.hpp"

namespace dppml {

enum class KappaMethod { kExact, kUpperBound, kIntransitive, kNodeDp };

inline std::string_view KappaMethodName(KappaMethod m) {
  switch (m) {
    case KappaMethod::kExact: return "exact";
    case KappaMethod::kUpperBound: return "upper_bound";
    case KappaMethod::kIntransitive: return "intransitive";
    case KappaMethod::kNodeDp: return "node_dp";
  }
  return "unknown";
}

struct PairTerm {
  std::string s;
  std::string t;
  int paths = 0;    // |P_st| (or 1/0 adjacency for the intransitive variant)
  int cycle_s = 0;  // c_s
  int cycle_t = 0;  // c_t
  int term = 0;
};

struct KappaReport {
  int kappa = 0;
  KappaMethod method = KappaMethod::kExact;
  std::optional<std::pair<std::string, std::string>> witness_pair;
  std::optional<std::string> witness_node;
  std::vector<PairTerm> per_pair_terms;  // filled on request only
};

struct KappaOptions {
  int exact_limit = 64;  // max |V| accepted by the exhaustive pair loop
  bool collect_terms = false;
};

struct EdgeDisjointPaths {
  int count = 0;
  std::vector<std::vector<int>> paths;  // node index sequences s .. t
  std::vector<int> edge_ids;            // union of path edges
};

// Maximum set of pairwise edge-disjoint s-t paths: unit-capacity max flow
// with BFS augmentation (neighbours visited in index order), then a flow
// decomposition that always follows the lowest-index outgoing flow edge.
// Flow cycles met during decomposition are discarded, so every returned path
// is simple.
inline EdgeDisjointPaths MaxEdgeDisjointPaths(const PairGraph& g, int s, int t) {
  g.CheckNode(s);
  g.CheckNode(t);
  if (s == t) throw Error(ErrorCode::kSameNode, g.node_name(s));

  const int n = g.num_nodes();
  const auto& edges = g.edges();
  // flow[e] in {-1, 0, 1}: +1 means one unit from edges[e].u to edges[e].v.
  std::vector<int> flow(edges.size(), 0);
  auto residual = [&](int from, int e) {
    return edges[e].u == from ? 1 - flow[e] : 1 + flow[e];
  };

  EdgeDisjointPaths result;
  std::vector<int> parent_edge(n);
  std::vector<int> parent_node(n);
  while (true) {
    std::fill(parent_edge.begin(), parent_edge.end(), -1);
    std::deque<int> queue{s};
    parent_edge[s] = -2;
    while (!queue.empty() && parent_edge[t] == -1) {
      const int u = queue.front();
      queue.pop_front();
      for (const auto& arc : g.neighbors(u)) {
        if (parent_edge[arc.to] != -1 || residual(u, arc.edge) <= 0) continue;
        parent_edge[arc.to] = arc.edge;
        parent_node[arc.to] = u;
        queue.push_back(arc.to);
      }
    }
    if (parent_edge[t] == -1) break;
    for (int v = t; v != s; v = parent_node[v]) {
      const int e = parent_edge[v];
      flow[e] += edges[e].u == parent_node[v] ? 1 : -1;
    }
    ++result.count;
  }

  std::vector<char> used(edges.size(), 0);
  auto carries_out = [&](int from, int e) {
    return !used[e] && flow[e] != 0 &&
           ((edges[e].u == from && flow[e] > 0) ||
            (edges[e].v == from && flow[e] < 0));
  };
  for (int p = 0; p < result.count; ++p) {
    std::vector<int> nodes{s};
    std::vector<int> path_edges;
    std::vector<int> position(n, -1);
    position[s] = 0;
    int u = s;
    while (u != t) {
      int next_edge = -1;
      int next_node = -1;
      for (const auto& arc : g.neighbors(u)) {
        if (carries_out(u, arc.edge)) {
          next_edge = arc.edge;
          next_node = arc.to;
          break;
        }
      }
      // Flow conservation guarantees an outgoing unit at every inner node.
      used[next_edge] = 1;
      if (position[next_node] != -1) {
        // Drop the cycle nodes[position..] -> next_node.
        const int keep = position[next_node];
        for (size_t k = keep + 1; k < nodes.size(); ++k) position[nodes[k]] = -1;
        nodes.resize(keep + 1);
        path_edges.resize(keep);
      } else {
        position[next_node] = static_cast<int>(nodes.size());
        nodes.push_back(next_node);
        path_edges.push_back(next_edge);
      }
      u = nodes.back();
    }
    result.edge_ids.insert(result.edge_ids.end(), path_edges.begin(),
                           path_edges.end());
    result.paths.push_back(std::move(nodes));
  }
  std::sort(result.edge_ids.begin(), result.edge_ids.end());
  return result;
}

inline EdgeDisjointPaths MaxEdgeDisjointPaths(const PairGraph& g,
                                              const std::string& s,
                                              const std::string& t) {
  return MaxEdgeDisjointPaths(g, g.IndexOf(s), g.IndexOf(t));
}

namespace internal {

// c_s on g with masked edges treated as absent. Every cycle through s lies in
// one block of the graph, and within a block with k edges at s the cheapest
// way to leave s on no cycle costs k - 1 (keeping j >= 1 edges forces a cut of
// at least j - 1 edges in the connected block minus s). Summing over blocks:
// c_s = deg(s) - #blocks at s, and the blocks at s correspond one-to-one to
// the components of (g - s) that contain a neighbour of s.
inline int CycleIsolationCountMasked(const PairGraph& g, int s,
                                     std::span<const char> edge_mask) {
  std::vector<int> label;
  internal::LabelComponents(g, label, s, edge_mask);
  std::vector<int> seen;
  int degree = 0;
  for (const auto& arc : g.neighbors(s)) {
    if (!edge_mask.empty() && edge_mask[arc.edge]) continue;
    ++degree;
    seen.push_back(label[arc.to]);
  }
  std::sort(seen.begin(), seen.end());
  const int blocks =
      static_cast<int>(std::unique(seen.begin(), seen.end()) - seen.begin());
  return degree - blocks;
}

struct BestTerm {
  int value = -1;
  int s = -1;
  int t = -1;
};

inline void Consider(BestTerm& best, int value, int s, int t) {
  // Strictly greater keeps the first pair in (s, t) index order on ties.
  if (value > best.value) best = {value, s, t};
}

inline void CheckExactSize(const PairGraph& g, const KappaOptions& options) {
  if (g.num_nodes() > options.exact_limit) {
    throw Error(ErrorCode::kGraphTooLarge,
                std::to_string(g.num_nodes()) + " nodes exceed the exact limit " +
                    std::to_string(options.exact_limit) +
                    "; use the upper bound instead");
  }
}

}  // namespace internal

// Minimum number of edges whose deletion leaves `s` on no cycle.
inline int CycleIsolationCount(const PairGraph& g, int s) {
  g.CheckNode(s);
  return internal::CycleIsolationCountMasked(g, s, {});
}

inline int CycleIsolationCount(const PairGraph& g, const std::string& s) {
  return CycleIsolationCount(g, g.IndexOf(s));
}

// kappa = max over pairs of |P_st| + min(c_s, c_t), with c_s and c_t taken on
// the graph minus one deterministic maximum path set.
inline KappaReport KappaExact(const PairGraph& g,
                              const KappaOptions& options = {}) {
  internal::CheckExactSize(g, options);
  KappaReport report;
  report.method = KappaMethod::kExact;
  internal::BestTerm best;
  std::vector<char> mask(g.num_edges(), 0);
  for (int s = 0; s < g.num_nodes(); ++s) {
    for (int t = s + 1; t < g.num_nodes(); ++t) {
      const EdgeDisjointPaths paths = MaxEdgeDisjointPaths(g, s, t);
      for (int e : paths.edge_ids) mask[e] = 1;
      const int cs = internal::CycleIsolationCountMasked(g, s, mask);
      const int ct = internal::CycleIsolationCountMasked(g, t, mask);
      for (int e : paths.edge_ids) mask[e] = 0;
      const int term = paths.count + std::min(cs, ct);
      internal::Consider(best, term, s, t);
      if (options.collect_terms) {
        report.per_pair_terms.push_back(
            {g.node_name(s), g.node_name(t), paths.count, cs, ct, term});
      }
    }
  }
  if (best.s >= 0) {
    report.kappa = best.value;
    report.witness_pair = {g.node_name(best.s), g.node_name(best.t)};
  }
  return report;
}

// kappa' = max over s of De(s) - Co+(s); an upper bound on KappaExact computed
// in O(|V| (|V| + |E|)).
inline KappaReport KappaUpper(const PairGraph& g) {
  KappaReport report;
  report.method = KappaMethod::kUpperBound;
  int best = -1;
  std::vector<int> label;
  const int before = internal::LabelComponents(g, label);
  for (int s = 0; s < g.num_nodes(); ++s) {
    const int after = internal::LabelComponents(g, label, s);
    const int value = Degree(g, s) - std::max(0, after - before);
    if (value > best) {
      best = value;
      report.witness_node = g.node_name(s);
    }
  }
  report.kappa = std::max(best, 0);
  return report;
}

// Variant for relations that do not compose along paths: only the feature
// (cycle) correlation counts. Adjacent pairs contribute 1 + min(c_s, c_t) on
// g minus the (s,t) edge; non-adjacent pairs contribute min(c_s, c_t) on g.
inline KappaReport KappaIntransitive(const PairGraph& g,
                                     const KappaOptions& options = {}) {
  if (g.relation_kind() != RelationKind::kIntransitive) {
    throw Error(ErrorCode::kInvalidArgument,
                "intransitive kappa requested for a transitive graph");
  }
  internal::CheckExactSize(g, options);
  KappaReport report;
  report.method = KappaMethod::kIntransitive;
  internal::BestTerm best;
  const int n = g.num_nodes();
  std::vector<int> plain(n);
  for (int v = 0; v < n; ++v) {
    plain[v] = internal::CycleIsolationCountMasked(g, v, {});
  }
  std::vector<char> mask(g.num_edges(), 0);
  for (int s = 0; s < n; ++s) {
    for (int t = s + 1; t < n; ++t) {
      int adjacent = 0;
      int cs = plain[s];
      int ct = plain[t];
      if (auto e = g.EdgeBetween(s, t)) {
        adjacent = 1;
        mask[*e] = 1;
        cs = internal::CycleIsolationCountMasked(g, s, mask);
        ct = internal::CycleIsolationCountMasked(g, t, mask);
        mask[*e] = 0;
      }
      const int term = adjacent + std::min(cs, ct);
      internal::Consider(best, term, s, t);
      if (options.collect_terms) {
        report.per_pair_terms.push_back(
            {g.node_name(s), g.node_name(t), adjacent, cs, ct, term});
      }
    }
  }
  if (best.s >= 0) {
    report.kappa = best.value;
    report.witness_pair = {g.node_name(best.s), g.node_name(best.t)};
  }
  return report;
}

// Upper bound for the intransitive variant. Non-adjacent pairs obey
// min(c_s, c_t) <= De(s) - Co+(s) - 1, adjacent pairs add one edge on top of
// the same bound, so the larger case is De(s) - Co+(s) over non-isolated s.
inline KappaReport KappaIntransitiveUpper(const PairGraph& g) {
  return KappaUpper(g);
}

// Node-level privacy hides every edge of a node: kappa = max degree.
inline KappaReport KappaNodeDp(const PairGraph& g) {
  KappaReport report;
  report.method = KappaMethod::kNodeDp;
  int best = -1;
  for (int s = 0; s < g.num_nodes(); ++s) {
    if (Degree(g, s) > best) {
      best = Degree(g, s);
      report.witness_node = g.node_name(s);
    }
  }
  report.kappa = std::max(best, 0);
  return report;
}

enum class KappaChoice { kAuto, kExact, kUpper, kNodeDp };

// Picks the variant for the graph's relation kind. kAuto uses the exhaustive
// computation up to the size limit and the upper bound above it.
inline KappaReport ComputeKappa(const PairGraph& g, KappaChoice choice,
                                const KappaOptions& options = {}) {
  const bool intransitive = g.relation_kind() == RelationKind::kIntransitive;
  if (choice == KappaChoice::kAuto) {
    choice = g.num_nodes() <= options.exact_limit ? KappaChoice::kExact
                                                   : KappaChoice::kUpper;
  }
  switch (choice) {
    case KappaChoice::kExact:
      return intransitive ? KappaIntransitive(g, options) : KappaExact(g, options);
    case KappaChoice::kUpper:
      return intransitive ? KappaIntransitiveUpper(g) : KappaUpper(g);
    case KappaChoice::kNodeDp:
      return KappaNodeDp(g);
    case KappaChoice::kAuto:
      break;
  }
  return KappaUpper(g);
}

}  // namespace dppml

#endif  // DPPML_KAPPA_HPP_
