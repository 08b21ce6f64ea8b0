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

#ifndef DPPML_PAIRGRAPH_HPP_
#define DPPML_PAIRGRAPH_HPP_

#include <algorithm>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dppml/common.hpp"

namespace dppml {

// One labelled pair: feature difference x_i - x_j and y = 0 (same class) or
// y = 1 (different class).
struct PairwiseDatum {
  std::string i;
  std::string j;
  std::vector<double> delta_x;
  int y = 0;
};

enum class RelationKind { kTransitive, kIntransitive };

// Undirected simple graph whose edges carry pairwise data. Node ids are
// mapped to dense indices in order of first appearance, which fixes every
// traversal order below. Instances are immutable; RemoveEdges returns a copy.
class PairGraph {
 public:
  struct Edge {
    int u;  // u < v
    int v;
    int datum;
  };
  struct Arc {
    int to;
    int edge;
  };

  PairGraph() : data_(std::make_shared<std::vector<PairwiseDatum>>()) {}

  static PairGraph Build(std::span<const PairwiseDatum> pairs,
                         RelationKind kind = RelationKind::kTransitive,
                         std::span<const std::string> extra_nodes = {}) {
    PairGraph g;
    g.kind_ = kind;
    g.AddPairs(pairs);
    for (const std::string& name : extra_nodes) g.Intern(name);
    g.RebuildAdjacency();
    return g;
  }

  // Structural graph on nodes "0".."n-1" (index == id) with empty payloads.
  static PairGraph FromEdges(int num_nodes,
                             std::span<const std::pair<int, int>> edges,
                             RelationKind kind = RelationKind::kTransitive) {
    PairGraph g;
    g.kind_ = kind;
    for (int i = 0; i < num_nodes; ++i) g.Intern(std::to_string(i));
    std::vector<PairwiseDatum> pairs;
    pairs.reserve(edges.size());
    for (auto [u, v] : edges) {
      if (u < 0 || v < 0 || u >= num_nodes || v >= num_nodes) {
        throw Error(ErrorCode::kUnknownNode,
                    "edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
      }
      pairs.push_back({std::to_string(u), std::to_string(v), {}, 0});
    }
    g.AddPairs(pairs);
    g.RebuildAdjacency();
    return g;
  }

  int num_nodes() const { return static_cast<int>(names_.size()); }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  size_t dimension() const { return dimension_; }
  RelationKind relation_kind() const { return kind_; }

  const std::string& node_name(int index) const { return names_.at(index); }
  const std::vector<std::string>& node_names() const { return names_; }

  std::optional<int> Find(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int IndexOf(const std::string& name) const {
    auto found = Find(name);
    if (!found) throw Error(ErrorCode::kUnknownNode, name);
    return *found;
  }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(int id) const { return edges_.at(id); }
  const PairwiseDatum& datum(int edge_id) const {
    return (*data_)[edges_.at(edge_id).datum];
  }

  // Incident arcs sorted by neighbour index.
  std::span<const Arc> neighbors(int node) const {
    CheckNode(node);
    return adjacency_[node];
  }

  std::optional<int> EdgeBetween(int a, int b) const {
    for (const Arc& arc : neighbors(a)) {
      if (arc.to == b) return arc.edge;
    }
    return std::nullopt;
  }

  void CheckNode(int node) const {
    if (node < 0 || node >= num_nodes()) {
      throw Error(ErrorCode::kUnknownNode, "index " + std::to_string(node));
    }
  }

  // Copy without the listed edge ids; the node set is unchanged.
  PairGraph WithoutEdgeIds(std::span<const int> edge_ids) const {
    std::vector<char> drop(edges_.size(), 0);
    for (int id : edge_ids) {
      if (id < 0 || id >= num_edges()) {
        throw Error(ErrorCode::kMissingEdge, "edge id " + std::to_string(id));
      }
      drop[id] = 1;
    }
    PairGraph g = *this;
    g.edges_.clear();
    for (size_t k = 0; k < edges_.size(); ++k) {
      if (!drop[k]) g.edges_.push_back(edges_[k]);
    }
    g.RebuildAdjacency();
    return g;
  }

 private:
  void AddPairs(std::span<const PairwiseDatum> pairs) {
    data_ = std::make_shared<std::vector<PairwiseDatum>>(pairs.begin(),
                                                         pairs.end());
    std::unordered_map<uint64_t, int> seen;
    for (size_t k = 0; k < pairs.size(); ++k) {
      const PairwiseDatum& p = pairs[k];
      if (p.i == p.j) throw Error(ErrorCode::kSelfLoop, "node " + p.i);
      if (p.y != 0 && p.y != 1) {
        throw Error(ErrorCode::kInvalidArgument,
                    "label must be 0 or 1 for pair (" + p.i + "," + p.j + ")");
      }
      if (k == 0) {
        dimension_ = p.delta_x.size();
      } else if (p.delta_x.size() != dimension_) {
        throw Error(ErrorCode::kDimensionMismatch,
                    "pair (" + p.i + "," + p.j + ") has dimension " +
                        std::to_string(p.delta_x.size()) + ", expected " +
                        std::to_string(dimension_));
      }
      for (double x : p.delta_x) {
        if (!std::isfinite(x)) {
          throw Error(ErrorCode::kInvalidArgument,
                      "non-finite feature in pair (" + p.i + "," + p.j + ")");
        }
      }
      int a = Intern(p.i);
      int b = Intern(p.j);
      if (a > b) std::swap(a, b);
      const uint64_t key =
          (static_cast<uint64_t>(a) << 32) | static_cast<uint64_t>(b);
      if (!seen.emplace(key, static_cast<int>(k)).second) {
        throw Error(ErrorCode::kDuplicateEdge, "(" + p.i + "," + p.j + ")");
      }
      edges_.push_back({a, b, static_cast<int>(k)});
    }
  }

  int Intern(const std::string& name) {
    auto [it, inserted] = index_.emplace(name, static_cast<int>(names_.size()));
    if (inserted) names_.push_back(name);
    return it->second;
  }

  void RebuildAdjacency() {
    adjacency_.assign(names_.size(), {});
    for (size_t k = 0; k < edges_.size(); ++k) {
      adjacency_[edges_[k].u].push_back({edges_[k].v, static_cast<int>(k)});
      adjacency_[edges_[k].v].push_back({edges_[k].u, static_cast<int>(k)});
    }
    for (auto& arcs : adjacency_) {
      std::sort(arcs.begin(), arcs.end(),
                [](const Arc& a, const Arc& b) { return a.to < b.to; });
    }
  }

  RelationKind kind_ = RelationKind::kTransitive;
  size_t dimension_ = 0;
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> index_;
  std::vector<Edge> edges_;
  std::vector<std::vector<Arc>> adjacency_;
  std::shared_ptr<const std::vector<PairwiseDatum>> data_;
};

inline PairGraph BuildGraph(std::span<const PairwiseDatum> pairs,
                            RelationKind kind = RelationKind::kTransitive) {
  return PairGraph::Build(pairs, kind);
}

inline int Degree(const PairGraph& g, int node) {
  return static_cast<int>(g.neighbors(node).size());
}

inline int Degree(const PairGraph& g, const std::string& node) {
  return Degree(g, g.IndexOf(node));
}

namespace internal {

// Component label per node, ignoring `skip_node` (label -1) and edges with
// `edge_mask[e] != 0`. Returns the number of components found.
inline int LabelComponents(const PairGraph& g, std::vector<int>& label,
                           int skip_node = -1,
                           std::span<const char> edge_mask = {}) {
  const int n = g.num_nodes();
  label.assign(n, -1);
  std::vector<int> stack;
  int count = 0;
  for (int start = 0; start < n; ++start) {
    if (start == skip_node || label[start] != -1) continue;
    label[start] = count;
    stack.push_back(start);
    while (!stack.empty()) {
      const int u = stack.back();
      stack.pop_back();
      for (const auto& arc : g.neighbors(u)) {
        if (arc.to == skip_node || label[arc.to] != -1) continue;
        if (!edge_mask.empty() && edge_mask[arc.edge]) continue;
        label[arc.to] = count;
        stack.push_back(arc.to);
      }
    }
    ++count;
  }
  return count;
}

}  // namespace internal

// Connected components, isolated nodes included.
inline int ComponentCount(const PairGraph& g) {
  std::vector<int> label;
  return internal::LabelComponents(g, label);
}

// Co+: how many extra components appear when `node` and its incident edges
// are deleted. Zero for leaves and isolated nodes.
inline int ComponentIncreaseOnRemoval(const PairGraph& g, int node) {
  g.CheckNode(node);
  std::vector<int> label;
  const int before = internal::LabelComponents(g, label);
  const int after = internal::LabelComponents(g, label, node);
  return std::max(0, after - before);
}

inline int ComponentIncreaseOnRemoval(const PairGraph& g,
                                      const std::string& node) {
  return ComponentIncreaseOnRemoval(g, g.IndexOf(node));
}

// Removes edges given as node-index pairs (either orientation).
inline PairGraph RemoveEdges(const PairGraph& g,
                             std::span<const std::pair<int, int>> edge_set) {
  std::vector<int> ids;
  ids.reserve(edge_set.size());
  for (auto [a, b] : edge_set) {
    g.CheckNode(a);
    g.CheckNode(b);
    auto id = g.EdgeBetween(a, b);
    if (!id) {
      throw Error(ErrorCode::kMissingEdge,
                  "(" + g.node_name(a) + "," + g.node_name(b) + ")");
    }
    ids.push_back(*id);
  }
  return g.WithoutEdgeIds(ids);
}

inline PairGraph RemoveEdges(
    const PairGraph& g,
    std::span<const std::pair<std::string, std::string>> edge_set) {
  std::vector<std::pair<int, int>> indices;
  for (const auto& [a, b] : edge_set) {
    indices.emplace_back(g.IndexOf(a), g.IndexOf(b));
  }
  return RemoveEdges(g, indices);
}

}  // namespace dppml

#endif  // DPPML_PAIRGRAPH_HPP_
