#pragma once

// Undirected simple graphs, node orderings and bandwidth.
//
// Node ids are 0-based. Ranks produced by an Ordering are 1-based, matching
// the codec convention where rank 0 is the "before the first source" sentinel.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <queue>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "geel/error.hpp"

namespace geel {

using NodeId = std::size_t;
using Rank = std::size_t;
using Rng = std::mt19937_64;

class Graph {
 public:
  Graph() = default;
  explicit Graph(std::size_t node_count) : adjacency_(node_count) {}

  /// Builds a graph from an edge list; rejects self-loops, duplicates and
  /// out-of-range endpoints.
  static Graph from_edges(std::size_t node_count,
                          std::span<const std::pair<NodeId, NodeId>> edges) {
    Graph g(node_count);
    for (const auto& [u, v] : edges) g.add_edge(u, v);
    return g;
  }

  std::size_t node_count() const noexcept { return adjacency_.size(); }
  std::size_t edge_count() const noexcept { return edge_count_; }

  std::span<const NodeId> neighbors(NodeId u) const { return adjacency_.at(u); }
  std::size_t degree(NodeId u) const { return adjacency_.at(u).size(); }

  bool has_edge(NodeId u, NodeId v) const {
    if (u >= node_count() || v >= node_count()) return false;
    const auto& adj = adjacency_[u];
    return std::binary_search(adj.begin(), adj.end(), v);
  }

  void add_edge(NodeId u, NodeId v) {
    if (u >= node_count() || v >= node_count())
      throw ArgumentError("edge (" + std::to_string(u) + "," + std::to_string(v) +
                          ") out of range for " + std::to_string(node_count()) + " nodes");
    if (u == v) throw ArgumentError("self-loop on node " + std::to_string(u));
    if (has_edge(u, v))
      throw ArgumentError("duplicate edge (" + std::to_string(u) + "," + std::to_string(v) + ")");
    insert_sorted(adjacency_[u], v);
    insert_sorted(adjacency_[v], u);
    ++edge_count_;
  }

  /// Every edge once as (min, max), lexicographically sorted.
  std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(edge_count_);
    for (NodeId u = 0; u < node_count(); ++u)
      for (NodeId v : adjacency_[u])
        if (u < v) out.emplace_back(u, v);
    return out;
  }

  friend bool operator==(const Graph&, const Graph&) = default;

 private:
  static void insert_sorted(std::vector<NodeId>& list, NodeId v) {
    list.insert(std::upper_bound(list.begin(), list.end(), v), v);
  }

  std::vector<std::vector<NodeId>> adjacency_;
  std::size_t edge_count_ = 0;
};

/// Bijection node id -> rank in 1..N.
class Ordering {
 public:
  Ordering() = default;

  static Ordering identity(std::size_t n) {
    std::vector<NodeId> order(n);
    std::iota(order.begin(), order.end(), NodeId{0});
    return from_visit_order(std::move(order));
  }

  /// `ranks[u]` is the 1-based rank of node u.
  static Ordering from_ranks(std::vector<Rank> ranks) {
    Ordering o;
    o.inverse_.assign(ranks.size(), 0);
    std::vector<bool> seen(ranks.size() + 1, false);
    for (NodeId u = 0; u < ranks.size(); ++u) {
      const Rank r = ranks[u];
      if (r < 1 || r > ranks.size() || seen[r])
        throw ArgumentError("ranks are not a permutation of 1.." + std::to_string(ranks.size()));
      seen[r] = true;
      o.inverse_[r - 1] = u;
    }
    o.rank_ = std::move(ranks);
    return o;
  }

  /// `order[k]` is the node that receives rank k+1.
  static Ordering from_visit_order(std::vector<NodeId> order) {
    std::vector<Rank> ranks(order.size(), 0);
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (order[k] >= order.size() || ranks[order[k]] != 0)
        throw ArgumentError("visit order is not a permutation");
      ranks[order[k]] = k + 1;
    }
    Ordering o;
    o.rank_ = std::move(ranks);
    o.inverse_ = std::move(order);
    return o;
  }

  std::size_t size() const noexcept { return rank_.size(); }
  Rank rank(NodeId u) const { return rank_.at(u); }
  NodeId node_at(Rank r) const { return inverse_.at(r - 1); }
  // views on lvalues only; a temporary hands over its storage instead of dangling
  std::span<const Rank> ranks() const& noexcept { return rank_; }
  std::vector<Rank> ranks() && noexcept { return std::move(rank_); }
  std::span<const NodeId> visit_order() const& noexcept { return inverse_; }
  std::vector<NodeId> visit_order() && noexcept { return std::move(inverse_); }

  Ordering reversed() const {
    std::vector<NodeId> order(inverse_.rbegin(), inverse_.rend());
    return from_visit_order(std::move(order));
  }

  friend bool operator==(const Ordering&, const Ordering&) = default;

 private:
  std::vector<Rank> rank_;
  std::vector<NodeId> inverse_;
};

inline bool is_connected(const Graph& g) {
  const std::size_t n = g.node_count();
  if (n == 0) return true;
  std::vector<bool> seen(n, false);
  std::vector<NodeId> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    for (NodeId v : g.neighbors(u))
      if (!seen[v]) {
        seen[v] = true;
        ++reached;
        stack.push_back(v);
      }
  }
  return reached == n;
}

/// Largest connected component, relabeled densely. `kept[i]` is the original
/// id of new node i; ties between equal-size components go to the one
/// containing the smallest node id.
struct Component {
  Graph graph;
  std::vector<NodeId> kept;
};

inline Component largest_connected_component(const Graph& g) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> label(n, n);
  std::size_t best_label = 0, best_size = 0, next_label = 0;
  for (NodeId s = 0; s < n; ++s) {
    if (label[s] != n) continue;
    std::size_t size = 0;
    std::vector<NodeId> stack{s};
    label[s] = next_label;
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      ++size;
      for (NodeId v : g.neighbors(u))
        if (label[v] == n) {
          label[v] = next_label;
          stack.push_back(v);
        }
    }
    if (size > best_size) {
      best_size = size;
      best_label = next_label;
    }
    ++next_label;
  }
  Component c;
  std::vector<NodeId> remap(n, n);
  for (NodeId u = 0; u < n; ++u)
    if (label[u] == best_label) {
      remap[u] = c.kept.size();
      c.kept.push_back(u);
    }
  c.graph = Graph(c.kept.size());
  for (const auto& [u, v] : g.edges())
    if (remap[u] != n && remap[v] != n) c.graph.add_edge(remap[u], remap[v]);
  return c;
}

inline std::size_t bandwidth(const Graph& g, const Ordering& pi) {
  if (pi.size() != g.node_count())
    throw DimensionError("ordering has " + std::to_string(pi.size()) + " entries, graph has " +
                         std::to_string(g.node_count()) + " nodes");
  std::size_t band = 0;
  for (NodeId u = 0; u < g.node_count(); ++u)
    for (NodeId v : g.neighbors(u)) {
      const Rank ru = pi.rank(u), rv = pi.rank(v);
      band = std::max(band, ru > rv ? ru - rv : rv - ru);
    }
  return band;
}

/// Relabels g so that the node with rank r becomes node r-1.
inline Graph apply_ordering(const Graph& g, const Ordering& pi) {
  if (pi.size() != g.node_count()) throw DimensionError("ordering length mismatch");
  Graph out(g.node_count());
  for (const auto& [u, v] : g.edges()) out.add_edge(pi.rank(u) - 1, pi.rank(v) - 1);
  return out;
}

enum class StartPolicy { deterministic, sampled };

namespace detail {

inline void require_connected(const Graph& g, std::string_view what) {
  if (g.node_count() == 0) throw ArgumentError(std::string(what) + ": empty graph");
  if (!is_connected(g)) throw ConnectivityError(std::string(what) + " requires a connected graph");
}

inline Rng& require_rng(Rng* rng, std::string_view what) {
  if (rng == nullptr) throw ArgumentError(std::string(what) + " needs a random source");
  return *rng;
}

inline NodeId uniform_node(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<NodeId>(0, n - 1)(rng);
}

}  // namespace detail

/// Cuthill-McKee: BFS from a minimum-degree node, enqueueing unvisited
/// neighbors by ascending degree. With `sampled`, the start is drawn
/// uniformly among minimum-degree nodes and equal-degree neighbors are
/// randomly permuted; otherwise ties go to the lowest id.
inline Ordering cuthill_mckee(const Graph& g, StartPolicy policy = StartPolicy::deterministic,
                              Rng* rng = nullptr, bool reverse = false) {
  detail::require_connected(g, "cuthill_mckee");
  const std::size_t n = g.node_count();
  Rng* sampler = policy == StartPolicy::sampled ? &detail::require_rng(rng, "sampled C-M") : nullptr;

  std::size_t min_degree = g.degree(0);
  for (NodeId u = 1; u < n; ++u) min_degree = std::min(min_degree, g.degree(u));
  std::vector<NodeId> candidates;
  for (NodeId u = 0; u < n; ++u)
    if (g.degree(u) == min_degree) candidates.push_back(u);
  const NodeId start =
      sampler ? candidates[detail::uniform_node(*sampler, candidates.size())] : candidates.front();

  std::vector<NodeId> order;
  order.reserve(n);
  std::vector<bool> visited(n, false);
  visited[start] = true;
  order.push_back(start);
  std::vector<NodeId> frontier;
  for (std::size_t head = 0; head < order.size(); ++head) {
    frontier.clear();
    for (NodeId v : g.neighbors(order[head]))
      if (!visited[v]) frontier.push_back(v);
    if (sampler) std::shuffle(frontier.begin(), frontier.end(), *sampler);
    std::stable_sort(frontier.begin(), frontier.end(),
                     [&](NodeId a, NodeId b) { return g.degree(a) < g.degree(b); });
    for (NodeId v : frontier) {
      visited[v] = true;
      order.push_back(v);
    }
  }
  auto pi = Ordering::from_visit_order(std::move(order));
  return reverse ? pi.reversed() : pi;
}

inline Ordering bfs_ordering_from(const Graph& g, NodeId start) {
  detail::require_connected(g, "bfs_ordering");
  const std::size_t n = g.node_count();
  if (start >= n) throw ArgumentError("start node out of range");
  std::vector<NodeId> order{start};
  order.reserve(n);
  std::vector<bool> visited(n, false);
  visited[start] = true;
  for (std::size_t head = 0; head < order.size(); ++head)
    for (NodeId v : g.neighbors(order[head]))
      if (!visited[v]) {
        visited[v] = true;
        order.push_back(v);
      }
  return Ordering::from_visit_order(std::move(order));
}

/// Preorder of a depth-first search that explores neighbors by ascending id.
inline Ordering dfs_ordering_from(const Graph& g, NodeId start) {
  detail::require_connected(g, "dfs_ordering");
  const std::size_t n = g.node_count();
  if (start >= n) throw ArgumentError("start node out of range");
  std::vector<NodeId> order;
  order.reserve(n);
  std::vector<bool> visited(n, false);
  // (node, index of the next neighbor to try)
  std::vector<std::pair<NodeId, std::size_t>> stack{{start, 0}};
  visited[start] = true;
  order.push_back(start);
  while (!stack.empty()) {
    auto& [u, next] = stack.back();
    const auto adj = g.neighbors(u);
    while (next < adj.size() && visited[adj[next]]) ++next;
    if (next == adj.size()) {
      stack.pop_back();
      continue;
    }
    const NodeId v = adj[next++];
    visited[v] = true;
    order.push_back(v);
    stack.emplace_back(v, 0);
  }
  return Ordering::from_visit_order(std::move(order));
}

inline Ordering bfs_ordering(const Graph& g, Rng& rng) {
  detail::require_connected(g, "bfs_ordering");
  return bfs_ordering_from(g, detail::uniform_node(rng, g.node_count()));
}

inline Ordering dfs_ordering(const Graph& g, Rng& rng) {
  detail::require_connected(g, "dfs_ordering");
  return dfs_ordering_from(g, detail::uniform_node(rng, g.node_count()));
}

inline Ordering random_ordering(const Graph& g, Rng& rng) {
  std::vector<NodeId> order(g.node_count());
  std::iota(order.begin(), order.end(), NodeId{0});
  std::shuffle(order.begin(), order.end(), rng);
  return Ordering::from_visit_order(std::move(order));
}

enum class OrderingFamily { identity, cuthill_mckee, bfs, dfs, random };

inline const char* to_string(OrderingFamily f) {
  switch (f) {
    case OrderingFamily::identity: return "identity";
    case OrderingFamily::cuthill_mckee: return "cm";
    case OrderingFamily::bfs: return "bfs";
    case OrderingFamily::dfs: return "dfs";
    case OrderingFamily::random: return "random";
  }
  return "unknown";
}

inline OrderingFamily parse_ordering_family(std::string_view s) {
  if (s == "identity") return OrderingFamily::identity;
  if (s == "cm" || s == "cuthill-mckee") return OrderingFamily::cuthill_mckee;
  if (s == "bfs") return OrderingFamily::bfs;
  if (s == "dfs") return OrderingFamily::dfs;
  if (s == "random") return OrderingFamily::random;
  throw ArgumentError("unknown ordering '" + std::string(s) + "'");
}

inline const char* to_string(StartPolicy p) {
  return p == StartPolicy::deterministic ? "deterministic" : "sampled";
}

inline StartPolicy parse_start_policy(std::string_view s) {
  if (s == "deterministic") return StartPolicy::deterministic;
  if (s == "sampled") return StartPolicy::sampled;
  throw ArgumentError("unknown start policy '" + std::string(s) + "'");
}

/// Ordering selection shared by the codec, training loop and CLI.
struct OrderingSpec {
  OrderingFamily family = OrderingFamily::cuthill_mckee;
  StartPolicy policy = StartPolicy::deterministic;
  bool reverse = false;  // only meaningful for cuthill_mckee
};

/// `rng` may be null only for deterministic families (identity, deterministic C-M).
inline Ordering make_ordering(const Graph& g, const OrderingSpec& spec, Rng* rng) {
  switch (spec.family) {
    case OrderingFamily::identity: return Ordering::identity(g.node_count());
    case OrderingFamily::cuthill_mckee: return cuthill_mckee(g, spec.policy, rng, spec.reverse);
    case OrderingFamily::bfs: return bfs_ordering(g, detail::require_rng(rng, "bfs_ordering"));
    case OrderingFamily::dfs: return dfs_ordering(g, detail::require_rng(rng, "dfs_ordering"));
    case OrderingFamily::random: return random_ordering(g, detail::require_rng(rng, "random_ordering"));
  }
  throw ArgumentError("unknown ordering family");
}

/// True when make_ordering(g, spec, ...) ignores the random source.
inline bool is_deterministic(const OrderingSpec& spec) {
  return spec.family == OrderingFamily::identity ||
         (spec.family == OrderingFamily::cuthill_mckee && spec.policy == StartPolicy::deterministic);
}

}  // namespace geel
