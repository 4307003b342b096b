#pragma once

// Synthetic graph families, JSONL persistence, splits and corpus statistics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "geel/codec.hpp"
#include "geel/error.hpp"
#include "geel/grammar.hpp"
#include "geel/graph.hpp"

namespace geel {

inline constexpr int kDatasetVersion = 1;

/// One graph as stored on disk. Edges are 0-based; edge_types is parallel to edges.
struct GraphRecord {
  std::size_t node_count = 0;
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::string> node_types;  // empty, or one per node
  std::vector<std::string> edge_types;  // empty, or one per edge
  std::string name;

  bool attributed() const { return !node_types.empty(); }
  friend bool operator==(const GraphRecord&, const GraphRecord&) = default;
};

struct Dataset {
  TypeAlphabets alphabets;  // empty for plain corpora
  std::vector<GraphRecord> records;
};

/// Sorts each edge as (min, max), then sorts the list, carrying edge types along.
inline void canonicalize(GraphRecord& r) {
  std::vector<std::size_t> idx(r.edges.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (auto& [u, v] : r.edges)
    if (u > v) std::swap(u, v);
  std::sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) { return r.edges[i] < r.edges[j]; });
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<std::string> types;
  for (std::size_t i : idx) {
    edges.push_back(r.edges[i]);
    if (!r.edge_types.empty()) types.push_back(r.edge_types[i]);
  }
  r.edges = std::move(edges);
  r.edge_types = std::move(types);
}

inline GraphRecord to_record(const Graph& g, std::string name = {}) {
  GraphRecord r;
  r.node_count = g.node_count();
  r.edges = g.edges();
  r.name = std::move(name);
  return r;
}

inline GraphRecord to_record(const AttributedGraph& ag, const TypeAlphabets& alphabets, std::string name = {}) {
  GraphRecord r = to_record(ag.graph, std::move(name));
  if (ag.node_types.empty()) return r;
  for (std::size_t x : ag.node_types) r.node_types.push_back(alphabets.node_types().at(x));
  for (const auto& [u, v] : r.edges) r.edge_types.push_back(alphabets.edge_types().at(ag.edge_type(u, v)));
  return r;
}

inline Graph to_graph(const GraphRecord& r) { return Graph::from_edges(r.node_count, r.edges); }

/// Types are resolved against `alphabets`; untyped records give empty type tables.
inline AttributedGraph to_attributed(const GraphRecord& r, const TypeAlphabets& alphabets) {
  AttributedGraph ag;
  ag.graph = to_graph(r);
  if (!r.attributed()) return ag;
  for (const auto& x : r.node_types) ag.node_types.push_back(alphabets.node_index(x));
  for (std::size_t i = 0; i < r.edges.size(); ++i) {
    auto [u, v] = r.edges[i];
    if (u > v) std::swap(u, v);
    ag.edge_types[{u, v}] = alphabets.edge_index(r.edge_types.at(i));
  }
  return ag;
}

inline std::vector<AttributedGraph> to_attributed(const Dataset& d) {
  std::vector<AttributedGraph> out;
  out.reserve(d.records.size());
  for (const auto& r : d.records) out.push_back(to_attributed(r, d.alphabets));
  return out;
}

// ---- JSONL ----------------------------------------------------------------

inline std::string header_line(const TypeAlphabets& alphabets) {
  nlohmann::json h = {{"format", "geel-graphs"}, {"version", kDatasetVersion}};
  if (!alphabets.empty()) {
    h["node_types"] = alphabets.node_types();
    h["edge_types"] = alphabets.edge_types();
  }
  return h.dump();
}

inline std::string record_line(GraphRecord r) {
  canonicalize(r);
  nlohmann::json j = {{"node_count", r.node_count}, {"edges", nlohmann::json::array()}};
  for (const auto& [u, v] : r.edges) j["edges"].push_back({u, v});
  if (r.attributed()) {
    j["node_types"] = r.node_types;
    j["edge_types"] = r.edge_types;
  }
  if (!r.name.empty()) j["name"] = r.name;
  return j.dump();
}

inline std::string format_dataset(const Dataset& d) {
  std::string out = header_line(d.alphabets) + "\n";
  for (const auto& r : d.records) out += record_line(r) + "\n";
  return out;
}

namespace detail {

inline GraphRecord parse_record(const nlohmann::json& j, std::size_t line, const TypeAlphabets& alphabets) {
  GraphRecord r;
  try {
    if (!j.is_object()) throw ParseError(line, "record is not an object");
    r.node_count = j.at("node_count").get<std::size_t>();
    for (const auto& e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2) throw ParseError(line, "edge must be a [u, v] pair");
      r.edges.emplace_back(e[0].get<NodeId>(), e[1].get<NodeId>());
    }
    if (j.contains("node_types")) r.node_types = j["node_types"].get<std::vector<std::string>>();
    if (j.contains("edge_types")) r.edge_types = j["edge_types"].get<std::vector<std::string>>();
    if (j.contains("name")) r.name = j["name"].get<std::string>();
    for (const auto& [key, _] : j.items())
      if (key != "node_count" && key != "edges" && key != "node_types" && key != "edge_types" && key != "name")
        throw ParseError(line, "unknown record key '" + key + "'");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(line, e.what());
  }
  std::set<std::pair<NodeId, NodeId>> seen;
  for (auto [u, v] : r.edges) {
    if (u >= r.node_count || v >= r.node_count)
      throw ParseError(line, "edge [" + std::to_string(u) + "," + std::to_string(v) + "] out of range");
    if (u == v) throw ParseError(line, "self-loop on node " + std::to_string(u));
    if (u > v) std::swap(u, v);
    if (!seen.insert({u, v}).second)
      throw ParseError(line, "duplicate edge [" + std::to_string(u) + "," + std::to_string(v) + "]");
  }
  const bool typed = !r.node_types.empty() || !r.edge_types.empty();
  if (typed) {
    if (alphabets.empty()) throw ParseError(line, "typed record but the header declares no alphabets");
    if (r.node_types.size() != r.node_count) throw ParseError(line, "node_types length differs from node_count");
    if (r.edge_types.size() != r.edges.size()) throw ParseError(line, "edge_types length differs from edges");
    try {
      for (const auto& x : r.node_types) alphabets.node_index(x);
      for (const auto& e : r.edge_types) alphabets.edge_index(e);
    } catch (const AlphabetError& e) {
      throw ParseError(line, e.what());
    }
  }
  return r;
}

}  // namespace detail

inline Dataset parse_dataset(std::istream& in) {
  Dataset d;
  std::string text;
  std::size_t line = 0;
  bool have_header = false;
  while (std::getline(in, text)) {
    ++line;
    if (text.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(line, std::string("malformed JSON: ") + e.what());
    }
    if (!have_header) {
      if (!j.is_object() || j.value("format", "") != "geel-graphs") throw ParseError(line, "missing geel-graphs header");
      const int version = j.value("version", 0);
      if (version > kDatasetVersion)
        throw ParseError(line, "dataset version " + std::to_string(version) + " is newer than supported " +
                                   std::to_string(kDatasetVersion));
      if (version < 1) throw ParseError(line, "bad dataset version");
      if (j.contains("node_types") || j.contains("edge_types")) {
        try {
          d.alphabets = TypeAlphabets(j.at("node_types").get<std::vector<std::string>>(),
                                      j.at("edge_types").get<std::vector<std::string>>());
        } catch (const std::exception& e) {
          throw ParseError(line, std::string("bad alphabets: ") + e.what());
        }
      }
      have_header = true;
      continue;
    }
    d.records.push_back(detail::parse_record(j, line, d.alphabets));
  }
  if (!have_header) throw ParseError(line, "empty dataset file");
  return d;
}

inline Dataset parse_dataset(const std::string& text) {
  std::istringstream in(text);
  return parse_dataset(in);
}

inline Dataset load_graphs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path);
  return parse_dataset(in);
}

inline void save_graphs(const Dataset& d, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path);
  out << format_dataset(d);
}

// ---- generators -----------------------------------------------------------

inline Graph gen_grid(std::size_t p, std::size_t q) {
  if (p < 2 || q < 2) throw ArgumentError("grid dimensions must be >= 2");
  Graph g(p * q);
  for (std::size_t i = 0; i < p; ++i)
    for (std::size_t j = 0; j < q; ++j) {
      if (j + 1 < q) g.add_edge(i * q + j, i * q + j + 1);
      if (i + 1 < p) g.add_edge(i * q + j, (i + 1) * q + j);
    }
  return g;
}

inline Graph gen_path(std::size_t n) {
  if (n < 1) throw ArgumentError("path needs at least one node");
  Graph g(n);
  for (NodeId u = 0; u + 1 < n; ++u) g.add_edge(u, u + 1);
  return g;
}

/// Random lobster: backbone of length int(2 * U * n + 0.5) (at least 1),
/// a geometric number of leaves per backbone node with continuation p1, and
/// a geometric number of second-level leaves per leaf with continuation p2.
inline Graph gen_lobster(std::size_t expected_backbone, double p1, double p2, Rng& rng) {
  if (!(p1 >= 0.0 && p1 < 1.0) || !(p2 >= 0.0 && p2 < 1.0))
    throw ArgumentError("lobster probabilities must be in [0, 1)");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const auto len = std::max<std::size_t>(
      1, static_cast<std::size_t>(2.0 * u(rng) * static_cast<double>(expected_backbone) + 0.5));
  std::vector<std::pair<NodeId, NodeId>> edges;
  for (NodeId v = 0; v + 1 < len; ++v) edges.emplace_back(v, v + 1);
  NodeId next = len;
  for (NodeId v = 0; v < len; ++v) {
    while (u(rng) < p1) {
      const NodeId leaf = next++;
      edges.emplace_back(v, leaf);
      while (u(rng) < p2) edges.emplace_back(leaf, next++);
    }
  }
  return Graph::from_edges(next, edges);
}

/// Two G(n, p_intra) blocks joined by ceil(inter_edge_frac * (n1 + n2)) distinct
/// random cross edges, redrawn until connected.
inline Graph gen_community(std::size_t n1, std::size_t n2, double p_intra, double inter_edge_frac, Rng& rng) {
  if (n1 < 2 || n2 < 2) throw ArgumentError("community sizes must be >= 2");
  if (!(p_intra >= 0.0 && p_intra <= 1.0) || inter_edge_frac < 0.0) throw ArgumentError("bad community parameters");
  const auto cross = static_cast<std::size_t>(std::ceil(inter_edge_frac * static_cast<double>(n1 + n2)));
  if (cross > n1 * n2) throw ArgumentError("more cross edges requested than node pairs");
  std::bernoulli_distribution coin(p_intra);
  std::uniform_int_distribution<NodeId> left(0, n1 - 1), right(n1, n1 + n2 - 1);
  for (int attempt = 0; attempt < 1000; ++attempt) {
    Graph g(n1 + n2);
    for (NodeId u = 0; u < n1 + n2; ++u)
      for (NodeId v = u + 1; v < n1 + n2; ++v)
        if ((u < n1) == (v < n1) && coin(rng)) g.add_edge(u, v);
    for (std::size_t k = 0; k < cross;) {
      const NodeId u = left(rng), v = right(rng);
      if (g.has_edge(u, v)) continue;
      g.add_edge(u, v);
      ++k;
    }
    if (is_connected(g)) return g;
  }
  throw Error("gen_community: no connected sample within 1000 attempts");
}

/// Random spanning tree (uniform attachment to an earlier node) plus each
/// remaining pair independently with probability p_extra.
inline Graph gen_random_connected(std::size_t n, double p_extra, Rng& rng) {
  if (n < 1) throw ArgumentError("graph needs at least one node");
  std::vector<NodeId> perm(n);
  std::iota(perm.begin(), perm.end(), NodeId{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Graph g(n);
  for (std::size_t i = 1; i < n; ++i) g.add_edge(perm[i], perm[std::uniform_int_distribution<std::size_t>(0, i - 1)(rng)]);
  std::bernoulli_distribution coin(p_extra);
  for (NodeId u = 0; u < n; ++u)
    for (NodeId v = u + 1; v < n; ++v)
      if (!g.has_edge(u, v) && coin(rng)) g.add_edge(u, v);
  return g;
}

/// Uniformly random node and edge types.
inline AttributedGraph assign_random_types(const Graph& g, const TypeAlphabets& alphabets, Rng& rng) {
  std::uniform_int_distribution<std::size_t> node(0, alphabets.node_types().size() - 1);
  std::uniform_int_distribution<std::size_t> edge(0, alphabets.edge_types().size() - 1);
  AttributedGraph ag;
  ag.graph = g;
  for (NodeId u = 0; u < g.node_count(); ++u) ag.node_types.push_back(node(rng));
  for (const auto& e : g.edges()) ag.edge_types[e] = edge(rng);
  return ag;
}

enum class GraphFamily { grid, lobster, community, path };

inline GraphFamily parse_graph_family(std::string_view s) {
  if (s == "grid") return GraphFamily::grid;
  if (s == "lobster") return GraphFamily::lobster;
  if (s == "community") return GraphFamily::community;
  if (s == "path") return GraphFamily::path;
  throw ArgumentError("unknown graph family '" + std::string(s) + "'");
}

struct CorpusSpec {
  GraphFamily family = GraphFamily::grid;
  std::size_t count = 100;
  // grid: side lengths drawn uniformly from [grid_min, grid_max]
  std::size_t grid_min = 4, grid_max = 8;
  // lobster: accepted when min_nodes <= N <= max_nodes
  std::size_t lobster_backbone = 4;
  double lobster_p1 = 0.7, lobster_p2 = 0.7;
  // community: each block size drawn from [community_min, community_max]
  std::size_t community_min = 6, community_max = 10;
  double community_p = 0.7, community_inter = 0.05;
  // path: length drawn from [min_nodes, max_nodes]
  std::size_t min_nodes = 10, max_nodes = 50;
  std::size_t max_attempts = 100000;
};

inline std::vector<Graph> generate_corpus(const CorpusSpec& spec, Rng& rng) {
  std::vector<Graph> out;
  auto draw = [&](std::size_t lo, std::size_t hi) {
    if (lo > hi) throw ArgumentError("empty size range");
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::size_t attempts = 0;
  while (out.size() < spec.count) {
    switch (spec.family) {
      case GraphFamily::grid: {
        const std::size_t p = draw(spec.grid_min, spec.grid_max);
        out.push_back(gen_grid(p, draw(spec.grid_min, spec.grid_max)));
        break;
      }
      case GraphFamily::lobster: {
        if (++attempts > spec.max_attempts) throw Error("lobster generation: node range rarely hit, widen it");
        Graph g = gen_lobster(spec.lobster_backbone, spec.lobster_p1, spec.lobster_p2, rng);
        if (g.node_count() >= spec.min_nodes && g.node_count() <= spec.max_nodes) out.push_back(std::move(g));
        break;
      }
      case GraphFamily::community: {
        const std::size_t n1 = draw(spec.community_min, spec.community_max);
        out.push_back(gen_community(n1, draw(spec.community_min, spec.community_max), spec.community_p,
                                    spec.community_inter, rng));
        break;
      }
      case GraphFamily::path: out.push_back(gen_path(draw(spec.min_nodes, spec.max_nodes))); break;
    }
  }
  return out;
}

/// Seeded shuffle then partition; the train side gets round(frac * n) records.
template <class T>
std::pair<std::vector<T>, std::vector<T>> split(const std::vector<T>& items, double train_frac, Rng& rng) {
  if (!(train_frac > 0.0 && train_frac < 1.0)) throw ArgumentError("train fraction must be in (0, 1)");
  std::vector<std::size_t> idx(items.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  const auto cut = static_cast<std::size_t>(std::llround(train_frac * static_cast<double>(items.size())));
  std::pair<std::vector<T>, std::vector<T>> out;
  for (std::size_t i = 0; i < idx.size(); ++i) (i < cut ? out.first : out.second).push_back(items[idx[i]]);
  return out;
}

// ---- corpus statistics ----------------------------------------------------

struct CorpusException {
  std::size_t index = 0;
  std::string name;
  std::string reason;
};

struct CorpusStats {
  std::size_t graph_count = 0;
  std::size_t min_nodes = 0, max_nodes = 0;
  std::size_t min_edges = 0, max_edges = 0;
  std::size_t bandwidth = 0;  // max over graphs under the chosen deterministic ordering
  std::size_t node_type_count = 0, edge_type_count = 0;
  std::size_t max_plain_length = 0;       // BOS + M tuples + EOS
  std::size_t max_attributed_length = 0;  // BOS + node, tuple and edge-type tokens + EOS
  std::size_t over_2m_plus_n = 0;         // graphs whose attributed body exceeds 2M + N (dummy tuples)
  std::vector<CorpusException> exceptions;

  std::size_t b_squared() const { return bandwidth * bandwidth; }
  std::size_t pair_vocab() const { return bandwidth * (bandwidth + 1); }
  std::size_t plain_vocab() const { return pair_vocab() + 2; }
  std::size_t attributed_vocab() const {
    return bandwidth * (bandwidth + 2) + node_type_count + edge_type_count + 2;
  }
  std::size_t attributed_vocab_compact() const { return 2 * bandwidth + node_type_count + edge_type_count; }
  std::size_t rep_size() const { return max_edges; }
  std::size_t n_squared() const { return max_nodes * max_nodes; }

  nlohmann::json to_json() const {
    nlohmann::json ex = nlohmann::json::array();
    for (const auto& e : exceptions) ex.push_back({{"index", e.index}, {"name", e.name}, {"reason", e.reason}});
    return {{"graph_count", graph_count},
            {"min_nodes", min_nodes},
            {"max_nodes", max_nodes},
            {"min_edges", min_edges},
            {"max_edges", max_edges},
            {"bandwidth", bandwidth},
            {"vocab_b_squared", b_squared()},
            {"vocab_pairs", pair_vocab()},
            {"vocab_plain", plain_vocab()},
            {"vocab_attributed", attributed_vocab()},
            {"vocab_attributed_compact", attributed_vocab_compact()},
            {"rep_size", rep_size()},
            {"n_squared", n_squared()},
            {"max_plain_length", max_plain_length},
            {"max_attributed_length", max_attributed_length},
            {"over_2m_plus_n", over_2m_plus_n},
            {"exceptions", ex}};
  }
};

/// Ranks that are the source of no forward edge; each costs one dummy tuple
/// in the attributed grammar.
inline std::size_t dummy_tuple_count(const Graph& g, const Ordering& pi) {
  std::vector<bool> is_source(g.node_count(), false);
  for (const auto& [u, v] : g.edges()) is_source[std::min(pi.rank(u), pi.rank(v)) - 1] = true;
  return static_cast<std::size_t>(std::count(is_source.begin(), is_source.end(), false));
}

inline CorpusStats corpus_stats(const Dataset& d, const OrderingSpec& ordering = {}) {
  if (!is_deterministic(ordering)) throw ArgumentError("corpus_stats needs a deterministic ordering");
  CorpusStats s;
  s.node_type_count = d.alphabets.node_types().size();
  s.edge_type_count = d.alphabets.edge_types().size();
  bool first = true;
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    const Graph g = to_graph(r);
    if (!is_connected(g)) {
      s.exceptions.push_back({i, r.name, "disconnected"});
      continue;
    }
    const Ordering pi = make_ordering(g, ordering, nullptr);
    const std::size_t n = g.node_count(), m = g.edge_count();
    ++s.graph_count;
    s.min_nodes = first ? n : std::min(s.min_nodes, n);
    s.min_edges = first ? m : std::min(s.min_edges, m);
    first = false;
    s.max_nodes = std::max(s.max_nodes, n);
    s.max_edges = std::max(s.max_edges, m);
    s.bandwidth = std::max(s.bandwidth, bandwidth(g, pi));
    s.max_plain_length = std::max(s.max_plain_length, m + 2);
    const std::size_t dummies = dummy_tuple_count(g, pi);
    s.max_attributed_length = std::max(s.max_attributed_length, n + 2 * m + dummies + 2);
    if (dummies > 0) ++s.over_2m_plus_n;
  }
  return s;
}

}  // namespace geel
