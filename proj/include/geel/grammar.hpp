#pragma once

// Attributed gap-encoded edge lists.
//
// Ranks are walked in order 1..N. Each rank first emits its node-type, then
// either its real out-edges (tuple followed by edge-type) or, when it has no
// neighbor of larger rank, one dummy self-loop tuple (a, 0) that carries no
// edge-type. A small state machine enforces these rules and yields the
// validity mask used by constrained sampling.

#include <algorithm>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "geel/codec.hpp"
#include "geel/error.hpp"
#include "geel/graph.hpp"

namespace geel {

class TypeAlphabets {
 public:
  TypeAlphabets() = default;
  TypeAlphabets(std::vector<std::string> node_types, std::vector<std::string> edge_types)
      : node_types_(std::move(node_types)), edge_types_(std::move(edge_types)) {
    check(node_types_, "node");
    check(edge_types_, "edge");
  }

  const std::vector<std::string>& node_types() const noexcept { return node_types_; }
  const std::vector<std::string>& edge_types() const noexcept { return edge_types_; }
  bool empty() const noexcept { return node_types_.empty(); }

  std::size_t node_index(const std::string& name) const { return find(node_types_, name, "node"); }
  std::size_t edge_index(const std::string& name) const { return find(edge_types_, name, "edge"); }

  friend bool operator==(const TypeAlphabets&, const TypeAlphabets&) = default;

 private:
  static void check(const std::vector<std::string>& list, const char* what) {
    if (list.empty()) throw AlphabetError(std::string(what) + " alphabet is empty");
    std::set<std::string> seen(list.begin(), list.end());
    if (seen.size() != list.size()) throw AlphabetError(std::string(what) + " alphabet has duplicates");
  }
  static std::size_t find(const std::vector<std::string>& list, const std::string& name, const char* what) {
    const auto it = std::find(list.begin(), list.end(), name);
    if (it == list.end()) throw AlphabetError("undeclared " + std::string(what) + " type '" + name + "'");
    return static_cast<std::size_t>(it - list.begin());
  }

  std::vector<std::string> node_types_;
  std::vector<std::string> edge_types_;
};

/// Graph plus type indices into a TypeAlphabets. Edge keys are (min, max).
struct AttributedGraph {
  Graph graph;
  std::vector<std::size_t> node_types;
  std::map<std::pair<NodeId, NodeId>, std::size_t> edge_types;

  std::size_t edge_type(NodeId u, NodeId v) const {
    const auto it = edge_types.find(u < v ? std::pair{u, v} : std::pair{v, u});
    if (it == edge_types.end()) throw AlphabetError("untyped edge");
    return it->second;
  }

  friend bool operator==(const AttributedGraph&, const AttributedGraph&) = default;
};

inline void validate_types(const AttributedGraph& ag, const TypeAlphabets& alphabets) {
  if (ag.node_types.size() != ag.graph.node_count()) throw AlphabetError("node type count mismatch");
  for (std::size_t x : ag.node_types)
    if (x >= alphabets.node_types().size()) throw AlphabetError("node type index out of range");
  if (ag.edge_types.size() != ag.graph.edge_count()) throw AlphabetError("edge type count mismatch");
  for (const auto& [edge, e] : ag.edge_types) {
    if (!ag.graph.has_edge(edge.first, edge.second)) throw AlphabetError("type for a missing edge");
    if (e >= alphabets.edge_types().size()) throw AlphabetError("edge type index out of range");
  }
}

inline AttributedGraph apply_ordering(const AttributedGraph& ag, const Ordering& pi) {
  AttributedGraph out;
  out.graph = apply_ordering(ag.graph, pi);
  out.node_types.resize(ag.node_types.size());
  for (NodeId u = 0; u < ag.node_types.size(); ++u) out.node_types[pi.rank(u) - 1] = ag.node_types[u];
  for (const auto& [edge, e] : ag.edge_types) {
    NodeId u = pi.rank(edge.first) - 1, v = pi.rank(edge.second) - 1;
    if (u > v) std::swap(u, v);
    out.edge_types[{u, v}] = e;
  }
  return out;
}

struct AttributedToken {
  enum class Kind { node_type, edge_tuple, edge_type, bos, eos };

  Kind kind = Kind::bos;
  std::size_t a = 0;     // edge_tuple only
  std::size_t b = 0;     // edge_tuple only; 0 marks a dummy self-loop
  std::size_t type = 0;  // node_type / edge_type index

  static AttributedToken node(std::size_t x) { return {Kind::node_type, 0, 0, x}; }
  static AttributedToken tuple(std::size_t a, std::size_t b) { return {Kind::edge_tuple, a, b, 0}; }
  static AttributedToken edge(std::size_t e) { return {Kind::edge_type, 0, 0, e}; }
  static AttributedToken bos() { return {Kind::bos, 0, 0, 0}; }
  static AttributedToken eos() { return {Kind::eos, 0, 0, 0}; }

  bool is_selfloop() const noexcept { return kind == Kind::edge_tuple && b == 0; }

  friend bool operator==(const AttributedToken&, const AttributedToken&) = default;
};

/// Id layout: real tuples {0..B}x{1..B}, dummy tuples {1..B}x{0},
/// node types, edge types, BOS, EOS.
class AttributedVocabulary {
 public:
  AttributedVocabulary() = default;
  AttributedVocabulary(std::size_t gap_bound, TypeAlphabets alphabets)
      : bound_(gap_bound), alphabets_(std::move(alphabets)) {
    if (bound_ < 1) throw ArgumentError("gap bound must be positive");
    if (alphabets_.empty()) throw AlphabetError("attributed vocabulary needs type alphabets");
  }

  std::size_t gap_bound() const noexcept { return bound_; }
  const TypeAlphabets& alphabets() const noexcept { return alphabets_; }

  std::size_t real_tuple_count() const noexcept { return bound_ * (bound_ + 1); }
  std::size_t tuple_count() const noexcept { return real_tuple_count() + bound_; }
  TokenId node_base() const noexcept { return tuple_count(); }
  TokenId edge_base() const noexcept { return node_base() + alphabets_.node_types().size(); }
  TokenId bos() const noexcept { return edge_base() + alphabets_.edge_types().size(); }
  TokenId eos() const noexcept { return bos() + 1; }
  std::size_t size() const noexcept { return eos() + 1; }

  TokenId id(const AttributedToken& t) const {
    using K = AttributedToken::Kind;
    switch (t.kind) {
      case K::edge_tuple:
        if (t.a > bound_ || t.b > bound_ || (t.b == 0 && t.a == 0))
          throw VocabularyError("tuple (" + std::to_string(t.a) + "," + std::to_string(t.b) +
                                ") outside vocabulary");
        return t.b == 0 ? real_tuple_count() + (t.a - 1) : t.a * bound_ + (t.b - 1);
      case K::node_type:
        if (t.type >= alphabets_.node_types().size()) throw VocabularyError("node type out of range");
        return node_base() + t.type;
      case K::edge_type:
        if (t.type >= alphabets_.edge_types().size()) throw VocabularyError("edge type out of range");
        return edge_base() + t.type;
      case K::bos: return bos();
      case K::eos: return eos();
    }
    throw VocabularyError("unknown token kind");
  }

  AttributedToken token(TokenId id) const {
    if (id < real_tuple_count()) return AttributedToken::tuple(id / bound_, id % bound_ + 1);
    if (id < tuple_count()) return AttributedToken::tuple(id - real_tuple_count() + 1, 0);
    if (id < edge_base()) return AttributedToken::node(id - node_base());
    if (id < bos()) return AttributedToken::edge(id - edge_base());
    if (id == bos()) return AttributedToken::bos();
    if (id == eos()) return AttributedToken::eos();
    throw VocabularyError("token id " + std::to_string(id) + " outside vocabulary");
  }

  std::string describe(TokenId id) const {
    const auto t = token(id);
    using K = AttributedToken::Kind;
    switch (t.kind) {
      case K::edge_tuple: return std::to_string(t.a) + "," + std::to_string(t.b);
      case K::node_type: return "N:" + alphabets_.node_types()[t.type];
      case K::edge_type: return "E:" + alphabets_.edge_types()[t.type];
      case K::bos: return "BOS";
      case K::eos: return "EOS";
    }
    return "?";
  }

  TokenId parse(const std::string& text) const {
    if (text == "BOS") return bos();
    if (text == "EOS") return eos();
    if (text.rfind("N:", 0) == 0) return node_base() + alphabets_.node_index(text.substr(2));
    if (text.rfind("E:", 0) == 0) return edge_base() + alphabets_.edge_index(text.substr(2));
    const auto comma = text.find(',');
    if (comma == std::string::npos) throw VocabularyError("bad token '" + text + "'");
    try {
      return id(AttributedToken::tuple(std::stoul(text.substr(0, comma)), std::stoul(text.substr(comma + 1))));
    } catch (const std::invalid_argument&) {
      throw VocabularyError("bad token '" + text + "'");
    }
  }

  friend bool operator==(const AttributedVocabulary&, const AttributedVocabulary&) = default;

 private:
  std::size_t bound_ = 1;
  TypeAlphabets alphabets_;
};

enum class GrammarPhase {
  start,
  after_node_type,
  after_edge_tuple,
  after_selfloop_tuple,
  after_edge_type,
  done,
};

/// Transition state of one attributed stream (positioned just after BOS).
struct GrammarState {
  GrammarPhase last_kind = GrammarPhase::start;
  Rank current_source = 0;  // ranks 1..current_source have a node-type
  Rank max_target = 0;
  std::size_t last_b = 0;   // largest b emitted for current_source
  std::size_t node_budget = std::numeric_limits<std::size_t>::max();
  std::set<RankPair> emitted_edges;
  std::vector<bool> targeted;  // targeted[r]: rank r appeared as a target

  GrammarState() = default;
  explicit GrammarState(std::size_t budget) : node_budget(budget) {}

  bool was_targeted(Rank r) const { return r < targeted.size() && targeted[r]; }
  // A new source keeps the walk contiguous: rank 1, or a rank already reached.
  bool can_open_source() const {
    const Rank next = current_source + 1;
    return next <= node_budget && (current_source == 0 || next <= max_target);
  }
  bool can_close() const { return current_source >= 1 && current_source >= max_target; }
};

inline bool grammar_allows(const GrammarState& st, const AttributedToken& tok) {
  using K = AttributedToken::Kind;
  switch (st.last_kind) {
    case GrammarPhase::done: return false;
    case GrammarPhase::start: return tok.kind == K::node_type;
    case GrammarPhase::after_edge_tuple: return tok.kind == K::edge_type;
    case GrammarPhase::after_node_type: {
      if (tok.kind != K::edge_tuple || tok.a != 1) return false;
      const Rank s = st.current_source + 1;
      if (tok.b == 0) return s == 1 || st.was_targeted(s);
      return s + tok.b <= st.node_budget;
    }
    case GrammarPhase::after_selfloop_tuple:
      if (tok.kind == K::node_type) return st.can_open_source();
      return tok.kind == K::eos && st.can_close();
    case GrammarPhase::after_edge_type:
      if (tok.kind == K::node_type) return st.can_open_source();
      if (tok.kind == K::eos) return st.can_close();
      if (tok.kind != K::edge_tuple || tok.a != 0 || tok.b <= st.last_b) return false;
      return st.current_source + tok.b <= st.node_budget &&
             !st.emitted_edges.contains({st.current_source, st.current_source + tok.b});
  }
  return false;
}

inline std::string expected_kinds(const GrammarState& st) {
  switch (st.last_kind) {
    case GrammarPhase::start: return "first token must be node-type";
    case GrammarPhase::after_node_type: return "node-type must be followed by an edge-tuple opening the next source";
    case GrammarPhase::after_edge_tuple: return "edge-tuple must be followed by edge-type";
    case GrammarPhase::after_selfloop_tuple: return "self-loop must be followed by node-type or EOS";
    case GrammarPhase::after_edge_type: return "edge-type must be followed by node-type, same-source edge-tuple or EOS";
    case GrammarPhase::done: return "no token may follow EOS";
  }
  return "unknown state";
}

/// Mask over vocabulary ids; true exactly where the token keeps the stream valid.
inline std::vector<bool> allowed_next(const GrammarState& st, const AttributedVocabulary& v) {
  std::vector<bool> mask(v.size(), false);
  for (TokenId id = 0; id < v.size(); ++id) mask[id] = grammar_allows(st, v.token(id));
  return mask;
}

/// In-place transition; throws GrammarError when `tok` is not allowed.
inline void advance_state(GrammarState& st, const AttributedToken& tok, std::size_t position = 0) {
  if (!grammar_allows(st, tok)) throw GrammarError(position, expected_kinds(st));
  using K = AttributedToken::Kind;
  switch (tok.kind) {
    case K::node_type: st.last_kind = GrammarPhase::after_node_type; break;
    case K::edge_type: st.last_kind = GrammarPhase::after_edge_type; break;
    case K::eos: st.last_kind = GrammarPhase::done; break;
    case K::edge_tuple: {
      st.current_source += tok.a;
      if (tok.a > 0) st.last_b = 0;
      if (tok.b == 0) {
        st.last_kind = GrammarPhase::after_selfloop_tuple;
        break;
      }
      const Rank t = st.current_source + tok.b;
      st.emitted_edges.insert({st.current_source, t});
      st.max_target = std::max(st.max_target, t);
      if (st.targeted.size() <= t) st.targeted.resize(t + 1, false);
      st.targeted[t] = true;
      st.last_b = tok.b;
      st.last_kind = GrammarPhase::after_edge_tuple;
      break;
    }
    case K::bos: break;  // unreachable: grammar_allows rejects BOS
  }
}

inline GrammarState step_state(GrammarState st, const AttributedToken& tok, std::size_t position = 0) {
  advance_state(st, tok, position);
  return st;
}

/// Walks ranks in order; requires a connected graph whose types are valid
/// for `alphabets`.
inline std::vector<AttributedToken> encode_attributed(const AttributedGraph& ag, const Ordering& pi,
                                                      const TypeAlphabets& alphabets) {
  validate_types(ag, alphabets);
  if (ag.graph.node_count() == 0) throw ArgumentError("encode_attributed: empty graph");
  if (!is_connected(ag.graph)) throw ConnectivityError("encode_attributed requires a connected graph");
  const AttributedGraph h = apply_ordering(ag, pi);
  const std::size_t n = h.graph.node_count();
  std::vector<AttributedToken> out{AttributedToken::bos()};
  Rank prev_source = 0;
  for (NodeId u = 0; u < n; ++u) {
    const Rank r = u + 1;
    out.push_back(AttributedToken::node(h.node_types[u]));
    bool any = false;
    for (NodeId v : h.graph.neighbors(u)) {
      if (v < u) continue;
      out.push_back(AttributedToken::tuple(r - prev_source, v - u));
      out.push_back(AttributedToken::edge(h.edge_types.at({u, v})));
      prev_source = r;
      any = true;
    }
    if (!any) {
      out.push_back(AttributedToken::tuple(r - prev_source, 0));
      prev_source = r;
    }
  }
  out.push_back(AttributedToken::eos());
  return out;
}

inline AttributedGraph decode_attributed(std::span<const AttributedToken> tokens) {
  using K = AttributedToken::Kind;
  if (tokens.empty() || tokens.front().kind != K::bos) throw GrammarError(0, "stream must start with BOS");
  GrammarState st;
  std::vector<std::size_t> node_types;
  std::size_t pending_type = 0;
  std::vector<std::pair<RankPair, std::size_t>> edges;
  std::size_t pos = 1;
  for (; pos < tokens.size() && st.last_kind != GrammarPhase::done; ++pos) {
    const auto& tok = tokens[pos];
    const auto prev = st.last_kind;
    advance_state(st, tok, pos);
    if (tok.kind == K::node_type) pending_type = tok.type;
    if (tok.kind == K::edge_tuple && prev == GrammarPhase::after_node_type) node_types.push_back(pending_type);
    if (tok.kind == K::edge_tuple && tok.b > 0)
      edges.push_back({{st.current_source, st.current_source + tok.b}, 0});
    if (tok.kind == K::edge_type) edges.back().second = tok.type;
  }
  if (st.last_kind != GrammarPhase::done) throw GrammarError(pos, "stream ended without EOS");
  if (pos != tokens.size()) throw GrammarError(pos, expected_kinds(st));

  AttributedGraph ag;
  ag.graph = Graph(st.current_source);
  ag.node_types = std::move(node_types);
  for (const auto& [p, e] : edges) {
    ag.graph.add_edge(p.s - 1, p.t - 1);
    ag.edge_types[{p.s - 1, p.t - 1}] = e;
  }
  return ag;
}

inline std::vector<TokenId> tokenize(std::span<const AttributedToken> tokens, const AttributedVocabulary& v) {
  std::vector<TokenId> ids;
  ids.reserve(tokens.size());
  for (const auto& t : tokens) ids.push_back(v.id(t));
  return ids;
}

inline std::vector<AttributedToken> detokenize(std::span<const TokenId> ids, const AttributedVocabulary& v) {
  std::vector<AttributedToken> out;
  out.reserve(ids.size());
  for (TokenId id : ids) out.push_back(v.token(id));
  return out;
}

/// Largest real intra-edge gap of the attributed encoding (0 if edgeless).
inline std::size_t attributed_gap_bound(std::span<const AttributedToken> tokens) {
  std::size_t bound = 0;
  for (const auto& t : tokens)
    if (t.kind == AttributedToken::Kind::edge_tuple) bound = std::max({bound, t.a, t.b});
  return bound;
}

}  // namespace geel
