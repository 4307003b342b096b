#pragma once

// Sorted edge lists, gap encodings and their token vocabularies.
//
// A connected graph under an ordering becomes a sorted edge list of rank
// pairs (s, t), s < t. The gap encoding replaces each pair by
//   a = s - s_prev   (s_prev = 0 before the first pair)
//   b = t - s
// so that the largest b is the bandwidth and, by connectivity, so is the
// largest a. a = 0 whenever two consecutive edges share a source.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "geel/error.hpp"
#include "geel/graph.hpp"

namespace geel {

using TokenId = std::size_t;

struct RankPair {
  Rank s = 0;
  Rank t = 0;
  friend bool operator==(const RankPair&, const RankPair&) = default;
  friend auto operator<=>(const RankPair&, const RankPair&) = default;
};

struct EdgeList {
  std::size_t node_count = 0;
  std::vector<RankPair> pairs;
  friend bool operator==(const EdgeList&, const EdgeList&) = default;
};

struct GapPair {
  std::size_t a = 0;
  std::size_t b = 0;
  friend bool operator==(const GapPair&, const GapPair&) = default;
};

struct GeelSequence {
  std::size_t node_count = 0;  // 0 when unknown (no upper bound checked)
  std::vector<GapPair> pairs;
  friend bool operator==(const GeelSequence&, const GeelSequence&) = default;
};

/// Generic two-component token used by every pair representation.
struct TokenPair {
  std::size_t first = 0;
  std::size_t second = 0;
  friend bool operator==(const TokenPair&, const TokenPair&) = default;
};

inline EdgeList to_edge_list(const Graph& g, const Ordering& pi) {
  if (pi.size() != g.node_count()) throw DimensionError("ordering length mismatch");
  if (!is_connected(g)) throw ConnectivityError("to_edge_list requires a connected graph");
  EdgeList el;
  el.node_count = g.node_count();
  el.pairs.reserve(g.edge_count());
  for (const auto& [u, v] : g.edges()) {
    const Rank ru = pi.rank(u), rv = pi.rank(v);
    el.pairs.push_back(ru < rv ? RankPair{ru, rv} : RankPair{rv, ru});
  }
  std::sort(el.pairs.begin(), el.pairs.end());
  return el;
}

/// Throws OrderingError unless pairs are strictly increasing with 1 <= s < t <= N.
inline void validate_edge_list(const EdgeList& el) {
  for (std::size_t m = 0; m < el.pairs.size(); ++m) {
    const auto& p = el.pairs[m];
    if (p.s < 1 || p.s >= p.t || (el.node_count > 0 && p.t > el.node_count))
      throw OrderingError("pair " + std::to_string(m) + " violates 1 <= s < t <= N");
    if (m > 0 && !(el.pairs[m - 1] < p))
      throw OrderingError("edge list not strictly sorted at pair " + std::to_string(m));
  }
}

inline Graph edge_list_to_graph(const EdgeList& el) {
  Graph g(el.node_count);
  for (const auto& p : el.pairs) g.add_edge(p.s - 1, p.t - 1);
  return g;
}

inline GeelSequence gap_encode(const EdgeList& el) {
  validate_edge_list(el);
  GeelSequence gs;
  gs.node_count = el.node_count;
  gs.pairs.reserve(el.pairs.size());
  Rank prev = 0;
  for (const auto& p : el.pairs) {
    gs.pairs.push_back({p.s - prev, p.t - p.s});
    prev = p.s;
  }
  return gs;
}

namespace detail {

// Shared strict check on a recovered rank pair; `prev` is the previous
// recovered pair (s == 0 when m == 0).
inline void check_recovered(std::size_t m, RankPair prev, RankPair cur, std::size_t node_count) {
  if (cur.s < 1) throw DecodeError(DecodeFailure::malformed, m, "source rank 0");
  if (cur.t <= cur.s) throw DecodeError(DecodeFailure::malformed, m, "target not above source");
  if (m > 0) {
    if (cur == prev) throw DecodeError(DecodeFailure::duplicate_edge, m, "edge repeated");
    if (cur < prev) throw DecodeError(DecodeFailure::unsorted, m, "pair not after its predecessor");
  }
  if (node_count > 0 && cur.t > node_count)
    throw DecodeError(DecodeFailure::overflow, m,
                      "target " + std::to_string(cur.t) + " exceeds " + std::to_string(node_count) + " nodes");
}

}  // namespace detail

inline EdgeList gap_decode(const GeelSequence& gs) {
  EdgeList el;
  el.node_count = gs.node_count;
  el.pairs.reserve(gs.pairs.size());
  RankPair prev{};
  Rank source = 0;
  for (std::size_t m = 0; m < gs.pairs.size(); ++m) {
    const auto [a, b] = gs.pairs[m];
    if (b == 0) throw DecodeError(DecodeFailure::malformed, m, "intra-edge gap must be positive");
    source += a;
    const RankPair cur{source, source + b};
    detail::check_recovered(m, prev, cur, gs.node_count);
    el.pairs.push_back(cur);
    prev = cur;
  }
  return el;
}

/// Decodes to a graph whose node count is the largest recovered rank.
inline Graph geel_to_graph(const GeelSequence& gs) {
  if (gs.pairs.empty()) throw DecodeError(DecodeFailure::malformed, 0, "empty sequence encodes no graph");
  EdgeList el = gap_decode(gs);
  Rank top = 0;
  for (const auto& p : el.pairs) top = std::max(top, p.t);
  el.node_count = top;
  return edge_list_to_graph(el);
}

inline GeelSequence encode_geel(const Graph& g, const Ordering& pi) {
  return gap_encode(to_edge_list(g, pi));
}

/// Dense ids for every pair in a rectangle of (first, second) values plus
/// BOS and EOS at the end.
class Vocabulary {
 public:
  enum class Kind { geel, edge_list, intra_gap };

  Vocabulary() = default;

  /// {0..B} x {1..B}: B(B+1) pair tokens.
  static Vocabulary geel(std::size_t gap_bound) {
    if (gap_bound < 1) throw ArgumentError("gap bound must be positive");
    return Vocabulary(Kind::geel, 0, gap_bound, 1, gap_bound, gap_bound);
  }
  /// {1..N} x {1..N}: N^2 pair tokens (unpruned).
  static Vocabulary edge_list(std::size_t node_bound) {
    if (node_bound < 1) throw ArgumentError("node bound must be positive");
    return Vocabulary(Kind::edge_list, 1, node_bound, 1, node_bound, 0);
  }
  /// {1..N} x {1..B}: N*B pair tokens.
  static Vocabulary intra_gap(std::size_t node_bound, std::size_t gap_bound) {
    if (node_bound < 1 || gap_bound < 1) throw ArgumentError("bounds must be positive");
    return Vocabulary(Kind::intra_gap, 1, node_bound, 1, gap_bound, gap_bound);
  }

  Kind kind() const noexcept { return kind_; }
  std::size_t gap_bound() const noexcept { return gap_bound_; }
  std::size_t first_min() const noexcept { return first_min_; }
  std::size_t first_max() const noexcept { return first_max_; }
  std::size_t second_min() const noexcept { return second_min_; }
  std::size_t second_max() const noexcept { return second_max_; }

  std::size_t pair_token_count() const noexcept { return width() * (first_max_ - first_min_ + 1); }
  TokenId bos() const noexcept { return pair_token_count(); }
  TokenId eos() const noexcept { return pair_token_count() + 1; }
  std::size_t size() const noexcept { return pair_token_count() + 2; }

  bool contains(TokenPair p) const noexcept {
    return p.first >= first_min_ && p.first <= first_max_ && p.second >= second_min_ &&
           p.second <= second_max_;
  }
  bool is_pair(TokenId id) const noexcept { return id < pair_token_count(); }

  TokenId id(TokenPair p) const {
    if (!contains(p))
      throw VocabularyError("pair (" + std::to_string(p.first) + "," + std::to_string(p.second) +
                            ") outside vocabulary");
    return (p.first - first_min_) * width() + (p.second - second_min_);
  }

  TokenPair pair(TokenId id) const {
    if (!is_pair(id)) throw VocabularyError("token " + std::to_string(id) + " is not a pair token");
    return {first_min_ + id / width(), second_min_ + id % width()};
  }

  friend bool operator==(const Vocabulary&, const Vocabulary&) = default;

 private:
  Vocabulary(Kind k, std::size_t f0, std::size_t f1, std::size_t s0, std::size_t s1, std::size_t bound)
      : kind_(k), first_min_(f0), first_max_(f1), second_min_(s0), second_max_(s1), gap_bound_(bound) {}

  std::size_t width() const noexcept { return second_max_ - second_min_ + 1; }

  Kind kind_ = Kind::geel;
  std::size_t first_min_ = 0, first_max_ = 1, second_min_ = 1, second_max_ = 1;
  std::size_t gap_bound_ = 1;
};

inline std::size_t gap_bound_of(const GeelSequence& gs) {
  std::size_t bound = 0;
  for (const auto& [a, b] : gs.pairs) bound = std::max({bound, a, b});
  return bound;
}

/// B = max over the corpus of max(a, b); the vocabulary covers the whole
/// rectangle, not only observed pairs.
inline Vocabulary build_vocabulary(std::span<const GeelSequence> corpus) {
  if (corpus.empty()) throw ArgumentError("build_vocabulary: empty corpus");
  std::size_t bound = 1;
  for (const auto& gs : corpus) bound = std::max(bound, gap_bound_of(gs));
  return Vocabulary::geel(bound);
}

inline std::vector<TokenId> tokenize(const GeelSequence& gs, const Vocabulary& v) {
  std::vector<TokenId> ids;
  ids.reserve(gs.pairs.size() + 2);
  ids.push_back(v.bos());
  for (const auto& [a, b] : gs.pairs) ids.push_back(v.id({a, b}));
  ids.push_back(v.eos());
  return ids;
}

/// Strips BOS/EOS and maps ids back to gap pairs. Gap validity is left to
/// gap_decode.
inline GeelSequence detokenize(std::span<const TokenId> ids, const Vocabulary& v,
                               std::size_t node_count = 0) {
  if (ids.size() < 2 || ids.front() != v.bos() || ids.back() != v.eos())
    throw VocabularyError("token stream must be wrapped in BOS ... EOS");
  GeelSequence gs;
  gs.node_count = node_count;
  for (std::size_t i = 1; i + 1 < ids.size(); ++i) {
    if (!v.is_pair(ids[i]))
      throw VocabularyError("special or unknown token " + std::to_string(ids[i]) + " at position " +
                            std::to_string(i));
    const auto p = v.pair(ids[i]);
    gs.pairs.push_back({p.first, p.second});
  }
  return gs;
}

/// Debug dump: one line per token, "a,b" or "BOS"/"EOS".
inline std::string format_token_dump(std::span<const TokenId> ids, const Vocabulary& v) {
  std::string out;
  for (TokenId id : ids) {
    if (id == v.bos()) {
      out += "BOS\n";
    } else if (id == v.eos()) {
      out += "EOS\n";
    } else {
      const auto p = v.pair(id);
      out += std::to_string(p.first) + "," + std::to_string(p.second) + "\n";
    }
  }
  return out;
}

inline TokenId parse_token_line(std::string_view line, const Vocabulary& v) {
  if (line == "BOS") return v.bos();
  if (line == "EOS") return v.eos();
  const auto comma = line.find(',');
  if (comma == std::string_view::npos) throw VocabularyError("bad token line '" + std::string(line) + "'");
  try {
    const std::size_t a = std::stoul(std::string(line.substr(0, comma)));
    const std::size_t b = std::stoul(std::string(line.substr(comma + 1)));
    return v.id({a, b});
  } catch (const std::invalid_argument&) {
    throw VocabularyError("bad token line '" + std::string(line) + "'");
  }
}

inline std::vector<TokenId> parse_token_dump(std::string_view text, const Vocabulary& v) {
  std::vector<TokenId> ids;
  std::istringstream in{std::string(text)};
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line.front() == '#') continue;
    ids.push_back(parse_token_line(line, v));
  }
  return ids;
}

// Alternative representations, used for the representation ablation.

/// Upper triangle (excluding the diagonal) in row-major rank order.
inline std::vector<std::uint8_t> flatten_adjacency(const Graph& g, const Ordering& pi) {
  const Graph h = apply_ordering(g, pi);
  const std::size_t n = h.node_count();
  std::vector<std::uint8_t> bits;
  bits.reserve(n * (n - (n > 0)) / 2);
  for (NodeId r = 0; r < n; ++r)
    for (NodeId c = r + 1; c < n; ++c) bits.push_back(h.has_edge(r, c) ? 1 : 0);
  return bits;
}

inline Graph unflatten_adjacency(std::span<const std::uint8_t> bits) {
  std::size_t n = 1;
  while (n * (n - 1) / 2 < bits.size()) ++n;
  if (n * (n - 1) / 2 != bits.size())
    throw DecodeError(DecodeFailure::malformed, bits.size(), "length is not a triangular number");
  Graph g(n);
  std::size_t k = 0;
  for (NodeId r = 0; r < n; ++r)
    for (NodeId c = r + 1; c < n; ++c, ++k) {
      if (bits[k] > 1) throw DecodeError(DecodeFailure::malformed, k, "non-binary cell");
      if (bits[k]) g.add_edge(r, c);
    }
  return g;
}

inline std::vector<TokenPair> raw_edge_list_pairs(const EdgeList& el) {
  validate_edge_list(el);
  std::vector<TokenPair> out;
  out.reserve(el.pairs.size());
  for (const auto& p : el.pairs) out.push_back({p.s, p.t});
  return out;
}

inline std::vector<TokenPair> intra_gap_pairs(const EdgeList& el) {
  validate_edge_list(el);
  std::vector<TokenPair> out;
  out.reserve(el.pairs.size());
  for (const auto& p : el.pairs) out.push_back({p.s, p.t - p.s});
  return out;
}

/// Bare pair ids (no BOS/EOS) over the N^2 edge-list vocabulary.
inline std::vector<TokenId> raw_edge_list_tokens(const EdgeList& el, std::size_t node_bound) {
  const auto v = Vocabulary::edge_list(node_bound);
  std::vector<TokenId> ids;
  for (const auto& p : raw_edge_list_pairs(el)) ids.push_back(v.id(p));
  return ids;
}

/// Bare pair ids (no BOS/EOS) over the N*B intra-gap vocabulary.
inline std::vector<TokenId> intra_gap_tokens(const EdgeList& el, const Vocabulary& v) {
  std::vector<TokenId> ids;
  for (const auto& p : intra_gap_pairs(el)) ids.push_back(v.id(p));
  return ids;
}

inline EdgeList decode_raw_edge_list(std::span<const TokenPair> pairs, std::size_t node_count = 0) {
  EdgeList el;
  el.node_count = node_count;
  RankPair prev{};
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    const RankPair cur{pairs[m].first, pairs[m].second};
    detail::check_recovered(m, prev, cur, node_count);
    el.pairs.push_back(cur);
    prev = cur;
  }
  return el;
}

inline EdgeList decode_intra_gap(std::span<const TokenPair> pairs, std::size_t node_count = 0) {
  EdgeList el;
  el.node_count = node_count;
  RankPair prev{};
  for (std::size_t m = 0; m < pairs.size(); ++m) {
    if (pairs[m].second == 0) throw DecodeError(DecodeFailure::malformed, m, "intra-edge gap must be positive");
    const RankPair cur{pairs[m].first, pairs[m].first + pairs[m].second};
    detail::check_recovered(m, prev, cur, node_count);
    el.pairs.push_back(cur);
    prev = cur;
  }
  return el;
}

}  // namespace geel
