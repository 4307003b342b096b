#pragma once

// Representation-agnostic view of a graph <-> token-id codec, as consumed by
// the training loop and the sampler. One implementation per representation:
// GEEL (plain and attributed) and the three ablation baselines.

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "geel/codec.hpp"
#include "geel/error.hpp"
#include "geel/grammar.hpp"
#include "geel/graph.hpp"
#include "geel/model.hpp"

namespace geel {

enum class Representation { geel, edge_list, intra_gap, flat_adjacency };

inline const char* to_string(Representation r) {
  switch (r) {
    case Representation::geel: return "geel";
    case Representation::edge_list: return "edge-list";
    case Representation::intra_gap: return "intra-gap";
    case Representation::flat_adjacency: return "flat-adj";
  }
  return "unknown";
}

inline Representation parse_representation(std::string_view s) {
  if (s == "geel") return Representation::geel;
  if (s == "edge-list") return Representation::edge_list;
  if (s == "intra-gap") return Representation::intra_gap;
  if (s == "flat-adj") return Representation::flat_adjacency;
  throw ArgumentError("unknown representation '" + std::string(s) + "'");
}

inline SequenceMode parse_sequence_mode(std::string_view s) {
  if (s == "plain") return SequenceMode::plain;
  if (s == "attributed") return SequenceMode::attributed;
  throw ArgumentError("unknown mode '" + std::string(s) + "'");
}

/// Incremental validity filter over next-token ids.
class TokenConstraint {
 public:
  virtual ~TokenConstraint() = default;
  /// Writes allowed[id] for every id.
  virtual void mask(std::vector<bool>& allowed) const = 0;
  virtual void accept(TokenId id) = 0;
};

class SequenceCodec {
 public:
  virtual ~SequenceCodec() = default;

  virtual Representation representation() const = 0;
  virtual SequenceMode mode() const { return SequenceMode::plain; }
  virtual std::size_t vocab_size() const = 0;
  virtual TokenId bos() const = 0;
  virtual TokenId eos() const = 0;

  /// BOS ... EOS ids of `g` under `pi`. Plain codecs ignore type maps.
  virtual std::vector<TokenId> encode_ids(const AttributedGraph& g, const Ordering& pi) const = 0;

  /// Strict decode; throws DecodeError. `node_cap` > 0 turns any rank above
  /// it into an overflow failure. Plain codecs return empty type maps.
  virtual AttributedGraph decode(std::span<const TokenId> ids, std::size_t node_cap = 0) const = 0;

  /// Source rank attached to `token` given the rank attached to the token
  /// before it; `index` is the token's position in the stream.
  virtual Rank next_position(Rank previous, TokenId token, std::size_t index) const = 0;

  /// Validity filter for constrained sampling, or null if unsupported.
  virtual std::unique_ptr<TokenConstraint> make_constraint(std::size_t node_budget) const {
    (void)node_budget;
    return nullptr;
  }

  virtual std::string describe_token(TokenId id) const = 0;
  virtual TokenId parse_token(const std::string& text) const = 0;
  virtual nlohmann::json to_json() const = 0;

  EncodedSequence encode(const AttributedGraph& g, const Ordering& pi) const {
    EncodedSequence seq;
    seq.tokens = encode_ids(g, pi);
    seq.positions = positions_for(seq.tokens);
    return seq;
  }

  std::vector<Rank> positions_for(std::span<const TokenId> ids) const {
    std::vector<Rank> pos(ids.size(), 0);
    Rank prev = 0;
    for (std::size_t i = 0; i < ids.size(); ++i) pos[i] = prev = next_position(prev, ids[i], i);
    return pos;
  }

  static std::unique_ptr<SequenceCodec> from_json(const nlohmann::json& j);
};

inline AttributedGraph untyped(Graph g) {
  AttributedGraph ag;
  ag.graph = std::move(g);
  return ag;
}

namespace detail {

inline void check_wrapped(std::span<const TokenId> ids, TokenId bos, TokenId eos) {
  if (ids.empty() || ids.front() != bos) throw DecodeError(DecodeFailure::malformed, 0, "missing BOS");
  if (ids.size() < 2 || ids.back() != eos) throw DecodeError(DecodeFailure::malformed, ids.size(), "missing EOS");
  for (std::size_t i = 1; i + 1 < ids.size(); ++i)
    if (ids[i] == bos || ids[i] == eos) throw DecodeError(DecodeFailure::malformed, i, "special token inside stream");
}

inline std::vector<TokenPair> inner_pairs(std::span<const TokenId> ids, const Vocabulary& v) {
  check_wrapped(ids, v.bos(), v.eos());
  std::vector<TokenPair> pairs;
  pairs.reserve(ids.size() - 2);
  for (std::size_t i = 1; i + 1 < ids.size(); ++i) {
    if (!v.is_pair(ids[i])) throw DecodeError(DecodeFailure::malformed, i, "id outside vocabulary");
    pairs.push_back(v.pair(ids[i]));
  }
  if (pairs.empty()) throw DecodeError(DecodeFailure::malformed, 1, "empty sequence encodes no graph");
  return pairs;
}

inline Graph graph_from_edge_list(EdgeList el) {
  Rank top = 0;
  for (const auto& p : el.pairs) top = std::max(top, p.t);
  el.node_count = top;
  return edge_list_to_graph(el);
}

}  // namespace detail

/// Plain-mode validity: sorted, duplicate-free, connected prefix
/// (each new source s <= max earlier target), targets within the budget.
class PlainValidityConstraint final : public TokenConstraint {
 public:
  PlainValidityConstraint(Vocabulary v, std::size_t node_budget) : vocab_(std::move(v)), budget_(node_budget) {}

  bool allows(TokenId id) const {
    if (id == vocab_.bos()) return false;
    if (id == vocab_.eos()) return edges_ > 0;
    if (!vocab_.is_pair(id)) return false;
    const auto [a, b] = vocab_.pair(id);
    if (a == 0) return edges_ > 0 && b > last_b_ && source_ + b <= budget_;
    const Rank s = source_ + a;
    const bool reachable = edges_ == 0 ? s == 1 : s <= max_target_;
    return reachable && s + b <= budget_;
  }

  void mask(std::vector<bool>& allowed) const override {
    allowed.assign(vocab_.size(), false);
    for (TokenId id = 0; id < vocab_.size(); ++id) allowed[id] = allows(id);
  }

  void accept(TokenId id) override {
    if (!vocab_.is_pair(id)) return;
    const auto [a, b] = vocab_.pair(id);
    source_ += a;
    last_b_ = b;
    max_target_ = std::max(max_target_, source_ + b);
    ++edges_;
  }

 private:
  Vocabulary vocab_;
  std::size_t budget_;
  Rank source_ = 0;
  std::size_t last_b_ = 0;
  Rank max_target_ = 0;
  std::size_t edges_ = 0;
};

class GeelCodec final : public SequenceCodec {
 public:
  explicit GeelCodec(std::size_t gap_bound) : vocab_(Vocabulary::geel(gap_bound)) {}

  const Vocabulary& vocabulary() const noexcept { return vocab_; }
  Representation representation() const override { return Representation::geel; }
  std::size_t vocab_size() const override { return vocab_.size(); }
  TokenId bos() const override { return vocab_.bos(); }
  TokenId eos() const override { return vocab_.eos(); }

  std::vector<TokenId> encode_ids(const AttributedGraph& g, const Ordering& pi) const override {
    return tokenize(encode_geel(g.graph, pi), vocab_);
  }

  AttributedGraph decode(std::span<const TokenId> ids, std::size_t node_cap) const override {
    GeelSequence gs;
    gs.node_count = node_cap;
    for (const auto& p : detail::inner_pairs(ids, vocab_)) gs.pairs.push_back({p.first, p.second});
    return untyped(geel_to_graph(gs));
  }

  Rank next_position(Rank previous, TokenId token, std::size_t) const override {
    return vocab_.is_pair(token) ? previous + vocab_.pair(token).first : previous;
  }

  std::unique_ptr<TokenConstraint> make_constraint(std::size_t node_budget) const override {
    return std::make_unique<PlainValidityConstraint>(vocab_, node_budget);
  }

  std::string describe_token(TokenId id) const override {
    const TokenId ids[] = {id};
    auto s = format_token_dump(ids, vocab_);
    s.pop_back();
    return s;
  }
  TokenId parse_token(const std::string& text) const override { return parse_token_line(text, vocab_); }

  nlohmann::json to_json() const override {
    return {{"representation", "geel"}, {"mode", "plain"}, {"gap_bound", vocab_.gap_bound()}};
  }

 private:
  Vocabulary vocab_;
};

class EdgeListCodec final : public SequenceCodec {
 public:
  explicit EdgeListCodec(std::size_t node_bound) : vocab_(Vocabulary::edge_list(node_bound)) {}

  Representation representation() const override { return Representation::edge_list; }
  std::size_t vocab_size() const override { return vocab_.size(); }
  TokenId bos() const override { return vocab_.bos(); }
  TokenId eos() const override { return vocab_.eos(); }

  std::vector<TokenId> encode_ids(const AttributedGraph& g, const Ordering& pi) const override {
    std::vector<TokenId> ids{vocab_.bos()};
    for (const auto& p : raw_edge_list_pairs(to_edge_list(g.graph, pi))) ids.push_back(vocab_.id(p));
    ids.push_back(vocab_.eos());
    return ids;
  }

  AttributedGraph decode(std::span<const TokenId> ids, std::size_t node_cap) const override {
    const auto pairs = detail::inner_pairs(ids, vocab_);
    return untyped(detail::graph_from_edge_list(decode_raw_edge_list(pairs, node_cap)));
  }

  Rank next_position(Rank previous, TokenId token, std::size_t) const override {
    return vocab_.is_pair(token) ? vocab_.pair(token).first : previous;
  }

  std::string describe_token(TokenId id) const override {
    if (id == bos()) return "BOS";
    if (id == eos()) return "EOS";
    const auto p = vocab_.pair(id);
    return std::to_string(p.first) + "," + std::to_string(p.second);
  }
  TokenId parse_token(const std::string& text) const override { return parse_token_line(text, vocab_); }

  nlohmann::json to_json() const override {
    return {{"representation", "edge-list"}, {"mode", "plain"}, {"node_bound", vocab_.first_max()}};
  }

 private:
  Vocabulary vocab_;
};

class IntraGapCodec final : public SequenceCodec {
 public:
  IntraGapCodec(std::size_t node_bound, std::size_t gap_bound) : vocab_(Vocabulary::intra_gap(node_bound, gap_bound)) {}

  Representation representation() const override { return Representation::intra_gap; }
  std::size_t vocab_size() const override { return vocab_.size(); }
  TokenId bos() const override { return vocab_.bos(); }
  TokenId eos() const override { return vocab_.eos(); }

  std::vector<TokenId> encode_ids(const AttributedGraph& g, const Ordering& pi) const override {
    std::vector<TokenId> ids{vocab_.bos()};
    for (const auto& p : intra_gap_pairs(to_edge_list(g.graph, pi))) ids.push_back(vocab_.id(p));
    ids.push_back(vocab_.eos());
    return ids;
  }

  AttributedGraph decode(std::span<const TokenId> ids, std::size_t node_cap) const override {
    const auto pairs = detail::inner_pairs(ids, vocab_);
    return untyped(detail::graph_from_edge_list(decode_intra_gap(pairs, node_cap)));
  }

  Rank next_position(Rank previous, TokenId token, std::size_t) const override {
    return vocab_.is_pair(token) ? vocab_.pair(token).first : previous;
  }

  std::string describe_token(TokenId id) const override {
    if (id == bos()) return "BOS";
    if (id == eos()) return "EOS";
    const auto p = vocab_.pair(id);
    return std::to_string(p.first) + "," + std::to_string(p.second);
  }
  TokenId parse_token(const std::string& text) const override { return parse_token_line(text, vocab_); }

  nlohmann::json to_json() const override {
    return {{"representation", "intra-gap"},
            {"mode", "plain"},
            {"node_bound", vocab_.first_max()},
            {"gap_bound", vocab_.gap_bound()}};
  }

 private:
  Vocabulary vocab_;
};

/// Binary upper-triangle stream: ids 0/1 are cells, then BOS and EOS.
/// No positional signal (every position is 0).
class FlatAdjacencyCodec final : public SequenceCodec {
 public:
  explicit FlatAdjacencyCodec(std::size_t node_bound) : node_bound_(node_bound) {}

  Representation representation() const override { return Representation::flat_adjacency; }
  std::size_t vocab_size() const override { return 4; }
  TokenId bos() const override { return 2; }
  TokenId eos() const override { return 3; }

  std::vector<TokenId> encode_ids(const AttributedGraph& g, const Ordering& pi) const override {
    if (!is_connected(g.graph)) throw ConnectivityError("flat adjacency codec requires a connected graph");
    std::vector<TokenId> ids{bos()};
    for (auto bit : flatten_adjacency(g.graph, pi)) ids.push_back(bit);
    ids.push_back(eos());
    return ids;
  }

  AttributedGraph decode(std::span<const TokenId> ids, std::size_t node_cap) const override {
    detail::check_wrapped(ids, bos(), eos());
    std::vector<std::uint8_t> bits;
    for (std::size_t i = 1; i + 1 < ids.size(); ++i) {
      if (ids[i] > 1) throw DecodeError(DecodeFailure::malformed, i, "id outside vocabulary");
      bits.push_back(static_cast<std::uint8_t>(ids[i]));
    }
    if (bits.empty()) throw DecodeError(DecodeFailure::malformed, 1, "empty sequence encodes no graph");
    Graph g = unflatten_adjacency(bits);
    if (node_cap > 0 && g.node_count() > node_cap)
      throw DecodeError(DecodeFailure::overflow, ids.size() - 1, "node count exceeds cap");
    return untyped(std::move(g));
  }

  Rank next_position(Rank, TokenId, std::size_t) const override { return 0; }

  std::string describe_token(TokenId id) const override {
    if (id == bos()) return "BOS";
    if (id == eos()) return "EOS";
    return std::to_string(id);
  }
  TokenId parse_token(const std::string& text) const override {
    if (text == "BOS") return bos();
    if (text == "EOS") return eos();
    if (text == "0" || text == "1") return text == "1" ? 1 : 0;
    throw VocabularyError("bad token '" + text + "'");
  }

  nlohmann::json to_json() const override {
    return {{"representation", "flat-adj"}, {"mode", "plain"}, {"node_bound", node_bound_}};
  }

 private:
  std::size_t node_bound_;
};

class GrammarConstraint final : public TokenConstraint {
 public:
  GrammarConstraint(AttributedVocabulary v, std::size_t node_budget) : vocab_(std::move(v)), state_(node_budget) {}

  void mask(std::vector<bool>& allowed) const override {
    allowed.assign(vocab_.size(), false);
    for (TokenId id = 0; id < vocab_.size(); ++id) allowed[id] = grammar_allows(state_, vocab_.token(id));
  }
  void accept(TokenId id) override {
    if (id == vocab_.bos()) return;
    advance_state(state_, vocab_.token(id));
  }
  const GrammarState& state() const noexcept { return state_; }

 private:
  AttributedVocabulary vocab_;
  GrammarState state_;
};

class AttributedCodec final : public SequenceCodec {
 public:
  explicit AttributedCodec(AttributedVocabulary v) : vocab_(std::move(v)) {}

  const AttributedVocabulary& vocabulary() const noexcept { return vocab_; }
  Representation representation() const override { return Representation::geel; }
  SequenceMode mode() const override { return SequenceMode::attributed; }
  std::size_t vocab_size() const override { return vocab_.size(); }
  TokenId bos() const override { return vocab_.bos(); }
  TokenId eos() const override { return vocab_.eos(); }

  std::vector<TokenId> encode_ids(const AttributedGraph& g, const Ordering& pi) const override {
    return tokenize(encode_attributed(g, pi, vocab_.alphabets()), vocab_);
  }

  AttributedGraph decode(std::span<const TokenId> ids, std::size_t node_cap) const override {
    std::vector<AttributedToken> tokens;
    tokens.reserve(ids.size());
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (ids[i] >= vocab_.size()) throw DecodeError(DecodeFailure::malformed, i, "id outside vocabulary");
      tokens.push_back(vocab_.token(ids[i]));
    }
    AttributedGraph ag = decode_attributed(tokens);
    if (node_cap > 0 && ag.graph.node_count() > node_cap)
      throw DecodeError(DecodeFailure::overflow, ids.size() - 1, "node count exceeds cap");
    return ag;
  }

  Rank next_position(Rank previous, TokenId token, std::size_t) const override {
    if (token >= vocab_.tuple_count()) return previous;
    return previous + vocab_.token(token).a;
  }

  std::unique_ptr<TokenConstraint> make_constraint(std::size_t node_budget) const override {
    return std::make_unique<GrammarConstraint>(vocab_, node_budget);
  }

  std::string describe_token(TokenId id) const override { return vocab_.describe(id); }
  TokenId parse_token(const std::string& text) const override { return vocab_.parse(text); }

  nlohmann::json to_json() const override {
    return {{"representation", "geel"},
            {"mode", "attributed"},
            {"gap_bound", vocab_.gap_bound()},
            {"node_types", vocab_.alphabets().node_types()},
            {"edge_types", vocab_.alphabets().edge_types()}};
  }

 private:
  AttributedVocabulary vocab_;
};

inline std::unique_ptr<SequenceCodec> SequenceCodec::from_json(const nlohmann::json& j) {
  const auto repr = parse_representation(j.at("representation").get<std::string>());
  const auto mode = parse_sequence_mode(j.value("mode", std::string("plain")));
  if (mode == SequenceMode::attributed) {
    if (repr != Representation::geel) throw ArgumentError("attributed mode requires the geel representation");
    TypeAlphabets alphabets(j.at("node_types").get<std::vector<std::string>>(),
                            j.at("edge_types").get<std::vector<std::string>>());
    return std::make_unique<AttributedCodec>(AttributedVocabulary(j.at("gap_bound").get<std::size_t>(), alphabets));
  }
  switch (repr) {
    case Representation::geel: return std::make_unique<GeelCodec>(j.at("gap_bound").get<std::size_t>());
    case Representation::edge_list: return std::make_unique<EdgeListCodec>(j.at("node_bound").get<std::size_t>());
    case Representation::intra_gap:
      return std::make_unique<IntraGapCodec>(j.at("node_bound").get<std::size_t>(), j.at("gap_bound").get<std::size_t>());
    case Representation::flat_adjacency:
      return std::make_unique<FlatAdjacencyCodec>(j.at("node_bound").get<std::size_t>());
  }
  throw ArgumentError("unknown representation");
}

}  // namespace geel
