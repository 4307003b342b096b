#pragma once

// Autoregressive sampling of token streams and decode-with-accounting.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdlib>
#include <map>
#include <memory>
#include <random>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"

#include "geel/error.hpp"
#include "geel/model.hpp"
#include "geel/sequence_codec.hpp"

namespace geel {

enum class Masking { off, validity, grammar };

inline const char* to_string(Masking m) {
  switch (m) {
    case Masking::off: return "off";
    case Masking::validity: return "validity";
    case Masking::grammar: return "grammar";
  }
  return "unknown";
}

inline Masking parse_masking(std::string_view s) {
  if (s == "off") return Masking::off;
  if (s == "validity") return Masking::validity;
  if (s == "grammar") return Masking::grammar;
  throw ArgumentError("unknown masking '" + std::string(s) + "'");
}

struct SampleConfig {
  std::size_t num_graphs = 1;
  std::size_t max_tokens = 4096;  // generated tokens, BOS excluded
  double temperature = 1.0;
  Masking masking = Masking::off;
  std::uint64_t seed = 0;
  bool resample_invalid = false;  // keep drawing until num_graphs valid samples
  std::size_t max_attempts = 0;   // 0: 10 * num_graphs
  std::size_t threads = 0;        // 0: GEEL_THREADS or 1

  void validate() const {
    if (max_tokens == 0) throw ArgumentError("max_tokens must be positive");
    if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
  }
};

enum class SampleFailure { none, duplicate_edge, unsorted, overflow, dead_end, max_tokens, malformed, grammar };

inline const char* to_string(SampleFailure f) {
  switch (f) {
    case SampleFailure::none: return "none";
    case SampleFailure::duplicate_edge: return "duplicate_edge";
    case SampleFailure::unsorted: return "unsorted";
    case SampleFailure::overflow: return "overflow";
    case SampleFailure::dead_end: return "dead_end";
    case SampleFailure::max_tokens: return "max_tokens";
    case SampleFailure::malformed: return "malformed";
    case SampleFailure::grammar: return "grammar";
  }
  return "unknown";
}

inline SampleFailure failure_of(DecodeFailure f) {
  switch (f) {
    case DecodeFailure::unsorted: return SampleFailure::unsorted;
    case DecodeFailure::duplicate_edge: return SampleFailure::duplicate_edge;
    case DecodeFailure::overflow: return SampleFailure::overflow;
    case DecodeFailure::malformed: return SampleFailure::malformed;
    case DecodeFailure::grammar: return SampleFailure::grammar;
  }
  return SampleFailure::malformed;
}

/// Raw stream plus the reason generation stopped early, if any.
struct SampledStream {
  std::vector<TokenId> tokens;  // starts with BOS; ends with EOS when complete
  SampleFailure stop = SampleFailure::none;
};

/// Draws an id from softmax(logits / temperature) restricted to `allowed`
/// (null = all ids). Returns false when nothing is allowed.
inline bool sample_token(std::span<const double> logits, const std::vector<bool>* allowed, double temperature,
                         Rng& rng, TokenId& out, std::vector<double>& scratch) {
  const std::size_t v = logits.size();
  double top = -INFINITY;
  for (std::size_t j = 0; j < v; ++j)
    if (!allowed || (*allowed)[j]) top = std::max(top, logits[j] / temperature);
  if (top == -INFINITY) return false;
  scratch.assign(v, 0.0);
  double total = 0.0;
  for (std::size_t j = 0; j < v; ++j)
    if (!allowed || (*allowed)[j]) total += scratch[j] = std::exp(logits[j] / temperature - top);
  double u = std::uniform_real_distribution<double>(0.0, total)(rng);
  TokenId last = 0;
  for (std::size_t j = 0; j < v; ++j) {
    if (scratch[j] <= 0.0) continue;
    last = j;
    if (u < scratch[j]) {
      out = j;
      return true;
    }
    u -= scratch[j];
  }
  out = last;  // rounding at the top end
  return true;
}

/// Starts from BOS and samples until EOS, a dead end, a position beyond the
/// positional table (overflow), or max_tokens.
inline SampledStream sample_sequence(const Parameters& params, const SequenceCodec& codec, const SampleConfig& cfg,
                                     Rng& rng) {
  cfg.validate();
  if (codec.vocab_size() != params.vocab_size()) throw DimensionError("codec and model vocabularies differ");
  std::unique_ptr<TokenConstraint> constraint;
  if (cfg.masking != Masking::off) {
    constraint = codec.make_constraint(params.max_nodes());
    if (!constraint) throw ArgumentError("masking is not supported for this representation");
  }
  InferenceState state(params);
  SampledStream out;
  out.tokens.push_back(codec.bos());
  TokenId token = codec.bos();
  Rank position = 0;
  std::vector<bool> allowed;
  std::vector<double> scratch;
  for (std::size_t step = 0; step < cfg.max_tokens; ++step) {
    const auto logits = state.step(token, position);
    if (constraint) constraint->mask(allowed);
    TokenId next = 0;
    if (!sample_token(logits, constraint ? &allowed : nullptr, cfg.temperature, rng, next, scratch)) {
      out.stop = SampleFailure::dead_end;
      return out;
    }
    out.tokens.push_back(next);
    if (next == codec.eos()) return out;
    position = codec.next_position(position, next, out.tokens.size() - 1);
    if (position > params.max_nodes()) {
      out.stop = SampleFailure::overflow;
      return out;
    }
    if (constraint) constraint->accept(next);
    token = next;
  }
  out.stop = SampleFailure::max_tokens;
  return out;
}

struct SampleReport {
  std::size_t generated = 0;
  std::size_t valid = 0;
  std::map<std::string, std::size_t> failures;  // every non-valid sample counted once
  std::vector<double> seconds;                  // wall time per generated stream

  void record(SampleFailure f, double secs) {
    ++generated;
    if (f == SampleFailure::none)
      ++valid;
    else
      ++failures[to_string(f)];
    seconds.push_back(secs);
  }

  double validity() const { return generated ? static_cast<double>(valid) / static_cast<double>(generated) : 0.0; }
  double mean_seconds() const {
    if (seconds.empty()) return 0.0;
    double s = 0.0;
    for (double x : seconds) s += x;
    return s / static_cast<double>(seconds.size());
  }

  nlohmann::json to_json() const {
    nlohmann::json f = nlohmann::json::object();
    for (const char* k : {"duplicate_edge", "unsorted", "overflow", "dead_end", "max_tokens", "malformed", "grammar"})
      f[k] = failures.contains(k) ? failures.at(k) : 0;
    return {{"generated", generated}, {"valid", valid}, {"validity", validity()}, {"failures", f},
            {"mean_seconds_per_graph", mean_seconds()}};
  }
};

struct SampleBatch {
  std::vector<AttributedGraph> graphs;  // valid decodes, in attempt order
  std::vector<SampledStream> streams;   // every attempt
  SampleReport report;
};

inline std::size_t thread_count(std::size_t requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("GEEL_THREADS")) {
    const long n = std::strtol(env, nullptr, 10);
    if (n > 0) return static_cast<std::size_t>(n);
  }
  return 1;
}

/// Independent random stream for attempt `index`.
inline Rng split_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

inline SampleBatch sample_graphs(const Parameters& params, const SequenceCodec& codec, const SampleConfig& cfg) {
  cfg.validate();
  struct Attempt {
    SampledStream stream;
    SampleFailure failure = SampleFailure::none;
    AttributedGraph graph;
    double seconds = 0.0;
  };
  auto run_attempt = [&](std::size_t index) {
    Attempt a;
    const auto start = std::chrono::steady_clock::now();
    Rng rng = split_rng(cfg.seed, index);
    a.stream = sample_sequence(params, codec, cfg, rng);
    a.failure = a.stream.stop;
    if (a.failure == SampleFailure::none) {
      try {
        a.graph = codec.decode(a.stream.tokens, params.max_nodes());
      } catch (const DecodeError& e) {
        a.failure = failure_of(e.kind());
      }
    }
    a.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return a;
  };

  const std::size_t limit = cfg.resample_invalid ? (cfg.max_attempts ? cfg.max_attempts : 10 * cfg.num_graphs)
                                                 : cfg.num_graphs;
  const std::size_t workers = thread_count(cfg.threads);
  SampleBatch out;
  std::size_t next = 0;
  while (next < limit && out.graphs.size() < cfg.num_graphs) {
    const std::size_t want = cfg.resample_invalid ? cfg.num_graphs - out.graphs.size() : cfg.num_graphs;
    const std::size_t count = std::min(limit - next, want);
    std::vector<Attempt> attempts(count);
    if (workers <= 1 || count == 1) {
      for (std::size_t i = 0; i < count; ++i) attempts[i] = run_attempt(next + i);
    } else {
      std::vector<std::thread> pool;
      for (std::size_t w = 0; w < std::min(workers, count); ++w)
        pool.emplace_back([&, w] {
          for (std::size_t i = w; i < count; i += workers) attempts[i] = run_attempt(next + i);
        });
      for (auto& t : pool) t.join();
    }
    for (auto& a : attempts) {
      out.report.record(a.failure, a.seconds);
      if (a.failure == SampleFailure::none && out.graphs.size() < cfg.num_graphs) out.graphs.push_back(std::move(a.graph));
      out.streams.push_back(std::move(a.stream));
    }
    next += count;
    if (!cfg.resample_invalid) break;
  }
  return out;
}

/// Generates exactly `length` pair tokens (EOS and BOS suppressed, positions
/// saturated at the table capacity) and returns the elapsed seconds.
inline double time_fixed_length(const Parameters& params, const SequenceCodec& codec, std::size_t length, Rng& rng) {
  std::vector<bool> allowed(codec.vocab_size(), true);
  allowed[codec.bos()] = false;
  allowed[codec.eos()] = false;
  std::vector<double> scratch;
  const auto start = std::chrono::steady_clock::now();
  InferenceState state(params);
  TokenId token = codec.bos();
  Rank position = 0;
  for (std::size_t i = 0; i < length; ++i) {
    const auto logits = state.step(token, position);
    sample_token(logits, &allowed, 1.0, rng, token, scratch);
    position = std::min<Rank>(codec.next_position(position, token, i + 1), params.max_nodes());
  }
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct TimingRow {
  std::size_t m_edges = 0;
  double seconds = 0.0;
};

/// Mean generation seconds per target edge count, sorted ascending by M.
inline std::vector<TimingRow> timing_sweep(const Parameters& params, const SequenceCodec& codec,
                                           std::vector<std::size_t> sizes, std::size_t repeats, std::uint64_t seed) {
  std::sort(sizes.begin(), sizes.end());
  std::vector<TimingRow> rows;
  repeats = std::max<std::size_t>(1, repeats);
  for (std::size_t m : sizes) {
    double total = 0.0;
    for (std::size_t r = 0; r < repeats; ++r) {
      Rng rng = split_rng(seed, m * 1000 + r);
      total += time_fixed_length(params, codec, m, rng);
    }
    rows.push_back({m, total / static_cast<double>(repeats)});
  }
  return rows;
}

inline std::string timing_csv(std::span<const TimingRow> rows) {
  std::string out = "m_edges,seconds\n";
  for (const auto& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%zu,%.9f\n", r.m_edges, r.seconds);
    out += buf;
  }
  return out;
}

}  // namespace geel
