#pragma once

// Teacher-forced training over graphs re-encoded under a freshly drawn
// ordering at every step.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <span>
#include <vector>

#include "geel/codec.hpp"
#include "geel/grammar.hpp"
#include "geel/graph.hpp"
#include "geel/model.hpp"
#include "geel/optimizer.hpp"
#include "geel/sequence_codec.hpp"

namespace geel {

struct CodecOptions {
  Representation representation = Representation::geel;
  SequenceMode mode = SequenceMode::plain;
  OrderingSpec ordering{OrderingFamily::cuthill_mckee, StartPolicy::sampled};
  std::size_t bound_samples = 16;  // orderings drawn per graph when sizing the vocabulary
  double node_slack = 2.0;         // positional capacity = ceil(slack * max N)
};

/// Codec sized for a corpus plus the positional capacity it implies.
struct CodecFit {
  std::unique_ptr<SequenceCodec> codec;
  std::size_t max_nodes = 0;
  std::size_t corpus_max_nodes = 0;
};

/// Sizes the vocabulary from the corpus: gap bounds are maxima over the
/// deterministic C-M encoding and `bound_samples` draws of the training
/// ordering family (random orderings get the universal bound N-1).
inline CodecFit fit_codec(std::span<const AttributedGraph> graphs, const CodecOptions& opt,
                          const TypeAlphabets& alphabets, Rng& rng) {
  if (graphs.empty()) throw ArgumentError("fit_codec: empty corpus");
  std::size_t max_n = 0, bound = 1;
  for (const auto& g : graphs) {
    max_n = std::max(max_n, g.graph.node_count());
    bound = std::max(bound, bandwidth(g.graph, cuthill_mckee(g.graph)));
    if (opt.ordering.family == OrderingFamily::random) {
      bound = std::max(bound, g.graph.node_count() - 1);
    } else if (!is_deterministic(opt.ordering)) {
      for (std::size_t k = 0; k < opt.bound_samples; ++k)
        bound = std::max(bound, bandwidth(g.graph, make_ordering(g.graph, opt.ordering, &rng)));
    } else {
      bound = std::max(bound, bandwidth(g.graph, make_ordering(g.graph, opt.ordering, nullptr)));
    }
  }
  CodecFit fit;
  fit.corpus_max_nodes = max_n;
  fit.max_nodes = static_cast<std::size_t>(std::ceil(opt.node_slack * static_cast<double>(max_n)));
  fit.max_nodes = std::max(fit.max_nodes, max_n);
  if (opt.mode == SequenceMode::attributed) {
    if (opt.representation != Representation::geel) throw ArgumentError("attributed mode requires geel");
    fit.codec = std::make_unique<AttributedCodec>(AttributedVocabulary(bound, alphabets));
    return fit;
  }
  switch (opt.representation) {
    case Representation::geel: fit.codec = std::make_unique<GeelCodec>(bound); break;
    case Representation::edge_list: fit.codec = std::make_unique<EdgeListCodec>(fit.max_nodes); break;
    case Representation::intra_gap: fit.codec = std::make_unique<IntraGapCodec>(fit.max_nodes, bound); break;
    case Representation::flat_adjacency: fit.codec = std::make_unique<FlatAdjacencyCodec>(fit.max_nodes); break;
  }
  return fit;
}

struct TrainConfig {
  std::size_t batch_size = 32;
  double learning_rate = 1e-3;
  OrderingSpec ordering{OrderingFamily::cuthill_mckee, StartPolicy::sampled};
  double clip_norm = 0.0;       // 0 disables clipping
  std::size_t max_seq_len = 0;  // 0 disables truncation
  std::uint64_t seed = 0;
};

struct TrainState {
  std::size_t step = 0;   // optimizer steps taken
  std::size_t epoch = 0;  // epochs completed
  AdamState adam;
  double learning_rate = 1e-3;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  Rng rng;
  std::size_t skipped = 0;  // encodings rejected by the vocabulary so far

  TrainState() = default;
  TrainState(const Parameters& params, const TrainConfig& cfg)
      : adam(params, AdamConfig{cfg.learning_rate}),
        learning_rate(cfg.learning_rate),
        batch_size(cfg.batch_size),
        seed(cfg.seed),
        rng(cfg.seed) {}
};

struct EpochResult {
  double loss = 0.0;  // mean per-target loss over the epoch
  std::size_t sequences = 0;
  std::size_t skipped = 0;
  double seconds = 0.0;
};

/// Encodes one graph for training; returns false (and leaves `out` alone)
/// when the encoding does not fit the vocabulary or positional table.
inline bool encode_for_training(const AttributedGraph& g, const SequenceCodec& codec, const Ordering& pi,
                                std::size_t max_nodes, std::size_t max_seq_len, EncodedSequence& out) {
  EncodedSequence seq;
  try {
    seq = codec.encode(g, pi);
  } catch (const VocabularyError&) {
    return false;
  }
  for (Rank r : seq.positions)
    if (r > max_nodes) return false;
  if (max_seq_len > 0 && seq.tokens.size() > max_seq_len) {
    seq.tokens.resize(max_seq_len);
    seq.positions.resize(max_seq_len);
  }
  out = std::move(seq);
  return true;
}

inline EpochResult train_epoch(TrainState& state, Parameters& params, std::span<const AttributedGraph> dataset,
                               const SequenceCodec& codec, const ModelConfig& model_cfg, const TrainConfig& cfg) {
  if (dataset.empty()) throw ArgumentError("train_epoch: empty dataset");
  const auto start = std::chrono::steady_clock::now();
  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), state.rng);

  EpochResult result;
  double weighted = 0.0;
  std::size_t targets = 0;
  // the state's rate and batch size win, so schedules can adjust them between epochs
  const std::size_t batch_size = std::max<std::size_t>(1, state.batch_size);
  state.adam.config.learning_rate = state.learning_rate;
  for (std::size_t first = 0; first < order.size(); first += batch_size) {
    std::vector<EncodedSequence> batch;
    std::vector<Matrix> masks;
    for (std::size_t k = first; k < std::min(order.size(), first + batch_size); ++k) {
      const auto& g = dataset[order[k]];
      const Ordering pi = make_ordering(g.graph, cfg.ordering, &state.rng);
      EncodedSequence seq;
      if (!encode_for_training(g, codec, pi, params.max_nodes(), cfg.max_seq_len, seq) || seq.tokens.size() < 2) {
        ++result.skipped;
        continue;
      }
      if (model_cfg.input_dropout > 0.0)
        masks.push_back(make_dropout_mask(seq.tokens.size() - 1, params.embed_dim(), model_cfg.input_dropout, state.rng));
      batch.push_back(std::move(seq));
    }
    if (batch.empty()) continue;
    BatchGradient bg = backward(params, batch, masks);
    if (cfg.clip_norm > 0.0) clip_gradient_norm(bg.grad, cfg.clip_norm);
    adam_step(state.adam, params, bg.grad);
    ++state.step;
    weighted += bg.loss * static_cast<double>(bg.targets);
    targets += bg.targets;
    result.sequences += batch.size();
  }
  state.skipped += result.skipped;
  ++state.epoch;
  result.loss = targets > 0 ? weighted / static_cast<double>(targets) : 0.0;
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

/// Fresh model and optimizer state for a fitted codec.
struct TrainingRun {
  ModelConfig model_config;
  Parameters params;
  TrainState state;
};

inline TrainingRun start_training(const CodecFit& fit, std::size_t embed_dim, std::size_t num_layers,
                                  double input_dropout, const TrainConfig& cfg) {
  TrainingRun run;
  run.model_config.vocab_size = fit.codec->vocab_size();
  run.model_config.embed_dim = embed_dim;
  run.model_config.num_layers = num_layers;
  run.model_config.input_dropout = input_dropout;
  run.model_config.max_nodes = fit.max_nodes;
  run.model_config.mode = fit.codec->mode();
  run.model_config.validate();
  Rng init(cfg.seed ^ 0x9e3779b97f4a7c15ULL);
  run.params = Parameters::initialized(run.model_config, init);
  run.state = TrainState(run.params, cfg);
  return run;
}

struct ModelOptions {
  std::size_t epochs = 50;
  std::size_t embed_dim = 512;
  std::size_t num_layers = 3;
  double input_dropout = 0.1;
};

struct TrainOutcome {
  CodecFit fit;
  TrainingRun run;
  std::vector<EpochResult> curve;
};

/// Fits a codec to the corpus, then runs `epochs` epochs; `on_epoch` sees the
/// outcome after each one.
inline TrainOutcome train_model(std::span<const AttributedGraph> graphs, const TypeAlphabets& alphabets,
                                const CodecOptions& codec_opt, const TrainConfig& cfg, const ModelOptions& model,
                                const std::function<void(const TrainOutcome&)>& on_epoch = {}) {
  Rng fit_rng(cfg.seed + 1);
  TrainOutcome out;
  out.fit = fit_codec(graphs, codec_opt, alphabets, fit_rng);
  out.run = start_training(out.fit, model.embed_dim, model.num_layers, model.input_dropout, cfg);
  for (std::size_t e = 0; e < model.epochs; ++e) {
    out.curve.push_back(train_epoch(out.run.state, out.run.params, graphs, *out.fit.codec, out.run.model_config, cfg));
    if (on_epoch) on_epoch(out);
  }
  return out;
}

}  // namespace geel
