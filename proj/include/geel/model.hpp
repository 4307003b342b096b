#pragma once

// Autoregressive next-token model: token embedding plus source-rank
// positional embedding, a stack of LSTM layers (hidden size = embed_dim),
// and a linear softmax head. Gradients are computed by hand-written
// backpropagation through time.
//
// The backbone is reached only through embed/forward/backward and
// InferenceState::step, so another sequence-in/logits-out architecture can
// be dropped in behind the same calls.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "geel/codec.hpp"
#include "geel/error.hpp"
#include "geel/graph.hpp"

namespace geel {

struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

  double& operator()(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  double* row(std::size_t r) { return data.data() + r * cols; }
  const double* row(std::size_t r) const { return data.data() + r * cols; }
  std::size_t size() const noexcept { return data.size(); }

  void fill(double v) { std::fill(data.begin(), data.end(), v); }
  friend bool operator==(const Matrix&, const Matrix&) = default;
};

enum class SequenceMode { plain, attributed };

inline const char* to_string(SequenceMode m) { return m == SequenceMode::plain ? "plain" : "attributed"; }

struct ModelConfig {
  std::size_t vocab_size = 0;
  std::size_t embed_dim = 512;
  std::size_t num_layers = 3;
  double input_dropout = 0.1;
  std::size_t max_nodes = 0;  // positional table has max_nodes + 1 rows
  SequenceMode mode = SequenceMode::plain;

  void validate() const {
    if (vocab_size < 3) throw ArgumentError("vocab_size must be at least 3");
    if (embed_dim == 0) throw ArgumentError("embed_dim must be positive");
    if (num_layers == 0) throw ArgumentError("num_layers must be positive");
    if (!(input_dropout >= 0.0 && input_dropout < 1.0)) throw ArgumentError("input_dropout must be in [0, 1)");
  }
  friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

/// Gate blocks are stacked [input, forget, cell, output] along the rows.
struct LstmLayer {
  Matrix w_input;      // 4D x D
  Matrix w_recurrent;  // 4D x D
  Matrix bias;         // 1 x 4D
  friend bool operator==(const LstmLayer&, const LstmLayer&) = default;
};

struct Parameters {
  Matrix token_embedding;       // V x D
  Matrix positional_embedding;  // (max_nodes + 1) x D
  std::vector<LstmLayer> layers;
  Matrix output_weight;  // D x V
  Matrix output_bias;    // 1 x V

  static Parameters zeros(const ModelConfig& cfg) {
    cfg.validate();
    const std::size_t d = cfg.embed_dim, v = cfg.vocab_size;
    Parameters p;
    p.token_embedding = Matrix(v, d);
    p.positional_embedding = Matrix(cfg.max_nodes + 1, d);
    p.layers.resize(cfg.num_layers);
    for (auto& l : p.layers) {
      l.w_input = Matrix(4 * d, d);
      l.w_recurrent = Matrix(4 * d, d);
      l.bias = Matrix(1, 4 * d);
    }
    p.output_weight = Matrix(d, v);
    p.output_bias = Matrix(1, v);
    return p;
  }

  /// Uniform in +-1/sqrt(fan_in); lookup tables count as fan_in 1.
  static Parameters initialized(const ModelConfig& cfg, Rng& rng) {
    Parameters p = zeros(cfg);
    const double k = 1.0 / std::sqrt(static_cast<double>(cfg.embed_dim));
    auto fill = [&](Matrix& m, double bound) {
      std::uniform_real_distribution<double> u(-bound, bound);
      for (double& x : m.data) x = u(rng);
    };
    fill(p.token_embedding, 1.0);
    fill(p.positional_embedding, 1.0);
    for (auto& l : p.layers) {
      fill(l.w_input, k);
      fill(l.w_recurrent, k);
      fill(l.bias, k);
    }
    fill(p.output_weight, k);
    fill(p.output_bias, k);
    return p;
  }

  /// Tensors in checkpoint order.
  std::vector<Matrix*> tensors() {
    std::vector<Matrix*> out{&token_embedding, &positional_embedding};
    for (auto& l : layers) {
      out.push_back(&l.w_input);
      out.push_back(&l.w_recurrent);
      out.push_back(&l.bias);
    }
    out.push_back(&output_weight);
    out.push_back(&output_bias);
    return out;
  }
  std::vector<const Matrix*> tensors() const {
    auto mut = const_cast<Parameters*>(this)->tensors();
    return {mut.begin(), mut.end()};
  }

  static std::vector<std::string> tensor_names(std::size_t num_layers) {
    std::vector<std::string> out{"token_embedding", "positional_embedding"};
    for (std::size_t l = 0; l < num_layers; ++l) {
      out.push_back("layer" + std::to_string(l) + ".w_input");
      out.push_back("layer" + std::to_string(l) + ".w_recurrent");
      out.push_back("layer" + std::to_string(l) + ".bias");
    }
    out.push_back("output_weight");
    out.push_back("output_bias");
    return out;
  }

  std::size_t embed_dim() const noexcept { return token_embedding.cols; }
  std::size_t vocab_size() const noexcept { return token_embedding.rows; }
  std::size_t max_nodes() const noexcept { return positional_embedding.rows - 1; }

  friend bool operator==(const Parameters&, const Parameters&) = default;
};

using Gradients = Parameters;

/// One teacher-forcing example: the full BOS ... EOS id stream together with
/// the source rank associated with each token (0 for BOS).
struct EncodedSequence {
  std::vector<TokenId> tokens;
  std::vector<Rank> positions;
  friend bool operator==(const EncodedSequence&, const EncodedSequence&) = default;
};

namespace detail {

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// out[r] += sum_c w[r][c] * x[c]
inline void gemv_add(const Matrix& w, const double* x, double* out) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    double acc = 0.0;
    for (std::size_t c = 0; c < w.cols; ++c) acc += wr[c] * x[c];
    out[r] += acc;
  }
}

// out[c] += sum_r w[r][c] * y[r]
inline void gemv_t_add(const Matrix& w, const double* y, double* out) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double* wr = w.row(r);
    const double yr = y[r];
    if (yr == 0.0) continue;
    for (std::size_t c = 0; c < w.cols; ++c) out[c] += wr[c] * yr;
  }
}

// w[r][c] += y[r] * x[c]
inline void outer_add(Matrix& w, const double* y, const double* x) {
  for (std::size_t r = 0; r < w.rows; ++r) {
    const double yr = y[r];
    if (yr == 0.0) continue;
    double* wr = w.row(r);
    for (std::size_t c = 0; c < w.cols; ++c) wr[c] += yr * x[c];
  }
}

// One LSTM step. `gates` receives post-activation [i, f, g, o].
inline void lstm_cell(const LstmLayer& layer, const double* x, const double* h_prev, const double* c_prev,
                      double* gates, double* c_out, double* h_out, double* tanh_c_out, std::size_t d) {
  std::copy(layer.bias.data.begin(), layer.bias.data.end(), gates);
  gemv_add(layer.w_input, x, gates);
  gemv_add(layer.w_recurrent, h_prev, gates);
  for (std::size_t k = 0; k < d; ++k) {
    const double i = sigmoid(gates[k]);
    const double f = sigmoid(gates[d + k]);
    const double g = std::tanh(gates[2 * d + k]);
    const double o = sigmoid(gates[3 * d + k]);
    gates[k] = i;
    gates[d + k] = f;
    gates[2 * d + k] = g;
    gates[3 * d + k] = o;
    c_out[k] = f * c_prev[k] + i * g;
    tanh_c_out[k] = std::tanh(c_out[k]);
    h_out[k] = o * tanh_c_out[k];
  }
}

inline void output_head(const Parameters& p, const double* h, double* logits) {
  const std::size_t d = p.embed_dim(), v = p.vocab_size();
  std::copy(p.output_bias.data.begin(), p.output_bias.data.end(), logits);
  for (std::size_t k = 0; k < d; ++k) {
    const double hk = h[k];
    const double* w = p.output_weight.row(k);
    for (std::size_t j = 0; j < v; ++j) logits[j] += hk * w[j];
  }
}

inline void check_finite(const double* values, std::size_t n, std::size_t step) {
  for (std::size_t j = 0; j < n; ++j)
    if (!std::isfinite(values[j])) throw NumericError("non-finite logit", step);
}

inline double log_sum_exp(const double* x, std::size_t n) {
  const double top = *std::max_element(x, x + n);
  double s = 0.0;
  for (std::size_t j = 0; j < n; ++j) s += std::exp(x[j] - top);
  return top + std::log(s);
}

}  // namespace detail

/// output[m] = token_embedding[tokens[m]] + positional_embedding[positions[m]]
inline Matrix embed(const Parameters& p, std::span<const TokenId> tokens, std::span<const Rank> positions) {
  if (tokens.size() != positions.size()) throw DimensionError("tokens and positions differ in length");
  const std::size_t d = p.embed_dim();
  Matrix out(tokens.size(), d);
  for (std::size_t m = 0; m < tokens.size(); ++m) {
    if (tokens[m] >= p.vocab_size()) throw VocabularyError("token id " + std::to_string(tokens[m]) + " out of range");
    if (positions[m] > p.max_nodes())
      throw CapacityError("source rank " + std::to_string(positions[m]) + " exceeds positional capacity " +
                          std::to_string(p.max_nodes()));
    const double* te = p.token_embedding.row(tokens[m]);
    const double* pe = p.positional_embedding.row(positions[m]);
    double* o = out.row(m);
    for (std::size_t k = 0; k < d; ++k) o[k] = te[k] + pe[k];
  }
  return out;
}

/// Activations kept by forward() for backward().
struct ForwardCache {
  Matrix inputs;  // post-dropout inputs to layer 0, T x D
  struct Layer {
    Matrix gates;  // T x 4D
    Matrix cell;   // T x D
    Matrix hidden;
    Matrix tanh_cell;
  };
  std::vector<Layer> layers;
  Matrix logits;  // T x V
};

/// Stacked LSTM over the whole sequence from zero initial state. The
/// optional dropout mask (T x D, entries 0 or 1/(1-p)) scales the inputs.
inline ForwardCache forward_cached(const Parameters& p, const Matrix& inputs, const Matrix* dropout_mask = nullptr) {
  const std::size_t t_len = inputs.rows, d = p.embed_dim(), v = p.vocab_size();
  if (inputs.cols != d) throw DimensionError("input width differs from embed_dim");
  if (dropout_mask && (dropout_mask->rows != t_len || dropout_mask->cols != d))
    throw DimensionError("dropout mask shape mismatch");
  ForwardCache cache;
  cache.inputs = inputs;
  if (dropout_mask)
    for (std::size_t i = 0; i < inputs.size(); ++i) cache.inputs.data[i] *= dropout_mask->data[i];
  cache.layers.resize(p.layers.size());
  const std::vector<double> zeros(d, 0.0);
  for (std::size_t l = 0; l < p.layers.size(); ++l) {
    auto& lc = cache.layers[l];
    lc.gates = Matrix(t_len, 4 * d);
    lc.cell = Matrix(t_len, d);
    lc.hidden = Matrix(t_len, d);
    lc.tanh_cell = Matrix(t_len, d);
    const Matrix& below = l == 0 ? cache.inputs : cache.layers[l - 1].hidden;
    for (std::size_t t = 0; t < t_len; ++t) {
      const double* h_prev = t == 0 ? zeros.data() : lc.hidden.row(t - 1);
      const double* c_prev = t == 0 ? zeros.data() : lc.cell.row(t - 1);
      detail::lstm_cell(p.layers[l], below.row(t), h_prev, c_prev, lc.gates.row(t), lc.cell.row(t),
                        lc.hidden.row(t), lc.tanh_cell.row(t), d);
    }
  }
  cache.logits = Matrix(t_len, v);
  const Matrix& top = cache.layers.back().hidden;
  for (std::size_t t = 0; t < t_len; ++t) {
    detail::output_head(p, top.row(t), cache.logits.row(t));
    detail::check_finite(cache.logits.row(t), v, t);
  }
  return cache;
}

inline Matrix forward(const Parameters& p, const Matrix& inputs, const Matrix* dropout_mask = nullptr) {
  return forward_cached(p, inputs, dropout_mask).logits;
}

/// Mean next-token cross-entropy.
inline double loss(const Matrix& logits, std::span<const TokenId> targets) {
  if (logits.rows != targets.size()) throw DimensionError("logits and targets differ in length");
  if (targets.empty()) throw ArgumentError("loss over zero steps");
  double total = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) {
    if (targets[t] >= logits.cols) throw VocabularyError("target out of range");
    total += detail::log_sum_exp(logits.row(t), logits.cols) - logits(t, targets[t]);
  }
  return total / static_cast<double>(targets.size());
}

/// Adds scale * d(sum of step losses)/d(params) into `grad`; returns the
/// summed (unscaled) loss of the sequence.
inline double accumulate_gradients(const Parameters& p, const EncodedSequence& seq, Gradients& grad, double scale,
                                   const Matrix* dropout_mask = nullptr) {
  if (seq.tokens.size() < 2) throw ArgumentError("sequence needs at least one target");
  if (seq.positions.size() != seq.tokens.size()) throw DimensionError("positions length mismatch");
  const std::size_t t_len = seq.tokens.size() - 1, d = p.embed_dim(), v = p.vocab_size();
  const std::span<const TokenId> inputs_ids(seq.tokens.data(), t_len);
  const std::span<const Rank> positions(seq.positions.data(), t_len);
  const std::span<const TokenId> targets(seq.tokens.data() + 1, t_len);

  const Matrix embedded = embed(p, inputs_ids, positions);
  const ForwardCache cache = forward_cached(p, embedded, dropout_mask);

  // Output head.
  double summed = 0.0;
  Matrix d_top(t_len, d);
  std::vector<double> d_logits(v);
  const Matrix& top = cache.layers.back().hidden;
  for (std::size_t t = 0; t < t_len; ++t) {
    const double* lg = cache.logits.row(t);
    const double lse = detail::log_sum_exp(lg, v);
    summed += lse - lg[targets[t]];
    for (std::size_t j = 0; j < v; ++j) d_logits[j] = std::exp(lg[j] - lse) * scale;
    d_logits[targets[t]] -= scale;
    for (std::size_t j = 0; j < v; ++j) grad.output_bias.data[j] += d_logits[j];
    detail::outer_add(grad.output_weight, top.row(t), d_logits.data());
    // d_top[t][k] = sum_j W[k][j] * d_logits[j]
    double* dt = d_top.row(t);
    for (std::size_t k = 0; k < d; ++k) {
      const double* w = p.output_weight.row(k);
      double acc = 0.0;
      for (std::size_t j = 0; j < v; ++j) acc += w[j] * d_logits[j];
      dt[k] = acc;
    }
  }

  // Backpropagation through time, top layer first.
  Matrix d_above = std::move(d_top);
  std::vector<double> dh_next(d), dc_next(d), d_pre(4 * d);
  const std::vector<double> zeros(d, 0.0);
  for (std::size_t li = p.layers.size(); li-- > 0;) {
    const auto& layer = p.layers[li];
    auto& gl = grad.layers[li];
    const auto& lc = cache.layers[li];
    const Matrix& below = li == 0 ? cache.inputs : cache.layers[li - 1].hidden;
    Matrix d_below(t_len, d);
    std::fill(dh_next.begin(), dh_next.end(), 0.0);
    std::fill(dc_next.begin(), dc_next.end(), 0.0);
    for (std::size_t t = t_len; t-- > 0;) {
      const double* gates = lc.gates.row(t);
      const double* tc = lc.tanh_cell.row(t);
      const double* c_prev = t == 0 ? zeros.data() : lc.cell.row(t - 1);
      const double* h_prev = t == 0 ? zeros.data() : lc.hidden.row(t - 1);
      const double* da = d_above.row(t);
      for (std::size_t k = 0; k < d; ++k) {
        const double i = gates[k], f = gates[d + k], g = gates[2 * d + k], o = gates[3 * d + k];
        const double dh = da[k] + dh_next[k];
        const double d_o = dh * tc[k];
        const double dc = dc_next[k] + dh * o * (1.0 - tc[k] * tc[k]);
        d_pre[k] = dc * g * i * (1.0 - i);
        d_pre[d + k] = dc * c_prev[k] * f * (1.0 - f);
        d_pre[2 * d + k] = dc * i * (1.0 - g * g);
        d_pre[3 * d + k] = d_o * o * (1.0 - o);
        dc_next[k] = dc * f;
      }
      for (std::size_t r = 0; r < 4 * d; ++r) gl.bias.data[r] += d_pre[r];
      detail::outer_add(gl.w_input, d_pre.data(), below.row(t));
      detail::outer_add(gl.w_recurrent, d_pre.data(), h_prev);
      detail::gemv_t_add(layer.w_input, d_pre.data(), d_below.row(t));
      std::fill(dh_next.begin(), dh_next.end(), 0.0);
      detail::gemv_t_add(layer.w_recurrent, d_pre.data(), dh_next.data());
    }
    d_above = std::move(d_below);
  }

  // Embedding tables, through the dropout mask.
  for (std::size_t t = 0; t < t_len; ++t) {
    double* gt = grad.token_embedding.row(inputs_ids[t]);
    double* gp = grad.positional_embedding.row(positions[t]);
    const double* dx = d_above.row(t);
    for (std::size_t k = 0; k < d; ++k) {
      const double g = dropout_mask ? dx[k] * (*dropout_mask)(t, k) : dx[k];
      gt[k] += g;
      gp[k] += g;
    }
  }
  return summed;
}

struct BatchGradient {
  double loss = 0.0;        // mean per-target loss over the batch
  std::size_t targets = 0;  // number of predicted tokens
  Gradients grad;
};

/// Exact gradient of the mean per-target loss of a batch. `masks`, when given,
/// holds one dropout mask per sequence.
inline BatchGradient backward(const Parameters& p, std::span<const EncodedSequence> batch,
                              std::span<const Matrix> masks = {}) {
  if (batch.empty()) throw ArgumentError("backward over an empty batch");
  if (!masks.empty() && masks.size() != batch.size()) throw DimensionError("one dropout mask per sequence");
  std::size_t targets = 0;
  for (const auto& s : batch) {
    if (s.tokens.size() < 2) throw ArgumentError("sequence needs at least one target");
    targets += s.tokens.size() - 1;
  }
  BatchGradient out;
  out.grad = p;
  for (Matrix* m : out.grad.tensors()) m->fill(0.0);
  const double scale = 1.0 / static_cast<double>(targets);
  double summed = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i)
    summed += accumulate_gradients(p, batch[i], out.grad, scale, masks.empty() ? nullptr : &masks[i]);
  out.loss = summed * scale;
  out.targets = targets;
  return out;
}

/// Teacher-forced mean per-target loss of a batch (no dropout).
inline double batch_loss(const Parameters& p, std::span<const EncodedSequence> batch) {
  double summed = 0.0;
  std::size_t targets = 0;
  for (const auto& s : batch) {
    const std::size_t t_len = s.tokens.size() - 1;
    const Matrix logits = forward(p, embed(p, std::span(s.tokens.data(), t_len), std::span(s.positions.data(), t_len)));
    summed += loss(logits, std::span(s.tokens.data() + 1, t_len)) * static_cast<double>(t_len);
    targets += t_len;
  }
  if (targets == 0) throw ArgumentError("batch_loss over zero targets");
  return summed / static_cast<double>(targets);
}

/// Recurrent state for incremental generation; O(layers * D) per step.
class InferenceState {
 public:
  explicit InferenceState(const Parameters& p)
      : params_(&p),
        d_(p.embed_dim()),
        hidden_(p.layers.size(), std::vector<double>(d_, 0.0)),
        cell_(p.layers.size(), std::vector<double>(d_, 0.0)),
        x_(d_),
        gates_(4 * d_),
        h_new_(d_),
        c_new_(d_),
        tanh_c_(d_),
        logits_(p.vocab_size()) {}

  /// Feeds one token with its source rank and returns next-token logits.
  std::span<const double> step(TokenId token, Rank position) {
    const Parameters& p = *params_;
    if (token >= p.vocab_size()) throw VocabularyError("token id out of range");
    if (position > p.max_nodes()) throw CapacityError("source rank exceeds positional capacity");
    const double* te = p.token_embedding.row(token);
    const double* pe = p.positional_embedding.row(position);
    for (std::size_t k = 0; k < d_; ++k) x_[k] = te[k] + pe[k];
    const double* input = x_.data();
    for (std::size_t l = 0; l < p.layers.size(); ++l) {
      detail::lstm_cell(p.layers[l], input, hidden_[l].data(), cell_[l].data(), gates_.data(), c_new_.data(),
                        h_new_.data(), tanh_c_.data(), d_);
      hidden_[l].swap(h_new_);
      cell_[l].swap(c_new_);
      input = hidden_[l].data();
    }
    detail::output_head(p, hidden_.back().data(), logits_.data());
    detail::check_finite(logits_.data(), logits_.size(), steps_);
    ++steps_;
    return logits_;
  }

  std::size_t steps() const noexcept { return steps_; }

 private:
  const Parameters* params_;
  std::size_t d_;
  std::vector<std::vector<double>> hidden_, cell_;
  std::vector<double> x_, gates_, h_new_, c_new_, tanh_c_, logits_;
  std::size_t steps_ = 0;
};

/// Inverted-dropout mask with entries 0 or 1/(1-p).
inline Matrix make_dropout_mask(std::size_t rows, std::size_t cols, double p, Rng& rng) {
  Matrix m(rows, cols, 1.0);
  if (p <= 0.0) return m;
  std::bernoulli_distribution keep(1.0 - p);
  const double scale = 1.0 / (1.0 - p);
  for (double& x : m.data) x = keep(rng) ? scale : 0.0;
  return m;
}

}  // namespace geel
