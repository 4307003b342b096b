#pragma once

#include <cmath>
#include <cstddef>

#include "geel/model.hpp"

namespace geel {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam moments shaped like the parameters.
struct AdamState {
  AdamConfig config;
  std::size_t step = 0;
  Parameters first_moment;
  Parameters second_moment;

  AdamState() = default;
  AdamState(const Parameters& shape, AdamConfig cfg) : config(cfg), first_moment(shape), second_moment(shape) {
    for (Matrix* m : first_moment.tensors()) m->fill(0.0);
    for (Matrix* m : second_moment.tensors()) m->fill(0.0);
  }
};

inline void adam_step(AdamState& state, Parameters& params, const Gradients& grad) {
  const auto& c = state.config;
  ++state.step;
  const double correction1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double correction2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));
  auto p = params.tensors();
  auto g = grad.tensors();
  auto m = state.first_moment.tensors();
  auto v = state.second_moment.tensors();
  if (p.size() != g.size() || p.size() != m.size()) throw DimensionError("adam: tensor count mismatch");
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k]->size() != g[k]->size()) throw DimensionError("adam: tensor shape mismatch");
    double* pd = p[k]->data.data();
    const double* gd = g[k]->data.data();
    double* md = m[k]->data.data();
    double* vd = v[k]->data.data();
    for (std::size_t i = 0; i < p[k]->size(); ++i) {
      md[i] = c.beta1 * md[i] + (1.0 - c.beta1) * gd[i];
      vd[i] = c.beta2 * vd[i] + (1.0 - c.beta2) * gd[i] * gd[i];
      const double m_hat = md[i] / correction1;
      const double v_hat = vd[i] / correction2;
      pd[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
    }
  }
}

inline double gradient_norm(const Gradients& grad) {
  double s = 0.0;
  for (const Matrix* m : grad.tensors())
    for (double x : m->data) s += x * x;
  return std::sqrt(s);
}

/// Rescales the gradient so its global L2 norm is at most `max_norm`.
inline void clip_gradient_norm(Gradients& grad, double max_norm) {
  const double n = gradient_norm(grad);
  if (max_norm <= 0.0 || n <= max_norm) return;
  const double scale = max_norm / n;
  for (Matrix* m : grad.tensors())
    for (double& x : m->data) x *= scale;
}

}  // namespace geel
