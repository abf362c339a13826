#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "charparse/num/tape.hpp"
#include "charparse/num/tensor.hpp"
#include "charparse/util/error.hpp"

namespace charparse::num {

/// Adadelta per-parameter state: running averages of squared gradients and
/// squared updates. The effective step needs no learning rate; epsilon is
/// supplied per call so the trainer can anneal it across epochs.
template <typename T>
struct AdadeltaState {
  Tensor<T> sq_grad;
  Tensor<T> sq_delta;

  AdadeltaState() = default;
  explicit AdadeltaState(const std::vector<int>& shape)
      : sq_grad(shape), sq_delta(shape) {}

  void step(Tensor<T>& value, const Tensor<T>& grad, double rho, double eps) {
    if (!value.same_shape(grad) || !value.same_shape(sq_grad))
      throw NumericError("adadelta: shape mismatch");
    T r = static_cast<T>(rho), e = static_cast<T>(eps);
    for (size_t i = 0; i < value.v.size(); ++i) {
      T g = grad.v[i];
      sq_grad.v[i] = r * sq_grad.v[i] + (T(1) - r) * g * g;
      T delta = -std::sqrt((sq_delta.v[i] + e) / (sq_grad.v[i] + e)) * g;
      sq_delta.v[i] = r * sq_delta.v[i] + (T(1) - r) * delta * delta;
      value.v[i] += delta;
    }
  }
};

/// Geometric anneal from eps_start at epoch 0 to eps_end at epoch
/// total_epochs-1 (constant when total_epochs <= 1).
inline double annealed_epsilon(double eps_start, double eps_end, int epoch,
                               int total_epochs) {
  if (total_epochs <= 1) return eps_start;
  double t = static_cast<double>(epoch) / static_cast<double>(total_epochs - 1);
  if (t < 0) t = 0;
  if (t > 1) t = 1;
  return eps_start * std::pow(eps_end / eps_start, t);
}

/// Adaptive gradient clipping against an exponential running mean of
/// observed gradient norms. A step's global norm is capped at `factor`
/// times the running mean; the mean then absorbs the (possibly clipped)
/// norm. The first observed norm seeds the mean and is never clipped.
struct ClipState {
  double mean_norm = 0.0;
  bool seeded = false;
  double decay = 0.99;
  double factor = 2.0;

  /// Returns the scale (<= 1) to apply to every gradient.
  double admit(double norm) {
    if (!std::isfinite(norm)) throw NumericError("clip: non-finite gradient norm");
    if (!seeded) {
      mean_norm = norm;
      seeded = true;
      return 1.0;
    }
    double limit = factor * mean_norm;
    double clipped = norm > limit ? limit : norm;
    mean_norm = decay * mean_norm + (1.0 - decay) * clipped;
    return norm > limit && norm > 0 ? limit / norm : 1.0;
  }
};

template <typename T>
double global_grad_norm(const std::vector<Parameter<T>*>& params) {
  double s = 0;
  for (const Parameter<T>* p : params)
    for (T g : p->grad.v) s += static_cast<double>(g) * static_cast<double>(g);
  return std::sqrt(s);
}

template <typename T>
void scale_grads(const std::vector<Parameter<T>*>& params, double scale) {
  if (scale == 1.0) return;
  for (Parameter<T>* p : params)
    for (T& g : p->grad.v) g *= static_cast<T>(scale);
}

/// Multiplicative shrink of non-bias parameter values, applied once per
/// epoch. factor 1.0 disables it.
template <typename T>
void weight_decay(const std::vector<Parameter<T>*>& params, double factor) {
  if (factor == 1.0) return;
  if (factor <= 0.0 || factor > 1.0)
    throw NumericError("weight_decay: factor must be in (0,1]");
  for (Parameter<T>* p : params) {
    if (p->is_bias) continue;
    for (T& v : p->value.v) v *= static_cast<T>(factor);
  }
}

}  // namespace charparse::num
