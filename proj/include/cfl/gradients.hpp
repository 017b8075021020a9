#pragma once

// Analytic logit gradients for every loss kind, plus the central-difference
// oracle used to check them.
//
// Every loss is a sum of per-class terms l_c(p_c). Through the softmax
// Jacobian dp_c/dz_j = p_c (delta_cj - p_j), so with a_c = p_c * l_c'(p_c)
//
//   dL/dz_j = a_j - p_j * sum_c a_c.
//
// The functions below only have to produce a_c for each term.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <functional>
#include <span>
#include <type_traits>
#include <utility>
#include <vector>

#include "cfl/loss.hpp"

namespace cfl {

namespace detail {

// a_c contribution of a target term -w(p) log p, given w(p) and p * w'(p).
template <std::floating_point T>
T target_term_coefficient(T weight, T p_dweight, T log_prob) {
  const bool log_active = log_prob >= static_cast<T>(std::log(kProbEpsilon));
  return -p_dweight * clamped_log(log_prob) - (log_active ? weight : T(0));
}

// p * d/dp (1 - p)^g. The base is clamped away from 0 so g < 1 stays finite.
template <std::floating_point T>
T p_dweight_low(T p, T gamma) {
  return gamma == T(0) ? T(0) : -gamma * p * std::pow(T(1) - clamp_prob(p), gamma - T(1));
}

// p * d/dp (1 + p)^g.
template <std::floating_point T>
T p_dweight_high(T p, T gamma) {
  return gamma == T(0) ? T(0) : gamma * p * std::pow(T(1) + p, gamma - T(1));
}

// p * d/dp of -p^g log(1 - p) for a non-target class.
template <std::floating_point T>
T negative_coefficient(T p, T gamma) {
  const T weight = weight_pow(p, gamma);
  T coeff = -gamma * weight * safe_log1m(p);
  if (p <= static_cast<T>(1.0 - kProbEpsilon)) coeff += weight * p / (T(1) - p);
  return coeff;
}

// Mirrors target_weight in loss.hpp.
template <std::floating_point T>
T target_p_dweight(T pt, const LossSpec& spec, T xi) {
  const auto g = [](double v) { return static_cast<T>(v); };
  switch (spec.kind) {
    case LossKind::CE: return T(0);
    case LossKind::FL: return p_dweight_low(pt, g(spec.gamma_lc));
    case LossKind::ASL: return p_dweight_low(pt, g(spec.gamma_pos));
    case LossKind::CFL:
      return xi * p_dweight_high(pt, g(spec.gamma_hc)) +
             (T(1) - xi) * p_dweight_low(pt, g(spec.gamma_lc));
    case LossKind::CASL:
      return xi * p_dweight_high(pt, g(spec.gamma_hc)) +
             (T(1) - xi) * p_dweight_low(pt, g(spec.gamma_pos));
  }
  return T(0);
}

template <std::floating_point T>
std::vector<T> grad_from_softmax(const SoftmaxResult<T>& sm, std::size_t target,
                                 const LossSpec& spec, T xi) {
  const std::size_t num_classes = sm.prob.size();
  const T pt = sm.prob[target];
  std::vector<T> a(num_classes, T(0));
  a[target] = target_term_coefficient(target_weight(pt, spec, xi),
                                      target_p_dweight(pt, spec, xi), sm.log_prob[target]);
  const T scale = negatives_scale(spec, xi);
  if (scale != T(0)) {
    const T gamma_neg = static_cast<T>(spec.gamma_neg);
    for (std::size_t c = 0; c < num_classes; ++c) {
      if (c != target) a[c] = scale * negative_coefficient(sm.prob[c], gamma_neg);
    }
  }

  T sum_a = 0;
  for (T v : a) sum_a += v;
  std::vector<T> grad(num_classes);
  for (std::size_t j = 0; j < num_classes; ++j) grad[j] = a[j] - sm.prob[j] * sum_a;
  return grad;
}

}  // namespace detail

/// Exact gradient of multiclass_loss with respect to the logits.
template <std::floating_point T>
std::vector<T> loss_grad(std::type_identity_t<std::span<const T>> logits, std::size_t target,
                         const LossSpec& spec, T xi) {
  detail::check_sample(logits.size(), target, spec, xi);
  return detail::grad_from_softmax(detail::log_softmax(logits), target, spec, xi);
}

/// Loss value and gradient from a single softmax evaluation.
template <std::floating_point T>
std::pair<T, std::vector<T>> loss_and_grad(std::type_identity_t<std::span<const T>> logits,
                                           std::size_t target, const LossSpec& spec, T xi) {
  detail::check_sample(logits.size(), target, spec, xi);
  const auto sm = detail::log_softmax(logits);
  return {detail::loss_from_softmax(sm, target, spec, xi),
          detail::grad_from_softmax(sm, target, spec, xi)};
}

/// Central differences (f(x + h e_i) - f(x - h e_i)) / 2h for each coordinate.
template <std::floating_point T, std::invocable<std::span<const T>> F>
std::vector<T> central_difference(F&& f, std::type_identity_t<std::span<const T>> x, T h) {
  detail::require(h > T(0), "finite-difference step must be positive");
  std::vector<T> point(x.begin(), x.end());
  std::vector<T> grad(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const T saved = point[i];
    point[i] = saved + h;
    const T forward = std::invoke(f, std::span<const T>(point));
    point[i] = saved - h;
    const T backward = std::invoke(f, std::span<const T>(point));
    point[i] = saved;
    grad[i] = (forward - backward) / (T(2) * h);
  }
  return grad;
}

/// Finite-difference gradient of multiclass_loss. Test oracle only.
template <std::floating_point T>
std::vector<T> fd_grad(std::type_identity_t<std::span<const T>> logits, std::size_t target,
                       const LossSpec& spec, T xi, T h = T(1e-4)) {
  detail::check_sample(logits.size(), target, spec, xi);
  return central_difference<T>(
      [&](std::span<const T> z) { return multiclass_loss<T>(z, target, spec, xi); }, logits, h);
}

/// |a - b| / max(|a|, |b|, 1e-8).
inline double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

inline double max_relative_error(std::span<const double> a, std::span<const double> b) {
  detail::require(a.size() == b.size(), "gradient length mismatch");
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, relative_error(a[i], b[i]));
  return worst;
}

/// True when some softmax probability lies within 10 eps of a clamp boundary,
/// where the loss has a kink and finite differences are meaningless.
template <std::floating_point T>
bool near_clamp_boundary(std::span<const T> logits) {
  const auto prob = softmax(logits);
  const T margin = static_cast<T>(10.0 * kProbEpsilon);
  return std::any_of(prob.begin(), prob.end(),
                     [&](T p) { return p < margin || p > T(1) - margin; });
}

}  // namespace cfl
