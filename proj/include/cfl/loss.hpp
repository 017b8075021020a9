#pragma once

// Forward evaluation of cross-entropy, focal, asymmetric focal and their
// cyclical variants on softmax probabilities.
//
// All functions are templated on the floating-point type so the same code
// path can be evaluated in extended precision (the finite-difference oracle
// in gradients.hpp relies on this).

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "cfl/error.hpp"

namespace cfl {

enum class LossKind { CE, FL, ASL, CFL, CASL };

/// Flag spelling used by the CLI and config files.
inline std::string_view to_string(LossKind kind) {
  switch (kind) {
    case LossKind::CE: return "ce";
    case LossKind::FL: return "focal";
    case LossKind::ASL: return "asym";
    case LossKind::CFL: return "cyclical";
    case LossKind::CASL: return "asym-cyclical";
  }
  return "ce";
}

inline LossKind parse_loss_kind(std::string_view name) {
  for (auto kind : {LossKind::CE, LossKind::FL, LossKind::ASL, LossKind::CFL, LossKind::CASL}) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown loss kind '" + std::string(name) +
                        "' (expected ce | focal | asym | cyclical | asym-cyclical)");
}

/// Loss family plus every exponent it may use. Unused exponents are ignored
/// by the kind that does not need them.
struct LossSpec {
  LossKind kind = LossKind::CE;
  double gamma_lc = 2.0;         ///< focal exponent on (1 - p_t)
  double gamma_hc = 2.0;         ///< high-confidence exponent on (1 + p_t)
  double gamma_pos = 0.0;        ///< asymmetric exponent for the target class
  double gamma_neg = 4.0;        ///< asymmetric exponent for non-target classes
  double cyclical_factor = 4.0;  ///< f_c, consumed by the schedule

  bool is_cyclical() const { return kind == LossKind::CFL || kind == LossKind::CASL; }

  void validate() const {
    auto check_gamma = [](double g, const char* name) {
      detail::require(std::isfinite(g) && g >= 0.0,
                      std::string(name) + " must be a finite non-negative number");
    };
    check_gamma(gamma_lc, "gamma_lc");
    check_gamma(gamma_hc, "gamma_hc");
    check_gamma(gamma_pos, "gamma_pos");
    check_gamma(gamma_neg, "gamma_neg");
    detail::require(std::isfinite(cyclical_factor) && cyclical_factor >= 1.0,
                    "cyclical_factor must be >= 1");
  }

  friend bool operator==(const LossSpec&, const LossSpec&) = default;
};

/// Probabilities are kept inside [kProbEpsilon, 1 - kProbEpsilon] wherever they
/// enter a logarithm. Weight factors use the raw probability.
inline constexpr double kProbEpsilon = 1e-12;

namespace detail {

template <std::floating_point T>
T clamp_prob(T p) {
  return std::clamp(p, static_cast<T>(kProbEpsilon), static_cast<T>(1.0 - kProbEpsilon));
}

template <std::floating_point T>
T safe_log(T p) {
  return std::log(std::max(p, static_cast<T>(kProbEpsilon)));
}

// log(1 - p) with p capped at 1 - eps.
template <std::floating_point T>
T safe_log1m(T p) {
  return std::log1p(-std::min(p, static_cast<T>(1.0 - kProbEpsilon)));
}

// x^0 is 1 even for x = 0. Small integer exponents are multiplied out.
template <std::floating_point T>
T weight_pow(T base, T gamma) {
  if (gamma == T(0)) return T(1);
  if (gamma <= T(8) && gamma == std::floor(gamma)) {
    T out = base;
    for (int k = 1; k < static_cast<int>(gamma); ++k) out *= base;
    return out;
  }
  return std::pow(base, gamma);
}

template <std::floating_point T>
T clamped_log(T log_p) {
  return std::max(log_p, static_cast<T>(std::log(kProbEpsilon)));
}

inline void check_gamma(double gamma) {
  require(std::isfinite(gamma) && gamma >= 0.0, "gamma must be a finite non-negative number");
}

template <std::floating_point T>
void check_unit_interval(T value, const char* name) {
  require(value >= T(0) && value <= T(1), std::string(name) + " must lie in [0, 1]");
}

inline void check_label(int y) { require(y == 0 || y == 1, "binary label must be 0 or 1"); }

template <std::floating_point T>
struct SoftmaxResult {
  std::vector<T> prob;
  std::vector<T> log_prob;
};

template <std::floating_point T>
SoftmaxResult<T> log_softmax(std::span<const T> logits) {
  require(logits.size() >= 2, "softmax needs at least two classes");
  for (T z : logits) require(std::isfinite(z), "logits must be finite");
  const T max_logit = *std::max_element(logits.begin(), logits.end());
  SoftmaxResult<T> out;
  out.prob.resize(logits.size());
  out.log_prob.resize(logits.size());
  T sum = 0;
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out.prob[c] = std::exp(logits[c] - max_logit);
    sum += out.prob[c];
  }
  const T log_sum = std::log(sum);
  for (std::size_t c = 0; c < logits.size(); ++c) {
    out.prob[c] /= sum;
    out.log_prob[c] = (logits[c] - max_logit) - log_sum;
  }
  return out;
}

// Sum over non-target classes of -p^g_neg log(1 - p).
template <std::floating_point T>
T asl_negatives(std::span<const T> prob, std::size_t target, T gamma_neg) {
  T total = 0;
  for (std::size_t c = 0; c < prob.size(); ++c) {
    if (c == target) continue;
    total += -weight_pow(prob[c], gamma_neg) * safe_log1m(prob[c]);
  }
  return total;
}

// Weight multiplying -log(p_t). The cyclical kinds blend their two target
// weights before multiplying, so with all exponents zero the weight is
// exactly xi + (1 - xi) == 1 and CFL reproduces CE bit for bit.
template <std::floating_point T>
T target_weight(T pt, const LossSpec& spec, T xi) {
  const auto g = [](double v) { return static_cast<T>(v); };
  switch (spec.kind) {
    case LossKind::CE: return T(1);
    case LossKind::FL: return weight_pow(T(1) - pt, g(spec.gamma_lc));
    case LossKind::ASL: return weight_pow(T(1) - pt, g(spec.gamma_pos));
    case LossKind::CFL:
      return xi * weight_pow(T(1) + pt, g(spec.gamma_hc)) +
             (T(1) - xi) * weight_pow(T(1) - pt, g(spec.gamma_lc));
    case LossKind::CASL:
      return xi * weight_pow(T(1) + pt, g(spec.gamma_hc)) +
             (T(1) - xi) * weight_pow(T(1) - pt, g(spec.gamma_pos));
  }
  return T(1);
}

// Scale applied to the asymmetric negative-class terms (0 when unused).
template <std::floating_point T>
T negatives_scale(const LossSpec& spec, T xi) {
  if (spec.kind == LossKind::ASL) return T(1);
  if (spec.kind == LossKind::CASL) return T(1) - xi;
  return T(0);
}

template <std::floating_point T>
T loss_from_softmax(const SoftmaxResult<T>& sm, std::size_t target, const LossSpec& spec, T xi) {
  const T pt = sm.prob[target];
  T loss = -target_weight(pt, spec, xi) * clamped_log(sm.log_prob[target]);
  const T scale = negatives_scale(spec, xi);
  if (scale != T(0)) {
    loss += scale * asl_negatives<T>(sm.prob, target, static_cast<T>(spec.gamma_neg));
  }
  return loss;
}

template <std::floating_point T>
void check_sample(std::size_t num_classes, std::size_t target, const LossSpec& spec, T xi) {
  spec.validate();
  require(target < num_classes, "target class " + std::to_string(target) +
                                    " out of range for " + std::to_string(num_classes) +
                                    " classes");
  require(xi >= T(0) && xi <= T(1), "xi must lie in [0, 1]");
}

}  // namespace detail

/// Numerically stable softmax (max-subtracted).
template <std::floating_point T>
std::vector<T> softmax(std::span<const T> logits) {
  return detail::log_softmax(logits).prob;
}

template <std::floating_point T>
std::vector<T> softmax(const std::vector<T>& logits) {
  return softmax(std::span<const T>(logits));
}

template <std::floating_point T>
T p_t(T prob, int y) {
  detail::check_unit_interval(prob, "probability");
  detail::check_label(y);
  return y == 1 ? prob : T(1) - prob;
}

/// -log(p_t), with p_t floored at kProbEpsilon.
template <std::floating_point T>
T ce_term(T pt) {
  detail::check_unit_interval(pt, "p_t");
  return -detail::safe_log(pt);
}

/// Focal term -(1 - p_t)^gamma log(p_t); focuses on low-confidence samples.
template <std::floating_point T>
T fl_term(T pt, double gamma_lc) {
  detail::check_unit_interval(pt, "p_t");
  detail::check_gamma(gamma_lc);
  return -detail::weight_pow(T(1) - pt, static_cast<T>(gamma_lc)) * detail::safe_log(pt);
}

/// High-confidence term -(1 + p_t)^gamma log(p_t).
template <std::floating_point T>
T hc_term(T pt, double gamma_hc) {
  detail::check_unit_interval(pt, "p_t");
  detail::check_gamma(gamma_hc);
  return -detail::weight_pow(T(1) + pt, static_cast<T>(gamma_hc)) * detail::safe_log(pt);
}

/// Asymmetric loss for one binary output: L+ when y = 1, L- when y = 0.
template <std::floating_point T>
T asl_terms(T prob, int y, double gamma_pos, double gamma_neg) {
  detail::check_unit_interval(prob, "probability");
  detail::check_label(y);
  detail::check_gamma(gamma_pos);
  detail::check_gamma(gamma_neg);
  if (y == 1)
    return -detail::weight_pow(T(1) - prob, static_cast<T>(gamma_pos)) * detail::safe_log(prob);
  return -detail::weight_pow(prob, static_cast<T>(gamma_neg)) * detail::safe_log1m(prob);
}

/// Single-label loss on raw logits. `xi` is only read by the cyclical kinds.
template <std::floating_point T>
T multiclass_loss(std::type_identity_t<std::span<const T>> logits, std::size_t target, const LossSpec& spec, T xi) {
  detail::check_sample(logits.size(), target, spec, xi);
  return detail::loss_from_softmax(detail::log_softmax(logits), target, spec, xi);
}

/// Same as multiclass_loss but starting from a probability vector.
template <std::floating_point T>
T prob_loss(std::type_identity_t<std::span<const T>> probs, std::size_t target, const LossSpec& spec, T xi) {
  detail::check_sample(probs.size(), target, spec, xi);
  detail::require(probs.size() >= 2, "need at least two classes");
  T sum = 0;
  for (T p : probs) {
    detail::require(std::isfinite(p) && p >= T(0), "probabilities must be non-negative");
    sum += p;
  }
  detail::require(std::abs(sum - T(1)) <= T(1e-6), "probabilities must sum to 1");
  detail::SoftmaxResult<T> sm;
  sm.prob.assign(probs.begin(), probs.end());
  sm.log_prob.resize(probs.size());
  for (std::size_t c = 0; c < probs.size(); ++c)
    sm.log_prob[c] = detail::safe_log(probs[c]);
  return detail::loss_from_softmax(sm, target, spec, xi);
}

/// Mean of multiclass_loss over a row-major N x C logit matrix.
template <std::floating_point T>
T batch_loss(std::type_identity_t<std::span<const T>> logits, std::span<const std::size_t> targets,
             std::size_t num_classes, const LossSpec& spec, T xi) {
  detail::require(!targets.empty(), "batch must be nonempty");
  detail::require(logits.size() == targets.size() * num_classes,
                  "logit matrix does not match targets x classes");
  T sum = 0;
  for (std::size_t i = 0; i < targets.size(); ++i) {
    sum += multiclass_loss(logits.subspan(i * num_classes, num_classes), targets[i], spec, xi);
  }
  return sum / static_cast<T>(targets.size());
}

}  // namespace cfl
