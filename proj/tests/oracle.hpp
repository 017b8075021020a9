#pragma once

// Test-only reference formulas. Written directly from the loss definitions in
// long double with no clamping, no shared helpers and no combined weights, so
// they stay independent of the library code they check.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <vector>

#include "cfl/loss.hpp"

namespace cfl::oracle {

using Real = long double;

inline std::vector<Real> naive_softmax(const std::vector<double>& z) {
  Real sum = 0;
  std::vector<Real> p(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) sum += std::exp(static_cast<Real>(z[i]));
  for (std::size_t i = 0; i < z.size(); ++i) p[i] = std::exp(static_cast<Real>(z[i])) / sum;
  return p;
}

inline Real pw(Real base, double gamma) {
  return gamma == 0.0 ? 1.0L : std::pow(base, static_cast<Real>(gamma));
}

inline Real ce(Real pt) { return -std::log(pt); }
inline Real focal(Real pt, double g) { return -pw(1 - pt, g) * std::log(pt); }
inline Real high_conf(Real pt, double g) { return -pw(1 + pt, g) * std::log(pt); }
inline Real asl_pos(Real p, double g) { return -pw(1 - p, g) * std::log(p); }
inline Real asl_neg(Real p, double g) { return -pw(p, g) * std::log(1 - p); }

inline Real asl_one_vs_all(const std::vector<Real>& p, std::size_t t, const LossSpec& s) {
  Real total = asl_pos(p[t], s.gamma_pos);
  for (std::size_t c = 0; c < p.size(); ++c)
    if (c != t) total += asl_neg(p[c], s.gamma_neg);
  return total;
}

inline Real multiclass(const std::vector<double>& logits, std::size_t t, const LossSpec& s,
                       double xi) {
  const auto p = naive_softmax(logits);
  const Real x = xi;
  switch (s.kind) {
    case LossKind::CE: return ce(p[t]);
    case LossKind::FL: return focal(p[t], s.gamma_lc);
    case LossKind::ASL: return asl_one_vs_all(p, t, s);
    case LossKind::CFL: return x * high_conf(p[t], s.gamma_hc) + (1 - x) * focal(p[t], s.gamma_lc);
    case LossKind::CASL:
      return x * high_conf(p[t], s.gamma_hc) + (1 - x) * asl_one_vs_all(p, t, s);
  }
  return 0;
}

inline std::vector<double> random_logits(std::mt19937_64& gen, std::size_t classes,
                                         double lo = -5.0, double hi = 5.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> z(classes);
  for (double& v : z) v = dist(gen);
  return z;
}

}  // namespace cfl::oracle
