#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cfl/error.hpp"

namespace cfl {

/// Divisor used in the linear ramp: total epochs, or total epochs minus one
/// (the convention of the released reference code).
enum class Denominator { EN, EN_MINUS_ONE };

inline std::string_view to_string(Denominator d) {
  return d == Denominator::EN ? "en" : "en-1";
}

inline Denominator parse_denominator(std::string_view name) {
  if (name == "en") return Denominator::EN;
  if (name == "en-1") return Denominator::EN_MINUS_ONE;
  throw ValidationError("unknown schedule denominator '" + std::string(name) +
                        "' (expected en | en-1)");
}

/// Epoch-indexed mixing weight between the high-confidence and the
/// low-confidence loss terms.
///
/// xi starts at 1, falls linearly to 0 at epoch e_n / f_c and climbs back
/// towards 1 over the remaining epochs. With f_c = 1 it only falls.
struct CycleSchedule {
  std::size_t total_epochs = 1;
  double cyclical_factor = 4.0;
  Denominator denominator = Denominator::EN;

  void validate() const {
    detail::require(total_epochs >= 1, "total_epochs must be >= 1");
    detail::require(std::isfinite(cyclical_factor) && cyclical_factor >= 1.0,
                    "cyclical_factor must be >= 1");
  }

  /// xi for a 0-based epoch index, clamped into [0, 1].
  double xi(std::size_t epoch) const {
    validate();
    detail::require(epoch < total_epochs, "epoch " + std::to_string(epoch) +
                                              " out of range for " +
                                              std::to_string(total_epochs) + " epochs");
    const double total = static_cast<double>(total_epochs);
    const double divisor = denominator == Denominator::EN ? total : total - 1.0;
    const double scaled_epoch = cyclical_factor * static_cast<double>(epoch);
    // Only epoch 0 is valid when the divisor is zero.
    const double ratio = divisor > 0.0 ? scaled_epoch / divisor : 0.0;

    double value;
    if (scaled_epoch <= total) {
      value = 1.0 - ratio;
    } else if (cyclical_factor == 1.0) {
      value = 0.0;
    } else {
      value = (ratio - 1.0) / (cyclical_factor - 1.0);
    }
    return std::clamp(value, 0.0, 1.0);
  }

  std::vector<std::pair<std::size_t, double>> table() const {
    validate();
    std::vector<std::pair<std::size_t, double>> rows;
    rows.reserve(total_epochs);
    for (std::size_t e = 0; e < total_epochs; ++e) rows.emplace_back(e, xi(e));
    return rows;
  }

  friend bool operator==(const CycleSchedule&, const CycleSchedule&) = default;
};

inline double xi(const CycleSchedule& schedule, std::size_t epoch) { return schedule.xi(epoch); }

inline std::vector<std::pair<std::size_t, double>> xi_table(const CycleSchedule& schedule) {
  return schedule.table();
}

}  // namespace cfl
