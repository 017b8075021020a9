#pragma once

#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cfl/data.hpp"
#include "cfl/error.hpp"

namespace cfl {

/// Long-tail class groups by training-sample count: many > 100,
/// medium in (20, 100], few <= 20.
enum class ShotGroup { ManyShot, MediumShot, FewShot };

inline std::string_view to_string(ShotGroup group) {
  switch (group) {
    case ShotGroup::ManyShot: return "many_shot";
    case ShotGroup::MediumShot: return "medium_shot";
    case ShotGroup::FewShot: return "few_shot";
  }
  return "few_shot";
}

inline ShotGroup shot_group(std::size_t train_count) {
  if (train_count > 100) return ShotGroup::ManyShot;
  if (train_count > 20) return ShotGroup::MediumShot;
  return ShotGroup::FewShot;
}

/// Round to 7 significant digits so serialized reports diff cleanly.
inline double round_sig7(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.7g", value);
  return std::strtod(buf, nullptr);
}

struct MetricsReport {
  double overall_accuracy = 0.0;
  /// Empty for classes with no test samples.
  std::vector<std::optional<double>> per_class_accuracy;
  /// Groups with no scored class are absent.
  std::map<ShotGroup, double> shot_group_accuracy;
  double macro_f1 = 0.0;
  std::size_t sample_count = 0;

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["overall_accuracy"] = round_sig7(overall_accuracy);
    auto per_class = nlohmann::ordered_json::array();
    for (const auto& acc : per_class_accuracy) {
      per_class.push_back(acc ? nlohmann::ordered_json(round_sig7(*acc)) : nullptr);
    }
    j["per_class_accuracy"] = std::move(per_class);
    auto groups = nlohmann::ordered_json::object();
    for (const auto& [group, acc] : shot_group_accuracy)
      groups[std::string(to_string(group))] = round_sig7(acc);
    j["shot_groups"] = std::move(groups);
    j["macro_f1"] = round_sig7(macro_f1);
    j["sample_count"] = sample_count;
    return j;
  }
};

/// Scores class predictions against labels. Class count and shot groups come
/// from the training profile.
inline MetricsReport score(std::span<const std::size_t> predictions,
                           std::span<const std::size_t> labels,
                           const ImbalanceProfile& train_counts) {
  detail::require(predictions.size() == labels.size(),
                  "predictions and labels must have equal length");
  detail::require(!labels.empty(), "need at least one scored sample");
  const std::size_t num_classes = train_counts.num_classes();
  detail::require(num_classes >= 1, "training profile is empty");

  std::vector<std::size_t> total(num_classes, 0), correct(num_classes, 0),
      predicted(num_classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    detail::require(labels[i] < num_classes && predictions[i] < num_classes,
                    "class index out of range at sample " + std::to_string(i));
    ++total[labels[i]];
    ++predicted[predictions[i]];
    if (predictions[i] == labels[i]) ++correct[labels[i]];
  }

  MetricsReport report;
  report.sample_count = labels.size();
  std::size_t all_correct = 0;
  for (std::size_t c : correct) all_correct += c;
  report.overall_accuracy =
      static_cast<double>(all_correct) / static_cast<double>(labels.size());

  std::map<ShotGroup, std::pair<double, std::size_t>> group_sums;
  double f1_sum = 0.0;
  std::size_t f1_classes = 0;
  report.per_class_accuracy.resize(num_classes);
  for (std::size_t c = 0; c < num_classes; ++c) {
    if (total[c] > 0) {
      const double acc = static_cast<double>(correct[c]) / static_cast<double>(total[c]);
      report.per_class_accuracy[c] = acc;
      auto& [sum, n] = group_sums[shot_group(train_counts.counts[c])];
      sum += acc;
      ++n;
    }
    // F1 = 2TP / (2TP + FP + FN); undefined when the class never occurs.
    const std::size_t tp = correct[c];
    const std::size_t fp = predicted[c] - tp;
    const std::size_t fn = total[c] - tp;
    if (tp + fp + fn > 0) {
      f1_sum += 2.0 * static_cast<double>(tp) / static_cast<double>(2 * tp + fp + fn);
      ++f1_classes;
    }
  }
  for (const auto& [group, sum_n] : group_sums)
    report.shot_group_accuracy[group] = sum_n.first / static_cast<double>(sum_n.second);
  report.macro_f1 = f1_sum / static_cast<double>(f1_classes);
  return report;
}

}  // namespace cfl
