#pragma once

// Datasets: the in-memory batch type, the fixed imbalanced sampling profiles,
// synthetic Gaussian pools and CSV ingestion.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cfl/error.hpp"
#include "cfl/rng.hpp"

namespace cfl {

/// N samples with `dim` features each (row-major) and labels in [0, num_classes).
struct SampleBatch {
  std::size_t dim = 0;
  std::size_t num_classes = 0;
  std::vector<double> features;
  std::vector<std::size_t> labels;

  std::size_t size() const { return labels.size(); }

  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(features).subspan(i * dim, dim);
  }

  void validate() const {
    detail::require(!labels.empty(), "batch must contain at least one sample");
    detail::require(dim >= 1, "feature dimension must be >= 1");
    detail::require(features.size() == labels.size() * dim, "feature matrix has wrong size");
    for (std::size_t label : labels)
      detail::require(label < num_classes, "label " + std::to_string(label) +
                                               " out of range for " +
                                               std::to_string(num_classes) + " classes");
    for (double x : features) detail::require(std::isfinite(x), "features must be finite");
  }

  /// Samples per class.
  std::vector<std::size_t> class_counts() const {
    std::vector<std::size_t> counts(num_classes, 0);
    for (std::size_t label : labels) ++counts[label];
    return counts;
  }

  void push_back(std::span<const double> x, std::size_t label) {
    features.insert(features.end(), x.begin(), x.end());
    labels.push_back(label);
  }

  friend bool operator==(const SampleBatch&, const SampleBatch&) = default;
};

enum class ProfileKind { Balanced, FiveThree, SixTwo, Custom };

inline std::string_view to_string(ProfileKind kind) {
  switch (kind) {
    case ProfileKind::Balanced: return "balanced";
    case ProfileKind::FiveThree: return "five_three";
    case ProfileKind::SixTwo: return "six_two";
    case ProfileKind::Custom: return "custom";
  }
  return "custom";
}

inline ProfileKind parse_profile_kind(std::string_view name) {
  for (auto kind : {ProfileKind::Balanced, ProfileKind::FiveThree, ProfileKind::SixTwo,
                    ProfileKind::Custom}) {
    if (to_string(kind) == name) return kind;
  }
  throw ValidationError("unknown profile '" + std::string(name) +
                        "' (expected balanced | five_three | six_two | custom)");
}

/// Training samples per class.
struct ImbalanceProfile {
  ProfileKind kind = ProfileKind::Custom;
  std::vector<std::size_t> counts;

  std::size_t num_classes() const { return counts.size(); }
  std::size_t total() const { return std::accumulate(counts.begin(), counts.end(), std::size_t{0}); }

  static ImbalanceProfile balanced(std::size_t num_classes, std::size_t per_class) {
    return {ProfileKind::Balanced, std::vector<std::size_t>(num_classes, per_class)};
  }

  static ImbalanceProfile from_batch(const SampleBatch& batch) {
    return {ProfileKind::Custom, batch.class_counts()};
  }

  nlohmann::json to_json() const { return nlohmann::json(counts); }

  friend bool operator==(const ImbalanceProfile&, const ImbalanceProfile&) = default;
};

/// The 4,000-sample CIFAR-10 profiles: arithmetic sequences starting at 490
/// (step 20) and 580 (step 40).
inline ImbalanceProfile profile_c10(ProfileKind kind) {
  detail::require(kind == ProfileKind::FiveThree || kind == ProfileKind::SixTwo,
                  "profile_c10 supports five_three and six_two");
  const std::size_t start = kind == ProfileKind::FiveThree ? 490 : 580;
  const std::size_t step = kind == ProfileKind::FiveThree ? 20 : 40;
  ImbalanceProfile profile{kind, {}};
  for (std::size_t c = 0; c < 10; ++c) profile.counts.push_back(start - step * c);
  return profile;
}

/// CIFAR-100 counts before the final adjustment: 50 - round(i / 5) or
/// 60 - round(i / 2.5).
inline std::vector<std::size_t> profile_c100_base(ProfileKind kind) {
  detail::require(kind == ProfileKind::FiveThree || kind == ProfileKind::SixTwo,
                  "profile_c100 supports five_three and six_two");
  const double start = kind == ProfileKind::FiveThree ? 50.0 : 60.0;
  const double divisor = kind == ProfileKind::FiveThree ? 5.0 : 2.5;
  std::vector<std::size_t> counts(100);
  for (std::size_t i = 0; i < counts.size(); ++i) {
    counts[i] = static_cast<std::size_t>(start - std::round(static_cast<double>(i) / divisor));
  }
  return counts;
}

/// CIFAR-100 profiles adjusted to exactly 4,000 samples by moving one sample
/// per class, starting from class 99 and walking down.
inline ImbalanceProfile profile_c100(ProfileKind kind) {
  constexpr std::size_t kTarget = 4000;
  ImbalanceProfile profile{kind, profile_c100_base(kind)};
  std::size_t total = profile.total();
  std::size_t c = profile.counts.size();
  while (total != kTarget) {
    c = (c == 0 ? profile.counts.size() : c) - 1;
    if (total > kTarget) {
      --profile.counts[c];
      --total;
    } else {
      ++profile.counts[c];
      ++total;
    }
  }
  return profile;
}

/// For each class keep the first counts[c] samples of that class, in pool order.
inline SampleBatch apply_profile(const SampleBatch& pool, const ImbalanceProfile& profile) {
  pool.validate();
  detail::require(profile.num_classes() == pool.num_classes,
                  "profile covers " + std::to_string(profile.num_classes()) +
                      " classes but the pool has " + std::to_string(pool.num_classes));

  const auto available = pool.class_counts();
  for (std::size_t c = 0; c < available.size(); ++c) {
    if (available[c] < profile.counts[c]) {
      throw ValidationError("class " + std::to_string(c) + " needs " +
                            std::to_string(profile.counts[c]) + " samples but the pool has " +
                            std::to_string(available[c]) + " (short by " +
                            std::to_string(profile.counts[c] - available[c]) + ")");
    }
  }

  SampleBatch out;
  out.dim = pool.dim;
  out.num_classes = pool.num_classes;
  std::vector<std::size_t> taken(pool.num_classes, 0);
  for (std::size_t i = 0; i < pool.size(); ++i) {
    const std::size_t label = pool.labels[i];
    if (taken[label] < profile.counts[label]) {
      out.push_back(pool.row(i), label);
      ++taken[label];
    }
  }
  return out;
}

/// Unit-variance isotropic Gaussians around explicit class centers. Samples
/// are emitted class by class. `split` picks an independent noise stream, so
/// e.g. train (0) and test (1) sets can share a seed.
inline SampleBatch gaussian_blobs(const std::vector<std::vector<double>>& centers,
                                  std::span<const std::size_t> per_class, std::uint64_t seed,
                                  std::uint64_t split = 0) {
  detail::require(centers.size() >= 2, "need at least two classes");
  detail::require(per_class.size() == centers.size(), "one count per class required");
  const std::size_t dim = centers.front().size();
  detail::require(dim >= 1, "centers must have at least one coordinate");
  for (const auto& center : centers)
    detail::require(center.size() == dim, "all centers must have the same dimension");

  Rng rng(seed, streams::kSamples + (split << 32));
  SampleBatch out;
  out.dim = dim;
  out.num_classes = centers.size();
  std::vector<double> x(dim);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t n = 0; n < per_class[c]; ++n) {
      for (std::size_t d = 0; d < dim; ++d) x[d] = centers[c][d] + rng.normal();
      out.push_back(x, c);
    }
  }
  return out;
}

/// Distinct unit vectors, one per class, derived from the seed.
inline std::vector<std::vector<double>> class_directions(std::size_t classes, std::size_t dim,
                                                         std::uint64_t seed) {
  Rng rng(seed, streams::kDirections);
  std::vector<std::vector<double>> directions(classes, std::vector<double>(dim));
  for (auto& u : directions) {
    double norm = 0.0;
    while (norm < 1e-6) {
      norm = 0.0;
      for (double& v : u) {
        v = rng.normal();
        norm += v * v;
      }
      norm = std::sqrt(norm);
    }
    for (double& v : u) v /= norm;
  }
  return directions;
}

/// Class c is drawn from N(mean_scale * u_c, I) with u_c from class_directions.
/// The directions depend on the seed only; `split` as in gaussian_blobs.
inline SampleBatch gaussian_mixture(std::size_t classes, std::span<const std::size_t> per_class,
                                    std::size_t dim, double mean_scale, std::uint64_t seed,
                                    std::uint64_t split = 0) {
  detail::require(classes >= 2, "need at least two classes");
  detail::require(dim >= 2, "need at least two feature dimensions");
  detail::require(per_class.size() == classes, "one count per class required");
  for (std::size_t n : per_class) detail::require(n >= 1, "every class needs at least one sample");
  detail::require(std::isfinite(mean_scale), "mean_scale must be finite");

  auto centers = class_directions(classes, dim, seed);
  for (auto& u : centers)
    for (double& v : u) v *= mean_scale;
  return gaussian_blobs(centers, per_class, seed, split);
}

namespace detail {

inline std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(line.substr(start, comma == std::string_view::npos ? comma : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <class Number>
bool parse_number(std::string_view text, Number& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last && first != last;
}

}  // namespace detail

/// Parses `label,f0,...,f{D-1}` CSV. When `num_classes` is absent it is
/// inferred as max label + 1.
inline SampleBatch parse_csv(std::istream& in, std::optional<std::size_t> num_classes = {},
                             const std::string& source = "<csv>") {
  std::string line;
  detail::require(static_cast<bool>(std::getline(in, line)), source + ": missing header line");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = detail::split_fields(line);
  detail::require(header.size() >= 2 && header.front() == "label",
                  source + ":1: header must be label,f0,f1,...");
  for (std::size_t d = 1; d < header.size(); ++d) {
    detail::require(header[d] == "f" + std::to_string(d - 1),
                    source + ":1: expected column f" + std::to_string(d - 1));
  }

  SampleBatch batch;
  batch.dim = header.size() - 1;
  std::size_t line_no = 1;
  std::size_t max_label = 0;
  std::vector<double> row(batch.dim);
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    const auto fields = detail::split_fields(line);
    detail::require(fields.size() == batch.dim + 1,
                    where + ": expected " + std::to_string(batch.dim + 1) + " fields, got " +
                        std::to_string(fields.size()));
    std::size_t label = 0;
    detail::require(detail::parse_number(fields[0], label), where + ": invalid label");
    if (num_classes) {
      detail::require(label < *num_classes, where + ": label " + std::to_string(label) +
                                                " >= declared class count " +
                                                std::to_string(*num_classes));
    }
    for (std::size_t d = 0; d < batch.dim; ++d) {
      detail::require(detail::parse_number(fields[d + 1], row[d]) && std::isfinite(row[d]),
                      where + ": invalid feature value in column f" + std::to_string(d));
    }
    max_label = std::max(max_label, label);
    batch.push_back(row, label);
  }
  detail::require(!batch.labels.empty(), source + ": no data rows");
  batch.num_classes = num_classes.value_or(max_label + 1);
  batch.validate();
  return batch;
}

inline SampleBatch load_csv(const std::string& path, std::optional<std::size_t> num_classes = {}) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open dataset file '" + path + "'");
  return parse_csv(in, num_classes, path);
}

/// Writes features with 17 significant digits so that load_csv reproduces
/// them exactly.
inline void write_csv(std::ostream& out, const SampleBatch& batch) {
  out << "label";
  for (std::size_t d = 0; d < batch.dim; ++d) out << ",f" << d;
  out << '\n';
  char buf[32];
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out << batch.labels[i];
    for (double x : batch.row(i)) {
      std::snprintf(buf, sizeof(buf), "%.17g", x);
      out << ',' << buf;
    }
    out << '\n';
  }
}

inline void write_csv(const std::string& path, const SampleBatch& batch) {
  std::ofstream out(path, std::ios::binary);
  detail::require(out.good(), "cannot write dataset file '" + path + "'");
  write_csv(out, batch);
}

}  // namespace cfl
