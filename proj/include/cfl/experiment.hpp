#pragma once

// JSON experiment configuration: parsing, resolution to explicit values, and
// the dataset construction it describes.
//
// Schema (every key optional unless noted, unknown keys rejected):
//
//   {
//     "run_label": "smoke",
//     "output_dir": "runs/smoke",
//     "dataset": {                                  // required
//       "source": "gaussian_mixture",               // | "gaussian_blobs" | "csv"
//       "seed": 7,
//       // gaussian_mixture
//       "classes": 10, "dim": 16, "mean_scale": 3.0,
//       "train_profile": "six_two",                 // | "five_three" | "balanced"
//                                                   // | [counts] | {"kind","counts"}
//       "balanced_per_class": 400,                  // used by "balanced"
//       "test_per_class": 100,
//       // gaussian_blobs: "centers": [[2,2],[-2,-2]] plus train_profile / test_per_class
//       // csv: "train": "train.csv", "test": "test.csv", "num_classes": 10,
//       //      optional "train_profile" applied to the training file
//     },
//     "train": {"epochs", "batch_size", "base_lr", "warmup_epochs", "momentum",
//               "weight_decay", "seed", "hidden": [16]},
//     "loss": {"focal_loss", "gamma_lc", "gamma_hc", "gamma_pos", "gamma_neg",
//              "cyclical_factor"},
//     "schedule": {"denominator": "en" | "en-1"}
//   }
//
// Relative CSV paths are taken relative to the config file. The resolved form
// written next to the results has every field filled in and absolute paths,
// and parses back to the same configuration.

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "cfl/data.hpp"
#include "cfl/error.hpp"
#include "cfl/loss.hpp"
#include "cfl/schedule.hpp"
#include "cfl/trainer.hpp"

namespace cfl {

enum class DatasetSource { GaussianMixture, GaussianBlobs, Csv };

inline std::string_view to_string(DatasetSource source) {
  switch (source) {
    case DatasetSource::GaussianMixture: return "gaussian_mixture";
    case DatasetSource::GaussianBlobs: return "gaussian_blobs";
    case DatasetSource::Csv: return "csv";
  }
  return "csv";
}

struct DatasetSpec {
  DatasetSource source = DatasetSource::GaussianMixture;
  std::uint64_t seed = 0;
  std::size_t classes = 10;
  std::size_t dim = 16;
  double mean_scale = 3.0;
  std::vector<std::vector<double>> centers;
  std::optional<ImbalanceProfile> train_profile;
  std::size_t test_per_class = 100;
  std::string train_path;
  std::string test_path;
  std::optional<std::size_t> num_classes;
};

struct ExperimentConfig {
  std::string run_label = "run";
  std::string output_dir = "runs/run";
  DatasetSpec dataset;
  TrainConfig train;
  std::vector<std::size_t> hidden{16};
};

struct Datasets {
  SampleBatch train;
  SampleBatch test;
  ImbalanceProfile train_counts;
};

namespace detail {

using nlohmann::json;

inline void reject_unknown_keys(const json& object, const std::set<std::string>& allowed,
                                const std::string& where) {
  require(object.is_object(), where + " must be a JSON object");
  for (const auto& item : object.items()) {
    require(allowed.count(item.key()) > 0, "unknown key '" + item.key() + "' in " + where);
  }
}

template <class Value>
void read_field(const json& object, const char* key, Value& out, const std::string& where) {
  if (!object.contains(key)) return;
  try {
    out = object.at(key).get<Value>();
  } catch (const json::exception&) {
    throw ValidationError(where + "." + key + " has the wrong type");
  }
}

inline void read_count(const json& object, const char* key, std::size_t& out,
                       const std::string& where) {
  if (!object.contains(key)) return;
  const json& v = object.at(key);
  require(v.is_number_integer() && v.get<long long>() >= 0,
          where + "." + key + " must be a non-negative integer");
  out = v.get<std::size_t>();
}

inline ImbalanceProfile parse_profile(const json& value, std::size_t classes,
                                      std::optional<std::size_t> balanced_per_class) {
  if (value.is_array()) {
    ImbalanceProfile profile{ProfileKind::Custom, {}};
    for (const auto& v : value) {
      require(v.is_number_integer() && v.get<long long>() >= 0,
              "train_profile counts must be non-negative integers");
      profile.counts.push_back(v.get<std::size_t>());
    }
    return profile;
  }
  if (value.is_object()) {
    reject_unknown_keys(value, {"kind", "counts"}, "dataset.train_profile");
    require(value.contains("counts"), "dataset.train_profile needs counts");
    auto profile = parse_profile(value.at("counts"), classes, balanced_per_class);
    if (value.contains("kind")) {
      require(value.at("kind").is_string(), "dataset.train_profile.kind must be a string");
      profile.kind = parse_profile_kind(value.at("kind").get<std::string>());
    }
    return profile;
  }
  require(value.is_string(), "dataset.train_profile must be a name, an array or an object");
  const ProfileKind kind = parse_profile_kind(value.get<std::string>());
  switch (kind) {
    case ProfileKind::Balanced:
      require(balanced_per_class.has_value(),
              "train_profile 'balanced' needs dataset.balanced_per_class");
      return ImbalanceProfile::balanced(classes, *balanced_per_class);
    case ProfileKind::FiveThree:
    case ProfileKind::SixTwo:
      if (classes == 10) return profile_c10(kind);
      if (classes == 100) return profile_c100(kind);
      throw ValidationError("five_three / six_two profiles exist for 10 or 100 classes only");
    case ProfileKind::Custom:
      break;
  }
  throw ValidationError("train_profile 'custom' must be given as explicit counts");
}

inline std::string resolve_path(const std::string& path, const std::filesystem::path& base) {
  std::filesystem::path p(path);
  if (p.is_relative()) p = base / p;
  return std::filesystem::absolute(p).lexically_normal().string();
}

}  // namespace detail

/// Parses a config document. `base_dir` anchors relative dataset paths.
inline ExperimentConfig parse_experiment(const nlohmann::json& doc,
                                         const std::filesystem::path& base_dir) {
  using detail::read_count;
  using detail::read_field;
  detail::reject_unknown_keys(doc, {"run_label", "output_dir", "dataset", "train", "loss",
                                    "schedule"},
                              "config");
  ExperimentConfig cfg;
  read_field(doc, "run_label", cfg.run_label, "config");
  read_field(doc, "output_dir", cfg.output_dir, "config");

  detail::require(doc.contains("dataset"), "config.dataset is required");
  const auto& ds = doc.at("dataset");
  detail::reject_unknown_keys(ds, {"source", "seed", "classes", "dim", "mean_scale", "centers",
                                   "train_profile", "balanced_per_class", "test_per_class",
                                   "train", "test", "num_classes"},
                              "dataset");
  DatasetSpec& d = cfg.dataset;
  std::string source = "gaussian_mixture";
  read_field(ds, "source", source, "dataset");
  if (source == "gaussian_mixture") {
    d.source = DatasetSource::GaussianMixture;
  } else if (source == "gaussian_blobs") {
    d.source = DatasetSource::GaussianBlobs;
  } else if (source == "csv") {
    d.source = DatasetSource::Csv;
  } else {
    throw ValidationError("unknown dataset.source '" + source + "'");
  }
  read_field(ds, "seed", d.seed, "dataset");
  read_count(ds, "classes", d.classes, "dataset");
  read_count(ds, "dim", d.dim, "dataset");
  read_field(ds, "mean_scale", d.mean_scale, "dataset");
  read_field(ds, "centers", d.centers, "dataset");
  read_count(ds, "test_per_class", d.test_per_class, "dataset");
  if (ds.contains("num_classes")) {
    std::size_t n = 0;
    read_count(ds, "num_classes", n, "dataset");
    d.num_classes = n;
  }
  if (d.source == DatasetSource::GaussianBlobs) {
    d.classes = d.centers.size();
    detail::require(d.classes >= 2, "dataset.centers needs at least two classes");
    d.dim = d.centers.front().size();
  }
  std::optional<std::size_t> balanced_per_class;
  if (ds.contains("balanced_per_class")) {
    std::size_t n = 0;
    read_count(ds, "balanced_per_class", n, "dataset");
    balanced_per_class = n;
  }
  if (ds.contains("train_profile")) {
    const std::size_t classes =
        d.source == DatasetSource::Csv ? d.num_classes.value_or(0) : d.classes;
    d.train_profile = detail::parse_profile(ds.at("train_profile"), classes, balanced_per_class);
  }
  if (d.source == DatasetSource::Csv) {
    std::string train_path, test_path;
    read_field(ds, "train", train_path, "dataset");
    read_field(ds, "test", test_path, "dataset");
    detail::require(!train_path.empty() && !test_path.empty(),
                    "csv datasets need dataset.train and dataset.test");
    d.train_path = detail::resolve_path(train_path, base_dir);
    d.test_path = detail::resolve_path(test_path, base_dir);
    detail::require(std::filesystem::exists(d.train_path),
                    "dataset file not found: " + d.train_path);
    detail::require(std::filesystem::exists(d.test_path),
                    "dataset file not found: " + d.test_path);
  } else {
    detail::require(d.train_profile.has_value(), "synthetic datasets need dataset.train_profile");
    detail::require(d.train_profile->num_classes() == d.classes,
                    "train_profile must have one count per class");
  }

  TrainConfig& t = cfg.train;
  if (doc.contains("train")) {
    const auto& tj = doc.at("train");
    detail::reject_unknown_keys(tj, {"epochs", "batch_size", "base_lr", "warmup_epochs",
                                     "momentum", "weight_decay", "seed", "hidden"},
                                "train");
    read_count(tj, "epochs", t.epochs, "train");
    read_count(tj, "batch_size", t.batch_size, "train");
    read_field(tj, "base_lr", t.base_lr, "train");
    read_count(tj, "warmup_epochs", t.warmup_epochs, "train");
    read_field(tj, "momentum", t.momentum, "train");
    read_field(tj, "weight_decay", t.weight_decay, "train");
    read_field(tj, "seed", t.seed, "train");
    read_field(tj, "hidden", cfg.hidden, "train");
  }
  if (doc.contains("loss")) {
    const auto& lj = doc.at("loss");
    detail::reject_unknown_keys(lj, {"focal_loss", "gamma_lc", "gamma_hc", "gamma_pos",
                                     "gamma_neg", "cyclical_factor"},
                                "loss");
    std::string kind = std::string(to_string(t.loss.kind));
    read_field(lj, "focal_loss", kind, "loss");
    t.loss.kind = parse_loss_kind(kind);
    read_field(lj, "gamma_lc", t.loss.gamma_lc, "loss");
    read_field(lj, "gamma_hc", t.loss.gamma_hc, "loss");
    read_field(lj, "gamma_pos", t.loss.gamma_pos, "loss");
    read_field(lj, "gamma_neg", t.loss.gamma_neg, "loss");
    read_field(lj, "cyclical_factor", t.loss.cyclical_factor, "loss");
  }
  if (doc.contains("schedule")) {
    const auto& sj = doc.at("schedule");
    detail::reject_unknown_keys(sj, {"denominator"}, "schedule");
    std::string denom = "en";
    read_field(sj, "denominator", denom, "schedule");
    t.schedule.denominator = parse_denominator(denom);
  }
  return cfg;
}

/// Copies derived fields (schedule length and factor) and validates.
inline void finalize(ExperimentConfig& cfg) {
  cfg.train.schedule.total_epochs = cfg.train.epochs;
  cfg.train.schedule.cyclical_factor = cfg.train.loss.cyclical_factor;
  cfg.train.validate();
  detail::require(!cfg.output_dir.empty(), "output_dir must not be empty");
  for (std::size_t h : cfg.hidden) detail::require(h >= 1, "hidden layer width must be >= 1");
  const DatasetSpec& d = cfg.dataset;
  if (d.source != DatasetSource::Csv) {
    detail::require(d.classes >= 2, "dataset.classes must be >= 2");
    detail::require(d.test_per_class >= 1, "dataset.test_per_class must be >= 1");
    detail::require(std::isfinite(d.mean_scale), "dataset.mean_scale must be finite");
  }
  if (d.source == DatasetSource::GaussianMixture)
    detail::require(d.dim >= 2, "dataset.dim must be >= 2");
}

inline ExperimentConfig load_experiment(const std::string& path) {
  std::ifstream in(path);
  detail::require(in.good(), "cannot open config file '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError("config file '" + path + "' is not valid JSON: " + e.what());
  }
  const auto base = std::filesystem::absolute(path).parent_path();
  return parse_experiment(doc, base);
}

/// Fully explicit form; parse_experiment(resolved_json(c), any) == c.
inline nlohmann::ordered_json resolved_json(const ExperimentConfig& cfg) {
  nlohmann::ordered_json j;
  j["run_label"] = cfg.run_label;
  j["output_dir"] = std::filesystem::absolute(cfg.output_dir).lexically_normal().string();
  const DatasetSpec& d = cfg.dataset;
  nlohmann::ordered_json ds;
  ds["source"] = to_string(d.source);
  ds["seed"] = d.seed;
  switch (d.source) {
    case DatasetSource::GaussianMixture:
      ds["classes"] = d.classes;
      ds["dim"] = d.dim;
      ds["mean_scale"] = d.mean_scale;
      ds["test_per_class"] = d.test_per_class;
      break;
    case DatasetSource::GaussianBlobs:
      ds["centers"] = d.centers;
      ds["test_per_class"] = d.test_per_class;
      break;
    case DatasetSource::Csv:
      ds["train"] = d.train_path;
      ds["test"] = d.test_path;
      if (d.num_classes) ds["num_classes"] = *d.num_classes;
      break;
  }
  if (d.train_profile) {
    ds["train_profile"] = {{"kind", to_string(d.train_profile->kind)},
                           {"counts", d.train_profile->counts}};
  }
  j["dataset"] = std::move(ds);

  const TrainConfig& t = cfg.train;
  j["train"] = {{"epochs", t.epochs},        {"batch_size", t.batch_size},
                {"base_lr", t.base_lr},      {"warmup_epochs", t.warmup_epochs},
                {"momentum", t.momentum},    {"weight_decay", t.weight_decay},
                {"seed", t.seed},            {"hidden", cfg.hidden}};
  j["loss"] = {{"focal_loss", to_string(t.loss.kind)}, {"gamma_lc", t.loss.gamma_lc},
               {"gamma_hc", t.loss.gamma_hc},          {"gamma_pos", t.loss.gamma_pos},
               {"gamma_neg", t.loss.gamma_neg},        {"cyclical_factor", t.loss.cyclical_factor}};
  j["schedule"] = {{"denominator", to_string(t.schedule.denominator)}};
  return j;
}

/// Builds train/test sets. Synthetic training pools are sampled with the
/// profile's maximum count per class and then cut down with apply_profile.
inline Datasets build_datasets(const ExperimentConfig& cfg) {
  const DatasetSpec& d = cfg.dataset;
  Datasets out;
  if (d.source == DatasetSource::Csv) {
    out.train = load_csv(d.train_path, d.num_classes);
    out.test = load_csv(d.test_path, d.num_classes.value_or(out.train.num_classes));
    if (!d.num_classes && out.test.num_classes < out.train.num_classes)
      out.test.num_classes = out.train.num_classes;
    detail::require(out.train.dim == out.test.dim, "train and test CSV dimensions differ");
    if (d.train_profile) out.train = apply_profile(out.train, *d.train_profile);
    out.train_counts = ImbalanceProfile::from_batch(out.train);
    if (d.train_profile) out.train_counts.kind = d.train_profile->kind;
    return out;
  }

  const ImbalanceProfile& profile = *d.train_profile;
  std::size_t pool_size = 0;
  for (std::size_t c : profile.counts) pool_size = std::max(pool_size, c);
  detail::require(pool_size >= 1, "train_profile must request at least one sample");
  const std::vector<std::size_t> pool_counts(d.classes, pool_size);
  const std::vector<std::size_t> test_counts(d.classes, d.test_per_class);

  SampleBatch pool;
  if (d.source == DatasetSource::GaussianMixture) {
    pool = gaussian_mixture(d.classes, pool_counts, d.dim, d.mean_scale, d.seed, 0);
    out.test = gaussian_mixture(d.classes, test_counts, d.dim, d.mean_scale, d.seed, 1);
  } else {
    pool = gaussian_blobs(d.centers, pool_counts, d.seed, 0);
    out.test = gaussian_blobs(d.centers, test_counts, d.seed, 1);
  }
  out.train = apply_profile(pool, profile);
  out.train_counts = profile;
  return out;
}

}  // namespace cfl
