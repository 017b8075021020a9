#pragma once

// `cfl` command-line front end: train, xi-table and loss-eval.
//
// Exit codes: 0 success, 2 configuration or validation error, 3 numerical
// abort during training.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "cfl/data.hpp"
#include "cfl/error.hpp"
#include "cfl/experiment.hpp"
#include "cfl/gradients.hpp"
#include "cfl/loss.hpp"
#include "cfl/metrics.hpp"
#include "cfl/schedule.hpp"
#include "cfl/trainer.hpp"

namespace cfl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/// Fixed 7-significant-digit rendering used for every float the tool prints.
inline std::string format_sig7(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.7g", value);
  return buf;
}

/// xi is printed with six decimals ("0.500000", "1.000000").
inline std::string format_xi(double value) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", value);
  return buf;
}

/// Overrides for the loss hyper-parameters.
struct LossFlags {
  std::optional<std::string> focal_loss;
  std::optional<double> gamma_lc;
  std::optional<double> gamma_hc;
  std::optional<double> gamma_pos;
  std::optional<double> gamma_neg;
  std::optional<double> cyclical_factor;

  void apply(LossSpec& spec) const {
    if (focal_loss) spec.kind = parse_loss_kind(*focal_loss);
    if (gamma_lc) spec.gamma_lc = *gamma_lc;
    if (gamma_hc) spec.gamma_hc = *gamma_hc;
    if (gamma_pos) spec.gamma_pos = *gamma_pos;
    if (gamma_neg) spec.gamma_neg = *gamma_neg;
    if (cyclical_factor) spec.cyclical_factor = *cyclical_factor;
  }
};

struct TrainArgs {
  std::string config_path;
  LossFlags loss;
  std::optional<std::size_t> epochs;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> denominator;
  std::optional<std::string> output_dir;
  std::optional<std::string> run_label;
  bool quiet = false;
};

struct XiTableArgs {
  std::size_t epochs = 0;
  double cyclical_factor = 4.0;
  std::string denominator = "en";
};

struct LossEvalArgs {
  LossFlags loss;
  double xi = 0.0;
  std::optional<double> pt;
  std::vector<double> logits;
  std::optional<std::size_t> target;
};

inline void write_trace_csv(std::ostream& out, const TrainTrace& trace) {
  out << "epoch,xi,lr,train_loss,test_accuracy\n";
  for (const auto& row : trace) {
    out << row.epoch << ',' << format_xi(row.xi) << ',' << format_sig7(row.lr) << ','
        << format_sig7(row.train_loss) << ',' << format_sig7(row.test_accuracy) << '\n';
  }
}

inline void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  detail::require(out.good(), "cannot write '" + path.string() + "'");
  out << contents;
}

/// Loads, overrides and validates the experiment config.
inline ExperimentConfig resolve_train_config(const TrainArgs& args) {
  ExperimentConfig cfg = load_experiment(args.config_path);
  args.loss.apply(cfg.train.loss);
  if (args.epochs) cfg.train.epochs = *args.epochs;
  if (args.seed) cfg.train.seed = *args.seed;
  if (args.denominator) cfg.train.schedule.denominator = parse_denominator(*args.denominator);
  if (args.output_dir) cfg.output_dir = *args.output_dir;
  if (args.run_label) cfg.run_label = *args.run_label;
  finalize(cfg);
  return cfg;
}

inline int cmd_train(const TrainArgs& args, std::ostream& err) {
  ExperimentConfig cfg;
  Datasets data;
  std::filesystem::path out_dir;
  try {
    cfg = resolve_train_config(args);
    data = build_datasets(cfg);
    out_dir = cfg.output_dir;
    std::filesystem::create_directories(out_dir);
    write_file(out_dir / "config.resolved.json", resolved_json(cfg).dump(2) + "\n");
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::filesystem::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  const std::size_t num_classes =
      std::max({data.train.num_classes, data.test.num_classes, data.train_counts.num_classes()});
  data.train.num_classes = num_classes;
  data.test.num_classes = num_classes;
  data.train_counts.counts.resize(num_classes, 0);

  const MlpModel model =
      MlpModel::create(data.train.dim, cfg.hidden, num_classes, cfg.train.seed);
  auto progress = [&](const TraceRow& row) {
    if (args.quiet) return;
    err << cfg.run_label << " epoch " << row.epoch << " xi " << format_xi(row.xi) << " lr "
        << format_sig7(row.lr) << " loss " << format_sig7(row.train_loss) << " test_acc "
        << format_sig7(row.test_accuracy) << '\n';
  };

  try {
    TrainResult result = train(model, data.train, data.test, cfg.train, progress);
    std::ostringstream trace;
    write_trace_csv(trace, result.trace);
    write_file(out_dir / "trace.csv", trace.str());
    const MetricsReport report = evaluate(result.model, data.test, data.train_counts);
    write_file(out_dir / "metrics.json", report.to_json().dump(2) + "\n");
  } catch (const NumericalAbort& e) {
    err << "error: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

inline int cmd_xi_table(const XiTableArgs& args, std::ostream& out, std::ostream& err) {
  try {
    CycleSchedule schedule{args.epochs, args.cyclical_factor, parse_denominator(args.denominator)};
    detail::require(args.epochs >= 1, "epochs must be >= 1");
    const auto rows = schedule.table();
    out << "epoch,xi\n";
    for (const auto& [epoch, value] : rows) out << epoch << ',' << format_xi(value) << '\n';
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

/// With --pt the loss is evaluated on the two-class distribution
/// [p_t, 1 - p_t]; with --logits the gradient is printed on a second line.
inline int cmd_loss_eval(const LossEvalArgs& args, std::ostream& out, std::ostream& err) {
  try {
    LossSpec spec;
    args.loss.apply(spec);
    spec.validate();
    detail::require(args.pt.has_value() != !args.logits.empty(),
                    "give exactly one of --pt or --logits");
    if (args.pt) {
      detail::check_unit_interval(*args.pt, "p_t");
      const std::vector<double> probs{*args.pt, 1.0 - *args.pt};
      out << format_sig7(prob_loss<double>(probs, 0, spec, args.xi)) << '\n';
      return kExitOk;
    }
    detail::require(args.target.has_value(), "--logits needs --target");
    const auto [loss, grad] = loss_and_grad<double>(args.logits, *args.target, spec, args.xi);
    out << format_sig7(loss) << '\n';
    for (std::size_t i = 0; i < grad.size(); ++i) out << (i ? "," : "") << format_sig7(grad[i]);
    out << '\n';
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
  return kExitOk;
}

namespace detail {

inline void add_loss_flags(CLI::App* cmd, LossFlags& flags) {
  cmd->add_option("--focal_loss", flags.focal_loss,
                  "ce | focal | asym | cyclical | asym-cyclical");
  cmd->add_option("--gamma_lc", flags.gamma_lc, "focal exponent on (1 - p_t)");
  cmd->add_option("--gamma_hc", flags.gamma_hc, "high-confidence exponent on (1 + p_t)");
  cmd->add_option("--gamma_pos", flags.gamma_pos, "asymmetric exponent, target class");
  cmd->add_option("--gamma_neg", flags.gamma_neg, "asymmetric exponent, other classes");
  cmd->add_option("--cyclical_factor", flags.cyclical_factor, "f_c >= 1");
}

}  // namespace detail

/// Entry point shared by the executable and the tests.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Cyclical focal loss experiments"};
  app.require_subcommand(1);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train an MLP from a JSON experiment config");
  train_cmd->add_option("config", train_args.config_path, "experiment config (JSON)")
      ->required();
  detail::add_loss_flags(train_cmd, train_args.loss);
  train_cmd->add_option("--epochs", train_args.epochs, "override train.epochs");
  train_cmd->add_option("--seed", train_args.seed, "override train.seed");
  train_cmd->add_option("--schedule-denominator", train_args.denominator, "en | en-1");
  train_cmd->add_option("--output-dir", train_args.output_dir, "override output_dir");
  train_cmd->add_option("--run-label", train_args.run_label, "override run_label");
  train_cmd->add_flag("--quiet", train_args.quiet, "no per-epoch progress on stderr");

  XiTableArgs xi_args;
  auto* xi_cmd = app.add_subcommand("xi-table", "Print the xi schedule as epoch,xi CSV");
  xi_cmd->add_option("--epochs", xi_args.epochs, "total epochs")->required();
  xi_cmd->add_option("--cyclical_factor", xi_args.cyclical_factor, "f_c >= 1");
  xi_cmd->add_option("--schedule-denominator", xi_args.denominator, "en | en-1");

  LossEvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("loss-eval", "Evaluate one loss value (and gradient)");
  detail::add_loss_flags(eval_cmd, eval_args.loss);
  eval_cmd->add_option("--xi", eval_args.xi, "cyclical mixing weight in [0, 1]");
  eval_cmd->add_option("--pt", eval_args.pt, "target-class probability");
  eval_cmd->add_option("--logits", eval_args.logits, "comma-separated logits")->delimiter(',');
  eval_cmd->add_option("--target", eval_args.target, "target class index");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  if (train_cmd->parsed()) return cmd_train(train_args, err);
  if (xi_cmd->parsed()) return cmd_xi_table(xi_args, out, err);
  return cmd_loss_eval(eval_args, out, err);
}

}  // namespace cfl::cli
