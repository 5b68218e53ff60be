// Command-line front end: train, eval, sweep, oracle, attn-demo.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "edgesim/errors.hpp"
#include "edgesim/harness.hpp"
#include "edgesim/kernels.hpp"

namespace {

using namespace edgesim;

struct CommonFlags {
  std::optional<std::string> config;
  Overrides overrides;
  std::optional<std::string> policy;
};

void add_common(CLI::App* app, CommonFlags& f) {
  app->add_option("--config", f.config, "TOML config (default: $EDGESIM_CONFIG)");
  app->add_option("--seed", f.overrides.seed, "Master seed; replaces the configured seed list");
  app->add_option("--steps", f.overrides.steps, "Training steps");
  app->add_option("--device", f.overrides.device, "Edge device name");
  app->add_option("--workload", f.overrides.workload, "Workload name");
  app->add_option("--policy", f.policy,
                  "edge_only | cloud_only | binary_offload | cpu_only_dvfs | dvfo");
  app->add_option("--out", f.overrides.out, "Output directory (train) or CSV file");
  app->add_option("--trace", f.overrides.trace, "Bandwidth trace CSV (step,mbps)");
  app->add_option("--eta", f.overrides.eta, "Energy weight of the cost");
  app->add_option("--lambda", f.overrides.lambda, "Fusion weight");
  app->add_option("--tas-ratio", f.overrides.tas_ratio, "Action-selection time as a share of the interval");
}

ExperimentConfig build_config(const CommonFlags& f) {
  ExperimentConfig cfg = default_experiment_config();
  if (auto path = resolve_config_path(f.config)) cfg = load_config(*path);
  apply_overrides(cfg, f.overrides);
  return cfg;
}

/// Writes to --out when given, stdout otherwise.
template <typename Fn>
void emit(const CommonFlags& f, Fn&& write) {
  if (f.overrides.out) {
    std::ofstream out(*f.overrides.out, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + *f.overrides.out + "'");
    write(out);
  } else {
    write(std::cout);
  }
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  for (std::string tok; std::getline(ss, tok, ',');) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("bad value '" + tok + "' in --values");
    }
  }
  return v;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DVFS-aware edge-cloud collaborative inference simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "edgesim 1.0");

  CommonFlags train_f, eval_f, sweep_f, oracle_f;
  auto* train = app.add_subcommand("train", "Train a learned policy for every configured seed");
  add_common(train, train_f);

  auto* eval = app.add_subcommand("eval", "Greedy rollouts of a policy; mean/std of TTI, ETI, cost");
  add_common(eval, eval_f);
  std::optional<std::string> eval_ckpt;
  std::optional<std::size_t> eval_episodes;
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint for dvfo / cpu_only_dvfs");
  eval->add_option("--episodes", eval_episodes, "Evaluation episodes per seed");

  auto* sweep = app.add_subcommand("sweep", "Evaluate a policy across values of eta, lambda or bandwidth");
  add_common(sweep, sweep_f);
  std::string sweep_param;
  std::string sweep_values;
  std::optional<std::string> sweep_ckpt;
  sweep->add_option("--param", sweep_param, "eta | lambda | bandwidth")->required();
  sweep->add_option("--values", sweep_values, "Comma-separated values")->required();
  sweep->add_option("--checkpoint", sweep_ckpt, "Checkpoint for dvfo / cpu_only_dvfs");

  auto* oracle = app.add_subcommand("oracle", "Exhaustive optimum for each bandwidth value");
  add_common(oracle, oracle_f);
  std::optional<std::size_t> oracle_count;
  oracle->add_option("--count", oracle_count, "Bandwidth values to solve (default: trace length or 100)");

  auto* attn = app.add_subcommand("attn-demo", "Importance distribution of a synthetic feature map");
  std::uint64_t attn_seed = 0;
  std::size_t attn_c = 16, attn_h = 8, attn_w = 8;
  std::optional<double> attn_skew;
  std::optional<std::string> attn_out;
  attn->add_option("--seed", attn_seed, "Seed");
  attn->add_option("--channels", attn_c, "Channels");
  attn->add_option("--height", attn_h, "Height");
  attn->add_option("--width", attn_w, "Width");
  attn->add_option("--skew", attn_skew, "Zipf exponent (default: top-3 mass 0.6)");
  attn->add_option("--out", attn_out, "CSV file (default: stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const ExperimentConfig cfg = build_config(train_f);
      const PolicyKind kind = parse_policy_kind(train_f.policy.value_or("dvfo"));
      std::cerr << "kernels: " << kernels::isa_name(kernels::active().isa) << '\n';
      for (const auto& a : cli_train(cfg, kind))
        std::cout << "wrote " << a.checkpoint << " and " << a.log_csv << '\n';
    } else if (*eval) {
      ExperimentConfig cfg = build_config(eval_f);
      if (eval_episodes) cfg.eval_episodes = *eval_episodes;
      cfg.validate();
      const PolicyKind kind = parse_policy_kind(eval_f.policy.value_or("dvfo"));
      const auto rows = cli_eval(cfg, kind, eval_ckpt);
      emit(eval_f, [&](std::ostream& out) { write_summary(out, rows); });
    } else if (*sweep) {
      const ExperimentConfig cfg = build_config(sweep_f);
      const PolicyKind kind = parse_policy_kind(sweep_f.policy.value_or("edge_only"));
      const auto rows = cli_sweep(cfg, parse_sweep_param(sweep_param), parse_values(sweep_values), kind,
                                  sweep_ckpt);
      emit(sweep_f, [&](std::ostream& out) { write_sweep(out, rows); });
    } else if (*oracle) {
      const ExperimentConfig cfg = build_config(oracle_f);
      const std::size_t count = oracle_count.value_or(
          cfg.bandwidth.mode == BandwidthMode::trace ? cfg.bandwidth.trace.size() : 100);
      const auto rows = cli_oracle(cfg, count, cfg.seeds.front());
      emit(oracle_f, [&](std::ostream& out) { write_oracle(out, rows); });
    } else if (*attn) {
      const AttnDemo demo = cli_attn_demo(attn_seed, attn_c, attn_h, attn_w, attn_skew);
      std::cerr << "skew " << format_number(demo.skew) << ", top-3 mass " << format_number(demo.top3) << '\n';
      if (attn_out) {
        std::ofstream out(*attn_out, std::ios::binary);
        if (!out) throw ConfigError("cannot write '" + *attn_out + "'");
        write_attn_demo(out, demo);
      } else {
        write_attn_demo(std::cout, demo);
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
