#pragma once

// Experiment orchestration behind the command-line tool: training runs,
// policy evaluation, sweeps, oracle runs, attention demos and CSV output.

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "edgesim/agent.hpp"
#include "edgesim/baselines.hpp"
#include "edgesim/config.hpp"

namespace edgesim {

/// Shortest decimal that round-trips.
std::string format_number(double v);

/// One row of a per-step log.
struct RunRecord {
  std::string run_id;
  StepRecord step;
};

void write_run_header(std::ostream& out);
void write_run_record(std::ostream& out, const RunRecord& r);

/// Summary rows: policy, metric, mean, std.
struct SummaryRow {
  std::string policy;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
};
void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows);

/// Sweep rows: param, value, metric, mean, std.
struct SweepRow {
  std::string param;
  double value = 0.0;
  std::string metric;
  double mean = 0.0;
  double std = 0.0;
};
void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows);

/// Environment seed for a master seed.
std::uint64_t env_seed(std::uint64_t master);
/// Seed of the held-out evaluation rollouts.
std::uint64_t eval_seed(std::uint64_t master);

/// A learned policy together with the environment it acts in.
struct TrainedAgent {
  std::unique_ptr<OffloadEnv> env;
  std::unique_ptr<Agent> agent;
  TrainingLog log;
};

/// Environment for a policy kind: the CPU-only grid for cpu_only_dvfs, the
/// configured grid otherwise.
EnvConfig env_config_for(const ExperimentConfig& cfg, PolicyKind kind);

/// Trains dvfo or cpu_only_dvfs for cfg.steps steps from one master seed.
TrainedAgent train_policy(const ExperimentConfig& cfg, PolicyKind kind, std::uint64_t seed,
                          const TrainOptions& extra = {});

/// Builds an untrained agent shaped for `kind` and loads a checkpoint into it.
TrainedAgent load_policy(const ExperimentConfig& cfg, PolicyKind kind, const std::string& checkpoint);

/// Greedy rollout statistics of `kind` on an environment built from cfg.
/// Learned kinds need `trained`; its policy is lifted onto cfg's grid.
RolloutStats evaluate_policy(const ExperimentConfig& cfg, PolicyKind kind, std::uint64_t seed,
                             const TrainedAgent* trained = nullptr);

std::vector<SummaryRow> summarize(PolicyKind kind, const RolloutStats& stats);

/// Files written by cli_train for one seed.
struct TrainArtifacts {
  std::string checkpoint;
  std::string log_csv;
};

/// Trains every configured seed, writing "<out>/<policy>_seed<k>.ckpt" and
/// "<out>/<policy>_seed<k>.csv".
std::vector<TrainArtifacts> cli_train(const ExperimentConfig& cfg, PolicyKind kind);

/// Evaluates one policy over every configured seed; learned kinds read the
/// given checkpoint.
std::vector<SummaryRow> cli_eval(const ExperimentConfig& cfg, PolicyKind kind,
                                 const std::optional<std::string>& checkpoint);

enum class SweepParam { eta, lambda, bandwidth };
SweepParam parse_sweep_param(const std::string& name);

/// One evaluation per value with shared seeds. Bandwidth values become
/// constant traces.
std::vector<SweepRow> cli_sweep(const ExperimentConfig& cfg, SweepParam param,
                                const std::vector<double>& values, PolicyKind kind,
                                const std::optional<std::string>& checkpoint);

struct OracleRow {
  std::size_t step = 0;
  double bandwidth = 0.0;
  OracleResult result;
};

/// Exhaustive optimum for each of `steps` bandwidth values of the configured
/// process (trace entries, or a seeded walk).
std::vector<OracleRow> cli_oracle(const ExperimentConfig& cfg, std::size_t steps, std::uint64_t seed);
void write_oracle(std::ostream& out, const std::vector<OracleRow>& rows);

struct AttnDemo {
  std::vector<std::size_t> order;  // channels by descending importance
  std::vector<double> importance;  // indexed by channel
  double top3 = 0.0;
  double skew = 0.0;
};

/// Synthetic map of the given size through SCAM with seeded parameters.
AttnDemo cli_attn_demo(std::uint64_t seed, std::size_t channels, std::size_t height,
                       std::size_t width, std::optional<double> skew, std::size_t reduction = 4);
void write_attn_demo(std::ostream& out, const AttnDemo& demo);

}  // namespace edgesim
