#pragma once

// Experiment configuration: a TOML document layered over built-in defaults.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "edgesim/agent.hpp"
#include "edgesim/environment.hpp"

namespace edgesim {

/// Environment variable naming the config file used when --config is absent.
inline constexpr const char* kConfigEnvVar = "EDGESIM_CONFIG";

struct ExperimentConfig {
  std::string device = "xavier-nx";
  std::string cloud = "rtx3080";
  std::string workload = "effnet-like";
  double eta = 0.5;
  double lambda = 0.5;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
  std::size_t steps = 50'000;
  std::string output = "runs";
  double tas_ratio = 0.25;
  std::size_t eval_episodes = 20;
  std::size_t episode_length = 64;

  BandwidthSpec bandwidth;
  std::string trace_path;  // set when the bandwidth comes from a file

  ActionGrid grid;
  AgentConfig agent;

  PowerShares power_split;
  double offload_share = 0.1;
  double quantizer_bits_per_ms = 1e6;

  std::size_t attention_height = 8;
  std::size_t attention_width = 8;
  std::size_t attention_reduction = 4;
  std::optional<double> skew;

  /// Built-in tables plus any [devices.*] / [workloads.*] entries.
  std::map<std::string, DeviceSpec> devices;
  std::map<std::string, WorkloadSpec> workloads;

  /// Throws ConfigError.
  void validate() const;
  EnvConfig env_config() const;
};

ExperimentConfig default_experiment_config();

/// Parses TOML text. Relative trace paths resolve against base_dir.
ExperimentConfig parse_config(std::string_view text, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);

/// Explicit path, else $EDGESIM_CONFIG, else nullopt.
std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path);

/// Command-line overrides applied after the file.
struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> steps;
  std::optional<std::string> device;
  std::optional<std::string> workload;
  std::optional<std::string> out;
  std::optional<std::string> trace;
  std::optional<double> eta;
  std::optional<double> lambda;
  std::optional<double> tas_ratio;
};

/// Applies overrides (a trace override also loads the file) and validates.
void apply_overrides(ExperimentConfig& cfg, const Overrides& o);

}  // namespace edgesim
