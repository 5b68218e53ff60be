#pragma once

// Comparison policies and the weighted fusion of local and remote outputs.

#include <span>
#include <string_view>
#include <vector>

#include "edgesim/agent.hpp"
#include "edgesim/environment.hpp"

namespace edgesim {

enum class PolicyKind { edge_only, cloud_only, binary_offload, cpu_only_dvfs, dvfo };

std::string_view policy_name(PolicyKind kind);
/// Accepts the names above with '-' or '_'. Throws ConfigError otherwise.
PolicyKind parse_policy_kind(std::string_view name);

/// Whole task on the edge at maximum clocks.
EnvAction edge_only_action(const OffloadEnv& env);

/// Whole feature map offloaded; the edge only compresses and transmits, so it
/// runs at minimum clocks.
EnvAction cloud_only_action(const OffloadEnv& env);

/// Cheaper of edge_only and cloud_only at the given bandwidth.
EnvAction binary_offload_action(const OffloadEnv& env, double bandwidth_mbps);

/// Fixed-rule policies acting on the observed bandwidth. Throws DomainError
/// for the learned kinds.
Policy rule_policy(PolicyKind kind, const OffloadEnv& env);

/// Frequency grid restricted to CPU levels; GPU and memory stay at f_max.
ActionGrid cpu_only_grid(const ActionGrid& full);
EnvConfig cpu_only_env_config(EnvConfig base);

/// Re-expresses a policy over `from`'s grid as indices of `to`'s grid.
Policy lift_policy(Policy inner, const OffloadEnv& from, const OffloadEnv& to);

/// out_i = lambda * local_i + (1 - lambda) * remote_i.
std::vector<double> fuse_weighted(std::span<const double> local, std::span<const double> remote,
                                  double lambda);

}  // namespace edgesim
