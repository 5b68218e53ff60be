#include "edgesim/baselines.hpp"

#include <string>

#include "edgesim/errors.hpp"

namespace edgesim {

std::string_view policy_name(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::edge_only:
      return "edge_only";
    case PolicyKind::cloud_only:
      return "cloud_only";
    case PolicyKind::binary_offload:
      return "binary_offload";
    case PolicyKind::cpu_only_dvfs:
      return "cpu_only_dvfs";
    case PolicyKind::dvfo:
      return "dvfo";
  }
  return "unknown";
}

PolicyKind parse_policy_kind(std::string_view name) {
  std::string norm(name);
  for (char& c : norm)
    if (c == '-') c = '_';
  for (PolicyKind k : {PolicyKind::edge_only, PolicyKind::cloud_only, PolicyKind::binary_offload,
                       PolicyKind::cpu_only_dvfs, PolicyKind::dvfo}) {
    if (norm == policy_name(k)) return k;
  }
  throw ConfigError("unknown policy '" + std::string(name) +
                    "' (expected edge_only, cloud_only, binary_offload, cpu_only_dvfs or dvfo)");
}

EnvAction edge_only_action(const OffloadEnv& env) {
  return {env.config().system.edge.f_max, 0.0};
}

EnvAction cloud_only_action(const OffloadEnv& env) {
  return {env.config().system.edge.f_min, 1.0};
}

EnvAction binary_offload_action(const OffloadEnv& env, double bandwidth_mbps) {
  const EnvAction edge = edge_only_action(env);
  const EnvAction cloud = cloud_only_action(env);
  return env.price(cloud, bandwidth_mbps).cost < env.price(edge, bandwidth_mbps).cost ? cloud : edge;
}

Policy rule_policy(PolicyKind kind, const OffloadEnv& env) {
  switch (kind) {
    case PolicyKind::edge_only: {
      const std::size_t index = env.encode(edge_only_action(env));
      return [index](const EnvState&) { return index; };
    }
    case PolicyKind::cloud_only: {
      const std::size_t index = env.encode(cloud_only_action(env));
      return [index](const EnvState&) { return index; };
    }
    case PolicyKind::binary_offload: {
      const std::size_t edge = env.encode(edge_only_action(env));
      const std::size_t cloud = env.encode(cloud_only_action(env));
      return [&env, edge, cloud](const EnvState& s) {
        return binary_offload_action(env, s.bandwidth).xi > 0.0 ? cloud : edge;
      };
    }
    case PolicyKind::cpu_only_dvfs:
    case PolicyKind::dvfo:
      break;
  }
  throw DomainError("rule_policy: '" + std::string(policy_name(kind)) + "' is a learned policy");
}

ActionGrid cpu_only_grid(const ActionGrid& full) {
  return {full.cpu_levels, 1, 1, full.xi_levels};
}

EnvConfig cpu_only_env_config(EnvConfig base) {
  base.grid = cpu_only_grid(base.grid);
  return base;
}

Policy lift_policy(Policy inner, const OffloadEnv& from, const OffloadEnv& to) {
  return [inner = std::move(inner), &from, &to](const EnvState& s) {
    return to.encode(from.decode(inner(s)));
  };
}

std::vector<double> fuse_weighted(std::span<const double> local, std::span<const double> remote,
                                  double lambda) {
  if (local.size() != remote.size())
    throw DomainError("fuse_weighted: local and remote outputs differ in length");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw DomainError("fuse_weighted: lambda outside [0, 1]");
  std::vector<double> out(local.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = lambda * local[i] + (1.0 - lambda) * remote[i];
  return out;
}

}  // namespace edgesim
