#include <doctest.h>

#include <algorithm>

#include "edgesim/baselines.hpp"
#include "edgesim/catalog.hpp"
#include "edgesim/errors.hpp"

using namespace edgesim;

namespace {

EnvConfig config_with(WorkloadSpec w, BandwidthSpec bw = BandwidthSpec::constant(5.0)) {
  EnvConfig c = default_env_config();
  c.workload = std::move(w);
  c.bandwidth = std::move(bw);
  return c;
}

}  // namespace

TEST_CASE("policy names") {
  for (PolicyKind k : {PolicyKind::edge_only, PolicyKind::cloud_only, PolicyKind::binary_offload,
                       PolicyKind::cpu_only_dvfs, PolicyKind::dvfo}) {
    CHECK(parse_policy_kind(policy_name(k)) == k);
  }
  CHECK(parse_policy_kind("cpu-only-dvfs") == PolicyKind::cpu_only_dvfs);
  CHECK_THROWS_AS(parse_policy_kind("greedy"), ConfigError);
}

TEST_CASE("edge_only") {
  OffloadEnv env(default_env_config());
  env.reset(1);
  const EnvAction a = edge_only_action(env);
  CHECK(a.xi == 0.0);
  CHECK(a.freq == env.config().system.edge.f_max);
  const Evaluation e = env.price(a, 5.0);
  CHECK(e.latency.off == 0.0);
  CHECK(e.latency.comp == 0.0);
  CHECK(e.latency.cloud == 0.0);
  // eta * p_max * T + (1 - eta) * MaxPower * T with p at f_max equal to MaxPower.
  const double p = env.config().system.edge.max_power;
  const double t = e.latency.local;
  CHECK(e.cost == doctest::Approx(0.5 * p * t + 0.5 * p * t).epsilon(1e-12));
  CHECK(e.cost == doctest::Approx(700.0).epsilon(1e-12));
  CHECK(env.price(a, 2.0).cost == env.price(a, 8.0).cost);
}

TEST_CASE("cloud_only") {
  OffloadEnv env(default_env_config());
  env.reset(1);
  const EnvAction a = cloud_only_action(env);
  CHECK(a.xi == 1.0);
  CHECK(a.freq == env.config().system.edge.f_min);
  const Evaluation e5 = env.price(a, 5.0);
  CHECK(e5.latency.local == 0.0);
  CHECK(e5.latency.off == doctest::Approx(400.0).epsilon(1e-12));
  CHECK(e5.cost == doctest::Approx(6136.604439928382).epsilon(1e-12));
  CHECK(env.price(a, 2.0).latency.off == doctest::Approx(2.5 * e5.latency.off).epsilon(1e-12));
  CHECK(env.price(a, 2.0).cost == doctest::Approx(12752.772860981013).epsilon(1e-12));
  CHECK(env.price(a, 8.0).cost == doctest::Approx(4482.562334665224).epsilon(1e-12));
}

TEST_CASE("binary_offload picks the cheaper branch") {
  OffloadEnv eff(default_env_config());
  eff.reset(1);
  CHECK(binary_offload_action(eff, 2.0).xi == 0.0);
  CHECK(binary_offload_action(eff, 8.0).xi == 0.0);

  OffloadEnv vit(config_with(catalog::vit_like()));
  vit.reset(1);
  CHECK(binary_offload_action(vit, 8.0).xi == 1.0);
  CHECK(binary_offload_action(vit, 1e6).xi == 1.0);
  CHECK(binary_offload_action(vit, 2.0).xi == 0.0);

  for (double bw : {2.0, 3.0, 4.5, 6.0, 8.0}) {
    for (OffloadEnv* env : {&eff, &vit}) {
      const EnvAction a = binary_offload_action(*env, bw);
      CHECK((a.xi == 0.0 || a.xi == 1.0));
      const double c = env->price(a, bw).cost;
      CHECK(c <= env->price(edge_only_action(*env), bw).cost);
      CHECK(c <= env->price(cloud_only_action(*env), bw).cost);
    }
  }
}

TEST_CASE("rule policies emit grid actions") {
  OffloadEnv env(config_with(catalog::vit_like(), BandwidthSpec{}));
  EnvState s = env.reset(2);
  for (PolicyKind k : {PolicyKind::edge_only, PolicyKind::cloud_only, PolicyKind::binary_offload}) {
    const Policy p = rule_policy(k, env);
    for (int i = 0; i < 20; ++i) {
      const std::size_t a = p(s);
      CHECK(a < env.action_count());
      s = env.apply(a, 0.25).next_state;
    }
  }
  EnvState low = s;
  low.bandwidth = 2.0;
  EnvState high = s;
  high.bandwidth = 8.0;
  const Policy bin = rule_policy(PolicyKind::binary_offload, env);
  CHECK(env.decode(bin(low)).xi == 0.0);
  CHECK(env.decode(bin(high)).xi == 1.0);
  CHECK_THROWS_AS(rule_policy(PolicyKind::dvfo, env), DomainError);
  CHECK_THROWS_AS(rule_policy(PolicyKind::cpu_only_dvfs, env), DomainError);
}

TEST_CASE("cpu-only grid") {
  const ActionGrid g = cpu_only_grid(ActionGrid::uniform(10, 11));
  CHECK(g.size() == 110);
  const EnvConfig base = default_env_config();
  const EnvConfig c = cpu_only_env_config(base);
  OffloadEnv env(c);
  for (std::size_t i = 0; i < env.action_count(); ++i) {
    const Action a = env.decode(i);
    CHECK(a.freq.gpu == base.system.edge.f_max.gpu);
    CHECK(a.freq.mem == base.system.edge.f_max.mem);
  }

  // Restricting the feasible set can only raise the optimum.
  EnvConfig small = default_env_config();
  small.grid = {2, 2, 2, 2};
  const OracleResult full = brute_force_optimum(small.grid, small.system, small.workload, 5.0, small.cost);
  const ActionGrid restricted = cpu_only_grid(small.grid);
  const OracleResult cpu = brute_force_optimum(restricted, small.system, small.workload, 5.0, small.cost);
  CHECK(cpu.evaluation.cost >= full.evaluation.cost);

  const OracleResult cpu_default =
      brute_force_optimum(g, base.system, base.workload, 5.0, base.cost);
  CHECK(cpu_default.index == 99);
  CHECK(cpu_default.evaluation.cost == doctest::Approx(700.0).epsilon(1e-12));
}

TEST_CASE("lift_policy maps CPU-only indices onto the full grid") {
  const EnvConfig base = default_env_config();
  OffloadEnv full(base);
  OffloadEnv cpu(cpu_only_env_config(base));
  full.reset(1);
  cpu.reset(1);
  for (std::size_t i = 0; i < cpu.action_count(); ++i) {
    const Policy lifted = lift_policy([i](const EnvState&) { return i; }, cpu, full);
    const Action a = full.decode(lifted(full.observation()));
    const Action b = cpu.decode(i);
    CHECK(a.freq == b.freq);
    CHECK(a.xi == b.xi);
  }
}

TEST_CASE("fuse_weighted") {
  const std::vector<double> l{2.0, 0.0};
  const std::vector<double> r{0.0, 2.0};
  CHECK(fuse_weighted(l, r, 0.5) == std::vector<double>{1.0, 1.0});
  CHECK(fuse_weighted(l, r, 1.0) == l);
  CHECK(fuse_weighted(l, r, 0.0) == r);
  CHECK_THROWS_AS(fuse_weighted(l, std::vector<double>{1.0}, 0.5), DomainError);
  CHECK_THROWS_AS(fuse_weighted(l, r, 1.5), DomainError);

  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> a(7), b(7);
    for (double& v : a) v = rng.uniform(-5.0, 5.0);
    for (double& v : b) v = rng.uniform(-5.0, 5.0);
    const double lambda = rng.uniform();
    const double k = rng.uniform(0.1, 10.0);
    const auto out = fuse_weighted(a, b, lambda);
    CHECK(out.size() == a.size());
    std::vector<double> ka(a), kb(b);
    for (double& v : ka) v *= k;
    for (double& v : kb) v *= k;
    const auto scaled = fuse_weighted(ka, kb, lambda);
    CHECK(std::max_element(out.begin(), out.end()) - out.begin() ==
          std::max_element(scaled.begin(), scaled.end()) - scaled.begin());
    for (std::size_t i = 0; i < out.size(); ++i)
      CHECK(scaled[i] == doctest::Approx(k * out[i]).epsilon(1e-12));
  }
}
