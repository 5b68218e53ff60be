// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits nonzero if any fails. Optional arguments select criteria by number.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "edgesim/attention.hpp"
#include "edgesim/catalog.hpp"
#include "edgesim/harness.hpp"
#include "edgesim/quantizer.hpp"

using namespace edgesim;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int precision = 4) {
  std::ostringstream ss;
  ss.precision(precision);
  ss << v;
  return ss.str();
}

std::string config_path(const std::string& name) {
  return (fs::path(EDGESIM_SOURCE_DIR) / "configs" / name).string();
}

double mean_of(const std::vector<double>& v) { return mean(v); }

// Greedy rollout of an agent on a fresh environment built from `cfg`.
RolloutStats greedy_rollout(const EnvConfig& cfg, const Agent& agent, std::size_t episodes,
                            std::uint64_t seed, double tas_ratio) {
  OffloadEnv env(cfg);
  return rollout(env, greedy_policy(agent), episodes, seed, tas_ratio);
}

// 1. Oracle equivalence on a frozen 16-action environment.
Outcome oracle_equivalence() {
  const ExperimentConfig cfg = load_config(config_path("frozen.toml"));
  const auto start = std::chrono::steady_clock::now();
  const TrainedAgent t = train_policy(cfg, PolicyKind::dvfo, cfg.seeds.front());

  OffloadEnv env(cfg.env_config());
  EnvState s = env.reset(eval_seed(cfg.seeds.front()));
  const Policy greedy = greedy_policy(*t.agent);
  std::size_t hits = 0;
  const std::size_t states = 100;
  for (std::size_t i = 0; i < states; ++i) {
    const Transition tr = env.concurrent_step(s, greedy, cfg.tas_ratio * kDecisionIntervalMs,
                                              kDecisionIntervalMs);
    const OracleResult best =
        brute_force_optimum(cfg.grid, env.config().system, env.config().workload,
                            env.last_outcome().bandwidth, env.config().cost);
    hits += tr.action == best.index;
    s = tr.next_state;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double rate = static_cast<double>(hits) / states;
  return {rate >= 0.95 && cfg.steps <= 50000 && secs < 300.0,
          "greedy matches oracle on " + std::to_string(hits) + "/100 states after " +
              std::to_string(cfg.steps) + " steps, " + fmt(secs, 3) + " s"};
}

// 2. Full policy against the baselines on the default suite.
Outcome improvement() {
  const ExperimentConfig cfg = load_config(config_path("default.toml"));
  const auto start = std::chrono::steady_clock::now();
  std::vector<double> dvfo, cpu, edge, cloud, binary;
  std::string per_seed;
  for (std::uint64_t seed : cfg.seeds) {
    const TrainedAgent full = train_policy(cfg, PolicyKind::dvfo, seed);
    const TrainedAgent restricted = train_policy(cfg, PolicyKind::cpu_only_dvfs, seed);
    const double d = mean_of(evaluate_policy(cfg, PolicyKind::dvfo, seed, &full).cost);
    dvfo.push_back(d);
    cpu.push_back(mean_of(evaluate_policy(cfg, PolicyKind::cpu_only_dvfs, seed, &restricted).cost));
    edge.push_back(mean_of(evaluate_policy(cfg, PolicyKind::edge_only, seed).cost));
    cloud.push_back(mean_of(evaluate_policy(cfg, PolicyKind::cloud_only, seed).cost));
    binary.push_back(mean_of(evaluate_policy(cfg, PolicyKind::binary_offload, seed).cost));
    per_seed += (per_seed.empty() ? "" : " ") + fmt(d);
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const double best_rule = std::min({mean(edge), mean(cloud), mean(binary)});
  const double m = mean(dvfo);
  const bool pass = m <= 0.8 * best_rule && m < mean(cpu) && secs < 900.0;
  return {pass, "dvfo " + fmt(m) + " (seeds " + per_seed + "), cpu_only_dvfs " + fmt(mean(cpu)) +
                    ", edge_only " + fmt(mean(edge)) + ", cloud_only " + fmt(mean(cloud)) +
                    ", binary_offload " + fmt(mean(binary)) + ", ratio to best rule " +
                    fmt(m / best_rule) + ", " + fmt(secs, 3) + " s"};
}

// 3. Concurrent backup reduces to the standard one at t_as = H.
Outcome concurrent_backup() {
  Rng r(3);
  const Mlp net = Mlp::random({13, 32, 16, 7}, r);
  double worst = 0.0;
  for (int i = 0; i < 1000; ++i) {
    Transition t;
    t.reward = r.uniform(-5.0, 5.0);
    t.next_state.channels = 16;
    t.next_state.bandwidth = r.uniform(2.0, 8.0);
    for (std::size_t k = 0; k < kSummaryTop; ++k) t.next_state.importance_summary[k] = r.uniform();
    t.horizon = r.uniform(1.0, 200.0);
    t.t_as = t.horizon;
    const double gamma = r.uniform(0.1, 0.999);
    const auto q = q_forward(net, encode_state(t.next_state));
    const double standard = t.reward + gamma * *std::max_element(q.begin(), q.end());
    worst = std::max(worst, std::abs(td_target_concurrent(t, net, gamma) - standard));
  }
  Mlp two({13, 4, 3});
  for (std::size_t k = 0; k < 3; ++k) two.bias(1)[k] = 2.0;
  Transition t;
  t.reward = 1.0;
  t.t_as = 50.0;
  t.horizon = 100.0;
  const double y = td_target_concurrent(t, two, 0.99);
  const bool pass = worst <= 1e-12 && std::abs(y - 2.98997) <= 1e-5;
  return {pass, "max |concurrent - standard| at t_as = H: " + fmt(worst, 3) + ", worked target " +
                    fmt(y, 10)};
}

// 4. Concurrent vs blocking at the half-budget checkpoint.
Outcome convergence_trend() {
  const ExperimentConfig base = load_config(config_path("nonstationary.toml"));
  const auto start = std::chrono::steady_clock::now();
  auto half_return = [&](double tas_ratio, std::uint64_t seed) {
    ExperimentConfig cfg = base;
    cfg.tas_ratio = tas_ratio;
    const EnvConfig env_cfg = cfg.env_config();
    double ret = 0.0;
    TrainOptions opt;
    opt.record_steps = false;
    opt.checkpoints = {cfg.steps / 2};
    opt.on_checkpoint = [&](std::size_t, const Agent& agent) {
      ret = mean(greedy_rollout(env_cfg, agent, cfg.eval_episodes, eval_seed(seed), tas_ratio)
                     .episode_returns);
    };
    train_policy(cfg, PolicyKind::dvfo, seed, opt);
    return ret;
  };
  std::vector<double> concurrent, blocking;
  for (std::uint64_t seed : base.seeds) {
    concurrent.push_back(half_return(base.tas_ratio, seed));
    blocking.push_back(half_return(1.0, seed));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {mean(concurrent) >= mean(blocking),
          "mean return at " + std::to_string(base.steps / 2) + " steps: concurrent " +
              fmt(mean(concurrent), 6) + ", blocking " + fmt(mean(blocking), 6) + ", " + fmt(secs, 3) +
              " s"};
}

// 5. Backprop against central differences, every layer.
Outcome gradient_check() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng r(seed);
    Mlp net = Mlp::random({4, 8, 3}, r);
    const std::size_t rows = 5;
    std::vector<double> x(rows * 4), targets(rows), weights(rows);
    std::vector<std::size_t> actions(rows);
    for (double& v : x) v = r.uniform(-1.0, 1.0);
    for (std::size_t i = 0; i < rows; ++i) {
      actions[i] = r.below(3);
      targets[i] = r.uniform(-3.0, 3.0);
      weights[i] = r.uniform(0.2, 1.0);
    }
    std::vector<double> grad, scratch;
    td_loss_and_gradient(net, x, rows, actions, targets, weights, 1.0, grad);
    for (std::size_t p = 0; p < net.params().size(); ++p) {
      const double orig = net.params()[p];
      const double h = 1e-6;
      net.params()[p] = orig + h;
      const double up = td_loss_and_gradient(net, x, rows, actions, targets, weights, 1.0, scratch);
      net.params()[p] = orig - h;
      const double down = td_loss_and_gradient(net, x, rows, actions, targets, weights, 1.0, scratch);
      net.params()[p] = orig;
      const double fd = (up - down) / (2.0 * h);
      const double scale = std::max({std::abs(fd), std::abs(grad[p]), 1e-4});
      worst = std::max(worst, std::abs(fd - grad[p]) / scale);
    }
  }
  return {worst < 1e-4, "largest relative error " + fmt(worst, 3) + " over both layers, 5 seeds"};
}

// 6. Attention invariants.
Outcome attention_invariants() {
  Rng r(6);
  bool in_range = true;
  double worst_sum = 0.0;
  bool quarter = true;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t c = 4 + r.below(61);
    Tensor3 f(c, 1 + r.below(10), 1 + r.below(10));
    for (double& v : f.data()) v = r.uniform(-10.0, 10.0);
    const auto cp = ChannelAttnParams::random(c, 4, r);
    const auto sp = SpatialAttnParams::random(r);
    for (double v : channel_attention(f, cp)) in_range = in_range && v > 0.0 && v < 1.0;
    for (double v : spatial_attention(f, sp)) in_range = in_range && v > 0.0 && v < 1.0;
    const ImportanceDist d = importance_distribution(apply_scam(f, cp, sp));
    double sum = 0.0;
    for (double w : d.weights) sum += w;
    worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
    const Tensor3 z = apply_scam(f, ChannelAttnParams::zeros(c), SpatialAttnParams{});
    for (std::size_t i = 0; i < f.size(); ++i) quarter = quarter && z.data()[i] == 0.25 * f.data()[i];
  }
  OffloadEnv env(default_env_config());
  EnvState s = env.reset(6);
  double top3 = 0.0;
  const int steps = 500;
  for (int i = 0; i < steps; ++i) {
    top3 += s.importance_summary[kSummaryTop + 1] / steps;
    s = env.apply(0, 0.25).next_state;
  }
  const bool pass = in_range && worst_sum <= 1e-9 && quarter && std::abs(top3 - 0.6) <= 0.05;
  return {pass, std::string("outputs in (0,1): ") + (in_range ? "yes" : "no") + ", max |sum - 1| " +
                    fmt(worst_sum, 3) + ", zero-parameter scale 0.25: " + (quarter ? "yes" : "no") +
                    ", mean top-3 mass " + fmt(top3)};
}

// 7. Quantizer bound and payload ratio.
Outcome quantizer() {
  Rng r(7);
  double worst = 0.0;  // error in units of scale
  const int arrays = 100000;
  for (int i = 0; i < arrays; ++i) {
    std::vector<double> x(1 + r.below(64));
    const double centre = r.uniform(-100.0, 100.0);
    const double spread = std::exp(r.uniform(-8.0, 4.0));
    for (double& v : x) v = centre + spread * r.uniform(-1.0, 1.0);
    const QuantizedBlock q = quantize(x);
    const auto y = dequantize(q);
    for (std::size_t k = 0; k < x.size(); ++k) worst = std::max(worst, std::abs(y[k] - x[k]) / q.scale);
  }
  bool ratio = true;
  for (const WorkloadSpec& w : {catalog::effnet_like(), catalog::vit_like()})
    for (double xi : {0.1, 0.5, 1.0})
      ratio = ratio && xi * w.feature_bits() / (compressed_bits(w, xi) - kBlockHeaderBits) == 4.0;
  return {worst <= 0.5 * (1 + 1e-9) && ratio,
          "worst error " + fmt(worst, 6) + " x scale over 1e5 arrays, payload ratio exactly 4: " +
              (ratio ? "yes" : "no")};
}

// 8. Bandwidth and eta sensitivity.
Outcome sensitivity() {
  const ExperimentConfig cfg = load_config(config_path("default.toml"));
  const std::vector<double> bws{2, 3, 4, 5, 6, 7, 8};
  bool monotone = true;
  std::string tti_line;
  for (PolicyKind k : {PolicyKind::cloud_only, PolicyKind::binary_offload}) {
    double prev = INFINITY;
    tti_line += std::string(tti_line.empty() ? "" : "; ") + std::string(policy_name(k)) + " tti";
    for (const SweepRow& row : cli_sweep(cfg, SweepParam::bandwidth, bws, k, std::nullopt)) {
      if (row.metric != "tti") continue;
      monotone = monotone && row.mean <= prev;
      prev = row.mean;
      tti_line += " " + fmt(row.mean);
    }
  }
  auto learned_eti = [&](double eta) {
    ExperimentConfig c = cfg;
    c.eta = eta;
    const TrainedAgent t = train_policy(c, PolicyKind::dvfo, 1);
    return mean(evaluate_policy(c, PolicyKind::dvfo, 1, &t).eti);
  };
  const double eti1 = learned_eti(1.0);
  const double eti0 = learned_eti(0.0);
  return {monotone && eti1 <= eti0, tti_line + "; learned eti at eta=1 " + fmt(eti1) + ", at eta=0 " + fmt(eti0)};
}

// 9. Byte-identical training artifacts.
Outcome determinism() {
  ExperimentConfig cfg = load_config(config_path("default.toml"));
  cfg.steps = 3000;
  cfg.seeds = {11};
  const fs::path root = fs::temp_directory_path() / "edgesim-acceptance-determinism";
  fs::remove_all(root);
  auto run = [&](const std::string& name) {
    ExperimentConfig c = cfg;
    c.output = (root / name).string();
    return cli_train(c, PolicyKind::dvfo).front();
  };
  const TrainArtifacts a = run("a");
  const TrainArtifacts b = run("b");
  auto slurp = [](const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const std::string la = slurp(a.log_csv), lb = slurp(b.log_csv);
  const std::string ca = slurp(a.checkpoint), cb = slurp(b.checkpoint);
  fs::remove_all(root);
  const bool pass = !la.empty() && !ca.empty() && la == lb && ca == cb;
  return {pass, "log " + std::to_string(la.size()) + " bytes " + (la == lb ? "identical" : "differ") +
                    ", checkpoint " + std::to_string(ca.size()) + " bytes " +
                    (ca == cb ? "identical" : "differ")};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"oracle equivalence", oracle_equivalence},
      {"improvement over baselines", improvement},
      {"concurrent backup", concurrent_backup},
      {"convergence trend", convergence_trend},
      {"gradient check", gradient_check},
      {"attention invariants", attention_invariants},
      {"quantizer", quantizer},
      {"monotone sensitivity", sensitivity},
      {"determinism", determinism},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i + 1);
    if (!selected.empty() && !selected.count(id)) continue;
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failures += !o.pass;
    std::cout << "criterion " << id << " (" << criteria[i].first << "): " << (o.pass ? "PASS" : "FAIL")
              << " - " << o.detail << std::endl;
  }
  return failures == 0 ? 0 : 1;
}
