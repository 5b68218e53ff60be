#include "edgesim/harness.hpp"

#include <algorithm>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include "edgesim/errors.hpp"

namespace edgesim {

std::string format_number(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

void write_run_header(std::ostream& out) {
  out << "run_id,step,f_cpu,f_gpu,f_mem,xi,bandwidth,tti_local,tti_comp,tti_off,tti_cloud,"
         "tti_total,eti_compute,eti_offload,eti_total,cost,reward,episode_return\n";
}

void write_run_record(std::ostream& out, const RunRecord& r) {
  const StepRecord& s = r.step;
  const double fields[] = {s.action.freq.cpu, s.action.freq.gpu, s.action.freq.mem, s.action.xi,
                           s.bandwidth,       s.latency.local,   s.latency.comp,    s.latency.off,
                           s.latency.cloud,   s.latency.total,   s.energy.compute,  s.energy.offload,
                           s.energy.total,    s.cost,            s.reward,          s.episode_return};
  out << r.run_id << ',' << s.step;
  for (double f : fields) out << ',' << format_number(f);
  out << '\n';
}

void write_summary(std::ostream& out, const std::vector<SummaryRow>& rows) {
  out << "policy,metric,mean,std\n";
  for (const auto& r : rows)
    out << r.policy << ',' << r.metric << ',' << format_number(r.mean) << ',' << format_number(r.std) << '\n';
}

void write_sweep(std::ostream& out, const std::vector<SweepRow>& rows) {
  out << "param,value,metric,mean,std\n";
  for (const auto& r : rows) {
    out << r.param << ',' << format_number(r.value) << ',' << r.metric << ',' << format_number(r.mean)
        << ',' << format_number(r.std) << '\n';
  }
}

std::uint64_t env_seed(std::uint64_t master) { return derive_seed(master, "env"); }
std::uint64_t eval_seed(std::uint64_t master) { return derive_seed(master, "eval"); }

EnvConfig env_config_for(const ExperimentConfig& cfg, PolicyKind kind) {
  EnvConfig e = cfg.env_config();
  return kind == PolicyKind::cpu_only_dvfs ? cpu_only_env_config(std::move(e)) : e;
}

namespace {

void require_learned(PolicyKind kind) {
  if (kind != PolicyKind::dvfo && kind != PolicyKind::cpu_only_dvfs)
    throw ConfigError("policy '" + std::string(policy_name(kind)) + "' has nothing to train");
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  return out;
}

}  // namespace

TrainedAgent train_policy(const ExperimentConfig& cfg, PolicyKind kind, std::uint64_t seed,
                          const TrainOptions& extra) {
  require_learned(kind);
  TrainedAgent t;
  t.env = std::make_unique<OffloadEnv>(env_config_for(cfg, kind));
  t.agent = std::make_unique<Agent>(t.env->action_count(), cfg.agent, seed);
  TrainOptions opt = extra;
  opt.t_as_ratio = cfg.tas_ratio;
  opt.env_seed = env_seed(seed);
  t.log = train(*t.env, *t.agent, cfg.steps, opt);
  return t;
}

TrainedAgent load_policy(const ExperimentConfig& cfg, PolicyKind kind, const std::string& checkpoint) {
  require_learned(kind);
  std::ifstream in(checkpoint);
  if (!in) throw ConfigError("cannot open checkpoint '" + checkpoint + "'");
  TrainedAgent t;
  t.env = std::make_unique<OffloadEnv>(env_config_for(cfg, kind));
  t.agent = std::make_unique<Agent>(t.env->action_count(), cfg.agent, 0);
  t.agent->load(in);
  return t;
}

RolloutStats evaluate_policy(const ExperimentConfig& cfg, PolicyKind kind, std::uint64_t seed,
                             const TrainedAgent* trained) {
  OffloadEnv env(cfg.env_config());
  Policy policy;
  if (kind == PolicyKind::dvfo || kind == PolicyKind::cpu_only_dvfs) {
    if (trained == nullptr || !trained->agent || !trained->env)
      throw ConfigError("policy '" + std::string(policy_name(kind)) + "' needs a trained agent");
    policy = lift_policy(greedy_policy(*trained->agent), *trained->env, env);
  } else {
    policy = rule_policy(kind, env);
  }
  return rollout(env, policy, cfg.eval_episodes, eval_seed(seed), cfg.tas_ratio);
}

std::vector<SummaryRow> summarize(PolicyKind kind, const RolloutStats& stats) {
  const std::string name(policy_name(kind));
  return {{name, "tti", mean(stats.tti), stddev(stats.tti)},
          {name, "eti", mean(stats.eti), stddev(stats.eti)},
          {name, "cost", mean(stats.cost), stddev(stats.cost)},
          {name, "episode_return", mean(stats.episode_returns), stddev(stats.episode_returns)}};
}

std::vector<TrainArtifacts> cli_train(const ExperimentConfig& cfg, PolicyKind kind) {
  require_learned(kind);
  std::filesystem::create_directories(cfg.output);
  std::vector<TrainArtifacts> out;
  for (std::uint64_t seed : cfg.seeds) {
    const TrainedAgent t = train_policy(cfg, kind, seed);
    const std::string stem = (std::filesystem::path(cfg.output) /
                              (std::string(policy_name(kind)) + "_seed" + std::to_string(seed)))
                                 .string();
    TrainArtifacts a{stem + ".ckpt", stem + ".csv"};
    {
      std::ofstream ck = open_out(a.checkpoint);
      t.agent->save(ck);
    }
    {
      std::ofstream csv = open_out(a.log_csv);
      write_run_header(csv);
      const std::string run_id = std::string(policy_name(kind)) + "-" + std::to_string(seed);
      for (const StepRecord& s : t.log.steps) write_run_record(csv, {run_id, s});
    }
    out.push_back(std::move(a));
  }
  return out;
}

namespace {

/// Pools per-seed statistics into one set.
RolloutStats evaluate_seeds(const ExperimentConfig& cfg, PolicyKind kind, const TrainedAgent* trained) {
  RolloutStats all;
  for (std::uint64_t seed : cfg.seeds) {
    const RolloutStats s = evaluate_policy(cfg, kind, seed, trained);
    all.tti.insert(all.tti.end(), s.tti.begin(), s.tti.end());
    all.eti.insert(all.eti.end(), s.eti.begin(), s.eti.end());
    all.cost.insert(all.cost.end(), s.cost.begin(), s.cost.end());
    all.episode_returns.insert(all.episode_returns.end(), s.episode_returns.begin(),
                               s.episode_returns.end());
  }
  return all;
}

std::optional<TrainedAgent> maybe_load(const ExperimentConfig& cfg, PolicyKind kind,
                                       const std::optional<std::string>& checkpoint) {
  if (kind != PolicyKind::dvfo && kind != PolicyKind::cpu_only_dvfs) return std::nullopt;
  if (!checkpoint) throw ConfigError("policy '" + std::string(policy_name(kind)) + "' needs --checkpoint");
  return load_policy(cfg, kind, *checkpoint);
}

}  // namespace

std::vector<SummaryRow> cli_eval(const ExperimentConfig& cfg, PolicyKind kind,
                                 const std::optional<std::string>& checkpoint) {
  const auto trained = maybe_load(cfg, kind, checkpoint);
  return summarize(kind, evaluate_seeds(cfg, kind, trained ? &*trained : nullptr));
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "eta") return SweepParam::eta;
  if (name == "lambda") return SweepParam::lambda;
  if (name == "bandwidth") return SweepParam::bandwidth;
  throw ConfigError("unknown sweep parameter '" + name + "' (expected eta, lambda or bandwidth)");
}

std::vector<SweepRow> cli_sweep(const ExperimentConfig& cfg, SweepParam param,
                                const std::vector<double>& values, PolicyKind kind,
                                const std::optional<std::string>& checkpoint) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const char* name = param == SweepParam::eta      ? "eta"
                     : param == SweepParam::lambda ? "lambda"
                                                   : "bandwidth";
  std::vector<SweepRow> rows;
  for (double v : values) {
    ExperimentConfig point = cfg;
    switch (param) {
      case SweepParam::eta:
        point.eta = v;
        break;
      case SweepParam::lambda:
        point.lambda = v;
        break;
      case SweepParam::bandwidth:
        point.bandwidth = BandwidthSpec::constant(v);
        point.trace_path.clear();
        break;
    }
    point.validate();
    const auto trained = maybe_load(point, kind, checkpoint);
    for (const SummaryRow& s : summarize(kind, evaluate_seeds(point, kind, trained ? &*trained : nullptr)))
      rows.push_back({name, v, s.metric, s.mean, s.std});
  }
  return rows;
}

std::vector<OracleRow> cli_oracle(const ExperimentConfig& cfg, std::size_t steps, std::uint64_t seed) {
  const EnvConfig e = cfg.env_config();
  if (e.grid.size() > kOracleMaxActions)
    throw ConfigError("oracle: grid of " + std::to_string(e.grid.size()) + " actions is too large to enumerate");
  if (steps == 0 && e.bandwidth.mode == BandwidthMode::trace) steps = e.bandwidth.trace.size();
  BandwidthProcess bw(e.bandwidth, derive_seed(env_seed(seed), "bandwidth"));
  std::vector<OracleRow> rows;
  rows.reserve(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    const double b = bw.next();
    rows.push_back({i, b, brute_force_optimum(e.grid, e.system, e.workload, b, e.cost)});
  }
  return rows;
}

void write_oracle(std::ostream& out, const std::vector<OracleRow>& rows) {
  out << "step,bandwidth,action_index,f_cpu,f_gpu,f_mem,xi,tti_total,eti_total,cost,evaluations\n";
  for (const auto& r : rows) {
    const OracleResult& o = r.result;
    out << r.step << ',' << format_number(r.bandwidth) << ',' << o.index << ','
        << format_number(o.action.freq.cpu) << ',' << format_number(o.action.freq.gpu) << ','
        << format_number(o.action.freq.mem) << ',' << format_number(o.action.xi) << ','
        << format_number(o.evaluation.latency.total) << ',' << format_number(o.evaluation.energy.total)
        << ',' << format_number(o.evaluation.cost) << ',' << o.evaluations << '\n';
  }
}

AttnDemo cli_attn_demo(std::uint64_t seed, std::size_t channels, std::size_t height, std::size_t width,
                       std::optional<double> skew, std::size_t reduction) {
  if (channels < 4) throw DomainError("attn-demo: at least 4 channels are required");
  AttnDemo d;
  d.skew = skew.value_or(calibrate_skew(channels, 0.6));
  Rng params(derive_seed(seed, "attention-params"));
  const ChannelAttnParams cp = ChannelAttnParams::random(channels, reduction, params);
  const SpatialAttnParams sp = SpatialAttnParams::random(params);
  const Tensor3 raw = synth_feature_map(derive_seed(seed, "features"), d.skew, channels, height, width);
  d.importance = importance_distribution(apply_scam(raw, cp, sp)).weights;
  d.order.resize(channels);
  std::iota(d.order.begin(), d.order.end(), std::size_t{0});
  std::stable_sort(d.order.begin(), d.order.end(),
                   [&](std::size_t a, std::size_t b) { return d.importance[a] > d.importance[b]; });
  d.top3 = d.importance[d.order[0]] + d.importance[d.order[1]] + d.importance[d.order[2]];
  return d;
}

void write_attn_demo(std::ostream& out, const AttnDemo& demo) {
  out << "rank,channel,importance,cumulative\n";
  double cum = 0.0;
  for (std::size_t r = 0; r < demo.order.size(); ++r) {
    const std::size_t c = demo.order[r];
    cum += demo.importance[c];
    out << r + 1 << ',' << c << ',' << format_number(demo.importance[c]) << ',' << format_number(cum) << '\n';
  }
}

}  // namespace edgesim
