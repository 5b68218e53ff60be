#include "edgesim/environment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "edgesim/catalog.hpp"
#include "edgesim/errors.hpp"

namespace edgesim {

void BandwidthSpec::validate() const {
  if (mode == BandwidthMode::trace) {
    if (trace.empty()) throw ConfigError("bandwidth trace is empty");
    for (double b : trace) {
      if (!(b > 0.0) || !std::isfinite(b)) throw ConfigError("bandwidth trace values must be > 0");
    }
    return;
  }
  if (!(low > 0.0 && high > low)) throw ConfigError("random walk needs 0 < low < high");
  if (!(step >= 0.0 && step <= high - low)) throw ConfigError("random walk step out of range");
  if (!(initial >= low && initial <= high)) throw ConfigError("random walk start outside bounds");
}

BandwidthProcess::BandwidthProcess(BandwidthSpec spec, std::uint64_t seed)
    : spec_(std::move(spec)), rng_(seed) {
  spec_.validate();
}

double BandwidthProcess::next() {
  if (spec_.mode == BandwidthMode::trace) {
    const double b = spec_.trace[cursor_];
    cursor_ = (cursor_ + 1) % spec_.trace.size();
    return b;
  }
  if (!last_) {
    last_ = spec_.initial;
    return *last_;
  }
  double b = *last_ + rng_.uniform(-spec_.step, spec_.step);
  // Reflect at the walls; one reflection suffices because step <= high - low.
  if (b > spec_.high) b = 2.0 * spec_.high - b;
  if (b < spec_.low) b = 2.0 * spec_.low - b;
  last_ = std::clamp(b, spec_.low, spec_.high);
  return *last_;
}

std::vector<double> load_bandwidth_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open bandwidth trace '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("bandwidth trace '" + path + "' is empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "step,mbps") {
    throw ConfigError("bandwidth trace '" + path + "': expected header \"step,mbps\"");
  }
  std::vector<double> trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw ConfigError("bandwidth trace line " + std::to_string(lineno) + ": missing comma");
    }
    try {
      std::size_t used = 0;
      const double b = std::stod(line.substr(comma + 1), &used);
      if (!(b > 0.0)) throw ConfigError("");
      trace.push_back(b);
    } catch (const std::exception&) {
      throw ConfigError("bandwidth trace line " + std::to_string(lineno) + ": bad mbps value");
    }
  }
  if (trace.empty()) throw ConfigError("bandwidth trace '" + path + "' has no rows");
  return trace;
}

std::array<double, kSummarySize> summarize_importance(const ImportanceDist& d) {
  std::vector<double> sorted = d.weights;
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  std::array<double, kSummarySize> out{};
  for (std::size_t i = 0; i < kSummaryTop && i < sorted.size(); ++i) out[i] = sorted[i];
  double entropy = 0.0;
  for (double p : sorted) {
    if (p > 0.0) entropy -= p * std::log(p);
  }
  out[kSummaryTop] = std::max(0.0, entropy);
  double top3 = 0.0;
  for (std::size_t i = 0; i < 3 && i < sorted.size(); ++i) top3 += sorted[i];
  out[kSummaryTop + 1] = std::min(1.0, top3);
  return out;
}

std::array<double, kStateFeatures> encode_state(const EnvState& s) {
  std::array<double, kStateFeatures> x{};
  x[0] = s.lambda;
  x[1] = s.eta;
  for (std::size_t i = 0; i < kSummaryTop; ++i) x[2 + i] = s.importance_summary[i];
  const double max_entropy = s.channels > 1 ? std::log(static_cast<double>(s.channels)) : 1.0;
  x[10] = std::clamp(s.importance_summary[kSummaryTop] / max_entropy, 0.0, 1.0);
  x[11] = s.importance_summary[kSummaryTop + 1];
  x[12] = std::clamp((s.bandwidth - kBandwidthLow) / (kBandwidthHigh - kBandwidthLow), 0.0, 1.0);
  return x;
}

Transition Environment::concurrent_step(const EnvState& state, const Policy& policy, double t_as,
                                        double horizon) {
  if (!(horizon > 0.0) || !(t_as > 0.0) || t_as > horizon) {
    throw DomainError("concurrent_step: need 0 < t_as <= horizon");
  }
  const std::size_t a = policy(state);
  const double slip = t_as == horizon ? 1.0 : t_as / horizon;
  last_ = apply(a, slip);
  Transition t;
  t.state = state;
  t.action = a;
  t.reward = last_.reward;
  t.next_state = last_.next_state;
  t.t_as = t_as;
  t.horizon = horizon;
  t.priority = 1.0;
  return t;
}

void EnvConfig::validate() const {
  system.edge.validate();
  system.cloud.validate();
  workload.validate();
  cost.validate();
  grid.validate();
  bandwidth.validate();
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (attention_height == 0 || attention_width == 0) throw ConfigError("attention map is empty");
  if (attention_reduction == 0) throw ConfigError("attention reduction must be positive");
  if (workload.channels < 4) throw ConfigError("workload needs at least four channels");
  if (episode_length == 0) throw ConfigError("episode length must be positive");
  if (skew && !(*skew >= 0.0)) throw ConfigError("skew must be non-negative");
}

double EnvConfig::effective_skew() const {
  return skew ? *skew : calibrate_skew(workload.channels, 0.6);
}

EnvConfig default_env_config() {
  EnvConfig c;
  c.system.edge = catalog::xavier_nx();
  c.system.cloud = catalog::rtx3080();
  c.system.power = calibrate_power_model(c.system.edge);
  c.workload = catalog::effnet_like();
  c.cost = {0.5, c.system.edge.max_power};
  c.grid = ActionGrid::uniform(10, 11);
  return c;
}

OffloadEnv::OffloadEnv(EnvConfig config) : config_(std::move(config)) {
  config_.validate();
  skew_ = config_.effective_skew();
}

EnvState OffloadEnv::observe() {
  const Tensor3 raw = synth_feature_map(feature_rng_, skew_, config_.workload.channels,
                                        config_.attention_height, config_.attention_width);
  attended_ = apply_scam(raw, channel_params_, spatial_params_);
  EnvState s;
  s.lambda = config_.lambda;
  s.eta = config_.cost.eta;
  s.importance_summary = summarize_importance(importance_distribution(attended_));
  s.bandwidth = bw_now_;
  s.channels = config_.workload.channels;
  return s;
}

EnvState OffloadEnv::reset(std::uint64_t seed) {
  bandwidth_.emplace(config_.bandwidth, derive_seed(seed, "bandwidth"));
  feature_rng_ = Rng(derive_seed(seed, "features"));
  Rng param_rng(derive_seed(seed, "attention-params"));
  channel_params_ =
      ChannelAttnParams::random(config_.workload.channels, config_.attention_reduction, param_rng);
  spatial_params_ = SpatialAttnParams::random(param_rng);
  bw_now_ = bandwidth_->next();
  bw_next_ = bandwidth_->next();
  state_ = observe();
  return state_;
}

Evaluation OffloadEnv::price(const EnvAction& a, double bandwidth_mbps) const {
  return evaluate(config_.system, config_.workload, a.freq, a.xi, bandwidth_mbps, config_.cost);
}

StepOutcome OffloadEnv::apply(std::size_t action_index, double slip) {
  if (!bandwidth_) throw DomainError("OffloadEnv: reset() must be called before stepping");
  if (!(slip >= 0.0 && slip <= 1.0)) throw DomainError("OffloadEnv: slip outside [0, 1]");
  StepOutcome out;
  out.action_index = action_index;
  out.action = decode(action_index);
  // std::lerp is exact at both endpoints.
  out.bandwidth = std::lerp(bw_now_, bw_next_, slip);
  out.evaluation = price(out.action, out.bandwidth);
  out.reward = -out.evaluation.cost;

  bw_now_ = bw_next_;
  bw_next_ = bandwidth_->next();
  state_ = observe();
  out.next_state = state_;
  return out;
}

StepOutcome OffloadEnv::step(const EnvState& /*state*/, const EnvAction& action) {
  const std::size_t index = encode(action);
  last_ = apply(index, 1.0);
  return last_;
}

RolloutStats rollout(Environment& env, const Policy& policy, std::size_t episodes,
                     std::uint64_t seed, double t_as_ratio) {
  RolloutStats stats;
  EnvState s = env.reset(seed);
  const std::size_t len = env.episode_length();
  for (std::size_t e = 0; e < episodes; ++e) {
    double ret = 0.0;
    for (std::size_t t = 0; t < len; ++t) {
      const Transition tr = env.concurrent_step(s, policy, t_as_ratio * kDecisionIntervalMs, kDecisionIntervalMs);
      const StepOutcome& o = env.last_outcome();
      stats.tti.push_back(o.evaluation.latency.total);
      stats.eti.push_back(o.evaluation.energy.total);
      stats.cost.push_back(o.evaluation.cost);
      ret += tr.reward;
      s = tr.next_state;
    }
    stats.episode_returns.push_back(ret);
  }
  return stats;
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return 0.0;
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double stddev(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double acc = 0.0;
  for (double x : v) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(v.size() - 1));
}

}  // namespace edgesim
