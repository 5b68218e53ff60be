#pragma once

// Concurrent MDP over edge-cloud inference tasks. Each step prices one task
// for the chosen (frequencies, offload proportion); the bandwidth keeps
// evolving while the agent is deciding ("thinking while moving").

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "edgesim/attention.hpp"
#include "edgesim/core_model.hpp"
#include "edgesim/rng.hpp"

namespace edgesim {

inline constexpr std::size_t kSummaryTop = 8;
inline constexpr std::size_t kSummarySize = kSummaryTop + 2;  // + entropy, top-3 mass
inline constexpr std::size_t kStateFeatures = 13;
inline constexpr double kBandwidthLow = 2.0;   // Mbps
inline constexpr double kBandwidthHigh = 8.0;  // Mbps
/// Nominal decision interval H; only the ratio t_as / H affects outcomes.
inline constexpr double kDecisionIntervalMs = 100.0;

struct EnvState {
  double lambda = 0.5;
  double eta = 0.5;
  /// Top-8 importances (descending, zero padded), entropy in nats, top-3 mass.
  std::array<double, kSummarySize> importance_summary{};
  double bandwidth = 0.0;  // Mbps, as observed
  std::size_t channels = 1;

  friend bool operator==(const EnvState&, const EnvState&) = default;
};

using EnvAction = Action;

struct Transition {
  EnvState state;
  std::size_t action = 0;
  double reward = 0.0;  // -cost, mJ
  EnvState next_state;
  double t_as = 1.0;     // ms
  double horizon = 1.0;  // ms
  double priority = 1.0;
};

enum class BandwidthMode { trace, random_walk };

struct BandwidthSpec {
  BandwidthMode mode = BandwidthMode::random_walk;
  std::vector<double> trace;  // Mbps, trace mode
  double low = kBandwidthLow;
  double high = kBandwidthHigh;
  double step = 0.5;     // walk increments are uniform in [-step, step]
  double initial = 5.0;  // first walk value

  void validate() const;
  static BandwidthSpec constant(double mbps) {
    BandwidthSpec s;
    s.mode = BandwidthMode::trace;
    s.trace = {mbps};
    return s;
  }
};

class BandwidthProcess {
 public:
  BandwidthProcess(BandwidthSpec spec, std::uint64_t seed);

  /// Trace mode: next entry, cycling. Walk mode: reflected random walk; the
  /// first call returns the initial value.
  double next();

 private:
  BandwidthSpec spec_;
  Rng rng_;
  std::size_t cursor_ = 0;
  std::optional<double> last_;
};

/// Reads a "step,mbps" CSV trace.
std::vector<double> load_bandwidth_trace(const std::string& path);

std::array<double, kStateFeatures> encode_state(const EnvState& s);

/// Summary of an importance distribution as stored in EnvState.
std::array<double, kSummarySize> summarize_importance(const ImportanceDist& d);

/// What one environment transition produced, for logging.
struct StepOutcome {
  EnvState next_state;
  std::size_t action_index = 0;
  Action action;
  double bandwidth = 0.0;  // effective Mbps the action ran against
  Evaluation evaluation;
  double reward = 0.0;
};

using Policy = std::function<std::size_t(const EnvState&)>;

/// Interface the trainer drives. Implementations own their state and are
/// stepped from one thread.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual EnvState reset(std::uint64_t seed) = 0;
  virtual std::size_t action_count() const = 0;
  virtual std::size_t episode_length() const { return 64; }
  virtual const EnvState& observation() const = 0;

  /// Applies an action after a fraction `slip` in [0, 1] of the decision
  /// interval has elapsed since the current observation, then advances.
  virtual StepOutcome apply(std::size_t action_index, double slip) = 0;

  /// Picks an action from `state` and lets it land t_as into the interval
  /// of length horizon. t_as == horizon is the blocking case.
  Transition concurrent_step(const EnvState& state, const Policy& policy, double t_as,
                             double horizon);

  const StepOutcome& last_outcome() const { return last_; }

 protected:
  StepOutcome last_;
};

struct EnvConfig {
  SystemModel system;
  WorkloadSpec workload;
  CostParams cost;
  double lambda = 0.5;
  ActionGrid grid;
  BandwidthSpec bandwidth;
  // Spatial size of the synthetic map fed to the attention module; channel
  // count always comes from the workload.
  std::size_t attention_height = 8;
  std::size_t attention_width = 8;
  std::size_t attention_reduction = 4;
  std::optional<double> skew;  // Zipf exponent; default: top-3 mass of 0.6
  std::size_t episode_length = 64;

  void validate() const;
  double effective_skew() const;
};

/// Default scenario: Xavier NX edge, RTX 3080 cloud, effnet-like task,
/// eta = lambda = 0.5, 10 x 10 x 10 x 11 grid, random-walk bandwidth.
EnvConfig default_env_config();

class OffloadEnv final : public Environment {
 public:
  explicit OffloadEnv(EnvConfig config);

  EnvState reset(std::uint64_t seed) override;
  std::size_t action_count() const override { return config_.grid.size(); }
  std::size_t episode_length() const override { return config_.episode_length; }
  const EnvState& observation() const override { return state_; }
  StepOutcome apply(std::size_t action_index, double slip) override;

  /// Blocking step: the decision occupies the whole interval, so the action
  /// meets the bandwidth one full step after the observation. Same as
  /// concurrent_step with t_as == horizon. Throws DomainError off grid.
  StepOutcome step(const EnvState& state, const EnvAction& action);

  const EnvConfig& config() const { return config_; }
  Action decode(std::size_t index) const { return config_.grid.decode(index, config_.system.edge); }
  std::size_t encode(const EnvAction& a) const { return config_.grid.encode(a, config_.system.edge); }

  /// Prices an action against a given bandwidth without touching the state.
  Evaluation price(const EnvAction& a, double bandwidth_mbps) const;

  /// Attended feature map behind the current observation.
  const Tensor3& attended_map() const { return attended_; }

 private:
  EnvState observe();

  EnvConfig config_;
  double skew_ = 0.0;
  std::optional<BandwidthProcess> bandwidth_;
  Rng feature_rng_;
  ChannelAttnParams channel_params_;
  SpatialAttnParams spatial_params_;
  double bw_now_ = 0.0;
  double bw_next_ = 0.0;
  Tensor3 attended_;
  EnvState state_;
};

/// Aggregates of a greedy rollout.
struct RolloutStats {
  std::vector<double> tti;    // per step, ms
  std::vector<double> eti;    // per step, mJ
  std::vector<double> cost;   // per step, mJ
  std::vector<double> episode_returns;
};

RolloutStats rollout(Environment& env, const Policy& policy, std::size_t episodes,
                     std::uint64_t seed, double t_as_ratio);

double mean(const std::vector<double>& v);
double stddev(const std::vector<double>& v);

}  // namespace edgesim
