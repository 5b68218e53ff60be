#pragma once

// DQN with a target network, proportional prioritized replay, epsilon-greedy
// exploration, Adam, and the concurrent Bellman backup
//   y = r + gamma^(t_as / H) * max_a Q_target(s', a).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "edgesim/environment.hpp"
#include "edgesim/rng.hpp"

namespace edgesim {

/// Fully connected network, ReLU on hidden layers, linear output. Layer l
/// stores its weights as an in x out row-major matrix followed by its bias;
/// all layers share one flat parameter vector.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<std::size_t> dims);

  /// PyTorch-style init: weights and biases uniform in +-1/sqrt(fan_in).
  static Mlp random(std::vector<std::size_t> dims, Rng& rng);

  const std::vector<std::size_t>& dims() const { return dims_; }
  std::size_t layers() const { return dims_.empty() ? 0 : dims_.size() - 1; }
  std::size_t input_size() const { return dims_.front(); }
  std::size_t output_size() const { return dims_.back(); }

  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

  double* weights(std::size_t layer) { return params_.data() + offsets_[layer]; }
  const double* weights(std::size_t layer) const { return params_.data() + offsets_[layer]; }
  double* bias(std::size_t layer) { return weights(layer) + dims_[layer] * dims_[layer + 1]; }
  const double* bias(std::size_t layer) const {
    return weights(layer) + dims_[layer] * dims_[layer + 1];
  }
  std::size_t offset(std::size_t layer) const { return offsets_[layer]; }

  /// activations[0] is the input; activations[l + 1] the output of layer l
  /// (post-ReLU for hidden layers). Row-major, one row per sample.
  struct Cache {
    std::size_t rows = 0;
    std::vector<std::vector<double>> activations;
  };

  /// Forward pass over `rows` samples packed in x.
  void forward(std::span<const double> x, std::size_t rows, Cache& cache) const;

  /// Hidden layers only; activations.back() is the last hidden layer.
  void forward_hidden(std::span<const double> x, std::size_t rows, Cache& cache) const;

  std::vector<double> forward(std::span<const double> x) const;

  /// Largest output unit of each row, without materializing the outputs.
  std::vector<double> max_outputs(std::span<const double> x, std::size_t rows) const;

  /// Accumulates dL/dparams into grad given dL/doutput (rows x out).
  void backward(const Cache& cache, std::span<const double> d_out, std::vector<double>& grad) const;

  /// Backward pass when only output unit selected[i] of row i carries a
  /// gradient d_selected[i]. `cache` must come from forward_hidden.
  void backward_selected(const Cache& cache, std::span<const std::size_t> selected,
                         std::span<const double> d_selected, std::vector<double>& grad) const;

  /// Output unit `unit` for every row of a forward_hidden cache.
  std::vector<double> output_at(const Cache& cache, std::span<const std::size_t> units) const;

  friend bool operator==(const Mlp&, const Mlp&) = default;

 private:
  void backward_hidden(const Cache& cache, std::vector<double> delta, std::size_t top_layer,
                       std::vector<double>& grad) const;

  std::vector<std::size_t> dims_;
  std::vector<std::size_t> offsets_;
  std::vector<double> params_;
};

class Adam {
 public:
  Adam() = default;
  Adam(std::size_t size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

  void step(std::vector<double>& params, const std::vector<double>& grad);
  std::size_t steps() const { return t_; }

  void save(std::ostream& out) const;
  void load(std::istream& in);

 private:
  double lr_ = 1e-4;
  double beta1_ = 0.9;
  double beta2_ = 0.999;
  double eps_ = 1e-8;
  std::size_t t_ = 0;
  std::vector<double> m_;
  std::vector<double> v_;
};

/// Binary sum tree over leaf priorities.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity = 1);

  void set(std::size_t index, double value);
  double get(std::size_t index) const { return nodes_[leaves_ + index]; }
  double total() const { return nodes_[1]; }
  std::size_t capacity() const { return capacity_; }

  /// Leaf whose prefix-sum interval contains mass in [0, total()).
  std::size_t find(double mass) const;

 private:
  std::size_t capacity_;
  std::size_t leaves_;
  std::vector<double> nodes_;
};

struct AgentConfig {
  std::vector<std::size_t> hidden{128, 64, 32};
  double lr = 1e-4;
  std::size_t buffer_capacity = 1'000'000;
  std::size_t batch = 256;
  double gamma = 0.5;
  double epsilon_start = 1.0;
  double epsilon_end = 0.05;
  std::size_t epsilon_decay_steps = 20'000;
  std::size_t target_sync_interval = 1000;  // environment steps
  double priority_alpha = 0.6;
  double beta_start = 0.4;
  double beta_end = 1.0;
  std::size_t beta_anneal_steps = 50'000;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double huber_delta = 1.0;
  double priority_eps = 1e-6;
  std::size_t train_every = 4;       // environment steps per gradient step
  std::size_t learning_starts = 256;  // transitions before the first update
  double reward_scale = 1e-3;         // Q is learned on reward * scale
  /// Before the first update, set every output bias to the mean discounted
  /// return of the warm-up transitions, so that untried actions start at an
  /// average value instead of the random-init value near zero.
  bool warm_start_bias = false;

  void validate() const;
  double epsilon_at(std::size_t step) const;
  double beta_at(std::size_t step) const;
};

class ReplayMemory {
 public:
  ReplayMemory(std::size_t capacity, double alpha);

  /// New items enter with the largest priority seen so far. Returns the slot
  /// the item was written to.
  std::size_t push(Transition t);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }

  struct Sample {
    std::vector<std::size_t> indices;
    std::vector<const Transition*> items;
    std::vector<double> weights;  // importance sampling, max-normalized
  };

  /// Stratified proportional sampling; sampling probability of i is
  /// p_i^alpha / sum_j p_j^alpha.
  Sample sample(std::size_t batch, double beta, Rng& rng) const;

  void update_priority(std::size_t index, double priority);
  double probability(std::size_t index) const;
  const Transition& at(std::size_t index) const { return items_[index]; }

 private:
  std::size_t capacity_;
  double alpha_;
  std::vector<Transition> items_;
  SumTree tree_;
  std::size_t next_ = 0;
  std::size_t size_ = 0;
  double max_priority_ = 1.0;
};

std::vector<double> q_forward(const Mlp& params, std::span<const double> encoded_state);

/// argmax with ties to the lowest index.
std::size_t argmax(std::span<const double> values);

std::size_t act_epsilon_greedy(const Mlp& params, const EnvState& s, double epsilon, Rng& rng);

/// r + gamma^(t_as / H) * max_a Q_target(s', a); `reward_scale` multiplies r.
double td_target_concurrent(const Transition& t, const Mlp& target, double gamma,
                            double reward_scale = 1.0);

/// IS-weighted mean Huber loss of Q(s_i, a_i) against targets, and its
/// gradient with respect to every parameter (overwrites grad).
double td_loss_and_gradient(const Mlp& net, std::span<const double> states, std::size_t rows,
                            std::span<const std::size_t> actions, std::span<const double> targets,
                            std::span<const double> weights, double delta,
                            std::vector<double>& grad, std::vector<double>* td_errors = nullptr);

class Agent {
 public:
  Agent(std::size_t action_count, AgentConfig config, std::uint64_t seed);

  const AgentConfig& config() const { return config_; }
  const Mlp& online() const { return online_; }
  const Mlp& target() const { return target_; }
  Mlp& online_mutable() { return online_; }
  ReplayMemory& memory() { return memory_; }
  std::size_t action_count() const { return online_.output_size(); }
  std::size_t env_steps() const { return env_steps_; }
  std::size_t gradient_steps() const { return adam_.steps(); }

  std::size_t act(const EnvState& s);
  std::size_t greedy(const EnvState& s) const;

  void remember(Transition t);

  /// One gradient step on a prioritized batch. nullopt when the memory does
  /// not hold enough transitions yet.
  std::optional<double> train_step();

  /// Output-bias warm start described in AgentConfig; train_step calls it
  /// before the first update. Also syncs the target network.
  void warm_start_output_bias();

  /// Trains on an explicit batch with the given IS weights; updates the
  /// sampled priorities when indices are given.
  double train_on(std::span<const Transition* const> batch, std::span<const double> weights,
                  std::span<const std::size_t> indices = {});

  void sync_target() {
    target_ = online_;
    ++target_version_;
  }

  /// Advances the schedules by one environment step.
  void tick() { ++env_steps_; }

  void save(std::ostream& out) const;
  /// Throws ConfigError on version or shape mismatch.
  void load(std::istream& in);

 private:
  AgentConfig config_;
  Mlp online_;
  Mlp target_;
  Adam adam_;
  ReplayMemory memory_;
  Rng explore_rng_;
  Rng replay_rng_;
  std::size_t env_steps_ = 0;
  std::vector<double> grad_;
  // max_a Q_target(s', a) per replay slot, valid while the stored version
  // equals target_version_.
  std::uint64_t target_version_ = 1;
  std::vector<double> bootstrap_;
  std::vector<std::uint64_t> bootstrap_version_;
};

struct StepRecord {
  std::size_t step = 0;
  Action action;
  std::size_t action_index = 0;
  double bandwidth = 0.0;
  LatencyBreakdown latency;
  EnergyBreakdown energy;
  double cost = 0.0;
  double reward = 0.0;
  double episode_return = 0.0;  // running, within the current episode
};

struct TrainingLog {
  std::vector<StepRecord> steps;
  std::vector<double> episode_returns;
  std::vector<double> losses;
};

struct TrainOptions {
  double t_as_ratio = 0.25;
  std::uint64_t env_seed = 0;
  bool record_steps = true;
  /// Called after the given environment steps (1-based counts).
  std::vector<std::size_t> checkpoints;
  std::function<void(std::size_t, const Agent&)> on_checkpoint;
};

/// Runs the collect/learn loop for `steps` environment steps, resetting the
/// environment with options.env_seed first.
TrainingLog train(Environment& env, Agent& agent, std::size_t steps, const TrainOptions& options = {});

/// Greedy policy of a trained agent.
Policy greedy_policy(const Agent& agent);

}  // namespace edgesim
