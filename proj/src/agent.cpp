#include "edgesim/agent.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "edgesim/errors.hpp"
#include "edgesim/kernels.hpp"

namespace edgesim {

namespace {

constexpr std::string_view kCheckpointMagic = "edgesim-checkpoint";
constexpr int kCheckpointVersion = 1;

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  (void)ec;
  return std::string(buf, end);
}

double parse_double(const std::string& token) {
  double v = 0.0;
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || end != token.data() + token.size())
    throw ConfigError("checkpoint: bad number '" + token + "'");
  return v;
}

std::size_t parse_size(const std::string& token) {
  std::size_t v = 0;
  auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || end != token.data() + token.size())
    throw ConfigError("checkpoint: bad integer '" + token + "'");
  return v;
}

void write_vector(std::ostream& out, std::string_view tag, const std::vector<double>& v) {
  out << tag << ' ' << v.size() << '\n';
  for (std::size_t i = 0; i < v.size(); ++i) {
    out << format_double(v[i]) << ((i + 1) % 8 == 0 || i + 1 == v.size() ? '\n' : ' ');
  }
}

std::string expect_token(std::istream& in, std::string_view what) {
  std::string tok;
  if (!(in >> tok)) throw ConfigError("checkpoint: truncated before " + std::string(what));
  return tok;
}

void expect_tag(std::istream& in, std::string_view tag) {
  const std::string tok = expect_token(in, tag);
  if (tok != tag) throw ConfigError("checkpoint: expected '" + std::string(tag) + "', got '" + tok + "'");
}

std::vector<double> read_vector(std::istream& in, std::string_view tag, std::size_t expected) {
  expect_tag(in, tag);
  const std::size_t n = parse_size(expect_token(in, tag));
  if (n != expected)
    throw ConfigError("checkpoint: " + std::string(tag) + " has " + std::to_string(n) +
                      " values, expected " + std::to_string(expected));
  std::vector<double> v(n);
  for (auto& x : v) x = parse_double(expect_token(in, tag));
  return v;
}

std::string read_line_after(std::istream& in, std::string_view tag) {
  expect_tag(in, tag);
  std::string rest;
  std::getline(in >> std::ws, rest);
  return rest;
}

std::vector<double> encode_rows(std::span<const Transition* const> batch, bool next) {
  std::vector<double> x(batch.size() * kStateFeatures);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto enc = encode_state(next ? batch[i]->next_state : batch[i]->state);
    std::copy(enc.begin(), enc.end(), x.begin() + static_cast<std::ptrdiff_t>(i * kStateFeatures));
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------- Mlp

Mlp::Mlp(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
  if (dims_.size() < 2) throw DomainError("Mlp: need at least an input and an output layer");
  for (std::size_t d : dims_)
    if (d == 0) throw DomainError("Mlp: zero-width layer");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < dims_.size(); ++l) {
    offsets_.push_back(total);
    total += dims_[l] * dims_[l + 1] + dims_[l + 1];
  }
  params_.assign(total, 0.0);
}

Mlp Mlp::random(std::vector<std::size_t> dims, Rng& rng) {
  Mlp net(std::move(dims));
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(net.dims_[l]));
    const std::size_t n = net.dims_[l] * net.dims_[l + 1] + net.dims_[l + 1];
    double* p = net.weights(l);
    for (std::size_t i = 0; i < n; ++i) p[i] = rng.uniform(-bound, bound);
  }
  return net;
}

void Mlp::forward_hidden(std::span<const double> x, std::size_t rows, Cache& cache) const {
  if (x.size() != rows * input_size()) throw DomainError("Mlp: input size mismatch");
  const auto& k = kernels::active();
  const std::size_t hidden_layers = layers() - 1;
  cache.rows = rows;
  cache.activations.resize(hidden_layers + 1);
  cache.activations[0].assign(x.begin(), x.end());
  for (std::size_t l = 0; l < hidden_layers; ++l) {
    auto& out = cache.activations[l + 1];
    out.resize(rows * dims_[l + 1]);
    k.gemm(cache.activations[l].data(), weights(l), bias(l), out.data(), rows, dims_[l], dims_[l + 1]);
    k.relu(out.data(), out.size());
  }
}

void Mlp::forward(std::span<const double> x, std::size_t rows, Cache& cache) const {
  forward_hidden(x, rows, cache);
  const std::size_t top = layers() - 1;
  std::vector<double> out(rows * output_size());
  kernels::active().gemm(cache.activations[top].data(), weights(top), bias(top), out.data(), rows,
                         dims_[top], dims_[top + 1]);
  cache.activations.push_back(std::move(out));
}

std::vector<double> Mlp::forward(std::span<const double> x) const {
  Cache cache;
  forward(x, 1, cache);
  return std::move(cache.activations.back());
}

std::vector<double> Mlp::max_outputs(std::span<const double> x, std::size_t rows) const {
  Cache cache;
  forward_hidden(x, rows, cache);
  const std::size_t top = layers() - 1;
  std::vector<double> out(rows);
  kernels::active().gemm_rowmax(cache.activations[top].data(), weights(top), bias(top), out.data(),
                                rows, dims_[top], dims_[top + 1]);
  return out;
}

void Mlp::backward_hidden(const Cache& cache, std::vector<double> delta, std::size_t top_layer,
                          std::vector<double>& grad) const {
  // delta: gradient w.r.t. the pre-activation of layer top_layer - 1.
  const auto& k = kernels::active();
  const std::size_t rows = cache.rows;
  for (std::size_t l = top_layer; l-- > 0;) {
    const std::size_t in = dims_[l];
    const std::size_t out = dims_[l + 1];
    const auto& a = cache.activations[l];
    double* gw = grad.data() + offsets_[l];
    double* gb = gw + in * out;
    for (std::size_t r = 0; r < rows; ++r) {
      const double* d = delta.data() + r * out;
      k.axpy(1.0, d, gb, out);
      const double* ar = a.data() + r * in;
      for (std::size_t i = 0; i < in; ++i)
        if (ar[i] != 0.0) k.axpy(ar[i], d, gw + i * out, out);
    }
    if (l == 0) break;
    std::vector<double> prev(rows * in);
    const double* w = weights(l);
    for (std::size_t r = 0; r < rows; ++r) {
      const double* d = delta.data() + r * out;
      const double* ar = a.data() + r * in;
      for (std::size_t i = 0; i < in; ++i)
        prev[r * in + i] = ar[i] > 0.0 ? k.dot(d, w + i * out, out) : 0.0;
    }
    delta = std::move(prev);
  }
}

void Mlp::backward(const Cache& cache, std::span<const double> d_out, std::vector<double>& grad) const {
  if (grad.size() != params_.size()) throw DomainError("Mlp: gradient buffer size mismatch");
  const std::size_t top = layers() - 1;
  if (cache.activations.size() != layers() + 1 || d_out.size() != cache.rows * output_size())
    throw DomainError("Mlp: backward needs a full forward cache");
  const auto& k = kernels::active();
  const std::size_t rows = cache.rows;
  const std::size_t in = dims_[top];
  const std::size_t out = dims_[top + 1];
  const auto& h = cache.activations[top];
  double* gw = grad.data() + offsets_[top];
  double* gb = gw + in * out;
  std::vector<double> delta(rows * in, 0.0);
  const double* w = weights(top);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* d = d_out.data() + r * out;
    k.axpy(1.0, d, gb, out);
    for (std::size_t i = 0; i < in; ++i) {
      const double hv = h[r * in + i];
      if (hv != 0.0) {
        k.axpy(hv, d, gw + i * out, out);
        delta[r * in + i] = k.dot(d, w + i * out, out);
      }
    }
  }
  backward_hidden(cache, std::move(delta), top, grad);
}

void Mlp::backward_selected(const Cache& cache, std::span<const std::size_t> selected,
                            std::span<const double> d_selected, std::vector<double>& grad) const {
  if (grad.size() != params_.size()) throw DomainError("Mlp: gradient buffer size mismatch");
  const std::size_t top = layers() - 1;
  const std::size_t rows = cache.rows;
  if (selected.size() != rows || d_selected.size() != rows)
    throw DomainError("Mlp: one selected unit per row required");
  const std::size_t in = dims_[top];
  const std::size_t out = dims_[top + 1];
  const auto& h = cache.activations[top];
  double* gw = grad.data() + offsets_[top];
  double* gb = gw + in * out;
  const double* w = weights(top);
  std::vector<double> delta(rows * in, 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t u = selected[r];
    if (u >= out) throw DomainError("Mlp: selected unit out of range");
    const double d = d_selected[r];
    gb[u] += d;
    for (std::size_t i = 0; i < in; ++i) {
      const double hv = h[r * in + i];
      if (hv != 0.0) {
        gw[i * out + u] += hv * d;
        delta[r * in + i] = d * w[i * out + u];
      }
    }
  }
  backward_hidden(cache, std::move(delta), top, grad);
}

std::vector<double> Mlp::output_at(const Cache& cache, std::span<const std::size_t> units) const {
  const std::size_t top = layers() - 1;
  const std::size_t in = dims_[top];
  const std::size_t out = dims_[top + 1];
  if (units.size() != cache.rows) throw DomainError("Mlp: one unit per row required");
  const auto& h = cache.activations[top];
  const double* w = weights(top);
  const double* b = bias(top);
  std::vector<double> q(cache.rows);
  for (std::size_t r = 0; r < cache.rows; ++r) {
    const std::size_t u = units[r];
    if (u >= out) throw DomainError("Mlp: unit out of range");
    double acc = b[u];
    for (std::size_t i = 0; i < in; ++i) acc += h[r * in + i] * w[i * out + u];
    q[r] = acc;
  }
  return q;
}

// ---------------------------------------------------------------- Adam

Adam::Adam(std::size_t size, double lr, double beta1, double beta2, double eps)
    : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(size, 0.0), v_(size, 0.0) {}

void Adam::step(std::vector<double>& params, const std::vector<double>& grad) {
  if (params.size() != m_.size() || grad.size() != m_.size())
    throw DomainError("Adam: size mismatch");
  ++t_;
  const kernels::AdamStep s{lr_,
                            beta1_,
                            beta2_,
                            eps_,
                            1.0 - std::pow(beta1_, static_cast<double>(t_)),
                            1.0 - std::pow(beta2_, static_cast<double>(t_))};
  kernels::active().adam(params.data(), grad.data(), m_.data(), v_.data(), params.size(), s);
}

void Adam::save(std::ostream& out) const {
  out << "adam " << t_ << '\n';
  write_vector(out, "adam_m", m_);
  write_vector(out, "adam_v", v_);
}

void Adam::load(std::istream& in) {
  expect_tag(in, "adam");
  t_ = parse_size(expect_token(in, "adam"));
  m_ = read_vector(in, "adam_m", m_.size());
  v_ = read_vector(in, "adam_v", v_.size());
}

// ---------------------------------------------------------------- SumTree

SumTree::SumTree(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) throw DomainError("SumTree: zero capacity");
  leaves_ = 1;
  while (leaves_ < capacity) leaves_ <<= 1;
  nodes_.assign(2 * leaves_, 0.0);
}

void SumTree::set(std::size_t index, double value) {
  if (index >= capacity_) throw DomainError("SumTree: index out of range");
  if (!(value >= 0.0) || !std::isfinite(value)) throw DomainError("SumTree: invalid priority");
  std::size_t node = leaves_ + index;
  nodes_[node] = value;
  // Recompute parents from children so round-off never accumulates.
  for (node >>= 1; node >= 1; node >>= 1) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
}

std::size_t SumTree::find(double mass) const {
  std::size_t node = 1;
  while (node < leaves_) {
    const std::size_t left = 2 * node;
    if (mass < nodes_[left] || nodes_[left + 1] <= 0.0) {
      node = left;
    } else {
      mass -= nodes_[left];
      node = left + 1;
    }
  }
  std::size_t index = node - leaves_;
  // Floating-point slack can land on an empty leaf; walk back to a live one.
  while (index > 0 && (index >= capacity_ || nodes_[leaves_ + index] <= 0.0)) --index;
  return index;
}

// ---------------------------------------------------------------- AgentConfig

void AgentConfig::validate() const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("agent: ") + name + " must be positive");
  };
  positive(lr, "lr");
  if (buffer_capacity == 0) throw ConfigError("agent: buffer_capacity must be positive");
  if (batch == 0) throw ConfigError("agent: batch must be positive");
  if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("agent: gamma must lie in (0, 1)");
  for (double e : {epsilon_start, epsilon_end})
    if (!(e >= 0.0 && e <= 1.0)) throw ConfigError("agent: epsilon must lie in [0, 1]");
  if (target_sync_interval == 0) throw ConfigError("agent: target_sync_interval must be positive");
  if (!(priority_alpha >= 0.0)) throw ConfigError("agent: priority_alpha must be non-negative");
  for (double b : {beta_start, beta_end})
    if (!(b >= 0.0 && b <= 1.0)) throw ConfigError("agent: beta must lie in [0, 1]");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
    throw ConfigError("agent: Adam betas must lie in [0, 1)");
  positive(adam_eps, "adam_eps");
  positive(huber_delta, "huber_delta");
  positive(priority_eps, "priority_eps");
  positive(reward_scale, "reward_scale");
  if (train_every == 0) throw ConfigError("agent: train_every must be positive");
  if (hidden.empty()) throw ConfigError("agent: at least one hidden layer is required");
  for (std::size_t h : hidden)
    if (h == 0) throw ConfigError("agent: hidden layer widths must be positive");
}

namespace {
double linear_schedule(double start, double end, std::size_t steps, std::size_t t) {
  if (steps == 0 || t >= steps) return end;
  return start + (end - start) * (static_cast<double>(t) / static_cast<double>(steps));
}
}  // namespace

double AgentConfig::epsilon_at(std::size_t step) const {
  return linear_schedule(epsilon_start, epsilon_end, epsilon_decay_steps, step);
}

double AgentConfig::beta_at(std::size_t step) const {
  return linear_schedule(beta_start, beta_end, beta_anneal_steps, step);
}

// ---------------------------------------------------------------- ReplayMemory

ReplayMemory::ReplayMemory(std::size_t capacity, double alpha)
    : capacity_(capacity), alpha_(alpha), tree_(capacity) {
  if (capacity == 0) throw DomainError("ReplayMemory: zero capacity");
}

std::size_t ReplayMemory::push(Transition t) {
  t.priority = max_priority_;
  const std::size_t slot = next_;
  if (items_.size() < capacity_) {
    items_.push_back(std::move(t));
  } else {
    items_[slot] = std::move(t);
  }
  tree_.set(slot, std::pow(max_priority_, alpha_));
  next_ = (next_ + 1) % capacity_;
  size_ = std::min(size_ + 1, capacity_);
  return slot;
}

ReplayMemory::Sample ReplayMemory::sample(std::size_t batch, double beta, Rng& rng) const {
  if (size_ == 0) throw DomainError("ReplayMemory: sampling from an empty memory");
  Sample s;
  s.indices.reserve(batch);
  s.items.reserve(batch);
  s.weights.reserve(batch);
  const double total = tree_.total();
  const double segment = total / static_cast<double>(batch);
  double max_w = 0.0;
  for (std::size_t i = 0; i < batch; ++i) {
    double mass = segment * (static_cast<double>(i) + rng.uniform());
    mass = std::min(mass, std::nextafter(total, 0.0));
    const std::size_t idx = tree_.find(mass);
    const double p = tree_.get(idx) / total;
    const double w = std::pow(static_cast<double>(size_) * p, -beta);
    s.indices.push_back(idx);
    s.items.push_back(&items_[idx]);
    s.weights.push_back(w);
    max_w = std::max(max_w, w);
  }
  for (double& w : s.weights) w /= max_w;
  return s;
}

void ReplayMemory::update_priority(std::size_t index, double priority) {
  if (index >= size_) throw DomainError("ReplayMemory: index out of range");
  if (!(priority > 0.0) || !std::isfinite(priority)) throw DomainError("ReplayMemory: invalid priority");
  items_[index].priority = priority;
  tree_.set(index, std::pow(priority, alpha_));
  max_priority_ = std::max(max_priority_, priority);
}

double ReplayMemory::probability(std::size_t index) const {
  if (index >= size_) throw DomainError("ReplayMemory: index out of range");
  return tree_.get(index) / tree_.total();
}

// ---------------------------------------------------------------- free functions

std::vector<double> q_forward(const Mlp& params, std::span<const double> encoded_state) {
  return params.forward(encoded_state);
}

std::size_t argmax(std::span<const double> values) {
  if (values.empty()) throw DomainError("argmax: empty input");
  std::size_t best = 0;
  for (std::size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::size_t act_epsilon_greedy(const Mlp& params, const EnvState& s, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) throw DomainError("act_epsilon_greedy: epsilon outside [0, 1]");
  if (rng.uniform() < epsilon) return static_cast<std::size_t>(rng.below(params.output_size()));
  const auto enc = encode_state(s);
  return argmax(q_forward(params, enc));
}

double td_target_concurrent(const Transition& t, const Mlp& target, double gamma, double reward_scale) {
  if (!(t.horizon > 0.0) || !(t.t_as > 0.0) || t.t_as > t.horizon)
    throw DomainError("td_target_concurrent: need 0 < t_as <= horizon");
  const auto enc = encode_state(t.next_state);
  const auto q = q_forward(target, enc);
  const double best = *std::max_element(q.begin(), q.end());
  return reward_scale * t.reward + std::pow(gamma, t.t_as / t.horizon) * best;
}

double td_loss_and_gradient(const Mlp& net, std::span<const double> states, std::size_t rows,
                            std::span<const std::size_t> actions, std::span<const double> targets,
                            std::span<const double> weights, double delta,
                            std::vector<double>& grad, std::vector<double>* td_errors) {
  if (actions.size() != rows || targets.size() != rows || weights.size() != rows)
    throw DomainError("td_loss: batch arrays disagree in length");
  grad.assign(net.params().size(), 0.0);
  Mlp::Cache cache;
  net.forward_hidden(states, rows, cache);
  const std::vector<double> q = net.output_at(cache, actions);
  std::vector<double> d(rows);
  double loss = 0.0;
  const double inv = 1.0 / static_cast<double>(rows);
  if (td_errors) td_errors->resize(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const double td = q[i] - targets[i];
    const double a = std::abs(td);
    loss += weights[i] * (a <= delta ? 0.5 * td * td : delta * (a - 0.5 * delta));
    d[i] = weights[i] * std::clamp(td, -delta, delta) * inv;
    if (td_errors) (*td_errors)[i] = td;
  }
  net.backward_selected(cache, actions, d, grad);
  return loss * inv;
}

// ---------------------------------------------------------------- Agent

namespace {
std::vector<std::size_t> network_dims(const AgentConfig& c, std::size_t actions) {
  std::vector<std::size_t> dims{kStateFeatures};
  dims.insert(dims.end(), c.hidden.begin(), c.hidden.end());
  dims.push_back(actions);
  return dims;
}

AgentConfig validated(AgentConfig c) {
  c.validate();
  return c;
}
}  // namespace

Agent::Agent(std::size_t action_count, AgentConfig config, std::uint64_t seed)
    : config_(validated(std::move(config))),
      memory_(config_.buffer_capacity, config_.priority_alpha),
      explore_rng_(derive_seed(seed, "exploration")),
      replay_rng_(derive_seed(seed, "replay")) {
  if (action_count == 0) throw DomainError("Agent: empty action space");
  Rng init(derive_seed(seed, "agent-init"));
  online_ = Mlp::random(network_dims(config_, action_count), init);
  target_ = online_;
  adam_ = Adam(online_.params().size(), config_.lr, config_.adam_beta1, config_.adam_beta2, config_.adam_eps);
  grad_.assign(online_.params().size(), 0.0);
}

std::size_t Agent::act(const EnvState& s) {
  return act_epsilon_greedy(online_, s, config_.epsilon_at(env_steps_), explore_rng_);
}

std::size_t Agent::greedy(const EnvState& s) const {
  const auto enc = encode_state(s);
  return argmax(q_forward(online_, enc));
}

void Agent::remember(Transition t) {
  if (t.action >= action_count()) throw DomainError("Agent: transition action out of range");
  const std::size_t slot = memory_.push(std::move(t));
  if (slot >= bootstrap_.size()) {
    bootstrap_.resize(slot + 1, 0.0);
    bootstrap_version_.resize(slot + 1, 0);
  }
  bootstrap_version_[slot] = 0;
}

std::optional<double> Agent::train_step() {
  const std::size_t ready = std::max(config_.batch, config_.learning_starts);
  if (memory_.size() < ready) return std::nullopt;
  if (config_.warm_start_bias && config_.gamma < 1.0 && adam_.steps() == 0)
    warm_start_output_bias();
  const auto sample = memory_.sample(config_.batch, config_.beta_at(env_steps_), replay_rng_);
  return train_on(sample.items, sample.weights, sample.indices);
}

void Agent::warm_start_output_bias() {
  if (memory_.size() == 0) throw DomainError("Agent: warm start needs stored transitions");
  double value = 0.0;
  for (std::size_t i = 0; i < memory_.size(); ++i) {
    const Transition& t = memory_.at(i);
    value += config_.reward_scale * t.reward / (1.0 - std::pow(config_.gamma, t.t_as / t.horizon));
  }
  value /= static_cast<double>(memory_.size());
  double* bias = online_.bias(online_.layers() - 1);
  std::fill(bias, bias + online_.output_size(), value);
  sync_target();
}

double Agent::train_on(std::span<const Transition* const> batch, std::span<const double> weights,
                       std::span<const std::size_t> indices) {
  const std::size_t rows = batch.size();
  if (rows == 0) throw DomainError("Agent: empty batch");
  if (weights.size() != rows || (!indices.empty() && indices.size() != rows))
    throw DomainError("Agent: batch arrays disagree in length");

  // Bootstrap values max_a Q_target(s', a). Slots already evaluated against
  // the current target network reuse their value; the rest go through one
  // fused forward pass.
  std::vector<double> best(rows, 0.0);
  std::vector<std::size_t> pending;
  pending.reserve(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const Transition& t = *batch[i];
    if (!(t.horizon > 0.0) || !(t.t_as > 0.0) || t.t_as > t.horizon)
      throw DomainError("Agent: transition needs 0 < t_as <= horizon");
    if (!indices.empty() && bootstrap_version_[indices[i]] == target_version_) {
      best[i] = bootstrap_[indices[i]];
    } else {
      pending.push_back(i);
    }
  }
  if (!pending.empty()) {
    std::vector<const Transition*> todo;
    todo.reserve(pending.size());
    for (std::size_t i : pending) todo.push_back(batch[i]);
    const std::vector<double> fresh = target_.max_outputs(encode_rows(todo, true), todo.size());
    for (std::size_t j = 0; j < pending.size(); ++j) {
      const std::size_t i = pending[j];
      best[i] = fresh[j];
      if (!indices.empty()) {
        bootstrap_[indices[i]] = fresh[j];
        bootstrap_version_[indices[i]] = target_version_;
      }
    }
  }
  std::vector<double> targets(rows);
  std::vector<std::size_t> actions(rows);
  for (std::size_t i = 0; i < rows; ++i) {
    const Transition& t = *batch[i];
    targets[i] = config_.reward_scale * t.reward + std::pow(config_.gamma, t.t_as / t.horizon) * best[i];
    actions[i] = t.action;
  }

  const std::vector<double> states = encode_rows(batch, false);
  std::vector<double> td;
  const double loss = td_loss_and_gradient(online_, states, rows, actions, targets, weights,
                                           config_.huber_delta, grad_, &td);
  adam_.step(online_.params(), grad_);
  for (std::size_t i = 0; i < indices.size(); ++i)
    memory_.update_priority(indices[i], std::abs(td[i]) + config_.priority_eps);
  return loss;
}

void Agent::save(std::ostream& out) const {
  out << kCheckpointMagic << ' ' << kCheckpointVersion << '\n';
  const auto& c = config_;
  out << "config lr=" << format_double(c.lr) << " buffer_capacity=" << c.buffer_capacity
      << " batch=" << c.batch << " gamma=" << format_double(c.gamma)
      << " epsilon_start=" << format_double(c.epsilon_start)
      << " epsilon_end=" << format_double(c.epsilon_end)
      << " epsilon_decay_steps=" << c.epsilon_decay_steps
      << " target_sync_interval=" << c.target_sync_interval
      << " priority_alpha=" << format_double(c.priority_alpha)
      << " beta_start=" << format_double(c.beta_start) << " beta_end=" << format_double(c.beta_end)
      << " beta_anneal_steps=" << c.beta_anneal_steps << " huber_delta=" << format_double(c.huber_delta)
      << " train_every=" << c.train_every << " learning_starts=" << c.learning_starts
      << " reward_scale=" << format_double(c.reward_scale)
      << " warm_start_bias=" << (c.warm_start_bias ? 1 : 0) << '\n';
  out << "dims";
  for (std::size_t d : online_.dims()) out << ' ' << d;
  out << '\n';
  out << "env_steps " << env_steps_ << '\n';
  out << "rng_exploration " << explore_rng_.serialize() << '\n';
  out << "rng_replay " << replay_rng_.serialize() << '\n';
  write_vector(out, "online", online_.params());
  write_vector(out, "target", target_.params());
  adam_.save(out);
  out << "end\n";
}

void Agent::load(std::istream& in) {
  expect_tag(in, kCheckpointMagic);
  const std::size_t version = parse_size(expect_token(in, "version"));
  if (version != kCheckpointVersion)
    throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
  (void)read_line_after(in, "config");
  std::istringstream dims_line(read_line_after(in, "dims"));
  std::vector<std::size_t> dims;
  for (std::string tok; dims_line >> tok;) dims.push_back(parse_size(tok));
  if (dims != online_.dims()) {
    std::string got;
    for (std::size_t d : dims) got += ' ' + std::to_string(d);
    throw ConfigError("checkpoint: layer shapes" + got + " do not match this agent");
  }
  expect_tag(in, "env_steps");
  const std::size_t steps = parse_size(expect_token(in, "env_steps"));
  Rng explore = explore_rng_;
  Rng replay = replay_rng_;
  explore.deserialize(read_line_after(in, "rng_exploration"));
  replay.deserialize(read_line_after(in, "rng_replay"));
  auto online = read_vector(in, "online", online_.params().size());
  auto target = read_vector(in, "target", target_.params().size());
  Adam adam = adam_;
  adam.load(in);
  expect_tag(in, "end");

  env_steps_ = steps;
  explore_rng_ = explore;
  replay_rng_ = replay;
  online_.params() = std::move(online);
  target_.params() = std::move(target);
  adam_ = std::move(adam);
  ++target_version_;
}

// ---------------------------------------------------------------- training loop

TrainingLog train(Environment& env, Agent& agent, std::size_t steps, const TrainOptions& options) {
  TrainingLog log;
  if (steps == 0) return log;
  if (!(options.t_as_ratio > 0.0 && options.t_as_ratio <= 1.0))
    throw DomainError("train: t_as ratio must lie in (0, 1]");
  if (env.action_count() != agent.action_count())
    throw DomainError("train: environment and agent disagree on the action count");

  const double horizon = kDecisionIntervalMs;
  const double t_as = options.t_as_ratio == 1.0 ? horizon : options.t_as_ratio * horizon;
  const std::size_t episode_len = env.episode_length();
  const auto& cfg = agent.config();
  const Policy policy = [&agent](const EnvState& s) { return agent.act(s); };

  std::size_t next_checkpoint = 0;
  std::vector<std::size_t> checkpoints = options.checkpoints;
  std::sort(checkpoints.begin(), checkpoints.end());

  EnvState s = env.reset(options.env_seed);
  double episode_return = 0.0;
  if (options.record_steps) log.steps.reserve(steps);
  for (std::size_t step = 1; step <= steps; ++step) {
    Transition tr = env.concurrent_step(s, policy, t_as, horizon);
    s = tr.next_state;
    episode_return += tr.reward;
    if (options.record_steps) {
      const StepOutcome& o = env.last_outcome();
      StepRecord r;
      r.step = step;
      r.action = o.action;
      r.action_index = o.action_index;
      r.bandwidth = o.bandwidth;
      r.latency = o.evaluation.latency;
      r.energy = o.evaluation.energy;
      r.cost = o.evaluation.cost;
      r.reward = o.reward;
      r.episode_return = episode_return;
      log.steps.push_back(r);
    }
    agent.remember(std::move(tr));
    agent.tick();
    if (step % cfg.train_every == 0) {
      if (auto loss = agent.train_step()) log.losses.push_back(*loss);
    }
    if (step % cfg.target_sync_interval == 0) agent.sync_target();
    if (step % episode_len == 0) {
      log.episode_returns.push_back(episode_return);
      episode_return = 0.0;
    }
    while (next_checkpoint < checkpoints.size() && checkpoints[next_checkpoint] <= step) {
      if (checkpoints[next_checkpoint] == step && options.on_checkpoint) options.on_checkpoint(step, agent);
      ++next_checkpoint;
    }
  }
  return log;
}

Policy greedy_policy(const Agent& agent) {
  return [&agent](const EnvState& s) { return agent.greedy(s); };
}

}  // namespace edgesim
