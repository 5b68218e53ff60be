#include "edgesim/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#define TOML_EXCEPTIONS 1
#include <toml.hpp>

#include "edgesim/catalog.hpp"
#include "edgesim/errors.hpp"

namespace edgesim {

namespace {

std::string where(std::string_view section, std::string_view key) {
  return "[" + std::string(section) + "]." + std::string(key);
}

double as_double(const toml::node& n, std::string_view section, std::string_view key) {
  if (auto v = n.value<double>()) return *v;
  throw ConfigError(where(section, key) + ": expected a number");
}

std::size_t as_size(const toml::node& n, std::string_view section, std::string_view key) {
  if (n.is_integer()) {
    const auto v = n.as_integer()->get();
    if (v >= 0) return static_cast<std::size_t>(v);
  }
  throw ConfigError(where(section, key) + ": expected a non-negative integer");
}

bool as_bool(const toml::node& n, std::string_view section, std::string_view key) {
  if (auto v = n.value<bool>()) return *v;
  throw ConfigError(where(section, key) + ": expected true or false");
}

std::string as_string(const toml::node& n, std::string_view section, std::string_view key) {
  if (auto v = n.value<std::string>()) return *v;
  throw ConfigError(where(section, key) + ": expected a string");
}

const toml::array& as_array(const toml::node& n, std::string_view section, std::string_view key) {
  if (const auto* a = n.as_array()) return *a;
  throw ConfigError(where(section, key) + ": expected an array");
}

std::vector<double> as_doubles(const toml::node& n, std::string_view section, std::string_view key) {
  std::vector<double> out;
  for (const auto& e : as_array(n, section, key)) out.push_back(as_double(e, section, key));
  return out;
}

std::vector<std::size_t> as_sizes(const toml::node& n, std::string_view section, std::string_view key) {
  std::vector<std::size_t> out;
  for (const auto& e : as_array(n, section, key)) out.push_back(as_size(e, section, key));
  return out;
}

FrequencyVector as_freq(const toml::node& n, std::string_view section, std::string_view key) {
  const auto v = as_doubles(n, section, key);
  if (v.size() != 3) throw ConfigError(where(section, key) + ": expected [cpu, gpu, mem]");
  return {v[0], v[1], v[2]};
}

Voltages as_volts(const toml::node& n, std::string_view section, std::string_view key) {
  const FrequencyVector f = as_freq(n, section, key);
  return {f.cpu, f.gpu, f.mem};
}

const toml::table& as_table(const toml::node& n, std::string_view name) {
  if (const auto* t = n.as_table()) return *t;
  throw ConfigError("[" + std::string(name) + "]: expected a table");
}

[[noreturn]] void unknown(std::string_view section, std::string_view key) {
  throw ConfigError("unknown key " + where(section, key));
}

void read_experiment(const toml::table& t, ExperimentConfig& c) {
  constexpr std::string_view s = "experiment";
  for (const auto& [k, v] : t) {
    const std::string_view key = k.str();
    if (key == "device") c.device = as_string(v, s, key);
    else if (key == "cloud") c.cloud = as_string(v, s, key);
    else if (key == "workload") c.workload = as_string(v, s, key);
    else if (key == "eta") c.eta = as_double(v, s, key);
    else if (key == "lambda") c.lambda = as_double(v, s, key);
    else if (key == "steps") c.steps = as_size(v, s, key);
    else if (key == "output") c.output = as_string(v, s, key);
    else if (key == "tas_ratio") c.tas_ratio = as_double(v, s, key);
    else if (key == "eval_episodes") c.eval_episodes = as_size(v, s, key);
    else if (key == "episode_length") c.episode_length = as_size(v, s, key);
    else if (key == "seeds") {
      c.seeds.clear();
      for (std::size_t seed : as_sizes(v, s, key)) c.seeds.push_back(seed);
    } else unknown(s, key);
  }
}

void read_bandwidth(const toml::table& t, ExperimentConfig& c, const std::string& base_dir) {
  constexpr std::string_view s = "bandwidth";
  for (const auto& [k, v] : t) {
    const std::string_view key = k.str();
    if (key == "mode") {
      const std::string mode = as_string(v, s, key);
      if (mode == "random_walk" || mode == "random-walk") c.bandwidth.mode = BandwidthMode::random_walk;
      else if (mode == "trace") c.bandwidth.mode = BandwidthMode::trace;
      else throw ConfigError(where(s, key) + ": expected \"random_walk\" or \"trace\"");
    } else if (key == "min") c.bandwidth.low = as_double(v, s, key);
    else if (key == "max") c.bandwidth.high = as_double(v, s, key);
    else if (key == "step") c.bandwidth.step = as_double(v, s, key);
    else if (key == "initial") c.bandwidth.initial = as_double(v, s, key);
    else if (key == "values") c.bandwidth.trace = as_doubles(v, s, key);
    else if (key == "trace") {
      std::filesystem::path p(as_string(v, s, key));
      if (p.is_relative()) p = std::filesystem::path(base_dir) / p;
      c.trace_path = p.lexically_normal().string();
    } else unknown(s, key);
  }
}

void read_grid(const toml::table& t, ExperimentConfig& c) {
  constexpr std::string_view s = "grid";
  for (const auto& [k, v] : t) {
    const std::string_view key = k.str();
    if (key == "cpu_levels") c.grid.cpu_levels = as_size(v, s, key);
    else if (key == "gpu_levels") c.grid.gpu_levels = as_size(v, s, key);
    else if (key == "mem_levels") c.grid.mem_levels = as_size(v, s, key);
    else if (key == "xi_levels") c.grid.xi_levels = as_size(v, s, key);
    else if (key == "freq_levels") {
      const std::size_t n = as_size(v, s, key);
      c.grid.cpu_levels = c.grid.gpu_levels = c.grid.mem_levels = n;
    } else unknown(s, key);
  }
}

void read_agent(const toml::table& t, AgentConfig& a) {
  constexpr std::string_view s = "agent";
  for (const auto& [k, v] : t) {
    const std::string_view key = k.str();
    if (key == "hidden") a.hidden = as_sizes(v, s, key);
    else if (key == "lr") a.lr = as_double(v, s, key);
    else if (key == "buffer_capacity") a.buffer_capacity = as_size(v, s, key);
    else if (key == "batch") a.batch = as_size(v, s, key);
    else if (key == "gamma") a.gamma = as_double(v, s, key);
    else if (key == "epsilon_start") a.epsilon_start = as_double(v, s, key);
    else if (key == "epsilon_end") a.epsilon_end = as_double(v, s, key);
    else if (key == "epsilon_decay_steps") a.epsilon_decay_steps = as_size(v, s, key);
    else if (key == "target_sync_interval") a.target_sync_interval = as_size(v, s, key);
    else if (key == "priority_alpha") a.priority_alpha = as_double(v, s, key);
    else if (key == "beta_start") a.beta_start = as_double(v, s, key);
    else if (key == "beta_end") a.beta_end = as_double(v, s, key);
    else if (key == "beta_anneal_steps") a.beta_anneal_steps = as_size(v, s, key);
    else if (key == "adam_beta1") a.adam_beta1 = as_double(v, s, key);
    else if (key == "adam_beta2") a.adam_beta2 = as_double(v, s, key);
    else if (key == "adam_eps") a.adam_eps = as_double(v, s, key);
    else if (key == "huber_delta") a.huber_delta = as_double(v, s, key);
    else if (key == "priority_eps") a.priority_eps = as_double(v, s, key);
    else if (key == "train_every") a.train_every = as_size(v, s, key);
    else if (key == "learning_starts") a.learning_starts = as_size(v, s, key);
    else if (key == "reward_scale") a.reward_scale = as_double(v, s, key);
    else if (key == "warm_start_bias") a.warm_start_bias = as_bool(v, s, key);
    else unknown(s, key);
  }
}

void read_model(const toml::table& t, ExperimentConfig& c) {
  constexpr std::string_view s = "model";
  for (const auto& [k, v] : t) {
    const std::string_view key = k.str();
    if (key == "power_split") {
      const FrequencyVector f = as_freq(v, s, key);
      c.power_split = {f.cpu, f.gpu, f.mem};
    } else if (key == "offload_share") c.offload_share = as_double(v, s, key);
    else if (key == "quantizer_bits_per_ms") c.quantizer_bits_per_ms = as_double(v, s, key);
    else unknown(s, key);
  }
}

void read_attention(const toml::table& t, ExperimentConfig& c) {
  constexpr std::string_view s = "attention";
  for (const auto& [k, v] : t) {
    const std::string_view key = k.str();
    if (key == "height") c.attention_height = as_size(v, s, key);
    else if (key == "width") c.attention_width = as_size(v, s, key);
    else if (key == "reduction") c.attention_reduction = as_size(v, s, key);
    else if (key == "skew") c.skew = as_double(v, s, key);
    else unknown(s, key);
  }
}

DeviceSpec read_device(const std::string& name, const toml::table& t) {
  const std::string s = "devices." + name;
  DeviceSpec d;
  d.name = name;
  std::optional<double> p_static;
  bool have_min = false, have_max = false, have_power = false;
  for (const auto& [k, v] : t) {
    const std::string_view key = k.str();
    if (key == "f_min") d.f_min = as_freq(v, s, key), have_min = true;
    else if (key == "f_max") d.f_max = as_freq(v, s, key), have_max = true;
    else if (key == "max_power") d.max_power = as_double(v, s, key), have_power = true;
    else if (key == "p_static") p_static = as_double(v, s, key);
    else if (key == "v_min") d.v_min = as_volts(v, s, key);
    else if (key == "v_max") d.v_max = as_volts(v, s, key);
    else unknown(s, key);
  }
  if (!have_min || !have_max || !have_power)
    throw ConfigError("[" + s + "]: f_min, f_max and max_power are required");
  d.p_static = p_static.value_or(0.1 * d.max_power);
  d.validate();
  return d;
}

WorkloadSpec read_workload(const std::string& name, const toml::table& t) {
  const std::string s = "workloads." + name;
  WorkloadSpec w;
  w.name = name;
  for (const auto& [k, v] : t) {
    const std::string_view key = k.str();
    if (key == "gpu_work") w.gpu_work = as_double(v, s, key);
    else if (key == "mem_traffic") w.mem_traffic = as_double(v, s, key);
    else if (key == "cpu_work") w.cpu_work = as_double(v, s, key);
    else if (key == "channels") w.channels = as_size(v, s, key);
    else if (key == "height") w.height = as_size(v, s, key);
    else if (key == "width") w.width = as_size(v, s, key);
    else unknown(s, key);
  }
  w.validate();
  return w;
}

void load_trace_if_any(ExperimentConfig& c) {
  if (!c.trace_path.empty()) {
    c.bandwidth.trace = load_bandwidth_trace(c.trace_path);
    c.bandwidth.mode = BandwidthMode::trace;
  }
}

}  // namespace

ExperimentConfig default_experiment_config() {
  ExperimentConfig c;
  for (const DeviceSpec& d : catalog::edge_devices()) c.devices[d.name] = d;
  const DeviceSpec cloud = catalog::rtx3080();
  c.devices[cloud.name] = cloud;
  for (const WorkloadSpec& w : catalog::workloads()) c.workloads[w.name] = w;
  return c;
}

void ExperimentConfig::validate() const {
  if (!devices.contains(device)) throw ConfigError("unknown device '" + device + "'");
  if (!devices.contains(cloud)) throw ConfigError("unknown cloud device '" + cloud + "'");
  if (!workloads.contains(workload)) throw ConfigError("unknown workload '" + workload + "'");
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  if (!(lambda >= 0.0 && lambda <= 1.0)) throw ConfigError("lambda must lie in [0, 1]");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (!(tas_ratio > 0.0 && tas_ratio <= 1.0)) throw ConfigError("tas_ratio must lie in (0, 1]");
  if (eval_episodes == 0) throw ConfigError("eval_episodes must be positive");
  if (offload_share < 0.0) throw ConfigError("offload_share must be non-negative");
  if (!(quantizer_bits_per_ms > 0.0)) throw ConfigError("quantizer_bits_per_ms must be positive");
  agent.validate();
  env_config().validate();
}

EnvConfig ExperimentConfig::env_config() const {
  const auto edge_it = devices.find(device);
  const auto cloud_it = devices.find(cloud);
  const auto work_it = workloads.find(workload);
  if (edge_it == devices.end() || cloud_it == devices.end() || work_it == workloads.end())
    throw ConfigError("config references an unknown device or workload");
  EnvConfig e;
  e.system.edge = edge_it->second;
  e.system.cloud = cloud_it->second;
  e.system.power = calibrate_power_model(e.system.edge, power_split, offload_share);
  e.system.quantizer_bits_per_ms = quantizer_bits_per_ms;
  e.workload = work_it->second;
  e.cost = {eta, e.system.edge.max_power};
  e.lambda = lambda;
  e.grid = grid;
  e.bandwidth = bandwidth;
  e.attention_height = attention_height;
  e.attention_width = attention_width;
  e.attention_reduction = attention_reduction;
  e.skew = skew;
  e.episode_length = episode_length;
  return e;
}

ExperimentConfig parse_config(std::string_view text, const std::string& base_dir) {
  toml::table root;
  try {
    root = toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config parse error at line " << e.source().begin.line << ": " << e.description();
    throw ConfigError(msg.str());
  }
  ExperimentConfig c = default_experiment_config();
  for (const auto& [k, v] : root) {
    const std::string name(k.str());
    if (name == "experiment") read_experiment(as_table(v, name), c);
    else if (name == "bandwidth") read_bandwidth(as_table(v, name), c, base_dir);
    else if (name == "grid") read_grid(as_table(v, name), c);
    else if (name == "agent") read_agent(as_table(v, name), c.agent);
    else if (name == "model") read_model(as_table(v, name), c);
    else if (name == "attention") read_attention(as_table(v, name), c);
    else if (name == "devices") {
      for (const auto& [dk, dv] : as_table(v, name)) {
        const std::string dn(dk.str());
        c.devices[dn] = read_device(dn, as_table(dv, "devices." + dn));
      }
    } else if (name == "workloads") {
      for (const auto& [wk, wv] : as_table(v, name)) {
        const std::string wn(wk.str());
        c.workloads[wn] = read_workload(wn, as_table(wv, "workloads." + wn));
      }
    } else {
      throw ConfigError("unknown section [" + name + "]");
    }
  }
  load_trace_if_any(c);
  if (c.bandwidth.mode == BandwidthMode::trace && c.bandwidth.trace.empty())
    throw ConfigError("[bandwidth]: trace mode needs 'trace' (file) or 'values'");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const std::filesystem::path p(path);
  const std::string base = p.has_parent_path() ? p.parent_path().string() : std::string(".");
  return parse_config(text.str(), base);
}

std::optional<std::string> resolve_config_path(const std::optional<std::string>& explicit_path) {
  if (explicit_path && !explicit_path->empty()) return explicit_path;
  if (const char* env = std::getenv(kConfigEnvVar); env != nullptr && *env != '\0') return std::string(env);
  return std::nullopt;
}

void apply_overrides(ExperimentConfig& cfg, const Overrides& o) {
  if (o.seed) cfg.seeds = {*o.seed};
  if (o.steps) cfg.steps = *o.steps;
  if (o.device) cfg.device = *o.device;
  if (o.workload) cfg.workload = *o.workload;
  if (o.out) cfg.output = *o.out;
  if (o.eta) cfg.eta = *o.eta;
  if (o.lambda) cfg.lambda = *o.lambda;
  if (o.tas_ratio) cfg.tas_ratio = *o.tas_ratio;
  if (o.trace) {
    cfg.trace_path = *o.trace;
    load_trace_if_any(cfg);
  }
  cfg.validate();
}

}  // namespace edgesim
