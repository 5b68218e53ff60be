#include "edgesim/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "edgesim/errors.hpp"

namespace edgesim {
namespace {

void require_proportion(double xi, const char* op) {
  if (!(xi >= 0.0 && xi <= 1.0)) {
    std::ostringstream os;
    os << op << ": offload proportion " << xi << " outside [0, 1]";
    throw DomainError(os.str());
  }
}

void require_in_bounds(const DeviceSpec& spec, const FrequencyVector& f, const char* op) {
  if (!spec.contains(f)) {
    std::ostringstream os;
    os << op << ": frequency (" << f.cpu << ", " << f.gpu << ", " << f.mem
       << ") MHz outside the range of " << spec.name;
    throw DomainError(os.str());
  }
}

double interpolate(double f, double f_lo, double f_hi, double v_lo, double v_hi) {
  return v_lo + (v_hi - v_lo) * (f - f_lo) / (f_hi - f_lo);
}

// max(compute, memory) + cpu dispatch, before the (1 - xi) / xi share.
double roofline_ms(const WorkloadSpec& w, const FrequencyVector& f, const Throughput& u) {
  const double gpu_ms = w.gpu_work / (f.gpu * u.gpu);
  const double mem_ms = w.mem_traffic / (f.mem * u.mem);
  const double cpu_ms = w.cpu_work / (f.cpu * u.cpu);
  return std::max(gpu_ms, mem_ms) + cpu_ms;
}

}  // namespace

void DeviceSpec::validate() const {
  auto fail = [&](const std::string& why) { throw ConfigError("device '" + name + "': " + why); };
  if (!(f_min.cpu < f_max.cpu && f_min.gpu < f_max.gpu && f_min.mem < f_max.mem)) {
    fail("f_min must be below f_max in every domain");
  }
  if (!(f_min.cpu > 0.0 && f_min.gpu > 0.0 && f_min.mem > 0.0)) fail("frequencies must be positive");
  if (!(max_power > p_static && p_static > 0.0)) fail("need max_power > p_static > 0");
  if (!(v_min.cpu <= v_max.cpu && v_min.gpu <= v_max.gpu && v_min.mem <= v_max.mem)) {
    fail("v_min must not exceed v_max");
  }
  if (!(v_min.cpu > 0.0 && v_min.gpu > 0.0 && v_min.mem > 0.0)) fail("voltages must be positive");
}

bool DeviceSpec::contains(const FrequencyVector& f) const {
  // Grid points are computed in floating point; allow a few ulps at the ends.
  auto within = [](double x, double lo, double hi) {
    const double slack = 1e-9 * hi;
    return x >= lo - slack && x <= hi + slack;
  };
  return within(f.cpu, f_min.cpu, f_max.cpu) && within(f.gpu, f_min.gpu, f_max.gpu) &&
         within(f.mem, f_min.mem, f_max.mem);
}

double WorkloadSpec::feature_bits() const {
  return static_cast<double>(channels) * static_cast<double>(height) *
         static_cast<double>(width) * 32.0;
}

void WorkloadSpec::validate() const {
  if (!(gpu_work > 0.0 && mem_traffic > 0.0 && cpu_work > 0.0)) {
    throw ConfigError("workload '" + name + "': work terms must be positive");
  }
  if (channels == 0 || height == 0 || width == 0) {
    throw ConfigError("workload '" + name + "': feature-map geometry must be positive");
  }
}

void CostParams::validate() const {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0, 1]");
  if (!(max_power > 0.0)) throw ConfigError("MaxPower must be positive");
}

Voltages voltage_at(const DeviceSpec& spec, const FrequencyVector& f) {
  require_in_bounds(spec, f, "voltage_at");
  return {
      interpolate(f.cpu, spec.f_min.cpu, spec.f_max.cpu, spec.v_min.cpu, spec.v_max.cpu),
      interpolate(f.gpu, spec.f_min.gpu, spec.f_max.gpu, spec.v_min.gpu, spec.v_max.gpu),
      interpolate(f.mem, spec.f_min.mem, spec.f_max.mem, spec.v_min.mem, spec.v_max.mem),
  };
}

double compute_power(const PowerModel& model, const FrequencyVector& f) {
  const Voltages v = voltage_at(model.device, f);
  return model.kappa.cpu * v.cpu * v.cpu * f.cpu + model.kappa.gpu * v.gpu * v.gpu * f.gpu +
         model.kappa.mem * v.mem * v.mem * f.mem + model.device.p_static;
}

double offload_power(const PowerModel& model, const FrequencyVector& f) {
  const Voltages v = voltage_at(model.device, f);
  return model.kappa_offload * v.cpu * v.cpu * f.cpu + model.device.p_static;
}

double tti_local(const WorkloadSpec& w, const FrequencyVector& f, double xi, const Throughput& u) {
  require_proportion(xi, "tti_local");
  if (xi == 1.0) return 0.0;
  return roofline_ms(w, f, u) * (1.0 - xi);
}

double tti_cloud(const WorkloadSpec& w, const FrequencyVector& cloud_f, double xi,
                 const Throughput& u) {
  require_proportion(xi, "tti_cloud");
  if (xi == 0.0) return 0.0;
  return roofline_ms(w, cloud_f, u) * xi;
}

double tti_comp(const WorkloadSpec& w, const FrequencyVector& f, double xi, double cpu_max_mhz,
                double quantizer_bits_per_ms) {
  require_proportion(xi, "tti_comp");
  if (!(quantizer_bits_per_ms > 0.0) || !(cpu_max_mhz > 0.0)) {
    throw DomainError("tti_comp: quantizer throughput and CPU clock must be positive");
  }
  if (xi == 0.0) return 0.0;
  return xi * w.feature_bits() / (quantizer_bits_per_ms * (f.cpu / cpu_max_mhz));
}

double tti_off(const WorkloadSpec& w, double xi, double bandwidth_mbps) {
  require_proportion(xi, "tti_off");
  if (!(bandwidth_mbps > 0.0)) throw DomainError("tti_off: bandwidth must be positive");
  if (xi == 0.0) return 0.0;
  const double payload_bits = xi * w.feature_bits() / kCompressionRatio;
  return payload_bits / (bandwidth_mbps * 1000.0);
}

LatencyBreakdown make_latency(double local, double comp, double off, double cloud) {
  return {local, comp, off, cloud, local + comp + off + cloud};
}

LatencyBreakdown tti_total(const SystemModel& sys, const WorkloadSpec& w, const FrequencyVector& f,
                           double xi, double bandwidth_mbps) {
  require_in_bounds(sys.edge, f, "tti_total");
  return make_latency(tti_local(w, f, xi, sys.edge_throughput),
                      tti_comp(w, f, xi, sys.edge.f_max.cpu, sys.quantizer_bits_per_ms),
                      tti_off(w, xi, bandwidth_mbps),
                      tti_cloud(w, sys.cloud_frequency(), xi, sys.cloud_throughput));
}

EnergyBreakdown eti_total(const LatencyBreakdown& lat, double p_compute, double p_offload) {
  const double compute = (lat.local + lat.comp) * p_compute;
  const double offload = lat.off * p_offload;
  return {compute, offload, compute + offload};
}

double cost(const LatencyBreakdown& lat, const EnergyBreakdown& eti, const CostParams& cp) {
  return cp.eta * eti.total + (1.0 - cp.eta) * cp.max_power * lat.total;
}

PowerModel calibrate_power_model(const DeviceSpec& spec, const PowerShares& split,
                                 double offload_share) {
  spec.validate();
  if (!(split.cpu >= 0.0 && split.gpu >= 0.0 && split.mem >= 0.0)) {
    throw ConfigError("power split entries must be non-negative");
  }
  if (std::abs(split.cpu + split.gpu + split.mem - 1.0) > 1e-9) {
    throw ConfigError("power split must sum to 1");
  }
  if (!(offload_share >= 0.0)) throw ConfigError("offload share must be non-negative");

  const double dynamic = spec.max_power - spec.p_static;
  PowerModel model;
  model.device = spec;
  model.kappa.cpu = split.cpu * dynamic / (spec.v_max.cpu * spec.v_max.cpu * spec.f_max.cpu);
  model.kappa.gpu = split.gpu * dynamic / (spec.v_max.gpu * spec.v_max.gpu * spec.f_max.gpu);
  model.kappa.mem = split.mem * dynamic / (spec.v_max.mem * spec.v_max.mem * spec.f_max.mem);
  model.kappa_offload =
      offload_share * spec.max_power / (spec.v_max.cpu * spec.v_max.cpu * spec.f_max.cpu);
  return model;
}

Evaluation evaluate(const SystemModel& sys, const WorkloadSpec& w, const FrequencyVector& f,
                    double xi, double bandwidth_mbps, const CostParams& cp) {
  Evaluation e;
  e.latency = tti_total(sys, w, f, xi, bandwidth_mbps);
  e.compute_power = compute_power(sys.power, f);
  e.offload_power = offload_power(sys.power, f);
  e.energy = eti_total(e.latency, e.compute_power, e.offload_power);
  e.cost = cost(e.latency, e.energy, cp);
  return e;
}

void ActionGrid::validate() const {
  if (cpu_levels == 0 || gpu_levels == 0 || mem_levels == 0) {
    throw ConfigError("frequency levels must be at least 1");
  }
  if (xi_levels < 2) throw ConfigError("xi levels must be at least 2");
}

namespace {

double level_value(std::size_t level, std::size_t levels, double lo, double hi) {
  if (levels == 1) return hi;
  if (level + 1 == levels) return hi;
  return lo + (hi - lo) * static_cast<double>(level) / static_cast<double>(levels - 1);
}

std::size_t nearest_level(double value, std::size_t levels, double lo, double hi, const char* what) {
  if (levels == 1) {
    if (std::abs(value - hi) <= 1e-9 * std::max(1.0, std::abs(hi))) return 0;
    throw DomainError(std::string("action off grid: ") + what + " is pinned at its maximum");
  }
  const double pos = (value - lo) / (hi - lo) * static_cast<double>(levels - 1);
  const double rounded = std::round(pos);
  if (rounded < 0.0 || rounded > static_cast<double>(levels - 1) ||
      std::abs(value - level_value(static_cast<std::size_t>(rounded), levels, lo, hi)) >
          1e-9 * std::max(1.0, std::abs(hi))) {
    throw DomainError(std::string("action off grid: ") + what);
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

double ActionGrid::xi_value(std::size_t level) const {
  return level_value(level, xi_levels, 0.0, 1.0);
}

Action ActionGrid::decode(std::size_t index, const DeviceSpec& device) const {
  if (index >= size()) throw DomainError("action index out of range");
  const std::size_t ix = index % xi_levels;
  index /= xi_levels;
  const std::size_t im = index % mem_levels;
  index /= mem_levels;
  const std::size_t ig = index % gpu_levels;
  const std::size_t ic = index / gpu_levels;
  Action a;
  a.freq.cpu = level_value(ic, cpu_levels, device.f_min.cpu, device.f_max.cpu);
  a.freq.gpu = level_value(ig, gpu_levels, device.f_min.gpu, device.f_max.gpu);
  a.freq.mem = level_value(im, mem_levels, device.f_min.mem, device.f_max.mem);
  a.xi = xi_value(ix);
  return a;
}

std::size_t ActionGrid::encode(const Action& action, const DeviceSpec& device) const {
  const std::size_t ic =
      nearest_level(action.freq.cpu, cpu_levels, device.f_min.cpu, device.f_max.cpu, "cpu");
  const std::size_t ig =
      nearest_level(action.freq.gpu, gpu_levels, device.f_min.gpu, device.f_max.gpu, "gpu");
  const std::size_t im =
      nearest_level(action.freq.mem, mem_levels, device.f_min.mem, device.f_max.mem, "mem");
  const std::size_t ix = nearest_level(action.xi, xi_levels, 0.0, 1.0, "xi");
  return ((ic * gpu_levels + ig) * mem_levels + im) * xi_levels + ix;
}

OracleResult brute_force_optimum(const ActionGrid& grid, const SystemModel& sys,
                                 const WorkloadSpec& w, double bandwidth_mbps,
                                 const CostParams& cp) {
  grid.validate();
  const std::size_t n = grid.size();
  if (n > kOracleMaxActions) throw DomainError("brute_force_optimum: grid too large to enumerate");
  OracleResult best;
  double best_cost = std::numeric_limits<double>::infinity();
  double best_eti = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    const Action a = grid.decode(i, sys.edge);
    const Evaluation e = evaluate(sys, w, a.freq, a.xi, bandwidth_mbps, cp);
    if (e.cost < best_cost || (e.cost == best_cost && e.energy.total < best_eti)) {
      best_cost = e.cost;
      best_eti = e.energy.total;
      best.index = i;
      best.action = a;
      best.evaluation = e;
    }
  }
  best.evaluations = n;
  return best;
}

}  // namespace edgesim
