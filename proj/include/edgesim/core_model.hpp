#pragma once

// Device, workload, power, latency, energy and cost models of edge-cloud
// collaborative inference. Everything here is a pure function over immutable
// values.
//
// Units: MHz, ms, W, mJ, Mbps, bits. Energy is W x ms = mJ.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace edgesim {

struct FrequencyVector {
  double cpu = 0.0;  // MHz
  double gpu = 0.0;
  double mem = 0.0;

  friend bool operator==(const FrequencyVector&, const FrequencyVector&) = default;
};

struct Voltages {
  double cpu = 0.0;  // V
  double gpu = 0.0;
  double mem = 0.0;
};

/// Fraction of dynamic power drawn by each domain at maximum frequency.
struct PowerShares {
  double cpu = 0.2;
  double gpu = 0.66;
  double mem = 0.14;
};

struct DeviceSpec {
  std::string name;
  FrequencyVector f_min;
  FrequencyVector f_max;
  double max_power = 0.0;  // W
  Voltages v_min{0.8, 0.8, 0.8};
  Voltages v_max{1.2, 1.2, 1.2};
  double p_static = 0.0;  // W

  /// Throws ConfigError when an invariant does not hold.
  void validate() const;
  bool contains(const FrequencyVector& f) const;
};

/// Roofline work description of one inference task.
///
/// gpu_work / (f_gpu * throughput.gpu) is the compute time in ms; the memory
/// and CPU terms are analogous.
struct WorkloadSpec {
  std::string name;
  double gpu_work = 0.0;     // mega-cycles
  double mem_traffic = 0.0;  // MB
  double cpu_work = 0.0;     // mega-cycles
  std::size_t channels = 0;
  std::size_t height = 0;
  std::size_t width = 0;

  /// Raw float32 feature-map size: channels * height * width * 32.
  double feature_bits() const;
  void validate() const;
};

/// Per-cycle throughput constants of the roofline terms.
struct Throughput {
  double cpu = 1.0;
  double gpu = 1.0;
  double mem = 1.0;
};

struct PowerModel {
  Voltages kappa;             // W / (V^2 MHz), per domain
  double kappa_offload = 0.0;  // W / (V^2 MHz), radio path driven by the CPU
  DeviceSpec device;
};

struct CostParams {
  double eta = 0.5;
  double max_power = 0.0;  // W

  void validate() const;
};

struct LatencyBreakdown {
  double local = 0.0;  // ms
  double comp = 0.0;
  double off = 0.0;
  double cloud = 0.0;
  double total = 0.0;
};

struct EnergyBreakdown {
  double compute = 0.0;  // mJ
  double offload = 0.0;
  double total = 0.0;
};

/// Everything needed to price an action besides the workload and bandwidth.
struct SystemModel {
  DeviceSpec edge;
  DeviceSpec cloud;
  PowerModel power;
  Throughput edge_throughput;
  Throughput cloud_throughput;
  double quantizer_bits_per_ms = 1e6;  // at the edge CPU's maximum frequency

  /// Cloud servers always run at their maximum clocks.
  const FrequencyVector& cloud_frequency() const { return cloud.f_max; }
};

inline constexpr double kCompressionRatio = 4.0;  // float32 -> int8

Voltages voltage_at(const DeviceSpec& spec, const FrequencyVector& f);

double compute_power(const PowerModel& model, const FrequencyVector& f);
double offload_power(const PowerModel& model, const FrequencyVector& f);

double tti_local(const WorkloadSpec& w, const FrequencyVector& f, double xi,
                 const Throughput& u = {});
double tti_cloud(const WorkloadSpec& w, const FrequencyVector& cloud_f, double xi,
                 const Throughput& u = {});
/// Time to int8-encode the offloaded share; scales with f.cpu / cpu_max_mhz.
double tti_comp(const WorkloadSpec& w, const FrequencyVector& f, double xi,
                double cpu_max_mhz, double quantizer_bits_per_ms);
double tti_off(const WorkloadSpec& w, double xi, double bandwidth_mbps);

LatencyBreakdown make_latency(double local, double comp, double off, double cloud);
LatencyBreakdown tti_total(const SystemModel& sys, const WorkloadSpec& w,
                           const FrequencyVector& f, double xi, double bandwidth_mbps);

EnergyBreakdown eti_total(const LatencyBreakdown& lat, double p_compute, double p_offload);

/// eta * ETI + (1 - eta) * MaxPower * TTI, in mJ.
double cost(const LatencyBreakdown& lat, const EnergyBreakdown& eti, const CostParams& cp);

/// Solves the per-domain kappa so that compute_power(f_max) == max_power.
/// The offload coefficient is set so that the radio path draws
/// offload_share * max_power on top of static power at the CPU's f_max.
PowerModel calibrate_power_model(const DeviceSpec& spec, const PowerShares& split = {},
                                 double offload_share = 0.1);

/// Everything one (f, xi) evaluation produces.
struct Evaluation {
  LatencyBreakdown latency;
  EnergyBreakdown energy;
  double compute_power = 0.0;
  double offload_power = 0.0;
  double cost = 0.0;
};

Evaluation evaluate(const SystemModel& sys, const WorkloadSpec& w, const FrequencyVector& f,
                    double xi, double bandwidth_mbps, const CostParams& cp);

/// A concrete action: frequency triple plus offloaded proportion.
struct Action {
  FrequencyVector freq;
  double xi = 0.0;
};

/// Discrete joint action space. A domain with a single level is pinned at
/// the device's maximum frequency. Index layout is lexicographic in
/// (cpu, gpu, mem, xi) with xi varying fastest.
struct ActionGrid {
  std::size_t cpu_levels = 10;
  std::size_t gpu_levels = 10;
  std::size_t mem_levels = 10;
  std::size_t xi_levels = 11;

  static ActionGrid uniform(std::size_t freq_levels, std::size_t xi_levels) {
    return {freq_levels, freq_levels, freq_levels, xi_levels};
  }

  std::size_t size() const { return cpu_levels * gpu_levels * mem_levels * xi_levels; }
  void validate() const;

  Action decode(std::size_t index, const DeviceSpec& device) const;
  /// Throws DomainError when the action is not a grid point.
  std::size_t encode(const Action& action, const DeviceSpec& device) const;

  double xi_value(std::size_t level) const;
};

struct OracleResult {
  std::size_t index = 0;
  Action action;
  Evaluation evaluation;
  std::size_t evaluations = 0;
};

inline constexpr std::size_t kOracleMaxActions = 100000;

/// Exhaustive argmin of the cost over the grid. Ties go to the lower ETI,
/// then to the lower action index.
OracleResult brute_force_optimum(const ActionGrid& grid, const SystemModel& sys,
                                 const WorkloadSpec& w, double bandwidth_mbps,
                                 const CostParams& cp);

}  // namespace edgesim
