#include "edgesim/catalog.hpp"

namespace edgesim::catalog {
namespace {

DeviceSpec make_device(std::string name, FrequencyVector f_min, FrequencyVector f_max,
                       double max_power) {
  DeviceSpec d;
  d.name = std::move(name);
  d.f_min = f_min;
  d.f_max = f_max;
  d.max_power = max_power;
  d.p_static = 0.1 * max_power;
  return d;
}

}  // namespace

DeviceSpec jetson_nano() {
  return make_device("jetson-nano", {102.0, 76.8, 204.0}, {1479.0, 921.6, 1600.0}, 10.0);
}

DeviceSpec jetson_tx2() {
  return make_device("jetson-tx2", {345.6, 114.75, 204.0}, {2000.0, 1300.0, 1866.0}, 15.0);
}

DeviceSpec xavier_nx() {
  return make_device("xavier-nx", {115.2, 114.75, 204.0}, {1900.0, 1100.0, 1866.0}, 20.0);
}

DeviceSpec rtx3080() {
  return make_device("rtx3080", {1200.0, 210.0, 405.0}, {2900.0, 1440.0, 2933.0}, 320.0);
}

WorkloadSpec effnet_like() {
  // 6 ms GPU, 30 ms memory and 5 ms CPU at Xavier NX maximum clocks.
  // 16 x 125 x 125 float32 feature map = 8 Mbit.
  return {"effnet-like", 6600.0, 55980.0, 9500.0, 16, 125, 125};
}

WorkloadSpec vit_like() {
  // 150 ms GPU, 15 ms memory and 5 ms CPU at Xavier NX maximum clocks.
  // 25 x 50 x 50 float32 feature map = 2 Mbit.
  return {"vit-like", 165000.0, 27990.0, 9500.0, 25, 50, 50};
}

std::vector<DeviceSpec> edge_devices() { return {jetson_nano(), jetson_tx2(), xavier_nx()}; }

std::vector<WorkloadSpec> workloads() { return {effnet_like(), vit_like()}; }

std::optional<DeviceSpec> find_device(std::string_view name) {
  for (auto& d : edge_devices()) {
    if (d.name == name) return d;
  }
  if (name == "rtx3080") return rtx3080();
  return std::nullopt;
}

std::optional<WorkloadSpec> find_workload(std::string_view name) {
  for (auto& w : workloads()) {
    if (w.name == name) return w;
  }
  return std::nullopt;
}

}  // namespace edgesim::catalog
