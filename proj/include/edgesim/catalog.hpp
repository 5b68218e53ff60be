#pragma once

// Built-in device and workload tables. Edge/cloud maximum clocks and power
// limits are the published board figures; minimum clocks are the lowest
// nvpmodel operating points of each board.

#include <optional>
#include <string_view>
#include <vector>

#include "edgesim/core_model.hpp"

namespace edgesim::catalog {

DeviceSpec jetson_nano();
DeviceSpec jetson_tx2();
DeviceSpec xavier_nx();
DeviceSpec rtx3080();

/// Memory-bound reference task (the GPU can be down-clocked a long way before
/// compute overtakes memory traffic).
WorkloadSpec effnet_like();
/// Compute-bound reference task with a smaller feature map, so offloading
/// becomes worthwhile once bandwidth is high enough.
WorkloadSpec vit_like();

std::vector<DeviceSpec> edge_devices();
std::vector<WorkloadSpec> workloads();

std::optional<DeviceSpec> find_device(std::string_view name);
std::optional<WorkloadSpec> find_workload(std::string_view name);

}  // namespace edgesim::catalog
