#pragma once

// Per-tensor affine int8 codec for offloaded feature maps.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "edgesim/core_model.hpp"

namespace edgesim {

/// Codes are stored as signed bytes: code = unsigned code - 128. The same
/// shift applies to zero_point.
struct QuantizedBlock {
  std::vector<std::int8_t> values;
  double scale = 1.0;
  std::int8_t zero_point = 0;
  std::size_t original_len = 0;

  /// zero_point and codes in [0, 255].
  int unsigned_zero_point() const { return static_cast<int>(zero_point) + 128; }
};

/// Range is widened to include 0 so that zero is exactly representable.
/// Constant input gets scale = |c| (or 1 for c = 0) and round-trips exactly.
QuantizedBlock quantize(std::span<const double> x);

std::vector<double> dequantize(const QuantizedBlock& q);

inline constexpr double kBlockHeaderBits = 96.0;  // length + scale + zero point

/// Offloaded payload in bits: xi * feature_bits / 4 plus one block header;
/// zero when nothing is offloaded.
double compressed_bits(const WorkloadSpec& w, double xi);

/// Little-endian: u32 length, f32 scale, u8 zero point, then the raw codes.
std::vector<std::uint8_t> serialize(const QuantizedBlock& q);
QuantizedBlock deserialize_block(std::span<const std::uint8_t> bytes);

}  // namespace edgesim
