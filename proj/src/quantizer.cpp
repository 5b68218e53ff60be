#include "edgesim/quantizer.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>

#include "edgesim/errors.hpp"
#include "edgesim/kernels.hpp"

namespace edgesim {

QuantizedBlock quantize(std::span<const double> x) {
  if (x.empty()) throw DomainError("quantize: empty input");
  if (!std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); })) {
    throw DomainError("quantize: non-finite input");
  }
  const auto& k = kernels::active();
  double lo = 0.0;
  double hi = 0.0;
  k.minmax(x.data(), x.size(), &lo, &hi);

  QuantizedBlock q;
  q.original_len = x.size();
  q.values.resize(x.size());

  if (lo == hi) {
    // Constant input: one step of size |c| away from the zero point.
    const int zp = 128;
    q.scale = lo == 0.0 ? 1.0 : std::abs(lo);
    q.zero_point = static_cast<std::int8_t>(zp - 128);
    const std::int8_t code = static_cast<std::int8_t>((lo > 0.0) - (lo < 0.0));
    std::fill(q.values.begin(), q.values.end(), code);
    return q;
  }

  lo = std::min(lo, 0.0);
  hi = std::max(hi, 0.0);
  q.scale = (hi - lo) / 255.0;
  const int zp = static_cast<int>(std::clamp(std::round(-lo / q.scale), 0.0, 255.0));
  q.zero_point = static_cast<std::int8_t>(zp - 128);

  std::vector<std::uint8_t> codes(x.size());
  k.quantize(x.data(), x.size(), 1.0 / q.scale, zp, codes.data());
  std::transform(codes.begin(), codes.end(), q.values.begin(),
                 [](std::uint8_t c) { return static_cast<std::int8_t>(static_cast<int>(c) - 128); });
  return q;
}

std::vector<double> dequantize(const QuantizedBlock& q) {
  if (q.values.size() != q.original_len) throw DomainError("dequantize: length mismatch");
  std::vector<std::uint8_t> codes(q.values.size());
  std::transform(q.values.begin(), q.values.end(), codes.begin(),
                 [](std::int8_t v) { return static_cast<std::uint8_t>(static_cast<int>(v) + 128); });
  std::vector<double> out(q.values.size());
  kernels::active().dequantize(codes.data(), codes.size(), q.unsigned_zero_point(), q.scale,
                               out.data());
  return out;
}

double compressed_bits(const WorkloadSpec& w, double xi) {
  if (!(xi >= 0.0 && xi <= 1.0)) throw DomainError("compressed_bits: xi outside [0, 1]");
  if (xi == 0.0) return 0.0;
  return xi * w.feature_bits() / kCompressionRatio + kBlockHeaderBits;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return v;
}

}  // namespace

std::vector<std::uint8_t> serialize(const QuantizedBlock& q) {
  if (q.original_len > 0xffffffffu) throw DomainError("serialize: block too long");
  std::vector<std::uint8_t> out;
  out.reserve(9 + q.values.size());
  put_u32(out, static_cast<std::uint32_t>(q.original_len));
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(q.scale)));
  out.push_back(static_cast<std::uint8_t>(q.unsigned_zero_point()));
  for (std::int8_t v : q.values) out.push_back(static_cast<std::uint8_t>(static_cast<int>(v) + 128));
  return out;
}

QuantizedBlock deserialize_block(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 9) throw DomainError("deserialize_block: truncated header");
  const std::uint32_t len = get_u32(bytes.data());
  if (bytes.size() != 9 + static_cast<std::size_t>(len)) {
    throw DomainError("deserialize_block: payload length mismatch");
  }
  QuantizedBlock q;
  q.original_len = len;
  q.scale = static_cast<double>(std::bit_cast<float>(get_u32(bytes.data() + 4)));
  q.zero_point = static_cast<std::int8_t>(static_cast<int>(bytes[8]) - 128);
  q.values.resize(len);
  for (std::size_t i = 0; i < len; ++i) {
    q.values[i] = static_cast<std::int8_t>(static_cast<int>(bytes[9 + i]) - 128);
  }
  return q;
}

}  // namespace edgesim
