#include <doctest.h>

#include <cmath>
#include <vector>

#include "edgesim/catalog.hpp"
#include "edgesim/errors.hpp"
#include "edgesim/kernels.hpp"
#include "edgesim/quantizer.hpp"
#include "edgesim/rng.hpp"

using namespace edgesim;

namespace {

std::vector<int> unsigned_codes(const QuantizedBlock& q) {
  std::vector<int> out;
  for (std::int8_t v : q.values) out.push_back(static_cast<int>(v) + 128);
  return out;
}

}  // namespace

TEST_CASE("quantize: three-point example") {
  const std::vector<double> x{0.0, 0.5, 1.0};
  const QuantizedBlock q = quantize(x);
  CHECK(q.scale == doctest::Approx(1.0 / 255.0).epsilon(1e-15));
  CHECK(q.unsigned_zero_point() == 0);
  CHECK(unsigned_codes(q) == std::vector<int>{0, 128, 255});
  const auto y = dequantize(q);
  CHECK(y[0] == 0.0);
  CHECK(y[1] == doctest::Approx(0.501961).epsilon(1e-6));
  CHECK(y[2] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(std::abs(y[1] - 0.5) <= q.scale / 2.0 + 1e-15);
}

TEST_CASE("quantize: symmetric range puts zero mid-scale") {
  const std::vector<double> x{-1.0, 0.0, 1.0};
  const QuantizedBlock q = quantize(x);
  CHECK(q.unsigned_zero_point() == 128);
  CHECK(dequantize(q)[1] == 0.0);
}

TEST_CASE("quantize: constant inputs round-trip exactly") {
  for (double c : {0.0, 3.25, -7.5, 1e-12}) {
    CAPTURE(c);
    const std::vector<double> x(17, c);
    const QuantizedBlock q = quantize(x);
    CHECK(q.scale > 0.0);
    for (double y : dequantize(q)) CHECK(y == c);
  }
}

TEST_CASE("quantize: error bound and code range on random arrays") {
  Rng r(2024);
  for (int trial = 0; trial < 2000; ++trial) {
    const std::size_t n = 1 + r.below(300);
    const double lo = r.uniform(-50.0, 50.0);
    const double hi = lo + r.uniform(0.0, 100.0);
    std::vector<double> x(n);
    for (double& v : x) v = r.uniform(lo, hi);
    const QuantizedBlock q = quantize(x);
    REQUIRE(q.values.size() == n);
    CHECK(q.scale > 0.0);
    const auto y = dequantize(q);
    for (std::size_t i = 0; i < n; ++i) CHECK(std::abs(y[i] - x[i]) <= q.scale / 2.0 * (1 + 1e-9));
  }
}

TEST_CASE("quantize: idempotent on its own output") {
  Rng r(7);
  std::vector<double> x(100);
  for (double& v : x) v = 3.0 * r.normal();
  const QuantizedBlock q1 = quantize(x);
  const auto y1 = dequantize(q1);
  const auto y2 = dequantize(quantize(y1));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-12));
}

TEST_CASE("quantize: rejects empty and non-finite input") {
  CHECK_THROWS_AS(quantize(std::vector<double>{}), DomainError);
  CHECK_THROWS_AS(quantize(std::vector<double>{1.0, std::nan("")}), DomainError);
  CHECK_THROWS_AS(quantize(std::vector<double>{1.0, INFINITY}), DomainError);
}

TEST_CASE("quantize: scalar and vector kernels agree") {
  using kernels::Isa;
  if (kernels::avx2_table() == nullptr || !kernels::cpu_supports(Isa::avx2)) return;
  const Isa before = kernels::active().isa;
  Rng r(11);
  std::vector<double> x(1031);
  for (double& v : x) v = r.uniform(-4.0, 9.0);
  kernels::force_isa(Isa::scalar);
  const QuantizedBlock a = quantize(x);
  const auto ya = dequantize(a);
  kernels::force_isa(Isa::avx2);
  const QuantizedBlock b = quantize(x);
  const auto yb = dequantize(b);
  kernels::force_isa(before);
  CHECK(a.values == b.values);
  CHECK(ya == yb);
}

TEST_CASE("compressed_bits") {
  const WorkloadSpec w = catalog::effnet_like();
  CHECK(w.feature_bits() == 8e6);
  CHECK(compressed_bits(w, 0.0) == 0.0);
  CHECK(compressed_bits(w, 1.0) == 2e6 + 96.0);
  CHECK(compressed_bits(w, 0.5) == 1e6 + 96.0);
  CHECK(w.feature_bits() / (compressed_bits(w, 1.0) - kBlockHeaderBits) == kCompressionRatio);
  CHECK_THROWS_AS(compressed_bits(w, 1.1), DomainError);
}

TEST_CASE("block serialization round-trips") {
  Rng r(3);
  std::vector<double> x(257);
  for (double& v : x) v = r.uniform(-1.0, 2.0);
  const QuantizedBlock q = quantize(x);
  const auto bytes = serialize(q);
  CHECK(bytes.size() == 9 + x.size());
  const QuantizedBlock back = deserialize_block(bytes);
  CHECK(back.values == q.values);
  CHECK(back.zero_point == q.zero_point);
  CHECK(back.original_len == q.original_len);
  CHECK(back.scale == static_cast<double>(static_cast<float>(q.scale)));
  CHECK(serialize(back) == bytes);

  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(deserialize_block(truncated), DomainError);
  CHECK_THROWS_AS(deserialize_block(std::vector<std::uint8_t>(4, 0)), DomainError);
}
