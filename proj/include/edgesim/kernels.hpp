#pragma once

// Data-parallel inner loops shared by the MLP, the attention module and the
// int8 codec. Each kernel has a scalar reference and, on x86-64, an AVX2/FMA
// variant. The variant is chosen once at startup from CPUID; setting
// EDGESIM_ISA=scalar in the environment pins the reference path.

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace edgesim::kernels {

enum class Isa { scalar, avx2 };

struct AdamStep {
  double lr;
  double beta1;
  double beta2;
  double eps;
  double bias_corr1;  // 1 - beta1^t
  double bias_corr2;  // 1 - beta2^t
};

struct KernelTable {
  Isa isa;

  double (*dot)(const double* a, const double* b, std::size_t n);

  // y += alpha * x
  void (*axpy)(double alpha, const double* x, double* y, std::size_t n);

  // C[m x n] = A[m x k] * B[k x n] (+ bias[n] broadcast to every row when
  // bias != nullptr). All row-major, densely packed.
  void (*gemm)(const double* a, const double* b, const double* bias, double* c,
               std::size_t m, std::size_t k, std::size_t n);

  // out[i] = max_j (A[i, :] * B[:, j] + bias[j]); the product is never
  // materialized. bias may be nullptr.
  void (*gemm_rowmax)(const double* a, const double* b, const double* bias, double* out,
                      std::size_t m, std::size_t k, std::size_t n);

  // In-place max(x, 0).
  void (*relu)(double* x, std::size_t n);

  // sum and max of x[0..n), n >= 1.
  double (*sum)(const double* x, std::size_t n);
  double (*max)(const double* x, std::size_t n);

  // min and max of x[0..n), n >= 1.
  void (*minmax)(const double* x, std::size_t n, double* lo, double* hi);

  // y[i] *= s[i]
  void (*mul)(const double* s, double* y, std::size_t n);

  // y[i] *= alpha
  void (*scale)(double alpha, double* y, std::size_t n);

  // Adam moment and parameter update over a flat parameter vector.
  void (*adam)(double* param, const double* grad, double* m, double* v,
               std::size_t n, const AdamStep& step);

  // codes[i] = clamp(round_half_away(x[i] * inv_scale) + zero_point, 0, 255)
  void (*quantize)(const double* x, std::size_t n, double inv_scale,
                   int zero_point, std::uint8_t* codes);

  // x[i] = (codes[i] - zero_point) * scale
  void (*dequantize)(const std::uint8_t* codes, std::size_t n, int zero_point,
                     double scale, double* x);
};

const KernelTable& scalar_table();

/// nullptr when the variant was not compiled in.
const KernelTable* avx2_table();

bool cpu_supports(Isa isa);

/// Table used by the library; resolved on first call.
const KernelTable& active();

/// Overrides the runtime choice (tests, benchmarking). Throws DomainError if
/// the requested variant is unavailable on this CPU or build.
void force_isa(Isa isa);

std::string_view isa_name(Isa isa);

}  // namespace edgesim::kernels
