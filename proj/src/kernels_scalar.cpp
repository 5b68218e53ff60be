#include <algorithm>
#include <cmath>
#include <vector>

#include "edgesim/kernels.hpp"

namespace edgesim::kernels {
namespace {

double dot_scalar(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy_scalar(double alpha, const double* x, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_scalar(const double* a, const double* b, const double* bias, double* c,
                 std::size_t m, std::size_t k, std::size_t n) {
  for (std::size_t i = 0; i < m; ++i) {
    double* row = c + i * n;
    if (bias != nullptr) {
      std::copy(bias, bias + n, row);
    } else {
      std::fill(row, row + n, 0.0);
    }
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = a[i * k + p];
      const double* brow = b + p * n;
      for (std::size_t j = 0; j < n; ++j) row[j] += aip * brow[j];
    }
  }
}

void gemm_rowmax_scalar(const double* a, const double* b, const double* bias, double* out,
                        std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> row(n);
  for (std::size_t i = 0; i < m; ++i) {
    gemm_scalar(a + i * k, b, bias, row.data(), 1, k, n);
    out[i] = *std::max_element(row.begin(), row.end());
  }
}

void relu_scalar(double* x, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) x[i] = x[i] > 0.0 ? x[i] : 0.0;
}

double sum_scalar(const double* x, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += x[i];
  return s;
}

double max_scalar(const double* x, std::size_t n) {
  double m = x[0];
  for (std::size_t i = 1; i < n; ++i) m = x[i] > m ? x[i] : m;
  return m;
}

void minmax_scalar(const double* x, std::size_t n, double* lo, double* hi) {
  double a = x[0];
  double b = x[0];
  for (std::size_t i = 1; i < n; ++i) {
    a = x[i] < a ? x[i] : a;
    b = x[i] > b ? x[i] : b;
  }
  *lo = a;
  *hi = b;
}

void mul_scalar(const double* s, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= s[i];
}

void scale_scalar(double alpha, double* y, std::size_t n) {
  for (std::size_t i = 0; i < n; ++i) y[i] *= alpha;
}

void adam_scalar(double* param, const double* grad, double* m, double* v, std::size_t n,
                 const AdamStep& st) {
  const double one_m_b1 = 1.0 - st.beta1;
  const double one_m_b2 = 1.0 - st.beta2;
  for (std::size_t i = 0; i < n; ++i) {
    const double g = grad[i];
    const double mi = st.beta1 * m[i] + one_m_b1 * g;
    const double vi = st.beta2 * v[i] + one_m_b2 * (g * g);
    m[i] = mi;
    v[i] = vi;
    const double mhat = mi / st.bias_corr1;
    const double vhat = vi / st.bias_corr2;
    param[i] -= st.lr * (mhat / (std::sqrt(vhat) + st.eps));
  }
}

void quantize_scalar(const double* x, std::size_t n, double inv_scale, int zero_point,
                     std::uint8_t* codes) {
  for (std::size_t i = 0; i < n; ++i) {
    // std::round is half-away-from-zero.
    double q = std::round(x[i] * inv_scale) + static_cast<double>(zero_point);
    q = std::clamp(q, 0.0, 255.0);
    codes[i] = static_cast<std::uint8_t>(q);
  }
}

void dequantize_scalar(const std::uint8_t* codes, std::size_t n, int zero_point, double scale,
                       double* x) {
  for (std::size_t i = 0; i < n; ++i) {
    x[i] = static_cast<double>(static_cast<int>(codes[i]) - zero_point) * scale;
  }
}

}  // namespace

const KernelTable& scalar_table() {
  static const KernelTable table{
      Isa::scalar,   dot_scalar,     axpy_scalar,    gemm_scalar,
      gemm_rowmax_scalar, relu_scalar,   sum_scalar,     max_scalar,     minmax_scalar,
      mul_scalar,    scale_scalar,   adam_scalar,    quantize_scalar,
      dequantize_scalar,
  };
  return table;
}

}  // namespace edgesim::kernels
