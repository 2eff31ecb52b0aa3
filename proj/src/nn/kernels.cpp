#include "agility/nn/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#include <omp.h>

namespace agility::nn::kernels {

namespace {

// Below this many multiply-adds a parallel region costs more than it saves.
constexpr std::size_t kParallelThreshold = 1 << 16;

bool worth_parallel(std::size_t n, std::size_t k, std::size_t m) {
  return n > 1 && n * k * m >= kParallelThreshold;
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }
void set_threads(int n) { omp_set_num_threads(std::max(1, n)); }

namespace fast {

void matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t m, bool accumulate) {
  // Four output rows share each streamed row of B. Every output still sums
  // over p in ascending order from its prior value.
  const auto blocks = static_cast<std::int64_t>((n + 3) / 4);
#pragma omp parallel for schedule(static) if (worth_parallel(n, k, m))
  for (std::int64_t blk = 0; blk < blocks; ++blk) {
    const std::size_t i0 = static_cast<std::size_t>(blk) * 4;
    if (i0 + 4 <= n) {
      double* __restrict c0 = c + i0 * m;
      double* __restrict c1 = c0 + m;
      double* __restrict c2 = c1 + m;
      double* __restrict c3 = c2 + m;
      if (!accumulate) std::fill(c0, c0 + 4 * m, 0.0);
      const double* a0 = a + i0 * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double v0 = a0[p], v1 = a0[k + p], v2 = a0[2 * k + p], v3 = a0[3 * k + p];
        const double* __restrict bp = b + p * m;
        for (std::size_t j = 0; j < m; ++j) {
          const double bv = bp[j];
          c0[j] += v0 * bv;
          c1[j] += v1 * bv;
          c2[j] += v2 * bv;
          c3[j] += v3 * bv;
        }
      }
      continue;
    }
    for (std::size_t i = i0; i < n; ++i) {
      double* __restrict ci = c + i * m;
      if (!accumulate) std::fill(ci, ci + m, 0.0);
      const double* ai = a + i * k;
      for (std::size_t p = 0; p < k; ++p) {
        const double av = ai[p];
        const double* __restrict bp = b + p * m;
        for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
      }
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t n,
               std::size_t k, std::size_t m, bool accumulate) {
  std::vector<double> at(n * k);
  for (std::size_t p = 0; p < k; ++p) {
    for (std::size_t i = 0; i < n; ++i) at[i * k + p] = a[p * n + i];
  }
  matmul(at.data(), b, c, n, k, m, accumulate);
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t n,
               std::size_t k, std::size_t m, bool accumulate) {
  // Transposing B once turns the strided dot products into the same
  // vectorizable row update as matmul, with the same summation order.
  std::vector<double> bt(k * m);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t p = 0; p < k; ++p) bt[p * m + j] = b[j * k + p];
  }
  matmul(a, bt.data(), c, n, k, m, accumulate);
}

void column_sum(const double* a, double* out, std::size_t n, std::size_t m,
                bool accumulate) {
  if (!accumulate) std::fill(out, out + m, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a + i * m;
    for (std::size_t j = 0; j < m; ++j) out[j] += ai[j];
  }
}

}  // namespace fast

namespace reference {

void matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t m, bool accumulate) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = accumulate ? c[i * m + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[p * m + j];
      c[i * m + j] = acc;
    }
  }
}

void matmul_tn(const double* a, const double* b, double* c, std::size_t n,
               std::size_t k, std::size_t m, bool accumulate) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = accumulate ? c[i * m + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[p * n + i] * b[p * m + j];
      c[i * m + j] = acc;
    }
  }
}

void matmul_nt(const double* a, const double* b, double* c, std::size_t n,
               std::size_t k, std::size_t m, bool accumulate) {
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double acc = accumulate ? c[i * m + j] : 0.0;
      for (std::size_t p = 0; p < k; ++p) acc += a[i * k + p] * b[j * k + p];
      c[i * m + j] = acc;
    }
  }
}

void column_sum(const double* a, double* out, std::size_t n, std::size_t m,
                bool accumulate) {
  for (std::size_t j = 0; j < m; ++j) {
    double acc = accumulate ? out[j] : 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += a[i * m + j];
    out[j] = acc;
  }
}

}  // namespace reference

}  // namespace agility::nn::kernels
