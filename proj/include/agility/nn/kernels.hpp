#pragma once

#include <cstddef>

// Dense matrix kernels. `fast` is the production path (row-parallel under
// OpenMP, cache-friendly loop order); `reference` is the textbook serial
// triple loop kept as a test oracle. Both accumulate every output element
// over the shared dimension in ascending order starting from the prior value
// of C, so they agree bit-for-bit and results never depend on thread count.
namespace agility::nn::kernels {

// Matrices are row-major. `accumulate` adds into C instead of overwriting.

namespace fast {
/// C[n x m] (+)= A[n x k] * B[k x m]
void matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t m, bool accumulate = false);
/// C[n x m] (+)= A[k x n]^T * B[k x m]
void matmul_tn(const double* a, const double* b, double* c, std::size_t n,
               std::size_t k, std::size_t m, bool accumulate = false);
/// C[n x m] (+)= A[n x k] * B[m x k]^T
void matmul_nt(const double* a, const double* b, double* c, std::size_t n,
               std::size_t k, std::size_t m, bool accumulate = false);
/// out[m] (+)= sum over rows of A[n x m]
void column_sum(const double* a, double* out, std::size_t n, std::size_t m,
                bool accumulate = false);
}  // namespace fast

namespace reference {
void matmul(const double* a, const double* b, double* c, std::size_t n,
            std::size_t k, std::size_t m, bool accumulate = false);
void matmul_tn(const double* a, const double* b, double* c, std::size_t n,
               std::size_t k, std::size_t m, bool accumulate = false);
void matmul_nt(const double* a, const double* b, double* c, std::size_t n,
               std::size_t k, std::size_t m, bool accumulate = false);
void column_sum(const double* a, double* out, std::size_t n, std::size_t m,
                bool accumulate = false);
}  // namespace reference

/// Number of OpenMP threads the fast kernels may use (1 without OpenMP).
int max_threads();
void set_threads(int n);

}  // namespace agility::nn::kernels
