#pragma once

#include <cstddef>

// Dense matrix kernels. Every output element is produced by exactly one thread
// with a fixed summation order, so the OpenMP versions are bit-identical to the
// serial references.
namespace metasum::diff::kernels {

/// C[m,n] (+)= A[m,k] * B[k,n]
void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
          bool accumulate);
void gemm_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                 bool accumulate);

/// C[m,n] (+)= A[m,k] * B[n,k]^T
void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);
void gemm_nt_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate);

/// C[m,n] (+)= A[k,m]^T * B[k,n]
void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate);
void gemm_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate);

} // namespace metasum::diff::kernels
