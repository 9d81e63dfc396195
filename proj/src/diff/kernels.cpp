#include "metasum/diff/kernels.hpp"

#include <algorithm>

namespace metasum::diff::kernels {

namespace {

// Below this many multiply-adds the fork/join costs more than it saves.
constexpr std::size_t parallel_threshold = 1 << 15;

constexpr std::size_t block_rows = 2;
constexpr std::size_t block_cols = 8;

// C rows [i0, i0 + rows) of C = A * B where A(i, p) = a[i * ars + p * acs].
// Every C element accumulates its products in increasing p, starting from C (or
// 0), so the blocking never changes the result.
inline void axpy_block(const double* a, std::size_t ars, std::size_t acs, const double* b, double* c,
                       std::size_t i0, std::size_t rows, std::size_t k, std::size_t n, bool accumulate)
{
    for (std::size_t j0 = 0; j0 < n; j0 += block_cols) {
        const std::size_t w = std::min(block_cols, n - j0);
        if (rows == block_rows && w == block_cols) {
            double acc[block_rows][block_cols];
            for (std::size_t r = 0; r < block_rows; ++r)
                for (std::size_t q = 0; q < block_cols; ++q)
                    acc[r][q] = accumulate ? c[(i0 + r) * n + j0 + q] : 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                const double* brow = b + p * n + j0;
                for (std::size_t r = 0; r < block_rows; ++r) {
                    const double av = a[(i0 + r) * ars + p * acs];
                    for (std::size_t q = 0; q < block_cols; ++q)
                        acc[r][q] += av * brow[q];
                }
            }
            for (std::size_t r = 0; r < block_rows; ++r)
                for (std::size_t q = 0; q < block_cols; ++q)
                    c[(i0 + r) * n + j0 + q] = acc[r][q];
            continue;
        }
        for (std::size_t r = 0; r < rows; ++r) {
            double acc[block_cols];
            double* crow = c + (i0 + r) * n + j0;
            for (std::size_t q = 0; q < w; ++q)
                acc[q] = accumulate ? crow[q] : 0.0;
            for (std::size_t p = 0; p < k; ++p) {
                const double av = a[(i0 + r) * ars + p * acs];
                const double* brow = b + p * n + j0;
                for (std::size_t q = 0; q < w; ++q)
                    acc[q] += av * brow[q];
            }
            std::copy_n(acc, w, crow);
        }
    }
}

// C rows [i0, i0 + rows) of C = A * B^T with A [m, k], B [n, k]: each element is a
// dot product summed in increasing p, then added to C when accumulating.
inline void dot_block(const double* a, const double* b, double* c, std::size_t i0, std::size_t rows, std::size_t k,
                      std::size_t n, bool accumulate)
{
    constexpr std::size_t bj = 4;
    for (std::size_t j0 = 0; j0 < n; j0 += bj) {
        const std::size_t w = std::min(bj, n - j0);
        double s[block_rows][bj] = {};
        if (rows == block_rows && w == bj) {
            for (std::size_t p = 0; p < k; ++p)
                for (std::size_t r = 0; r < block_rows; ++r) {
                    const double av = a[(i0 + r) * k + p];
                    for (std::size_t q = 0; q < bj; ++q)
                        s[r][q] += av * b[(j0 + q) * k + p];
                }
        } else {
            for (std::size_t r = 0; r < rows; ++r)
                for (std::size_t q = 0; q < w; ++q) {
                    const double* arow = a + (i0 + r) * k;
                    const double* brow = b + (j0 + q) * k;
                    double t = 0.0;
                    for (std::size_t p = 0; p < k; ++p)
                        t += arow[p] * brow[p];
                    s[r][q] = t;
                }
        }
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t q = 0; q < w; ++q) {
                double& dst = c[(i0 + r) * n + j0 + q];
                dst = accumulate ? dst + s[r][q] : s[r][q];
            }
    }
}

inline std::size_t block_count(std::size_t m) { return (m + block_rows - 1) / block_rows; }

template <class Block>
void run_serial(std::size_t m, Block&& block)
{
    for (std::size_t t = 0; t < block_count(m); ++t)
        block(t * block_rows, std::min(block_rows, m - t * block_rows));
}

template <class Block>
void run_parallel(std::size_t m, std::size_t work, Block&& block)
{
    const auto blocks = static_cast<std::ptrdiff_t>(block_count(m));
#pragma omp parallel for schedule(static) if (work >= parallel_threshold && blocks > 1)
    for (std::ptrdiff_t t = 0; t < blocks; ++t) {
        const auto i0 = static_cast<std::size_t>(t) * block_rows;
        block(i0, std::min(block_rows, m - i0));
    }
}

} // namespace

void gemm_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                 bool accumulate)
{
    run_serial(m, [&](std::size_t i0, std::size_t rows) { axpy_block(a, k, 1, b, c, i0, rows, k, n, accumulate); });
}

void gemm(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n, bool accumulate)
{
    run_parallel(m, m * k * n,
                 [&](std::size_t i0, std::size_t rows) { axpy_block(a, k, 1, b, c, i0, rows, k, n, accumulate); });
}

void gemm_nt_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate)
{
    run_serial(m, [&](std::size_t i0, std::size_t rows) { dot_block(a, b, c, i0, rows, k, n, accumulate); });
}

void gemm_nt(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate)
{
    run_parallel(m, m * k * n,
                 [&](std::size_t i0, std::size_t rows) { dot_block(a, b, c, i0, rows, k, n, accumulate); });
}

void gemm_tn_serial(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
                    bool accumulate)
{
    run_serial(m, [&](std::size_t i0, std::size_t rows) { axpy_block(a, 1, m, b, c, i0, rows, k, n, accumulate); });
}

void gemm_tn(const double* a, const double* b, double* c, std::size_t m, std::size_t k, std::size_t n,
             bool accumulate)
{
    run_parallel(m, m * k * n,
                 [&](std::size_t i0, std::size_t rows) { axpy_block(a, 1, m, b, c, i0, rows, k, n, accumulate); });
}

} // namespace metasum::diff::kernels
