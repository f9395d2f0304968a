#pragma once

#include <cstddef>
#include <cstdint>

// Vector kernels behind a runtime-dispatched interface. Every kernel has a
// scalar reference implementation plus SIMD variants (AVX2 on x86-64, NEON on
// aarch64) selected once at startup from CPU capabilities, overridable with
// the PDERM_KERNELS environment variable or force_isa().
//
// Element-wise kernels (axpy, scale, scatter_axpy) produce bit-identical
// results in every variant. Reductions (dot, nrm2sq, gather_dot) reassociate
// the sum and may differ from the scalar variant in the last ulps; the
// equivalence tests bound this at 1e-12 relative.

namespace pderm::kern {

enum class Isa { scalar, avx2, neon };

Isa active_isa();
const char* isa_name(Isa isa);
// Throws std::invalid_argument if the requested variant is not available on
// this CPU/build.
void force_isa(Isa isa);

// sum_i x[i]*y[i]
double dot(const double* x, const double* y, std::size_t n);
// sum_i x[i]^2
double nrm2sq(const double* x, std::size_t n);
// y[i] += a*x[i]
void axpy(std::size_t n, double a, const double* x, double* y);
// x[i] *= a
void scale(std::size_t n, double a, double* x);
// sum_j val[j] * dense[idx[j]]
double gather_dot(const std::int32_t* idx, const double* val, std::size_t nnz,
                  const double* dense);
// dense[idx[j]] += a * val[j]   (indices assumed distinct)
void scatter_axpy(const std::int32_t* idx, const double* val, std::size_t nnz, double a,
                  double* dense);

namespace detail {
double dot_scalar(const double* x, const double* y, std::size_t n);
double nrm2sq_scalar(const double* x, std::size_t n);
void axpy_scalar(std::size_t n, double a, const double* x, double* y);
void scale_scalar(std::size_t n, double a, double* x);
double gather_dot_scalar(const std::int32_t* idx, const double* val, std::size_t nnz,
                         const double* dense);
void scatter_axpy_scalar(const std::int32_t* idx, const double* val, std::size_t nnz,
                         double a, double* dense);

#if defined(__x86_64__) || defined(_M_X64)
#define PDERM_HAVE_AVX2_VARIANT 1
double dot_avx2(const double* x, const double* y, std::size_t n);
double nrm2sq_avx2(const double* x, std::size_t n);
void axpy_avx2(std::size_t n, double a, const double* x, double* y);
void scale_avx2(std::size_t n, double a, double* x);
double gather_dot_avx2(const std::int32_t* idx, const double* val, std::size_t nnz,
                       const double* dense);
#endif

#if defined(__aarch64__) || defined(__ARM_NEON)
#define PDERM_HAVE_NEON_VARIANT 1
double dot_neon(const double* x, const double* y, std::size_t n);
double nrm2sq_neon(const double* x, std::size_t n);
void axpy_neon(std::size_t n, double a, const double* x, double* y);
void scale_neon(std::size_t n, double a, double* x);
#endif
}  // namespace detail

}  // namespace pderm::kern
