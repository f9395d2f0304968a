#include "pderm/kernels.hpp"

// Reference kernels. Plain loops, one accumulator, no reassociation: these
// define the semantics the SIMD variants are tested against.

namespace pderm::kern::detail {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double nrm2sq_scalar(const double* x, std::size_t n) {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void axpy_scalar(std::size_t n, double a, const double* x, double* y) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void scale_scalar(std::size_t n, double a, double* x) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= a;
}

double gather_dot_scalar(const std::int32_t* idx, const double* val, std::size_t nnz,
                         const double* dense) {
    double acc = 0.0;
    for (std::size_t j = 0; j < nnz; ++j) acc += val[j] * dense[idx[j]];
    return acc;
}

void scatter_axpy_scalar(const std::int32_t* idx, const double* val, std::size_t nnz,
                         double a, double* dense) {
    for (std::size_t j = 0; j < nnz; ++j) dense[idx[j]] += a * val[j];
}

}  // namespace pderm::kern::detail
