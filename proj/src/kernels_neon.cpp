#include "pderm/kernels.hpp"

#if defined(PDERM_HAVE_NEON_VARIANT)

#include <arm_neon.h>

// NEON variants, 2 doubles per lane pair. No gather on NEON f64; gather_dot
// stays on the scalar path there.

namespace pderm::kern::detail {

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vaddq_f64(acc0, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
        acc1 = vaddq_f64(acc1, vmulq_f64(vld1q_f64(x + i + 2), vld1q_f64(y + i + 2)));
    }
    double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double nrm2sq_neon(const double* x, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        float64x2_t a = vld1q_f64(x + i);
        float64x2_t b = vld1q_f64(x + i + 2);
        acc0 = vaddq_f64(acc0, vmulq_f64(a, a));
        acc1 = vaddq_f64(acc1, vmulq_f64(b, b));
    }
    double acc = vaddvq_f64(acc0) + vaddvq_f64(acc1);
    for (; i < n; ++i) acc += x[i] * x[i];
    return acc;
}

void axpy_neon(std::size_t n, double a, const double* x, double* y) {
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t yi = vld1q_f64(y + i);
        yi = vaddq_f64(yi, vmulq_f64(av, vld1q_f64(x + i)));
        vst1q_f64(y + i, yi);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void scale_neon(std::size_t n, double a, double* x) {
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        vst1q_f64(x + i, vmulq_f64(av, vld1q_f64(x + i)));
    }
    for (; i < n; ++i) x[i] *= a;
}

}  // namespace pderm::kern::detail

#endif  // PDERM_HAVE_NEON_VARIANT
