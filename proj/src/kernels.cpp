#include "pderm/kernels.hpp"

#include <cstdlib>
#include <cstring>
#include <stdexcept>
#include <string>

// Dispatch only; no intrinsics here. The active variant is resolved once:
// PDERM_KERNELS=scalar|avx2|neon|auto wins, otherwise the best supported
// variant for this CPU.

namespace pderm::kern {

namespace {

bool isa_supported(Isa isa) {
    switch (isa) {
        case Isa::scalar:
            return true;
        case Isa::avx2:
#if defined(PDERM_HAVE_AVX2_VARIANT)
            return __builtin_cpu_supports("avx2");
#else
            return false;
#endif
        case Isa::neon:
#if defined(PDERM_HAVE_NEON_VARIANT)
            return true;  // baseline on aarch64
#else
            return false;
#endif
    }
    return false;
}

Isa pick_default() {
    if (const char* env = std::getenv("PDERM_KERNELS")) {
        std::string s(env);
        if (s == "scalar") return Isa::scalar;
        if (s == "avx2" && isa_supported(Isa::avx2)) return Isa::avx2;
        if (s == "neon" && isa_supported(Isa::neon)) return Isa::neon;
        // "auto" or an unusable request falls through to detection
    }
    if (isa_supported(Isa::avx2)) return Isa::avx2;
    if (isa_supported(Isa::neon)) return Isa::neon;
    return Isa::scalar;
}

Isa& current() {
    static Isa isa = pick_default();
    return isa;
}

}  // namespace

Isa active_isa() { return current(); }

const char* isa_name(Isa isa) {
    switch (isa) {
        case Isa::scalar: return "scalar";
        case Isa::avx2: return "avx2";
        case Isa::neon: return "neon";
    }
    return "?";
}

void force_isa(Isa isa) {
    if (!isa_supported(isa)) {
        throw std::invalid_argument(std::string("kernel variant not available: ") + isa_name(isa));
    }
    current() = isa;
}

double dot(const double* x, const double* y, std::size_t n) {
    switch (current()) {
#if defined(PDERM_HAVE_AVX2_VARIANT)
        case Isa::avx2: return detail::dot_avx2(x, y, n);
#endif
#if defined(PDERM_HAVE_NEON_VARIANT)
        case Isa::neon: return detail::dot_neon(x, y, n);
#endif
        default: return detail::dot_scalar(x, y, n);
    }
}

double nrm2sq(const double* x, std::size_t n) {
    switch (current()) {
#if defined(PDERM_HAVE_AVX2_VARIANT)
        case Isa::avx2: return detail::nrm2sq_avx2(x, n);
#endif
#if defined(PDERM_HAVE_NEON_VARIANT)
        case Isa::neon: return detail::nrm2sq_neon(x, n);
#endif
        default: return detail::nrm2sq_scalar(x, n);
    }
}

void axpy(std::size_t n, double a, const double* x, double* y) {
    switch (current()) {
#if defined(PDERM_HAVE_AVX2_VARIANT)
        case Isa::avx2: detail::axpy_avx2(n, a, x, y); return;
#endif
#if defined(PDERM_HAVE_NEON_VARIANT)
        case Isa::neon: detail::axpy_neon(n, a, x, y); return;
#endif
        default: detail::axpy_scalar(n, a, x, y); return;
    }
}

void scale(std::size_t n, double a, double* x) {
    switch (current()) {
#if defined(PDERM_HAVE_AVX2_VARIANT)
        case Isa::avx2: detail::scale_avx2(n, a, x); return;
#endif
#if defined(PDERM_HAVE_NEON_VARIANT)
        case Isa::neon: detail::scale_neon(n, a, x); return;
#endif
        default: detail::scale_scalar(n, a, x); return;
    }
}

double gather_dot(const std::int32_t* idx, const double* val, std::size_t nnz,
                  const double* dense) {
    switch (current()) {
#if defined(PDERM_HAVE_AVX2_VARIANT)
        case Isa::avx2: return detail::gather_dot_avx2(idx, val, nnz, dense);
#endif
        default: return detail::gather_dot_scalar(idx, val, nnz, dense);
    }
}

void scatter_axpy(const std::int32_t* idx, const double* val, std::size_t nnz, double a,
                  double* dense) {
    // Scatter has no useful SIMD form on these targets; one shared path.
    detail::scatter_axpy_scalar(idx, val, nnz, a, dense);
}

}  // namespace pderm::kern
