#pragma once
// Vector arithmetic kernels used by the solver and PAC inner loops.
//
// Every kernel exists as a scalar reference implementation plus SIMD
// variants (AVX2 on x86-64, NEON on aarch64). The active backend is
// picked once at startup from CPU capabilities; the TEMSIM_KERNELS
// environment variable ("scalar", "avx2", "neon") forces a backend.
// SIMD variants are equivalence-tested against the scalar reference.

#include <cstddef>
#include <string_view>

namespace tem::kernels {

struct Backend {
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*norm2sq)(const double* x, std::size_t n);
    double (*norm_inf)(const double* x, std::size_t n);
    // max_i |x_i - y_i|
    double (*diff_inf)(const double* x, const double* y, std::size_t n);
    // y += a*x
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    // out = x + a*(x - x_prev); Nesterov-style extrapolation
    void (*extrapolate)(const double* x, const double* x_prev, double a,
                        double* out, std::size_t n);
};

namespace detail {
extern const Backend scalar;
#if defined(__x86_64__) || defined(_M_X64)
extern const Backend avx2;
bool cpu_has_avx2();
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
extern const Backend neon;
#endif
}  // namespace detail

// Active backend (runtime-dispatched, resolved once).
const Backend& active();
std::string_view backend_name();

// Scalar reference entry points, always available (used as test oracle).
const Backend& scalar_reference();

inline double dot(const double* x, const double* y, std::size_t n) {
    return active().dot(x, y, n);
}
inline double norm2sq(const double* x, std::size_t n) {
    return active().norm2sq(x, n);
}
inline double norm_inf(const double* x, std::size_t n) {
    return active().norm_inf(x, n);
}
inline double diff_inf(const double* x, const double* y, std::size_t n) {
    return active().diff_inf(x, y, n);
}
inline void axpy(double a, const double* x, double* y, std::size_t n) {
    active().axpy(a, x, y, n);
}
inline void extrapolate(const double* x, const double* x_prev, double a,
                        double* out, std::size_t n) {
    active().extrapolate(x, x_prev, a, out, n);
}

}  // namespace tem::kernels
