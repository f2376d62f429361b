// NEON kernel variants for aarch64. Mirrors the scalar reference with
// 2-wide float64x2_t lanes; remainder elements are handled scalar.

#if defined(__aarch64__) || defined(__ARM_NEON)

#include <arm_neon.h>

#include <cmath>

#include "tem/kernels.hpp"

namespace tem::kernels::detail {

namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vaddq_f64(acc, vmulq_f64(vld1q_f64(x + i), vld1q_f64(y + i)));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double norm2sq_neon(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t xv = vld1q_f64(x + i);
        acc = vaddq_f64(acc, vmulq_f64(xv, xv));
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += x[i] * x[i];
    return s;
}

double norm_inf_neon(const double* x, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) acc = vmaxq_f64(acc, vabsq_f64(vld1q_f64(x + i)));
    double m = vmaxvq_f64(acc);
    for (; i < n; ++i) m = std::max(m, std::fabs(x[i]));
    return m;
}

double diff_inf_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
        acc = vmaxq_f64(acc, vabsq_f64(d));
    }
    double m = vmaxvq_f64(acc);
    for (; i < n; ++i) m = std::max(m, std::fabs(x[i] - y[i]));
    return m;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t yv = vld1q_f64(y + i);
        yv = vaddq_f64(yv, vmulq_f64(av, vld1q_f64(x + i)));
        vst1q_f64(y + i, yv);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void extrapolate_neon(const double* x, const double* x_prev, double a,
                      double* out, std::size_t n) {
    const float64x2_t av = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t xv = vld1q_f64(x + i);
        float64x2_t dv = vsubq_f64(xv, vld1q_f64(x_prev + i));
        vst1q_f64(out + i, vaddq_f64(xv, vmulq_f64(av, dv)));
    }
    for (; i < n; ++i) out[i] = x[i] + a * (x[i] - x_prev[i]);
}

}  // namespace

const Backend neon = {dot_neon,  norm2sq_neon, norm_inf_neon,
                      diff_inf_neon, axpy_neon,    extrapolate_neon};

}  // namespace tem::kernels::detail

#endif  // aarch64 / NEON
