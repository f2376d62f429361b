#include "tem/kernels.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>

namespace tem::kernels {

namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double norm2sq_scalar(const double* x, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * x[i];
    return s;
}

double norm_inf_scalar(const double* x, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i]));
    return m;
}

double diff_inf_scalar(const double* x, const double* y, std::size_t n) {
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) m = std::max(m, std::fabs(x[i] - y[i]));
    return m;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

void extrapolate_scalar(const double* x, const double* x_prev, double a,
                        double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = x[i] + a * (x[i] - x_prev[i]);
}

}  // namespace

namespace detail {
const Backend scalar = {dot_scalar,  norm2sq_scalar, norm_inf_scalar,
                        diff_inf_scalar, axpy_scalar, extrapolate_scalar};
}  // namespace detail

namespace {

struct Selection {
    const Backend* backend;
    const char* name;
};

Selection select() {
    const char* force = std::getenv("TEMSIM_KERNELS");
    if (force != nullptr) {
        if (std::strcmp(force, "scalar") == 0) return {&detail::scalar, "scalar"};
#if defined(__x86_64__) || defined(_M_X64)
        if (std::strcmp(force, "avx2") == 0 && detail::cpu_has_avx2())
            return {&detail::avx2, "avx2"};
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
        if (std::strcmp(force, "neon") == 0) return {&detail::neon, "neon"};
#endif
        return {&detail::scalar, "scalar"};
    }
#if defined(__x86_64__) || defined(_M_X64)
    if (detail::cpu_has_avx2()) return {&detail::avx2, "avx2"};
#endif
#if defined(__aarch64__) || defined(__ARM_NEON)
    return {&detail::neon, "neon"};
#endif
    return {&detail::scalar, "scalar"};
}

const Selection& selection() {
    static const Selection s = select();
    return s;
}

}  // namespace

const Backend& active() { return *selection().backend; }
std::string_view backend_name() { return selection().name; }
const Backend& scalar_reference() { return detail::scalar; }

}  // namespace tem::kernels
