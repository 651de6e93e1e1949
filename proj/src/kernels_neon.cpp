#include <arm_neon.h>

#include <cmath>
#include <cstddef>

namespace qn::kern::neon {

double dot(const double* a, const double* b, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        acc = vfmaq_f64(acc, vld1q_f64(a + i), vld1q_f64(b + i));
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += a[i] * b[i];
    return s;
}

double nrm2sq(const double* a, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t v = vld1q_f64(a + i);
        acc = vfmaq_f64(acc, v, v);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += a[i] * a[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] = std::fma(alpha, x[i], y[i]);
}

void scal(double alpha, double* x, std::size_t n) {
    float64x2_t va = vdupq_n_f64(alpha);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(x + i, vmulq_f64(va, vld1q_f64(x + i)));
    for (; i < n; ++i) x[i] *= alpha;
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vaddq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2)
        vst1q_f64(out + i, vsubq_f64(vld1q_f64(a + i), vld1q_f64(b + i)));
    for (; i < n; ++i) out[i] = a[i] - b[i];
}

void soft_threshold(const double* x, double t, double* out, std::size_t n) {
    float64x2_t vt = vdupq_n_f64(t);
    float64x2_t zero = vdupq_n_f64(0.0);
    uint64x2_t sign_mask = vdupq_n_u64(0x8000000000000000ULL);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        float64x2_t v = vld1q_f64(x + i);
        uint64x2_t sign = vandq_u64(vreinterpretq_u64_f64(v), sign_mask);
        float64x2_t mag = vmaxq_f64(vsubq_f64(vabsq_f64(v), vt), zero);
        vst1q_f64(out + i, vreinterpretq_f64_u64(vorrq_u64(vreinterpretq_u64_f64(mag), sign)));
    }
    for (; i < n; ++i) {
        double m = std::fabs(x[i]) - t;
        out[i] = m > 0.0 ? std::copysign(m, x[i]) : 0.0;
    }
}

} // namespace qn::kern::neon
