#include "qn/kernels.hpp"

#include <cmath>
#include <stdexcept>

namespace qn::kern {

namespace ref {

double dot(const double* a, const double* b, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

double nrm2sq(const double* a, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += a[i] * a[i];
    return s;
}

void axpy(double alpha, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void scal(double alpha, double* x, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) x[i] *= alpha;
}

void add(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void sub(const double* a, const double* b, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = a[i] - b[i];
}

void soft_threshold(const double* x, double t, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        double m = std::fabs(x[i]) - t;
        out[i] = m > 0.0 ? std::copysign(m, x[i]) : 0.0;
    }
}

} // namespace ref

#if defined(__x86_64__) || defined(_M_X64)
namespace avx2 {
double dot(const double*, const double*, std::size_t);
double nrm2sq(const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void scal(double, double*, std::size_t);
void add(const double*, const double*, double*, std::size_t);
void sub(const double*, const double*, double*, std::size_t);
void soft_threshold(const double*, double, double*, std::size_t);
} // namespace avx2
#endif

#if defined(__aarch64__)
namespace neon {
double dot(const double*, const double*, std::size_t);
double nrm2sq(const double*, std::size_t);
void axpy(double, const double*, double*, std::size_t);
void scal(double, double*, std::size_t);
void add(const double*, const double*, double*, std::size_t);
void sub(const double*, const double*, double*, std::size_t);
void soft_threshold(const double*, double, double*, std::size_t);
} // namespace neon
#endif

namespace {

struct Table {
    double (*dot)(const double*, const double*, std::size_t);
    double (*nrm2sq)(const double*, std::size_t);
    void (*axpy)(double, const double*, double*, std::size_t);
    void (*scal)(double, double*, std::size_t);
    void (*add)(const double*, const double*, double*, std::size_t);
    void (*sub)(const double*, const double*, double*, std::size_t);
    void (*soft_threshold)(const double*, double, double*, std::size_t);
};

Table make_table(Backend b) {
    switch (b) {
#if defined(__x86_64__) || defined(_M_X64)
        case Backend::avx2:
            return {avx2::dot, avx2::nrm2sq, avx2::axpy, avx2::scal,
                    avx2::add, avx2::sub,    avx2::soft_threshold};
#endif
#if defined(__aarch64__)
        case Backend::neon:
            return {neon::dot, neon::nrm2sq, neon::axpy, neon::scal,
                    neon::add, neon::sub,    neon::soft_threshold};
#endif
        default:
            return {ref::dot, ref::nrm2sq, ref::axpy, ref::scal,
                    ref::add, ref::sub,    ref::soft_threshold};
    }
}

Backend detect() {
#if defined(__x86_64__) || defined(_M_X64)
    if (__builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma"))
        return Backend::avx2;
#elif defined(__aarch64__)
    return Backend::neon;
#endif
    return Backend::scalar;
}

Backend g_backend = detect();
Table g_table = make_table(g_backend);

} // namespace

Backend active_backend() { return g_backend; }
Backend best_backend() { return detect(); }

void set_backend(Backend b) {
    if (b != Backend::scalar && b != detect())
        throw std::invalid_argument("requested kernel backend not available on this CPU");
    g_backend = b;
    g_table = make_table(b);
}

double dot(const double* a, const double* b, std::size_t n) { return g_table.dot(a, b, n); }
double nrm2sq(const double* a, std::size_t n) { return g_table.nrm2sq(a, n); }
void axpy(double alpha, const double* x, double* y, std::size_t n) { g_table.axpy(alpha, x, y, n); }
void scal(double alpha, double* x, std::size_t n) { g_table.scal(alpha, x, n); }
void add(const double* a, const double* b, double* out, std::size_t n) { g_table.add(a, b, out, n); }
void sub(const double* a, const double* b, double* out, std::size_t n) { g_table.sub(a, b, out, n); }
void soft_threshold(const double* x, double t, double* out, std::size_t n) {
    g_table.soft_threshold(x, t, out, n);
}

} // namespace qn::kern
