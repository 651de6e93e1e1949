#pragma once

#include <cstddef>

// Dense vector kernels with runtime-dispatched SIMD variants.
// The scalar implementations are the reference; AVX2 (x86_64) and NEON
// (aarch64) variants are selected at startup when the CPU supports them and
// are equivalence-tested against the scalar path.
namespace qn::kern {

enum class Backend { scalar, avx2, neon };

Backend active_backend();
// Force a specific backend (tests); throws std::invalid_argument if the
// backend is not available on this machine.
void set_backend(Backend b);
Backend best_backend();

double dot(const double* a, const double* b, std::size_t n);
double nrm2sq(const double* a, std::size_t n);
void axpy(double alpha, const double* x, double* y, std::size_t n); // y += alpha*x
void scal(double alpha, double* x, std::size_t n);
void add(const double* a, const double* b, double* out, std::size_t n);
void sub(const double* a, const double* b, double* out, std::size_t n);
// out[i] = sign(x[i]) * max(|x[i]| - t, 0)
void soft_threshold(const double* x, double t, double* out, std::size_t n);

} // namespace qn::kern
