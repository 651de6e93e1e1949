#pragma once

#include <cstddef>
#include <vector>

namespace qn {

// Dense row-major matrix, sized for simulator scale (a few hundred rows).
struct Mat {
    int rows = 0;
    int cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * c, 0.0) {}

    double& operator()(int i, int j) { return a[static_cast<std::size_t>(i) * cols + j]; }
    double operator()(int i, int j) const { return a[static_cast<std::size_t>(i) * cols + j]; }
    double* row(int i) { return a.data() + static_cast<std::size_t>(i) * cols; }
    const double* row(int i) const { return a.data() + static_cast<std::size_t>(i) * cols; }

    static Mat identity(int n);
};

void matvec(const Mat& M, const double* x, double* y);    // y = M x
void matvec_t(const Mat& M, const double* x, double* y);  // y = M^T x
Mat matmul(const Mat& A, const Mat& B);
Mat gram(const Mat& U);  // U^T U
double frob_norm(const Mat& M);
bool is_symmetric(const Mat& M, double tol);

// Cholesky factorization of a symmetric positive definite matrix.
// Throws std::runtime_error if the matrix is not positive definite.
struct Cholesky {
    explicit Cholesky(const Mat& M);
    void solve(const double* b, double* x) const;

private:
    Mat L_;
};

struct EigResult {
    std::vector<double> values;  // descending
    Mat vectors;                 // column j pairs with values[j]; empty unless requested
};

// Cyclic Jacobi rotations; converges when the off-diagonal Frobenius norm
// drops below 1e-12 * ||M||_F. Input must be symmetric within 1e-12 scale.
EigResult sym_eig(const Mat& M, bool want_vectors);
std::vector<double> sym_eigenvalues(const Mat& M);

} // namespace qn
