#include "qn/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qn/kernels.hpp"

namespace qn {

Mat Mat::identity(int n) {
    Mat I(n, n);
    for (int i = 0; i < n; ++i) I(i, i) = 1.0;
    return I;
}

void matvec(const Mat& M, const double* x, double* y) {
    for (int i = 0; i < M.rows; ++i) y[i] = kern::dot(M.row(i), x, M.cols);
}

void matvec_t(const Mat& M, const double* x, double* y) {
    std::fill(y, y + M.cols, 0.0);
    for (int i = 0; i < M.rows; ++i) kern::axpy(x[i], M.row(i), y, M.cols);
}

Mat matmul(const Mat& A, const Mat& B) {
    if (A.cols != B.rows) throw std::invalid_argument("matmul: shape mismatch");
    Mat C(A.rows, B.cols);
    for (int i = 0; i < A.rows; ++i)
        for (int k = 0; k < A.cols; ++k) kern::axpy(A(i, k), B.row(k), C.row(i), B.cols);
    return C;
}

Mat gram(const Mat& U) {
    Mat G(U.cols, U.cols);
    for (int r = 0; r < U.rows; ++r) {
        const double* u = U.row(r);
        for (int i = 0; i < U.cols; ++i)
            if (u[i] != 0.0) kern::axpy(u[i], u, G.row(i), U.cols);
    }
    return G;
}

double frob_norm(const Mat& M) { return std::sqrt(kern::nrm2sq(M.a.data(), M.a.size())); }

bool is_symmetric(const Mat& M, double tol) {
    if (M.rows != M.cols) return false;
    double scale = frob_norm(M);
    double bound = tol * std::max(scale, 1.0);
    for (int i = 0; i < M.rows; ++i)
        for (int j = i + 1; j < M.cols; ++j)
            if (std::fabs(M(i, j) - M(j, i)) > bound) return false;
    return true;
}

Cholesky::Cholesky(const Mat& M) : L_(M.rows, M.cols) {
    if (M.rows != M.cols) throw std::invalid_argument("cholesky: square matrix required");
    int n = M.rows;
    for (int j = 0; j < n; ++j) {
        double d = M(j, j) - kern::nrm2sq(L_.row(j), j);
        if (d <= 0.0) throw std::runtime_error("cholesky: matrix not positive definite");
        L_(j, j) = std::sqrt(d);
        for (int i = j + 1; i < n; ++i)
            L_(i, j) = (M(i, j) - kern::dot(L_.row(i), L_.row(j), j)) / L_(j, j);
    }
}

void Cholesky::solve(const double* b, double* x) const {
    int n = L_.rows;
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i)
        y[i] = (b[i] - kern::dot(L_.row(i), y.data(), i)) / L_(i, i);
    for (int i = n - 1; i >= 0; --i) {
        double s = y[i];
        for (int k = i + 1; k < n; ++k) s -= L_(k, i) * x[k];
        x[i] = s / L_(i, i);
    }
}

namespace {

double offdiag_sq(const Mat& A) {
    double s = 0.0;
    for (int i = 0; i < A.rows; ++i)
        for (int j = i + 1; j < A.cols; ++j) s += A(i, j) * A(i, j);
    return 2.0 * s;
}

} // namespace

EigResult sym_eig(const Mat& M, bool want_vectors) {
    if (!is_symmetric(M, 1e-12)) throw std::invalid_argument("sym_eig: matrix not symmetric");
    int n = M.rows;
    Mat A = M;
    Mat V = want_vectors ? Mat::identity(n) : Mat();
    double norm = frob_norm(M);
    double thresh = 1e-12 * std::max(norm, 1e-300);

    for (int sweep = 0; sweep < 100; ++sweep) {
        if (std::sqrt(offdiag_sq(A)) <= thresh) break;
        for (int p = 0; p < n - 1; ++p) {
            for (int q = p + 1; q < n; ++q) {
                double apq = A(p, q);
                if (apq == 0.0) continue;
                double theta = (A(q, q) - A(p, p)) / (2.0 * apq);
                double t = std::copysign(1.0, theta) /
                           (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int k = 0; k < n; ++k) {
                    double akp = A(k, p), akq = A(k, q);
                    A(k, p) = c * akp - s * akq;
                    A(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    double apk = A(p, k), aqk = A(q, k);
                    A(p, k) = c * apk - s * aqk;
                    A(q, k) = s * apk + c * aqk;
                }
                if (want_vectors) {
                    for (int k = 0; k < n; ++k) {
                        double vkp = V(k, p), vkq = V(k, q);
                        V(k, p) = c * vkp - s * vkq;
                        V(k, q) = s * vkp + c * vkq;
                    }
                }
            }
        }
    }

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int i, int j) { return A(i, i) > A(j, j); });

    EigResult r;
    r.values.resize(n);
    for (int j = 0; j < n; ++j) r.values[j] = A(order[j], order[j]);
    if (want_vectors) {
        r.vectors = Mat(n, n);
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) r.vectors(k, j) = V(k, order[j]);
    }
    return r;
}

std::vector<double> sym_eigenvalues(const Mat& M) { return sym_eig(M, false).values; }

} // namespace qn
