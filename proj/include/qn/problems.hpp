#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "qn/linalg.hpp"

namespace qn {

// Composite objective: min over x of (1/m) sum_i f_i(x) + alpha*||x||_1.
// Every algorithm here drives its agents to the same minimizer of this form.
struct Problem {
    int m = 0;
    int d = 0;
    double alpha = 0.0;  // l1 weight; 0 means no regularizer
    double L = 0.0;      // max_i L_i
    double mu = 0.0;     // min_i mu_i
    std::vector<double> L_i, mu_i;

    std::function<double(int i, const double* x)> value;
    std::function<void(int i, const double* x, double* g)> grad;
    // exact solution of argmin_x f_i(x) + y^T x (closed form for quadratics,
    // damped Newton for logistic)
    std::function<void(int i, const double* y, double* x)> argmin_linear;

    double kappa() const { return L / mu; }
    double mean_value(const double* x) const;           // (1/m) sum f_i(x)
    void mean_grad(const double* x, double* g) const;   // grad of the above
    double composite_value(const double* x) const;      // + alpha*||x||_1
};

struct LinRegData {
    std::vector<Mat> U;                   // n_i x d per agent
    std::vector<std::vector<double>> v;   // n_i per agent
    std::vector<double> x0_true;
    double beta = 0.0;
    double noise_var = 0.0;
    double ridge = 0.01;
};

struct LogRegData {
    std::vector<Mat> U;                  // unit-row features, n_i x d
    std::vector<std::vector<double>> v;  // labels in {-1,+1}
};

// Least squares with AR(1)-correlated feature columns:
// column 0 ~ N(0, I/(1-beta^2)), column q ~ N(beta * column_{q-1}, I);
// x0_true has round(sparsity*d) zero entries, the rest standard normal;
// v_i = U_i x0_true + N(0, noise_var I).
// f_i(x) = 0.5*||U_i x - v_i||^2 + (ridge/2)*||x||^2, r = alpha*||x||_1.
// kappa_target > 0 replaces the default ridge 0.01 by the coefficient that
// pins the global condition number: c = (rho1_max - kappa*rhod_min)/(kappa-1).
std::pair<LinRegData, Problem> gen_linreg(int m, int n_per_agent, int d, double beta,
                                          double sparsity, double noise_var, double alpha,
                                          std::uint64_t seed, double kappa_target = 0.0);

Problem problem_from_linreg(const LinRegData& data, double alpha);

// f_i(x) = 0.005*||x||^2 + (1/n) sum_p ln(1+exp(-v_p u_p^T x)), r = alpha*||x||_1.
// Unit-norm random features, labels from a planted separator with 10% flips.
std::pair<LogRegData, Problem> gen_logreg_synthetic(int m, int n_per_agent, int d,
                                                    double alpha, std::uint64_t seed);

Problem problem_from_logreg(const LogRegData& data, double alpha);

// MNIST IDX ingestion: flattened 28x28 images normalized to unit l2 norm,
// labels +1 for target_digit else -1, split evenly over m agents (surplus
// dropped from the tail).
LogRegData load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                          int target_digit, int m);

// m strongly convex quadratics f_i = 0.5 x^T H_i x - b_i^T x with per-agent
// spectra spanning [1, kappa]; exact constants.
struct QuadData {
    std::vector<Mat> H;
    std::vector<std::vector<double>> b;
};
std::pair<QuadData, Problem> gen_quadratic(int m, int d, double kappa, std::uint64_t seed);

void prox_l1(const double* w, double threshold, double* out, int n);

struct Constants {
    std::vector<double> L_i, mu_i;
    double L, mu, kappa;
};
Constants constants(const Problem& p);

// Centralized FISTA (with adaptive restart) on the composite objective, run
// until the prox-gradient mapping norm drops below tol.
std::vector<double> reference_solution(const Problem& p, double tol = 1e-12,
                                       long long max_iter = 2000000);

// Binary dataset container ("QNDS"): u32 version, u32 m, u32 d, u32 n[i],
// then per agent U_i row-major and v_i, all little-endian f64.
void save_qnds(const std::string& path, const LinRegData& data);
LinRegData load_qnds(const std::string& path);

} // namespace qn
