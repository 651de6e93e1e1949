#include "qn/problems.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <memory>
#include <numeric>
#include <stdexcept>

#include "qn/kernels.hpp"
#include "qn/rng.hpp"

namespace qn {

namespace {

double l1_norm(const double* x, int n) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::fabs(x[i]);
    return s;
}

double sigmoid(double t) {
    if (t >= 0.0) {
        double e = std::exp(-t);
        return 1.0 / (1.0 + e);
    }
    double e = std::exp(t);
    return e / (1.0 + e);
}

double softplus(double t) {  // ln(1+e^t), overflow-safe
    return std::max(t, 0.0) + std::log1p(std::exp(-std::fabs(t)));
}

// random orthogonal matrix via Gram-Schmidt on a Gaussian draw
Mat random_orthogonal(int d, CounterRng& rng) {
    Mat Q(d, d);
    for (int j = 0; j < d; ++j) {
        std::vector<double> col(d);
        for (;;) {
            for (int i = 0; i < d; ++i) col[i] = rng.normal();
            for (int k = 0; k < j; ++k) {
                double proj = 0.0;
                for (int i = 0; i < d; ++i) proj += col[i] * Q(i, k);
                for (int i = 0; i < d; ++i) col[i] -= proj * Q(i, k);
            }
            double nrm = std::sqrt(kern::nrm2sq(col.data(), d));
            if (nrm > 1e-8) {
                for (int i = 0; i < d; ++i) Q(i, j) = col[i] / nrm;
                break;
            }
        }
    }
    return Q;
}

struct GramSpectra {
    std::vector<double> top, bottom;  // rho_1 and rho_d of U_i^T U_i
};

GramSpectra gram_spectra(const std::vector<Mat>& U) {
    GramSpectra s;
    for (const Mat& Ui : U) {
        auto ev = sym_eigenvalues(gram(Ui));
        s.top.push_back(ev.front());
        s.bottom.push_back(std::max(ev.back(), 0.0));
    }
    return s;
}

} // namespace

double Problem::mean_value(const double* x) const {
    double s = 0.0;
    for (int i = 0; i < m; ++i) s += value(i, x);
    return s / m;
}

void Problem::mean_grad(const double* x, double* g) const {
    std::vector<double> gi(d);
    std::fill(g, g + d, 0.0);
    for (int i = 0; i < m; ++i) {
        grad(i, x, gi.data());
        kern::axpy(1.0 / m, gi.data(), g, d);
    }
}

double Problem::composite_value(const double* x) const {
    return mean_value(x) + alpha * l1_norm(x, d);
}

void prox_l1(const double* w, double threshold, double* out, int n) {
    if (threshold < 0.0) throw std::invalid_argument("prox_l1: negative threshold");
    kern::soft_threshold(w, threshold, out, n);
}

// ---------------------------------------------------------------- linreg ----

Problem problem_from_linreg(const LinRegData& data, double alpha) {
    struct Ctx {
        LinRegData data;
        std::vector<Cholesky> chol;  // U_i^T U_i + ridge I
    };
    auto ctx = std::make_shared<Ctx>();
    ctx->data = data;
    int m = static_cast<int>(data.U.size());
    int d = data.U[0].cols;
    for (int i = 0; i < m; ++i) {
        Mat H = gram(data.U[i]);
        for (int j = 0; j < d; ++j) H(j, j) += data.ridge;
        ctx->chol.emplace_back(H);
    }

    Problem p;
    p.m = m;
    p.d = d;
    p.alpha = alpha;
    auto spec = gram_spectra(data.U);
    for (int i = 0; i < m; ++i) {
        p.L_i.push_back(spec.top[i] + data.ridge);
        p.mu_i.push_back(spec.bottom[i] + data.ridge);
    }
    p.L = *std::max_element(p.L_i.begin(), p.L_i.end());
    p.mu = *std::min_element(p.mu_i.begin(), p.mu_i.end());

    p.value = [ctx](int i, const double* x) {
        const Mat& U = ctx->data.U[i];
        const auto& v = ctx->data.v[i];
        std::vector<double> r(U.rows);
        matvec(U, x, r.data());
        kern::sub(r.data(), v.data(), r.data(), U.rows);
        return 0.5 * kern::nrm2sq(r.data(), U.rows) +
               0.5 * ctx->data.ridge * kern::nrm2sq(x, U.cols);
    };
    p.grad = [ctx](int i, const double* x, double* g) {
        const Mat& U = ctx->data.U[i];
        const auto& v = ctx->data.v[i];
        std::vector<double> r(U.rows);
        matvec(U, x, r.data());
        kern::sub(r.data(), v.data(), r.data(), U.rows);
        matvec_t(U, r.data(), g);
        kern::axpy(ctx->data.ridge, x, g, U.cols);
    };
    p.argmin_linear = [ctx](int i, const double* y, double* x) {
        // (U^T U + ridge I) x = U^T v - y
        const Mat& U = ctx->data.U[i];
        std::vector<double> rhs(U.cols);
        matvec_t(U, ctx->data.v[i].data(), rhs.data());
        kern::axpy(-1.0, y, rhs.data(), U.cols);
        ctx->chol[i].solve(rhs.data(), x);
    };
    return p;
}

std::pair<LinRegData, Problem> gen_linreg(int m, int n_per_agent, int d, double beta,
                                          double sparsity, double noise_var, double alpha,
                                          std::uint64_t seed, double kappa_target) {
    if (!(beta >= 0.0 && beta < 1.0)) throw std::invalid_argument("gen_linreg: beta in [0,1)");
    if (!(sparsity >= 0.0 && sparsity <= 1.0))
        throw std::invalid_argument("gen_linreg: sparsity in [0,1]");
    LinRegData data;
    data.beta = beta;
    data.noise_var = noise_var;

    // ground truth from its own stream
    CounterRng xrng(seed, static_cast<std::uint64_t>(m));
    data.x0_true.assign(d, 0.0);
    int nz = d - static_cast<int>(std::lround(sparsity * d));
    std::vector<int> idx(d);
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = d - 1; i > 0; --i)
        std::swap(idx[i], idx[xrng.uniform_below(static_cast<std::uint64_t>(i) + 1)]);
    for (int k = 0; k < nz; ++k) data.x0_true[idx[k]] = xrng.normal();

    double stat_sd = 1.0 / std::sqrt(1.0 - beta * beta);
    for (int i = 0; i < m; ++i) {
        CounterRng rng(seed, static_cast<std::uint64_t>(i));
        Mat U(n_per_agent, d);
        for (int r = 0; r < n_per_agent; ++r) U(r, 0) = stat_sd * rng.normal();
        for (int q = 1; q < d; ++q)
            for (int r = 0; r < n_per_agent; ++r) U(r, q) = beta * U(r, q - 1) + rng.normal();
        std::vector<double> v(n_per_agent);
        matvec(U, data.x0_true.data(), v.data());
        double sd = std::sqrt(noise_var);
        for (int r = 0; r < n_per_agent; ++r) v[r] += sd * rng.normal();
        data.U.push_back(std::move(U));
        data.v.push_back(std::move(v));
    }

    if (kappa_target > 0.0) {
        if (kappa_target <= 1.0) throw std::invalid_argument("gen_linreg: kappa_target must be > 1");
        auto spec = gram_spectra(data.U);
        double rho1 = *std::max_element(spec.top.begin(), spec.top.end());
        double rhod = *std::min_element(spec.bottom.begin(), spec.bottom.end());
        double c = (rho1 - kappa_target * rhod) / (kappa_target - 1.0);
        if (!(c > 0.0))
            throw std::invalid_argument("gen_linreg: kappa_target unreachable (>= natural kappa)");
        data.ridge = c;
    }
    Problem p = problem_from_linreg(data, alpha);
    return {std::move(data), std::move(p)};
}

// ---------------------------------------------------------------- logreg ----

Problem problem_from_logreg(const LogRegData& data, double alpha) {
    auto ctx = std::make_shared<LogRegData>(data);
    int m = static_cast<int>(ctx->U.size());
    int d = ctx->U[0].cols;
    constexpr double kRidge = 0.01;

    Problem p;
    p.m = m;
    p.d = d;
    p.alpha = alpha;
    auto spec = gram_spectra(ctx->U);
    for (int i = 0; i < m; ++i) {
        int n = ctx->U[i].rows;
        p.L_i.push_back(kRidge + spec.top[i] / (4.0 * n));
        p.mu_i.push_back(kRidge);
    }
    p.L = *std::max_element(p.L_i.begin(), p.L_i.end());
    p.mu = kRidge;

    p.value = [ctx](int i, const double* x) {
        const Mat& U = ctx->U[i];
        const auto& v = ctx->v[i];
        double s = 0.0;
        for (int r = 0; r < U.rows; ++r)
            s += softplus(-v[r] * kern::dot(U.row(r), x, U.cols));
        return 0.5 * kRidge * kern::nrm2sq(x, U.cols) + s / U.rows;
    };
    p.grad = [ctx](int i, const double* x, double* g) {
        const Mat& U = ctx->U[i];
        const auto& v = ctx->v[i];
        for (int j = 0; j < U.cols; ++j) g[j] = kRidge * x[j];
        for (int r = 0; r < U.rows; ++r) {
            double t = -v[r] * kern::dot(U.row(r), x, U.cols);
            kern::axpy(-v[r] * sigmoid(t) / U.rows, U.row(r), g, U.cols);
        }
    };
    p.argmin_linear = [ctx](int i, const double* y, double* x) {
        // damped Newton on g(x) = f_i(x) + y^T x
        const Mat& U = ctx->U[i];
        const auto& v = ctx->v[i];
        int d = U.cols, n = U.rows;
        std::fill(x, x + d, 0.0);
        std::vector<double> g(d), step(d), xt(d);
        auto grad_at = [&](const double* xx, double* gg) {
            for (int j = 0; j < d; ++j) gg[j] = kRidge * xx[j] + y[j];
            for (int r = 0; r < n; ++r) {
                double t = -v[r] * kern::dot(U.row(r), xx, d);
                kern::axpy(-v[r] * sigmoid(t) / n, U.row(r), gg, d);
            }
        };
        for (int it = 0; it < 200; ++it) {
            grad_at(x, g.data());
            double gn = std::sqrt(kern::nrm2sq(g.data(), d));
            if (gn <= 1e-12) return;
            Mat H(d, d);
            for (int j = 0; j < d; ++j) H(j, j) = kRidge;
            for (int r = 0; r < n; ++r) {
                double t = -v[r] * kern::dot(U.row(r), x, d);
                double s = sigmoid(t);
                double w = s * (1.0 - s) / n;
                if (w > 0.0)
                    for (int a = 0; a < d; ++a)
                        if (U(r, a) != 0.0) kern::axpy(w * U(r, a), U.row(r), H.row(a), d);
            }
            Cholesky chol(H);
            chol.solve(g.data(), step.data());
            double tstep = 1.0;
            double gn2 = gn * gn;
            for (int ls = 0; ls < 60; ++ls) {
                for (int j = 0; j < d; ++j) xt[j] = x[j] - tstep * step[j];
                grad_at(xt.data(), g.data());
                if (kern::nrm2sq(g.data(), d) <= gn2) break;
                tstep *= 0.5;
            }
            std::copy(xt.begin(), xt.end(), x);
        }
        grad_at(x, g.data());
        if (std::sqrt(kern::nrm2sq(g.data(), d)) > 1e-9)
            throw std::runtime_error("logistic inner solve failed to reach tolerance");
    };
    return p;
}

std::pair<LogRegData, Problem> gen_logreg_synthetic(int m, int n_per_agent, int d,
                                                    double alpha, std::uint64_t seed) {
    LogRegData data;
    CounterRng prng(seed, static_cast<std::uint64_t>(m));
    std::vector<double> planted(d);
    for (int j = 0; j < d; ++j) planted[j] = prng.normal();
    for (int i = 0; i < m; ++i) {
        CounterRng rng(seed, static_cast<std::uint64_t>(i));
        Mat U(n_per_agent, d);
        std::vector<double> v(n_per_agent);
        for (int r = 0; r < n_per_agent; ++r) {
            double* row = U.row(r);
            double nrm;
            do {
                for (int j = 0; j < d; ++j) row[j] = rng.normal();
                nrm = std::sqrt(kern::nrm2sq(row, d));
            } while (nrm < 1e-12);
            kern::scal(1.0 / nrm, row, d);
            double t = kern::dot(row, planted.data(), d);
            double lab = t >= 0.0 ? 1.0 : -1.0;
            if (rng.uniform01() < 0.1) lab = -lab;
            v[r] = lab;
        }
        data.U.push_back(std::move(U));
        data.v.push_back(std::move(v));
    }
    Problem p = problem_from_logreg(data, alpha);
    return {std::move(data), std::move(p)};
}

// ------------------------------------------------------------------ mnist ----

namespace {

std::uint32_t read_be32(std::istream& is) {
    unsigned char b[4];
    if (!is.read(reinterpret_cast<char*>(b), 4)) throw std::runtime_error("idx: truncated file");
    return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
           (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

} // namespace

LogRegData load_mnist_idx(const std::string& images_path, const std::string& labels_path,
                          int target_digit, int m) {
    std::ifstream imgs(images_path, std::ios::binary);
    if (!imgs) throw std::runtime_error("idx: cannot open " + images_path);
    if (read_be32(imgs) != 0x00000803u) throw std::runtime_error("idx: bad image magic");
    std::uint32_t n = read_be32(imgs), rows = read_be32(imgs), cols = read_be32(imgs);

    std::ifstream labs(labels_path, std::ios::binary);
    if (!labs) throw std::runtime_error("idx: cannot open " + labels_path);
    if (read_be32(labs) != 0x00000801u) throw std::runtime_error("idx: bad label magic");
    std::uint32_t nl = read_be32(labs);
    if (nl != n) throw std::runtime_error("idx: image/label count mismatch");

    int d = static_cast<int>(rows * cols);
    std::vector<std::vector<double>> feats;
    std::vector<double> labels;
    std::vector<unsigned char> buf(d);
    for (std::uint32_t s = 0; s < n; ++s) {
        if (!imgs.read(reinterpret_cast<char*>(buf.data()), d))
            throw std::runtime_error("idx: truncated image data");
        std::vector<double> f(d);
        for (int j = 0; j < d; ++j) f[j] = buf[j] / 255.0;
        double nrm = std::sqrt(kern::nrm2sq(f.data(), d));
        if (nrm > 0.0) kern::scal(1.0 / nrm, f.data(), d);
        feats.push_back(std::move(f));
        char lb;
        if (!labs.read(&lb, 1)) throw std::runtime_error("idx: truncated label data");
        labels.push_back(static_cast<unsigned char>(lb) == target_digit ? 1.0 : -1.0);
    }

    int per = static_cast<int>(n) / m;
    if (per < 1) throw std::runtime_error("idx: fewer samples than agents");
    LogRegData data;
    for (int i = 0; i < m; ++i) {
        Mat U(per, d);
        std::vector<double> v(per);
        for (int r = 0; r < per; ++r) {
            std::copy(feats[i * per + r].begin(), feats[i * per + r].end(), U.row(r));
            v[r] = labels[i * per + r];
        }
        data.U.push_back(std::move(U));
        data.v.push_back(std::move(v));
    }
    return data;
}

// -------------------------------------------------------------- quadratic ----

std::pair<QuadData, Problem> gen_quadratic(int m, int d, double kappa, std::uint64_t seed) {
    if (!(kappa >= 1.0)) throw std::invalid_argument("gen_quadratic: kappa must be >= 1");
    if (d < 1 || (d == 1 && kappa > 1.0))
        throw std::invalid_argument("gen_quadratic: spectrum [1,kappa] needs d >= 2");
    QuadData data;
    for (int i = 0; i < m; ++i) {
        CounterRng rng(seed, static_cast<std::uint64_t>(i));
        Mat Q = random_orthogonal(d, rng);
        std::vector<double> lam(d);
        for (int j = 0; j < d; ++j)
            lam[j] = d == 1 ? kappa : 1.0 + (kappa - 1.0) * j / (d - 1);
        Mat H(d, d);
        for (int a = 0; a < d; ++a)
            for (int b = 0; b < d; ++b) {
                double s = 0.0;
                for (int j = 0; j < d; ++j) s += Q(a, j) * lam[j] * Q(b, j);
                H(a, b) = s;
            }
        // exact symmetry in spite of rounding
        for (int a = 0; a < d; ++a)
            for (int b = a + 1; b < d; ++b) {
                double s = 0.5 * (H(a, b) + H(b, a));
                H(a, b) = s;
                H(b, a) = s;
            }
        std::vector<double> b(d);
        for (int j = 0; j < d; ++j) b[j] = rng.normal();
        data.H.push_back(std::move(H));
        data.b.push_back(std::move(b));
    }

    struct Ctx {
        QuadData data;
        std::vector<Cholesky> chol;
    };
    auto ctx = std::make_shared<Ctx>();
    for (const Mat& H : data.H) ctx->chol.emplace_back(H);
    ctx->data = data;

    Problem p;
    p.m = m;
    p.d = d;
    p.alpha = 0.0;
    p.L_i.assign(m, kappa);
    p.mu_i.assign(m, 1.0);
    p.L = kappa;
    p.mu = 1.0;
    p.value = [ctx](int i, const double* x) {
        const Mat& H = ctx->data.H[i];
        std::vector<double> hx(H.rows);
        matvec(H, x, hx.data());
        return 0.5 * kern::dot(x, hx.data(), H.rows) -
               kern::dot(ctx->data.b[i].data(), x, H.rows);
    };
    p.grad = [ctx](int i, const double* x, double* g) {
        const Mat& H = ctx->data.H[i];
        matvec(H, x, g);
        kern::axpy(-1.0, ctx->data.b[i].data(), g, H.rows);
    };
    p.argmin_linear = [ctx](int i, const double* y, double* x) {
        int d = ctx->data.H[i].rows;
        std::vector<double> rhs(d);
        kern::sub(ctx->data.b[i].data(), y, rhs.data(), d);
        ctx->chol[i].solve(rhs.data(), x);
    };
    return {std::move(data), std::move(p)};
}

// -------------------------------------------------------------- reference ----

Constants constants(const Problem& p) {
    Constants c;
    c.L_i = p.L_i;
    c.mu_i = p.mu_i;
    c.L = p.L;
    c.mu = p.mu;
    c.kappa = p.kappa();
    return c;
}

std::vector<double> reference_solution(const Problem& p, double tol, long long max_iter) {
    if (!(tol > 0.0)) throw std::invalid_argument("reference_solution: tol must be > 0");
    int d = p.d;
    double step = 1.0 / p.L;
    std::vector<double> x(d, 0.0), y(d, 0.0), x_prev(d, 0.0), g(d), z(d);
    double t = 1.0;
    double fx = p.composite_value(x.data());

    for (long long it = 0; it < max_iter; ++it) {
        p.mean_grad(y.data(), g.data());
        for (int j = 0; j < d; ++j) z[j] = y[j] - step * g[j];
        prox_l1(z.data(), step * p.alpha, z.data(), d);

        // prox-gradient mapping at y
        double map_sq = 0.0;
        for (int j = 0; j < d; ++j) {
            double mj = (y[j] - z[j]) / step;
            map_sq += mj * mj;
        }
        if (std::sqrt(map_sq) <= tol) return z;

        std::swap(x_prev, x);
        x = z;
        double fz = p.composite_value(x.data());
        if (fz > fx) {  // restart momentum
            t = 1.0;
            y = x;
        } else {
            double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            double coef = (t - 1.0) / t_next;
            for (int j = 0; j < d; ++j) y[j] = x[j] + coef * (x[j] - x_prev[j]);
            t = t_next;
        }
        fx = fz;
    }
    throw std::runtime_error("reference_solution: iteration budget exceeded");
}

// ------------------------------------------------------------------ qnds ----

void save_qnds(const std::string& path, const LinRegData& data) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("qnds: cannot open " + path + " for writing");
    os.write("QNDS", 4);
    auto w32 = [&](std::uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
    std::uint32_t m = static_cast<std::uint32_t>(data.U.size());
    std::uint32_t d = static_cast<std::uint32_t>(data.U[0].cols);
    w32(1);
    w32(m);
    w32(d);
    for (std::uint32_t i = 0; i < m; ++i) w32(static_cast<std::uint32_t>(data.U[i].rows));
    for (std::uint32_t i = 0; i < m; ++i) {
        const Mat& U = data.U[i];
        os.write(reinterpret_cast<const char*>(U.a.data()),
                 static_cast<std::streamsize>(U.a.size() * sizeof(double)));
        os.write(reinterpret_cast<const char*>(data.v[i].data()),
                 static_cast<std::streamsize>(data.v[i].size() * sizeof(double)));
    }
    if (!os) throw std::runtime_error("qnds: write failure");
}

LinRegData load_qnds(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("qnds: cannot open " + path);
    char magic[4];
    if (!is.read(magic, 4) || std::memcmp(magic, "QNDS", 4) != 0)
        throw std::runtime_error("qnds: bad magic");
    auto r32 = [&]() {
        std::uint32_t v;
        if (!is.read(reinterpret_cast<char*>(&v), 4)) throw std::runtime_error("qnds: truncated");
        return v;
    };
    std::uint32_t version = r32();
    if (version != 1) throw std::runtime_error("qnds: unsupported version");
    std::uint32_t m = r32(), d = r32();
    std::vector<std::uint32_t> n(m);
    for (auto& ni : n) ni = r32();
    LinRegData data;
    for (std::uint32_t i = 0; i < m; ++i) {
        Mat U(static_cast<int>(n[i]), static_cast<int>(d));
        if (!is.read(reinterpret_cast<char*>(U.a.data()),
                     static_cast<std::streamsize>(U.a.size() * sizeof(double))))
            throw std::runtime_error("qnds: truncated");
        std::vector<double> v(n[i]);
        if (!is.read(reinterpret_cast<char*>(v.data()),
                     static_cast<std::streamsize>(v.size() * sizeof(double))))
            throw std::runtime_error("qnds: truncated");
        data.U.push_back(std::move(U));
        data.v.push_back(std::move(v));
    }
    return data;
}

} // namespace qn
