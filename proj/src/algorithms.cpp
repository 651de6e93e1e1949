#include "qn/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "qn/kernels.hpp"
#include "qn/linalg.hpp"

namespace qn {
namespace {

constexpr double kEigTol = 1e-9;
constexpr std::uint64_t kNextMeasureSeed = 0x4e455854ull;
constexpr int kNextMeasurePairs = 2000;
constexpr double kNextMeasureMargin = 0.05;

void require_smooth(const Problem& p, const char* name) {
    if (p.alpha != 0.0)
        throw std::invalid_argument(std::string(name) +
                                    ": no proximal step, needs alpha == 0");
}

void check_gamma(double g, const char* name) {
    if (!(g > 0.0) || !std::isfinite(g))
        throw std::invalid_argument(std::string(name) + ": gamma must be positive");
}

struct Spectrum {
    std::shared_ptr<Mat> Q;   // eigenvector columns, paired with rho
    std::vector<double> rho;  // descending
    double rho2 = 0.0;        // 0 when m == 1
    double rho_min = 0.0;
};

Spectrum mixing_spectrum(const GossipMatrix& g, const char* name, bool need_positive) {
    const Mat& W = g.W;
    if (W.rows < 1 || W.rows != W.cols)
        throw std::invalid_argument(std::string(name) + ": mixing matrix must be square");
    if (!is_symmetric(W, 1e-9))
        throw std::invalid_argument(std::string(name) + ": mixing matrix must be symmetric");
    for (int i = 0; i < W.rows; ++i) {
        double s = 0.0;
        for (int j = 0; j < W.cols; ++j) s += W(i, j);
        if (std::abs(s - 1.0) > 1e-8)
            throw std::invalid_argument(std::string(name) + ": mixing rows must sum to 1");
    }
    EigResult e = sym_eig(W, true);
    Spectrum sp;
    sp.Q = std::make_shared<Mat>(std::move(e.vectors));
    sp.rho = std::move(e.values);
    if (sp.rho.front() > 1.0 + 1e-8 || sp.rho.back() < -1.0 - 1e-8)
        throw std::invalid_argument(std::string(name) +
                                    ": mixing eigenvalues must lie in [-1, 1]");
    sp.rho_min = sp.rho.back();
    sp.rho2 = W.rows >= 2 ? std::min(sp.rho[1], 1.0) : 0.0;
    if (need_positive && !(sp.rho_min > kEigTol))
        throw std::invalid_argument(
            std::string(name) + ": mixing spectrum must be positive; apply a spectrum shift");
    return sp;
}

// out = sum_j W(i,j) c_j over agent-major blocks of size d
void mix_row(const Mat& W, int i, const double* c, double* out, int d) {
    std::fill(out, out + d, 0.0);
    for (int j = 0; j < W.rows; ++j) {
        const double wij = W(i, j);
        if (wij != 0.0) kern::axpy(wij, c + static_cast<std::size_t>(j) * d, out, d);
    }
}

void fill_gaussian(CounterRng& rng, double* p, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) p[i] = rng.normal();
}

// writes ((I - W) u)_i for a fresh gaussian u into block `off` of each
// stride-`dz` agent state
void draw_span_i_minus_w(const Mat& W, CounterRng& rng, double* z, int d, int dz, int off) {
    const int m = W.rows;
    std::vector<double> u(static_cast<std::size_t>(m) * d);
    fill_gaussian(rng, u.data(), u.size());
    for (int i = 0; i < m; ++i) {
        double* dst = z + static_cast<std::size_t>(i) * dz + off;
        std::copy(u.begin() + static_cast<std::size_t>(i) * d,
                  u.begin() + static_cast<std::size_t>(i) * d + d, dst);
        for (int j = 0; j < m; ++j) {
            const double wij = W(i, j);
            if (wij != 0.0) kern::axpy(-wij, u.data() + static_cast<std::size_t>(j) * d, dst, d);
        }
    }
}

// sqrt of sum_e sum_r ( w1[e] <q_e, first_r>^2 + w2[e] <q_e, second_r>^2 );
// states are agent-major with one or two d-blocks per agent
std::function<double(const double*)> spectral_norm(std::shared_ptr<Mat> Q,
                                                   std::vector<double> w1,
                                                   std::vector<double> w2, int d) {
    return [Q, w1 = std::move(w1), w2 = std::move(w2), d](const double* v) {
        const int m = Q->rows;
        const bool two = !w2.empty();
        const int dz = two ? 2 * d : d;
        double total = 0.0;
        for (int e = 0; e < m; ++e) {
            const double a1 = w1[e];
            const double a2 = two ? w2[e] : 0.0;
            if (a1 == 0.0 && a2 == 0.0) continue;
            for (int r = 0; r < d; ++r) {
                double c1 = 0.0, c2 = 0.0;
                for (int i = 0; i < m; ++i) {
                    const double q = (*Q)(i, e);
                    c1 += q * v[static_cast<std::size_t>(i) * dz + r];
                    if (two) c2 += q * v[static_cast<std::size_t>(i) * dz + d + r];
                }
                total += a1 * c1 * c1 + a2 * c2 * c2;
            }
        }
        return std::sqrt(total);
    };
}

struct MixCtx {
    Problem p;
    Mat W;
    double gamma = 0.0;
    double c = 0.0;    // nids only
    double thr = 0.0;  // prox threshold gamma*alpha
    int m = 0;
    int d = 0;
};
using MixPtr = std::shared_ptr<const MixCtx>;

MixPtr make_ctx(const Problem& p, Mat W, double gamma, double c = 0.0) {
    return std::make_shared<const MixCtx>(
        MixCtx{p, std::move(W), gamma, c, gamma * p.alpha, p.m, p.d});
}

// 2-block pair update shared by prox-extra / prox-nids (c_hi = final round):
// y' = y + ((I - W) c_hi)_i, w' = c_hi_i
void pair_update(const MixCtx& ctx, int i, const double* z_i, const double* c_hi,
                 double* z_out) {
    const int d = ctx.d;
    std::vector<double> mixed(d);
    mix_row(ctx.W, i, c_hi, mixed.data(), d);
    const double* own = c_hi + static_cast<std::size_t>(i) * d;
    for (int r = 0; r < d; ++r) z_out[r] = z_i[r] + own[r] - mixed[r];
    std::copy(own, own + d, z_out + d);
}

void eval_comm_all(const AlgorithmSpec& spec, int s, const double* z, const double* c_prev,
                   double* out) {
    for (int i = 0; i < spec.m; ++i)
        spec.comm(s, i, z + static_cast<std::size_t>(i) * spec.dim_z, c_prev,
                  out + static_cast<std::size_t>(i) * spec.dim_c);
}

void eval_update_all(const AlgorithmSpec& spec, const double* z,
                     const std::vector<const double*>& rounds, double* out) {
    for (int i = 0; i < spec.m; ++i)
        spec.update(i, z + static_cast<std::size_t>(i) * spec.dim_z, rounds,
                    out + static_cast<std::size_t>(i) * spec.dim_z);
}

AlgorithmSpec make_next_spec(const Problem& p, const GossipMatrix& W, double gamma);

} // namespace

const char* algo_name(AlgoKind kind) {
    switch (kind) {
    case AlgoKind::GdStar: return "gd-star";
    case AlgoKind::ProxExtra: return "prox-extra";
    case AlgoKind::ProxNids: return "prox-nids";
    case AlgoKind::Nids: return "nids";
    case AlgoKind::ProxNext: return "prox-next";
    case AlgoKind::ProxDiging: return "prox-diging";
    case AlgoKind::Next: return "next";
    case AlgoKind::PrimalDual: return "primal-dual";
    }
    throw std::logic_error("bad AlgoKind");
}

AlgoKind algo_from_name(const std::string& name) {
    static const AlgoKind all[] = {
        AlgoKind::GdStar,   AlgoKind::ProxExtra,  AlgoKind::ProxNids, AlgoKind::Nids,
        AlgoKind::ProxNext, AlgoKind::ProxDiging, AlgoKind::Next,     AlgoKind::PrimalDual,
    };
    for (AlgoKind k : all)
        if (name == algo_name(k)) return k;
    throw std::invalid_argument("unknown algorithm: " + name);
}

bool algo_requires_smooth(AlgoKind kind) {
    return kind == AlgoKind::GdStar || kind == AlgoKind::Nids || kind == AlgoKind::Next ||
           kind == AlgoKind::PrimalDual;
}

BuiltAlgorithm build_gd_star(const Problem& p, std::optional<double> gamma) {
    require_smooth(p, "gd-star");
    const double g = gamma ? *gamma : 2.0 / (p.mu + p.L);
    check_gamma(g, "gd-star");
    MixPtr ctx = make_ctx(p, Mat{}, g);
    const int d = p.d;

    BuiltAlgorithm b;
    b.kind = AlgoKind::GdStar;
    b.plan = {g, 0.0, 0.0, gamma ? "user" : "closed-form"};
    AlgorithmSpec& s = b.spec;
    s.name = "gd-star";
    s.m = p.m;
    s.R = 1;
    s.dim_z = d;
    s.dim_c = d;
    s.dim_x = d;
    s.comm = [ctx](int, int i, const double* z_i, const double*, double* out) {
        ctx->p.grad(i, z_i, out);
    };
    // every agent averages the same decoded gradients, so replicas stay
    // bitwise identical
    s.update = [ctx, d](int, const double* z_i, const std::vector<const double*>& c,
                        double* z_out) {
        std::copy(z_i, z_i + d, z_out);
        for (int j = 0; j < ctx->m; ++j)
            kern::axpy(-ctx->gamma / ctx->m, c[0] + static_cast<std::size_t>(j) * d, z_out, d);
    };
    s.primal = [d](int, const double* z_i, double* x) { std::copy(z_i, z_i + d, x); };
    s.lip = {g, 0.0, p.L};
    const double lam = std::max(std::abs(1.0 - g * p.mu), std::abs(1.0 - g * p.L));
    if (lam < 1.0) s.rate_lambda = lam;
    s.sample_feasible = [ctx, d](CounterRng& rng, double* z) {
        std::vector<double> x(d);
        fill_gaussian(rng, x.data(), x.size());
        for (int i = 0; i < ctx->m; ++i)
            std::copy(x.begin(), x.end(), z + static_cast<std::size_t>(i) * d);
    };
    s.feasible_desc = "replicated consensus state";
    return b;
}

BuiltAlgorithm build_prox_extra(const Problem& p, const GossipMatrix& W,
                                std::optional<double> gamma) {
    if (W.W.rows != p.m) throw std::invalid_argument("prox-extra: mixing matrix size != m");
    Spectrum sp = mixing_spectrum(W, "prox-extra", true);
    const double rho_m = sp.rho_min;
    const double g = gamma ? *gamma : 2.0 * rho_m / (p.L + p.mu * rho_m);
    check_gamma(g, "prox-extra");
    MixPtr ctx = make_ctx(p, W.W, g);
    const int d = p.d;

    BuiltAlgorithm b;
    b.kind = AlgoKind::ProxExtra;
    b.plan = {g, W.nu, 0.0, gamma ? "user" : "closed-form"};
    AlgorithmSpec& s = b.spec;
    s.name = "prox-extra";
    s.m = p.m;
    s.R = 2;
    s.dim_z = 2 * d;
    s.dim_c = d;
    s.dim_x = d;
    s.comm = [ctx, d](int sr, int i, const double* z_i, const double* c_prev, double* out) {
        if (sr == 1) {
            prox_l1(z_i + d, ctx->thr, out, d);
        } else {
            mix_row(ctx->W, i, c_prev, out, d);
            std::vector<double> grad(d);
            ctx->p.grad(i, c_prev + static_cast<std::size_t>(i) * d, grad.data());
            kern::axpy(-ctx->gamma, grad.data(), out, d);
            kern::axpy(-1.0, z_i, out, d);
        }
    };
    s.update = [ctx](int i, const double* z_i, const std::vector<const double*>& c,
                     double* z_out) { pair_update(*ctx, i, z_i, c[1], z_out); };
    s.primal = [ctx, d](int, const double* z_i, double* x) { prox_l1(z_i + d, ctx->thr, x, d); };
    s.lip = {std::sqrt(3.0), 1.0 + g * p.L, 1.0};
    if (!gamma) {
        const double kap = p.kappa();
        const double lam = std::max((kap - rho_m) / (kap + rho_m) / std::sqrt(rho_m),
                                    std::sqrt(sp.rho2));
        if (lam < 1.0) s.rate_lambda = lam;
    }
    std::vector<double> wy(p.m), ww(p.m);
    for (int e = 0; e < p.m; ++e) {
        const double gap = 1.0 - sp.rho[e];
        wy[e] = gap < kEigTol ? 0.0 : 1.0 / gap;  // y^T (I-W)^+ y
        ww[e] = 1.0 / sp.rho[e];                  // w^T W^{-1} w
    }
    s.norm = spectral_norm(sp.Q, std::move(wy), std::move(ww), d);
    s.sample_feasible = [ctx, d](CounterRng& rng, double* z) {
        draw_span_i_minus_w(ctx->W, rng, z, d, 2 * d, 0);
        for (int i = 0; i < ctx->m; ++i)
            fill_gaussian(rng, z + static_cast<std::size_t>(i) * 2 * d + d, d);
    };
    s.feasible_desc = "y in span(I - W), w free";
    return b;
}

BuiltAlgorithm build_prox_nids(const Problem& p, const GossipMatrix& W,
                               std::optional<double> gamma) {
    if (W.W.rows != p.m) throw std::invalid_argument("prox-nids: mixing matrix size != m");
    Spectrum sp = mixing_spectrum(W, "prox-nids", true);
    const double g = gamma ? *gamma : 2.0 / (p.mu + p.L);
    check_gamma(g, "prox-nids");
    MixPtr ctx = make_ctx(p, W.W, g);
    const int d = p.d;

    BuiltAlgorithm b;
    b.kind = AlgoKind::ProxNids;
    b.plan = {g, W.nu, 0.0, gamma ? "user" : "closed-form"};
    AlgorithmSpec& s = b.spec;
    s.name = "prox-nids";
    s.m = p.m;
    s.R = 2;
    s.dim_z = 2 * d;
    s.dim_c = d;
    s.dim_x = d;
    s.comm = [ctx, d](int sr, int i, const double* z_i, const double* c_prev, double* out) {
        if (sr == 1) {
            std::vector<double> t(d), grad(d);
            prox_l1(z_i + d, ctx->thr, t.data(), d);
            ctx->p.grad(i, t.data(), grad.data());
            for (int r = 0; r < d; ++r) out[r] = t[r] - ctx->gamma * grad[r];
        } else {
            mix_row(ctx->W, i, c_prev, out, d);
            kern::axpy(-1.0, z_i, out, d);
        }
    };
    s.update = [ctx](int i, const double* z_i, const std::vector<const double*>& c,
                     double* z_out) { pair_update(*ctx, i, z_i, c[1], z_out); };
    s.primal = [ctx, d](int, const double* z_i, double* x) { prox_l1(z_i + d, ctx->thr, x, d); };
    s.lip = {1.0 / sp.rho_min, 1.0, 1.0 + g * p.L};
    if (!gamma) {
        const double kap = p.kappa();
        const double lam = std::max((kap - 1.0) / (kap + 1.0), std::sqrt(sp.rho2));
        if (lam < 1.0) s.rate_lambda = lam;
    }
    std::vector<double> wy(p.m), ww(p.m);
    for (int e = 0; e < p.m; ++e) {
        const double rho = sp.rho[e];
        const double gap = 1.0 - rho;
        wy[e] = gap < kEigTol ? 0.0 : 1.0 / (rho * rho * gap);  // y^T W^{-1}(I-W)^+ W^{-1} y
        ww[e] = 1.0 / rho;
    }
    s.norm = spectral_norm(sp.Q, std::move(wy), std::move(ww), d);
    s.sample_feasible = [ctx, d](CounterRng& rng, double* z) {
        draw_span_i_minus_w(ctx->W, rng, z, d, 2 * d, 0);
        for (int i = 0; i < ctx->m; ++i)
            fill_gaussian(rng, z + static_cast<std::size_t>(i) * 2 * d + d, d);
    };
    s.feasible_desc = "y in span(I - W), w free";
    return b;
}

BuiltAlgorithm build_nids(const Problem& p, const GossipMatrix& W_tilde,
                          std::optional<double> gamma, std::optional<double> c) {
    require_smooth(p, "nids");
    if (W_tilde.W.rows != p.m) throw std::invalid_argument("nids: mixing matrix size != m");
    Spectrum sp = mixing_spectrum(W_tilde, "nids", false);
    const double g = gamma ? *gamma : 1.0 / p.L;
    check_gamma(g, "nids");
    const double cc = c ? *c : 1.0 / (2.0 * g);
    if (!(cc > 0.0) || !std::isfinite(cc))
        throw std::invalid_argument("nids: c must be positive");
    if (g * cc * (1.0 - sp.rho_min) > 1.0 + 1e-12)
        throw std::invalid_argument("nids: need c*gamma*(I - W) below the identity");
    MixPtr ctx = make_ctx(p, W_tilde.W, g, cc);
    const int d = p.d;

    BuiltAlgorithm b;
    b.kind = AlgoKind::Nids;
    b.plan = {g, W_tilde.nu, cc, gamma ? "user" : "closed-form"};
    AlgorithmSpec& s = b.spec;
    s.name = "nids";
    s.m = p.m;
    s.R = 1;
    s.dim_z = 2 * d;  // [x; gamma*y]
    s.dim_c = d;
    s.dim_x = d;
    s.comm = [ctx, d](int, int i, const double* z_i, const double*, double* out) {
        std::vector<double> grad(d);
        ctx->p.grad(i, z_i, grad.data());
        for (int r = 0; r < d; ++r) out[r] = z_i[r] - ctx->gamma * grad[r] - z_i[d + r];
    };
    // the x block restarts from the agent's own exact signal; only the
    // disagreement term passes through the decoder
    s.update = [ctx, d](int i, const double* z_i, const std::vector<const double*>& c_r,
                        double* z_out) {
        std::vector<double> mixed(d), grad(d);
        mix_row(ctx->W, i, c_r[0], mixed.data(), d);
        ctx->p.grad(i, z_i, grad.data());
        const double gc = ctx->gamma * ctx->c;
        const double* own = c_r[0] + static_cast<std::size_t>(i) * d;
        for (int r = 0; r < d; ++r) {
            const double u = gc * (own[r] - mixed[r]);
            z_out[r] = z_i[r] - ctx->gamma * grad[r] - z_i[d + r] - u;
            z_out[d + r] = z_i[d + r] + u;
        }
    };
    s.primal = [d](int, const double* z_i, double* x) { std::copy(z_i, z_i + d, x); };
    s.lip = {std::sqrt(2.0), 1.0, std::sqrt(2.0) + g * p.L};
    if (!gamma && !c) {
        const double lam = std::max(std::sqrt(1.0 - p.mu / p.L),
                                    std::sqrt((1.0 + sp.rho2) / 2.0));
        if (lam < 1.0) s.rate_lambda = lam;
    }
    std::vector<double> wx(p.m, 1.0), wy(p.m);
    for (int e = 0; e < p.m; ++e) {
        const double gap = 1.0 - sp.rho[e];
        wy[e] = gap < kEigTol ? 0.0 : 1.0 / (g * cc * gap);  // (1/(gc)) y^T (I-W)^+ y
    }
    s.norm = spectral_norm(sp.Q, std::move(wx), std::move(wy), d);
    s.sample_feasible = [ctx, d](CounterRng& rng, double* z) {
        for (int i = 0; i < ctx->m; ++i)
            fill_gaussian(rng, z + static_cast<std::size_t>(i) * 2 * d, d);
        draw_span_i_minus_w(ctx->W, rng, z, d, 2 * d, d);
    };
    s.feasible_desc = "x free, gamma*y in span(I - W)";
    return b;
}

BuiltAlgorithm build_prox_next(const Problem& p, const GossipMatrix& W,
                               std::optional<double> gamma) {
    if (W.W.rows != p.m) throw std::invalid_argument("prox-next: mixing matrix size != m");
    Spectrum sp = mixing_spectrum(W, "prox-next", true);
    const double g = gamma ? *gamma : 2.0 / (p.mu + p.L);
    check_gamma(g, "prox-next");
    MixPtr ctx = make_ctx(p, W.W, g);
    const int d = p.d;

    BuiltAlgorithm b;
    b.kind = AlgoKind::ProxNext;
    b.plan = {g, W.nu, 0.0, gamma ? "user" : "closed-form"};
    AlgorithmSpec& s = b.spec;
    s.name = "prox-next";
    s.m = p.m;
    s.R = 4;
    s.dim_z = 2 * d;
    s.dim_c = d;
    s.dim_x = d;
    s.comm = [ctx, d](int sr, int i, const double* z_i, const double* c_prev, double* out) {
        switch (sr) {
        case 1: {
            std::vector<double> t(d), grad(d);
            prox_l1(z_i + d, ctx->thr, t.data(), d);
            ctx->p.grad(i, t.data(), grad.data());
            for (int r = 0; r < d; ++r) out[r] = t[r] - ctx->gamma * grad[r];
            break;
        }
        case 2:
            mix_row(ctx->W, i, c_prev, out, d);
            break;
        case 3:
            mix_row(ctx->W, i, c_prev, out, d);
            kern::axpy(-1.0, z_i, out, d);
            break;
        default: {  // own minus mixed: ((I - W) c_prev)_i
            std::vector<double> mixed(d);
            mix_row(ctx->W, i, c_prev, mixed.data(), d);
            const double* own = c_prev + static_cast<std::size_t>(i) * d;
            for (int r = 0; r < d; ++r) out[r] = own[r] - mixed[r];
        }
        }
    };
    s.update = [ctx, d](int i, const double* z_i, const std::vector<const double*>& c,
                        double* z_out) {
        std::vector<double> mixed(d);
        mix_row(ctx->W, i, c[3], mixed.data(), d);
        const double* own4 = c[3] + static_cast<std::size_t>(i) * d;
        for (int r = 0; r < d; ++r) z_out[r] = z_i[r] + own4[r] - mixed[r];
        const double* own3 = c[2] + static_cast<std::size_t>(i) * d;
        std::copy(own3, own3 + d, z_out + d);
    };
    s.primal = [ctx, d](int, const double* z_i, double* x) { prox_l1(z_i + d, ctx->thr, x, d); };
    s.lip = {1.0 / (sp.rho_min * sp.rho_min), 1.0, 1.0 + g * p.L};
    if (!gamma) {
        const double kap = p.kappa();
        const double gap2 = 1.0 - sp.rho2;
        const double lam = std::max((kap - 1.0) / (kap + 1.0), std::sqrt(1.0 - gap2 * gap2));
        if (lam < 1.0) s.rate_lambda = lam;
    }
    std::vector<double> wy(p.m), ww(p.m);
    for (int e = 0; e < p.m; ++e) {
        const double rho = sp.rho[e];
        const double gap = 1.0 - rho;
        const double r2 = rho * rho;
        wy[e] = gap < kEigTol ? 0.0 : 1.0 / (r2 * r2 * gap * gap);
        ww[e] = (2.0 - rho) / (r2 * rho);  // W^{-2}(I - (I-W)^2)W^{-1} per direction
    }
    s.norm = spectral_norm(sp.Q, std::move(wy), std::move(ww), d);
    s.sample_feasible = [ctx, d](CounterRng& rng, double* z) {
        draw_span_i_minus_w(ctx->W, rng, z, d, 2 * d, 0);
        for (int i = 0; i < ctx->m; ++i)
            fill_gaussian(rng, z + static_cast<std::size_t>(i) * 2 * d + d, d);
    };
    s.feasible_desc = "y in span(I - W), w free";
    return b;
}

BuiltAlgorithm build_prox_diging(const Problem& p, const GossipMatrix& W,
                                 std::optional<double> gamma) {
    if (W.W.rows != p.m) throw std::invalid_argument("prox-diging: mixing matrix size != m");
    Spectrum sp = mixing_spectrum(W, "prox-diging", true);
    const double rho_m = sp.rho_min;
    const double g = gamma ? *gamma : 2.0 * rho_m * rho_m / (p.L + p.mu * rho_m * rho_m);
    check_gamma(g, "prox-diging");
    MixPtr ctx = make_ctx(p, W.W, g);
    const int d = p.d;

    BuiltAlgorithm b;
    b.kind = AlgoKind::ProxDiging;
    b.plan = {g, W.nu, 0.0, gamma ? "user" : "closed-form"};
    AlgorithmSpec& s = b.spec;
    s.name = "prox-diging";
    s.m = p.m;
    s.R = 4;
    s.dim_z = 2 * d;
    s.dim_c = d;
    s.dim_x = d;
    s.comm = [ctx, d](int sr, int i, const double* z_i, const double* c_prev, double* out) {
        switch (sr) {
        case 1:
            prox_l1(z_i + d, ctx->thr, out, d);
            break;
        case 2:
            mix_row(ctx->W, i, c_prev, out, d);
            break;
        case 3: {
            mix_row(ctx->W, i, c_prev, out, d);
            std::vector<double> t(d), grad(d);
            prox_l1(z_i + d, ctx->thr, t.data(), d);
            ctx->p.grad(i, t.data(), grad.data());
            kern::axpy(-ctx->gamma, grad.data(), out, d);
            kern::axpy(-1.0, z_i, out, d);
            break;
        }
        default: {
            std::vector<double> mixed(d);
            mix_row(ctx->W, i, c_prev, mixed.data(), d);
            const double* own = c_prev + static_cast<std::size_t>(i) * d;
            for (int r = 0; r < d; ++r) out[r] = own[r] - mixed[r];
        }
        }
    };
    s.update = [ctx, d](int i, const double* z_i, const std::vector<const double*>& c,
                        double* z_out) {
        std::vector<double> mixed(d);
        mix_row(ctx->W, i, c[3], mixed.data(), d);
        const double* own4 = c[3] + static_cast<std::size_t>(i) * d;
        for (int r = 0; r < d; ++r) z_out[r] = z_i[r] + own4[r] - mixed[r];
        const double* own3 = c[2] + static_cast<std::size_t>(i) * d;
        std::copy(own3, own3 + d, z_out + d);
    };
    s.primal = [ctx, d](int, const double* z_i, double* x) { prox_l1(z_i + d, ctx->thr, x, d); };
    s.lip = {1.0 / std::sqrt(rho_m), 1.0, std::sqrt(1.0 + g * p.L * g * p.L)};
    if (!gamma) {
        const double kap = p.kappa();
        const double r2 = rho_m * rho_m;
        const double gap2 = 1.0 - sp.rho2;
        const double lam =
            std::max((kap - r2) / (kap + r2) / std::sqrt(rho_m * (2.0 - rho_m)),
                     std::sqrt(1.0 - gap2 * gap2));
        if (lam < 1.0) s.rate_lambda = lam;
    }
    const double a = 1.0 / (2.0 * rho_m - rho_m * rho_m);
    std::vector<double> wy(p.m), ww(p.m);
    for (int e = 0; e < p.m; ++e) {
        const double rho = sp.rho[e];
        const double gap = 1.0 - rho;
        wy[e] = gap < kEigTol ? 0.0 : a / (gap * gap);  // ((I-W)^2)^+ scaled
        ww[e] = a * rho * (2.0 - rho);                  // I - (I-W)^2 scaled
    }
    s.norm = spectral_norm(sp.Q, std::move(wy), std::move(ww), d);
    s.sample_feasible = [ctx, d](CounterRng& rng, double* z) {
        draw_span_i_minus_w(ctx->W, rng, z, d, 2 * d, 0);
        for (int i = 0; i < ctx->m; ++i)
            fill_gaussian(rng, z + static_cast<std::size_t>(i) * 2 * d + d, d);
    };
    s.feasible_desc = "y in span(I - W), w free";
    return b;
}

namespace {

AlgorithmSpec make_next_spec(const Problem& p, const GossipMatrix& W, double gamma) {
    MixPtr ctx = make_ctx(p, W.W, gamma);
    const int d = p.d;
    AlgorithmSpec s;
    s.name = "next";
    s.m = p.m;
    s.R = 2;
    s.dim_z = 2 * d;  // [x; y]
    s.dim_c = d;
    s.dim_x = d;
    s.comm = [ctx, d](int sr, int i, const double* z_i, const double* c_prev, double* out) {
        if (sr == 1) {
            for (int r = 0; r < d; ++r) out[r] = z_i[r] - ctx->gamma * z_i[d + r];
        } else {
            std::vector<double> mixed(d), g1(d), g2(d);
            mix_row(ctx->W, i, c_prev, mixed.data(), d);
            ctx->p.grad(i, mixed.data(), g1.data());
            ctx->p.grad(i, z_i, g2.data());
            for (int r = 0; r < d; ++r) out[r] = z_i[d + r] + g1[r] - g2[r];
        }
    };
    s.update = [ctx, d](int i, const double* z_i, const std::vector<const double*>& c,
                        double* z_out) {
        (void)z_i;
        mix_row(ctx->W, i, c[0], z_out, d);
        mix_row(ctx->W, i, c[1], z_out + d, d);
    };
    // gradient tracking starts from y_i = grad f_i(x^0)
    s.init = [ctx, d](int i, double* z_i) {
        std::fill(z_i, z_i + d, 0.0);
        ctx->p.grad(i, z_i, z_i + d);
    };
    s.primal = [d](int, const double* z_i, double* x) { std::copy(z_i, z_i + d, x); };
    return s;
}

} // namespace

BuiltAlgorithm build_next(const Problem& p, const GossipMatrix& W, double gamma) {
    require_smooth(p, "next");
    if (W.W.rows != p.m) throw std::invalid_argument("next: mixing matrix size != m");
    mixing_spectrum(W, "next", false);
    check_gamma(gamma, "next");
    BuiltAlgorithm b;
    b.kind = AlgoKind::Next;
    b.plan = {gamma, W.nu, 0.0, "user"};
    b.spec = make_next_spec(p, W, gamma);
    b.spec.lip =
        measure_lipschitz(b.spec, kNextMeasurePairs, kNextMeasureMargin, kNextMeasureSeed);
    b.lipschitz_measured = true;
    return b;
}

BuiltAlgorithm build_primal_dual(const Problem& p, const Topology& topo,
                                 std::optional<double> gamma) {
    require_smooth(p, "primal-dual");
    if (topo.m != p.m) throw std::invalid_argument("primal-dual: topology size != m");
    if (!p.argmin_linear)
        throw std::invalid_argument("primal-dual: problem lacks a linear-perturbed argmin");
    Mat Lap = laplacian(topo);
    EigResult e = sym_eig(Lap, true);
    const double rho1 = e.values.front();
    const double rho_m1 = p.m >= 2 ? e.values[p.m - 2] : 0.0;
    if (p.m >= 2 && rho_m1 <= 1e-9)
        throw std::invalid_argument("primal-dual: topology must be connected");
    double g;
    if (gamma)
        g = *gamma;
    else if (p.m == 1)
        g = 1.0;
    else
        g = 2.0 * p.L * p.mu / (p.mu * rho_m1 + p.L * rho1);
    check_gamma(g, "primal-dual");

    struct PdCtx {
        Problem p;
        Mat Lap;
        double gamma;
    };
    auto ctx = std::make_shared<const PdCtx>(PdCtx{p, Lap, g});
    const int d = p.d;

    BuiltAlgorithm b;
    b.kind = AlgoKind::PrimalDual;
    b.plan = {g, 0.0, 0.0, gamma ? "user" : "closed-form"};
    AlgorithmSpec& s = b.spec;
    s.name = "primal-dual";
    s.m = p.m;
    s.R = 1;
    s.dim_z = d;  // dual variable y
    s.dim_c = d;
    s.dim_x = d;
    s.comm = [ctx](int, int i, const double* z_i, const double*, double* out) {
        ctx->p.argmin_linear(i, z_i, out);
    };
    s.update = [ctx, d](int i, const double* z_i, const std::vector<const double*>& c,
                        double* z_out) {
        std::copy(z_i, z_i + d, z_out);
        for (int j = 0; j < ctx->Lap.rows; ++j) {
            const double lij = ctx->Lap(i, j);
            if (lij != 0.0)
                kern::axpy(ctx->gamma * lij, c[0] + static_cast<std::size_t>(j) * d, z_out, d);
        }
    };
    s.primal = [ctx](int i, const double* z_i, double* x) { ctx->p.argmin_linear(i, z_i, x); };
    s.lip = {g * rho1, 0.0, 1.0 / p.mu};
    if (p.m == 1) {
        s.rate_lambda = 0.0;
    } else if (!gamma) {
        const double chi = rho1 / rho_m1;
        const double lam = (chi - 1.0 / p.kappa()) / (chi + 1.0 / p.kappa());
        if (lam >= 0.0 && lam < 1.0) s.rate_lambda = lam;
    }
    if (p.m >= 2) {
        auto Q = std::make_shared<Mat>(std::move(e.vectors));
        std::vector<double> wl(p.m);
        for (int i = 0; i < p.m; ++i)
            wl[i] = e.values[i] > 1e-9 * std::max(rho1, 1.0) ? rho1 / e.values[i] : 0.0;
        s.norm = spectral_norm(Q, std::move(wl), {}, d);
    }
    s.sample_feasible = [ctx, d](CounterRng& rng, double* z) {
        const int m = ctx->Lap.rows;
        std::vector<double> u(static_cast<std::size_t>(m) * d);
        fill_gaussian(rng, u.data(), u.size());
        for (int i = 0; i < m; ++i) {
            double* dst = z + static_cast<std::size_t>(i) * d;
            std::fill(dst, dst + d, 0.0);
            for (int j = 0; j < m; ++j) {
                const double lij = ctx->Lap(i, j);
                if (lij != 0.0) kern::axpy(lij, u.data() + static_cast<std::size_t>(j) * d, dst, d);
            }
        }
    };
    s.feasible_desc = "y in the Laplacian row space";
    return b;
}

double default_shift(AlgoKind kind, double kappa) {
    switch (kind) {
    case AlgoKind::ProxExtra: return kappa / (kappa + 1.0);
    case AlgoKind::ProxDiging: return std::sqrt(kappa / (kappa + 1.0));
    case AlgoKind::ProxNids:
    case AlgoKind::ProxNext: return 0.001;
    default: return 0.0;
    }
}

BuiltAlgorithm build_algorithm(AlgoKind kind, const Problem& p, const GossipMatrix& base,
                               const Topology& topo, std::optional<double> gamma,
                               std::optional<double> nu) {
    if (kind == AlgoKind::GdStar) return build_gd_star(p, gamma);
    if (kind == AlgoKind::PrimalDual) return build_primal_dual(p, topo, gamma);
    const double shift = nu ? *nu : default_shift(kind, p.kappa());
    GossipMatrix W = shift > 0.0 ? shift_spectrum(base, shift) : base;
    switch (kind) {
    case AlgoKind::ProxExtra: return build_prox_extra(p, W, gamma);
    case AlgoKind::ProxNids: return build_prox_nids(p, W, gamma);
    case AlgoKind::Nids: return build_nids(p, W, gamma, {});
    case AlgoKind::ProxNext: return build_prox_next(p, W, gamma);
    case AlgoKind::ProxDiging: return build_prox_diging(p, W, gamma);
    case AlgoKind::Next: {
        if (gamma) return build_next(p, W, *gamma);
        BuiltAlgorithm b = build_next(p, W, next_gamma_search(p, W));
        b.plan.source = "searched";
        return b;
    }
    default: break;
    }
    throw std::logic_error("bad AlgoKind");
}

double closed_form_rate(AlgoKind kind, double kappa, double rho2, double rho1_L, double rho_m1_L) {
    if (!(kappa >= 1.0)) throw std::invalid_argument("closed_form_rate: kappa must be >= 1");
    if (kind != AlgoKind::GdStar && kind != AlgoKind::PrimalDual &&
        !(rho2 >= 0.0 && rho2 <= 1.0))
        throw std::invalid_argument("closed_form_rate: rho2 must lie in [0, 1]");
    switch (kind) {
    case AlgoKind::GdStar: return (kappa - 1.0) / (kappa + 1.0);
    case AlgoKind::ProxExtra: return std::max(kappa / (kappa + 1.0), std::sqrt(rho2));
    case AlgoKind::ProxNids:
        return std::max((kappa - 1.0) / (kappa + 1.0), std::sqrt(rho2));
    case AlgoKind::Nids:
        return std::max(std::sqrt(1.0 - 1.0 / kappa), std::sqrt(rho2));
    case AlgoKind::ProxNext:
    case AlgoKind::Next:
        return std::max((kappa - 1.0) / (kappa + 1.0),
                        std::sqrt(1.0 - (1.0 - rho2) * (1.0 - rho2)));
    case AlgoKind::ProxDiging:
        return std::max(kappa / (kappa + 1.0),
                        std::sqrt(1.0 - (1.0 - rho2) * (1.0 - rho2)));
    case AlgoKind::PrimalDual: {
        if (!(rho_m1_L > 0.0) || !(rho1_L >= rho_m1_L))
            throw std::invalid_argument("closed_form_rate: need rho1_L >= rho_m1_L > 0");
        const double chi = rho1_L / rho_m1_L;
        return (chi - 1.0 / kappa) / (chi + 1.0 / kappa);
    }
    }
    throw std::logic_error("bad AlgoKind");
}

double next_gamma_search(const Problem& p, const GossipMatrix& W) {
    require_smooth(p, "next");
    Spectrum sp = mixing_spectrum(W, "next", false);
    const double base = (1.0 - sp.rho2) / p.L;
    if (!(base > 0.0)) throw std::runtime_error("next: mixing matrix leaves no spectral gap");
    const double grid[] = {1.0, 0.5, 0.25, 0.1, 0.05};
    std::vector<double> X(static_cast<std::size_t>(p.m) * p.d), xbar(p.d);
    auto mean_value = [&](const AlgorithmSpec& spec, const NetState& st) {
        primal_matrix(spec, st, X.data());
        std::fill(xbar.begin(), xbar.end(), 0.0);
        for (int i = 0; i < p.m; ++i)
            kern::axpy(1.0 / p.m, X.data() + static_cast<std::size_t>(i) * p.d, xbar.data(),
                       p.d);
        return p.composite_value(xbar.data());
    };
    for (double t : grid) {
        const double cand = t * base;
        AlgorithmSpec spec = make_next_spec(p, W, cand);
        NetState st = init_state(spec);
        const double f0 = mean_value(spec, st);
        bool ok = true;
        for (int k = 0; k < 60 && ok; ++k) {
            step_unquantized(spec, st);
            for (double v : st.z)
                if (!std::isfinite(v)) {
                    ok = false;
                    break;
                }
        }
        if (!ok) continue;
        const double f1 = mean_value(spec, st);
        if (std::isfinite(f1) && f1 < f0) return cand;
    }
    throw std::runtime_error("next: no step size in the probe grid made progress");
}

LipschitzRatios lipschitz_ratios(const AlgorithmSpec& spec, int pairs, std::uint64_t seed) {
    if (pairs < 1) throw std::invalid_argument("lipschitz_ratios: pairs must be >= 1");
    const int R = spec.R;
    const std::size_t nz = static_cast<std::size_t>(spec.m) * spec.dim_z;
    const std::size_t nc = static_cast<std::size_t>(spec.m) * spec.dim_c;
    CounterRng rng(seed, 0);
    LipschitzRatios out;

    std::vector<double> z(nz), dz(nz), zt(nz);
    std::vector<double> cprev(nc), dc(nc), ct(nc), zeros(nc, 0.0);
    std::vector<double> base(nc), pert(nc), diff(nc);
    std::vector<double> rounds(static_cast<std::size_t>(R) * nc), slot_save(nc);
    std::vector<const double*> rptr(R);
    std::vector<double> u1(nz), u2(nz), du(nz);
    for (int s = 0; s < R; ++s) rptr[s] = rounds.data() + static_cast<std::size_t>(s) * nc;

    auto draw_state = [&](double scale, double* dst) {
        if (spec.sample_feasible)
            spec.sample_feasible(rng, dst);
        else
            fill_gaussian(rng, dst, nz);
        kern::scal(scale, dst, nz);
    };

    for (int t = 0; t < pairs; ++t) {
        const double scale = std::pow(10.0, (t % 3) - 1);
        const double eps = (t % 2 == 0) ? 1e-3 * scale : scale;
        draw_state(scale, z.data());
        draw_state(eps, dz.data());
        fill_gaussian(rng, cprev.data(), nc);
        kern::scal(scale, cprev.data(), nc);
        fill_gaussian(rng, dc.data(), nc);
        kern::scal(eps, dc.data(), nc);
        const double den_dz = spec.state_norm(dz.data());
        const double den_dc = std::sqrt(kern::nrm2sq(dc.data(), nc));

        kern::add(z.data(), dz.data(), zt.data(), nz);
        for (int s = 1; s <= R; ++s) {
            const double* cp = (s == 1) ? zeros.data() : cprev.data();
            eval_comm_all(spec, s, z.data(), cp, base.data());
            if (den_dz > 1e-300) {
                eval_comm_all(spec, s, zt.data(), cp, pert.data());
                kern::sub(pert.data(), base.data(), diff.data(), nc);
                out.Z = std::max(out.Z, std::sqrt(kern::nrm2sq(diff.data(), nc)) / den_dz);
            }
            if (s >= 2 && den_dc > 1e-300) {
                kern::add(cprev.data(), dc.data(), ct.data(), nc);
                eval_comm_all(spec, s, z.data(), ct.data(), pert.data());
                kern::sub(pert.data(), base.data(), diff.data(), nc);
                out.C = std::max(out.C, std::sqrt(kern::nrm2sq(diff.data(), nc)) / den_dc);
            }
        }

        if (den_dc > 1e-300) {
            fill_gaussian(rng, rounds.data(), rounds.size());
            kern::scal(scale, rounds.data(), rounds.size());
            eval_update_all(spec, z.data(), rptr, u1.data());
            for (int s = 0; s < R; ++s) {
                double* seg = rounds.data() + static_cast<std::size_t>(s) * nc;
                std::copy(seg, seg + nc, slot_save.begin());
                kern::axpy(1.0, dc.data(), seg, nc);
                eval_update_all(spec, z.data(), rptr, u2.data());
                std::copy(slot_save.begin(), slot_save.end(), seg);
                kern::sub(u2.data(), u1.data(), du.data(), nz);
                out.A = std::max(out.A, spec.state_norm(du.data()) / den_dc);
            }
        }
    }
    return out;
}

LipschitzInfo measure_lipschitz(const AlgorithmSpec& spec, int pairs, double margin,
                                std::uint64_t seed) {
    const LipschitzRatios r = lipschitz_ratios(spec, pairs, seed);
    return {r.A * (1.0 + margin), r.C * (1.0 + margin), r.Z * (1.0 + margin)};
}

} // namespace qn
