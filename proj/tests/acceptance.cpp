// End-to-end acceptance gate. Each numbered criterion prints one PASS/FAIL
// line with its wall time; the exit status is the number of failures. Wall
// budgets are part of the contract for the criteria that carry one.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstring>
#include <functional>
#include <string>
#include <vector>

#include "qn/algorithms.hpp"
#include "qn/codec.hpp"
#include "qn/engine.hpp"
#include "qn/graph.hpp"
#include "qn/harness.hpp"
#include "qn/linalg.hpp"
#include "qn/problems.hpp"
#include "qn/quantizer.hpp"
#include "qn/rng.hpp"

using namespace qn;
using Clock = std::chrono::steady_clock;

namespace {

std::string fmt(const char* f, ...) {
    char buf[512];
    va_list ap;
    va_start(ap, f);
    std::vsnprintf(buf, sizeof buf, f, ap);
    va_end(ap);
    return buf;
}

// collects requirement failures inside one criterion; the first few reasons
// end up on the FAIL line
struct Check {
    int failures = 0;
    std::string why;

    void require(bool ok, const std::string& what) {
        if (ok) return;
        ++failures;
        if (why.size() > 500) return;
        if (!why.empty()) why += "; ";
        why += what;
    }
};

int run_criterion(int id, const char* label, double budget_s,
                  const std::function<void(Check&)>& body) {
    Check c;
    const auto t0 = Clock::now();
    try {
        body(c);
    } catch (const std::exception& e) {
        c.require(false, fmt("exception: %s", e.what()));
    }
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    if (budget_s > 0.0 && secs > budget_s)
        c.require(false, fmt("wall time %.1fs exceeds %.0fs budget", secs, budget_s));
    const bool pass = c.failures == 0;
    std::printf("[%s] %02d %s (%.2fs)%s%s\n", pass ? "PASS" : "FAIL", id, label, secs,
                pass ? "" : " -- ", pass ? "" : c.why.c_str());
    std::fflush(stdout);
    return pass ? 0 : 1;
}

double logunif(CounterRng& rng, double lo, double hi) {
    return lo * std::pow(hi / lo, rng.uniform01());
}

// 20-agent least-squares benchmark with the condition number pinned at 10
ExperimentConfig bench_config(AlgoKind kind, double alpha, long long horizon, int k0, int k1) {
    ExperimentConfig cfg;
    cfg.problem.kind = "linreg";
    cfg.problem.m = 20;
    cfg.problem.d = 40;
    cfg.problem.n = 1;
    cfg.problem.alpha = alpha;
    cfg.problem.kappa_target = 10.0;
    cfg.problem.seed = 1;
    cfg.graph.p = 0.6;
    cfg.graph.seed = 1;
    cfg.algorithm.kind = kind;
    cfg.horizon = horizon;
    cfg.rate_k0 = k0;
    cfg.rate_k1 = k1;
    cfg.eps_targets = {1e-8};
    return cfg;
}

double rho2_of(const GossipMatrix& g) {
    std::vector<double> ev = sym_eigenvalues(g.W);
    std::sort(ev.begin(), ev.end(), std::greater<double>());
    return ev[1];
}

// ---------------------------------------------------------------------------

void criterion_1(Check& c) {
    // deterministic rule: |q - x| <= eta + omega|x| surely
    CounterRng rng(9001, 0);
    int det_bad = 0;
    for (int t = 0; t < 100000; ++t) {
        const double eta = logunif(rng, 1e-4, 100.0);
        const double omega = (t % 7 == 0) ? 0.0 : rng.uniform01() * 0.95;
        AnqParams p(eta, omega, 2, QuantMode::deterministic);
        const double x = (rng.uniform01() < 0.5 ? -1.0 : 1.0) * logunif(rng, 1e-6, 1e6);
        const double q = quant_point(quantize_det(x, p), p);
        if (!(std::fabs(q - x) <= (eta + omega * std::fabs(x)) * (1.0 + 1e-12))) ++det_bad;
    }
    c.require(det_bad == 0, fmt("deterministic bound violated on %d of 100000 samples", det_bad));

    // probabilistic rule: outputs confined to the bracket, the exact two-point
    // mixture is unbiased, and the bracket variance obeys the same budget
    int off_bracket = 0, biased = 0, var_bad = 0;
    for (int t = 0; t < 20000; ++t) {
        const double eta = logunif(rng, 1e-2, 10.0);
        const double omega = (t % 6 == 0) ? 0.0 : 0.05 + 0.85 * rng.uniform01();
        AnqParams p(eta, omega, 2, QuantMode::probabilistic);
        const double x =
            (rng.uniform01() < 0.5 ? -1.0 : 1.0) * rng.uniform01() * quant_point(12, p);
        QuantIndex ihi = -13;
        while (quant_point(ihi, p) < x) ++ihi;
        const double hi = quant_point(ihi, p);
        const double lo = (x == hi) ? hi : quant_point(ihi - 1, p);
        for (int rep = 0; rep < 4; ++rep) {
            const double q = quant_point(quantize_prob(x, p, rng), p);
            if (q != lo && q != hi) ++off_bracket;
        }
        if (lo != hi) {
            const double prob_hi = (x - lo) / (hi - lo);
            const double mean = prob_hi * hi + (1.0 - prob_hi) * lo;
            const double scale = std::max(1.0, std::fabs(x));
            if (!(std::fabs(mean - x) <= 1e-12 * scale)) ++biased;
            const double bc = eta + omega * std::fabs(x);
            if (!((x - lo) * (hi - x) <= bc * bc * (1.0 + 1e-10))) ++var_bad;
        }
    }
    c.require(off_bracket == 0, fmt("%d probabilistic draws left the bracket", off_bracket));
    c.require(biased == 0, fmt("two-point mean off by more than 1e-12 at %d points", biased));
    c.require(var_bad == 0, fmt("bracket variance above (eta+omega|x|)^2 at %d points", var_bad));
}

void criterion_2(Check& c) {
    for (int S : {2, 3, 7, 15}) {
        // roundtrip across the full working index range
        int bad = 0;
        for (long long ell = -100000; ell <= 100000; ++ell) {
            SymbolSeq seq = encode_index(ell, S);
            if (decode_index(seq, S) != ell) ++bad;
            if (static_cast<int>(seq.symbols.size()) != block_of(ell, S) + 1) ++bad;
        }
        c.require(bad == 0, fmt("S=%d: %d roundtrip/length mismatches", S, bad));

        // block cardinality |L_b| = S^b for b <= 12
        long long expect = 1, prev_size = 0;
        for (int b = 0; b <= 12; ++b) {
            BlockBounds tb = block_bounds(b, S);
            const long long tb_size = tb.hi - tb.lo + 1;
            const long long lb = tb_size - prev_size;
            c.require(lb == expect, fmt("S=%d b=%d: |L_b|=%lld, expected %lld", S, b, lb, expect));
            prev_size = tb_size;
            if (b < 12) expect *= S;
        }

        // prefix-free: 1000 concatenated words decode back unambiguously,
        // through the symbol stream and through the packed wire bytes
        CounterRng rng(9002, static_cast<std::uint64_t>(S));
        std::vector<long long> sent;
        std::vector<int> stream;
        for (int t = 0; t < 1000; ++t) {
            const long long ell =
                static_cast<long long>(std::floor((rng.uniform01() * 2.0 - 1.0) * 100000.0));
            sent.push_back(ell);
            SymbolSeq seq = encode_index(ell, S);
            stream.insert(stream.end(), seq.symbols.begin(), seq.symbols.end());
        }
        SymbolStreamDecoder dec(S);
        std::vector<long long> got;
        for (int sym : stream) {
            QuantIndex out;
            if (dec.push(sym, &out)) got.push_back(out);
        }
        c.require(got == sent, fmt("S=%d: stream decode diverged", S));

        std::vector<int> unpacked = unpack_symbols(pack_symbols(stream, S), S);
        SymbolStreamDecoder dec2(S);
        got.clear();
        for (int sym : unpacked) {
            QuantIndex out;
            if (dec2.push(sym, &out)) got.push_back(out);
        }
        bool wire_ok = got.size() >= sent.size() &&
                       std::equal(sent.begin(), sent.end(), got.begin());
        for (size_t i = sent.size(); wire_ok && i < got.size(); ++i)
            wire_ok = got[i] == 0;  // byte padding decodes as bare terminators
        c.require(wire_ok, fmt("S=%d: wire roundtrip diverged", S));
    }
}

void criterion_3(Check& c) {
    // the covered range of any finite constellation collapses as eta -> 0
    // (constellation sizes kept where the geometric family stays finite)
    const struct {
        long long N;
        double omega;
    } grids[] = {{33, 0.4}, {65535, 0.005}};
    for (QuantMode mode : {QuantMode::deterministic, QuantMode::probabilistic}) {
        for (const auto& g : grids) {
            double prev = -1.0, first = 0.0;
            for (double eta : {1.0, 1e-3, 1e-6, 1e-9, 1e-12}) {
                const double r = max_range(mode, eta, g.omega, g.N);
                c.require(r > 0.0 && std::isfinite(r),
                          "max_range must be positive and finite for eta > 0");
                if (prev < 0.0)
                    first = r;
                else
                    c.require(r < prev, "max_range must shrink with eta");
                prev = r;
            }
            c.require(prev <= 1e-11 * first, "max_range did not collapse linearly with eta");
            c.require(max_range(mode, 0.0, g.omega, g.N) == 0.0, "max_range(eta=0) must be 0");
            c.require(max_range(mode, 0.0, g.omega, 1000000000000LL) == 0.0,
                      "max_range(eta=0) must be 0 for any finite N");
        }
    }

    // finer eta means strictly larger index magnitude for the same input
    for (double omega : {0.0, 0.3}) {
        const double x = 3.7;
        long long prev = -1;
        for (double eta : {1.0, 1e-2, 1e-4, 1e-6}) {
            AnqParams p(eta, omega, 2, QuantMode::deterministic);
            const long long idx = std::llabs(quantize_det(x, p));
            c.require(idx > prev, fmt("|index| not increasing at omega=%.1f eta=%g", omega, eta));
            prev = idx;
        }
    }
}

void criterion_4(Check& c) {
    auto [qdata, prob] = gen_quadratic(5, 6, 8.0, 5);
    Topology topo = generate_erdos_renyi(5, 1.0, 6);
    GossipMatrix base = metropolis_weights(topo);
    for (AlgoKind kind :
         {AlgoKind::GdStar, AlgoKind::ProxExtra, AlgoKind::ProxNids, AlgoKind::Nids,
          AlgoKind::ProxNext, AlgoKind::ProxDiging, AlgoKind::Next, AlgoKind::PrimalDual}) {
        BuiltAlgorithm built = build_algorithm(kind, prob, base, topo);
        NetState through_channel = init_state(built.spec);
        NetState plain = init_state(built.spec);
        PerfectChannel ch;
        int diverged_at = -1;
        for (int k = 0; k < 100 && diverged_at < 0; ++k) {
            step(built.spec, through_channel, ch);
            step_unquantized(built.spec, plain);
            if (std::memcmp(through_channel.z.data(), plain.z.data(),
                            plain.z.size() * sizeof(double)) != 0)
                diverged_at = k;
        }
        c.require(diverged_at < 0,
                  fmt("%s: identity channel diverged at iteration %d", algo_name(kind),
                      diverged_at));
    }
}

void criterion_5(Check& c) {
    auto [qdata, prob] = gen_quadratic(5, 8, 40.0, 11);
    Topology topo = generate_erdos_renyi(5, 1.0, 7);
    GossipMatrix base = metropolis_weights(topo);
    for (AlgoKind kind : {AlgoKind::ProxNids, AlgoKind::GdStar}) {
        BuiltAlgorithm built = build_algorithm(kind, prob, base, topo);
        const AlgorithmSpec& spec = built.spec;
        c.require(spec.rate_lambda.has_value(), "closed-form rate missing");
        const double lambda = *spec.rate_lambda;
        const double sigma = 0.5 * (1.0 + lambda);
        const double wbar = omega_bar(sigma, lambda, spec.R, spec.lip);
        c.require(wbar > 0.0, fmt("%s: omega_bar not positive", algo_name(kind)));
        const double eta0 = 0.01;
        const long long ref_iters =
            std::max(static_cast<long long>(10.0 / (1.0 - lambda)), 2000LL);
        std::vector<double> z_inf = fixed_point(spec, ref_iters);
        NetState st = init_state(spec);
        Envelope env = contraction_envelope(spec, st.z, z_inf, sigma, lambda, 0.5 * wbar, eta0);
        c.require(env.V0 > 0.0 && std::isfinite(env.V0),
                  fmt("%s: degenerate envelope V0", algo_name(kind)));
        AnqParams qp(eta0, 0.5 * wbar, 3, QuantMode::deterministic);
        AnqChannel ch(qp, sigma, 42, spec.m);
        int violations = 0;
        for (long long k = 0; k <= 500; ++k) {
            double dist = 0.0;
            for (size_t j = 0; j < st.z.size(); ++j) {
                const double dd = st.z[j] - z_inf[j];
                dist += dd * dd;
            }
            dist = std::sqrt(dist);
            if (dist > env.V0 * std::pow(sigma, static_cast<double>(k))) ++violations;
            if (k < 500) step(spec, st, ch);
        }
        c.require(violations == 0,
                  fmt("%s: envelope violated at %d of 501 iterations", algo_name(kind),
                      violations));
    }
}

struct BenchRun {
    AlgoKind kind;
    long long horizon;
    int k0, k1;    // exact-phase fit window
    int qk0, qk1;  // quantized-phase fit window
    double eta0;   // 0: per-kind default
};

const std::vector<BenchRun>& bench_runs() {
    // next needs a finer initial grid: its tracking recursion preserves the
    // mean of y exactly, so decode errors accumulate there as a bias whose
    // floor scales with eta0^2 (the re-embedded prox variants do not)
    static const std::vector<BenchRun> runs = {
        {AlgoKind::GdStar, 300, 120, 240, 100, 200, 0.0},
        {AlgoKind::ProxExtra, 600, 120, 240, 200, 400, 0.0},
        {AlgoKind::ProxNids, 300, 120, 240, 100, 200, 0.0},
        {AlgoKind::Nids, 300, 120, 240, 100, 200, 0.0},
        {AlgoKind::ProxNext, 300, 120, 240, 100, 200, 0.0},
        {AlgoKind::ProxDiging, 65000, 10000, 20000, 10000, 20000, 0.0},
        {AlgoKind::Next, 600, 120, 240, 200, 400, 2e-5},
        {AlgoKind::PrimalDual, 300, 120, 240, 100, 200, 0.0},
    };
    return runs;
}

void criterion_6(Check& c) {
    // closed-form table inputs measured once: the instance is shared
    AssembledExperiment asm0 = assemble(bench_config(AlgoKind::GdStar, 0.0, 300, 120, 240));
    const double kap = constants(asm0.problem).kappa;
    const double rho2_base = rho2_of(asm0.base);
    std::vector<double> lev = sym_eigenvalues(laplacian(asm0.topo));
    std::sort(lev.begin(), lev.end());
    const double rho1_L = lev.back();
    const double rho_m1_L = lev[1];

    for (const BenchRun& br : bench_runs()) {
        ExperimentConfig cfg = bench_config(br.kind, 0.0, br.horizon, br.k0, br.k1);
        if (br.eta0 > 0.0) cfg.quantizer.eta0 = br.eta0;
        RunRecord rec = run_experiment(cfg);
        const char* name = algo_name(br.kind);

        if (br.kind != AlgoKind::Next) {  // searched step size, no closed form
            double rho2_eff = rho2_base;
            if (br.kind == AlgoKind::Nids) {
                rho2_eff = 0.5 * (1.0 + rho2_base);
            } else {
                const double shift = default_shift(br.kind, kap);
                if (shift > 0.0) rho2_eff = rho2_of(shift_spectrum(asm0.base, shift));
            }
            const double table = closed_form_rate(br.kind, kap, rho2_eff, rho1_L, rho_m1_L);
            c.require(rec.lambda_hat <= table + 0.03,
                      fmt("%s: measured rate %.4f above closed form %.4f + 0.03", name,
                          rec.lambda_hat, table));
        }
        c.require(rec.lambda_hat > 0.0 && rec.lambda_hat < 1.0,
                  fmt("%s: measured rate %.4f outside (0,1)", name, rec.lambda_hat));

        const double rate_q = fit_rate(rec.mse, br.qk0, br.qk1);
        c.require(rate_q <= rec.sigma + 0.01,
                  fmt("%s: quantized rate %.4f above sigma %.4f + 0.01", name, rate_q,
                      rec.sigma));
        c.require(rec.costs[0].reached, fmt("%s: never reached MSE 1e-8", name));
        c.require(rec.mse.back() <= 1e-8,
                  fmt("%s: final MSE %.2e above 1e-8", name, rec.mse.back()));
    }
}

void criterion_7(Check& c) {
    const BenchRun runs[] = {
        {AlgoKind::ProxExtra, 600, 120, 240, 0, 0, 0.0},
        {AlgoKind::ProxNids, 300, 120, 240, 0, 0, 0.0},
        {AlgoKind::ProxNext, 300, 120, 240, 0, 0, 0.0},
        {AlgoKind::ProxDiging, 65000, 10000, 20000, 0, 0, 0.0},
    };
    for (const BenchRun& br : runs) {
        ExperimentConfig cfg = bench_config(br.kind, 1e-4, br.horizon, br.k0, br.k1);
        RunRecord rec = run_experiment(cfg);
        const char* name = algo_name(br.kind);
        c.require(rec.costs[0].reached,
                  fmt("%s: l1-regularized run never reached MSE 1e-8", name));
        c.require(rec.max_abs_index > 0 && rec.max_abs_index <= 1000000000LL,
                  fmt("%s: max |index| %lld outside (0, 1e9]", name, rec.max_abs_index));
    }
}

void criterion_8(Check& c) {
    ExperimentConfig cfg = bench_config(AlgoKind::ProxNids, 0.0, 300, 120, 240);
    DimensionSweep sw = sweep_dimension(cfg, {20, 40, 80, 160}, 1e-8);
    for (const DimensionPoint& pt : sw.points)
        c.require(pt.cost.reached, fmt("d=%d never reached MSE 1e-8", pt.d));
    c.require(sw.slope_defined, "log-log slope undefined");
    c.require(sw.slope >= 0.8 && sw.slope <= 1.3,
              fmt("bits-vs-dimension slope %.3f outside [0.8, 1.3]", sw.slope));
}

void criterion_9(Check& c) {
    // cost against sigma: an interior sweet spot between the two divergences
    ExperimentConfig cfg = bench_config(AlgoKind::ProxNids, 0.0, 1500, 120, 240);
    RateProbe probe = probe_rate(cfg);
    std::vector<double> sigmas;
    for (double t : {0.02, 0.1, 0.25, 0.5, 0.75, 0.95})
        sigmas.push_back(probe.lambda_hat + t * (1.0 - probe.lambda_hat));
    std::vector<SweepPoint> sweep = sweep_sigma(cfg, sigmas, 1e-8);
    size_t best = 0;
    bool all_reached = true;
    for (size_t i = 0; i < sweep.size(); ++i) {
        all_reached = all_reached && sweep[i].cost.reached;
        if (sweep[i].cost.reached && sweep[i].cost.bits < sweep[best].cost.bits) best = i;
    }
    c.require(all_reached, "a sigma sweep point never reached MSE 1e-8");
    c.require(best > 0 && best + 1 < sweep.size(),
              fmt("sigma cost minimizer at grid edge (index %zu)", best));
    c.require(sweep.front().cost.bits > sweep[best].cost.bits &&
                  sweep.back().cost.bits > sweep[best].cost.bits,
              "sigma cost curve is monotone");

    // cost against omega: some positive omega beats omega = 0
    int seeds_with_positive_argmin = 0;
    for (std::uint64_t s : {1, 2, 3}) {
        ExperimentConfig wcfg = bench_config(AlgoKind::GdStar, 0.0, 300, 120, 240);
        wcfg.problem.seed = s;
        wcfg.graph.seed = s;
        wcfg.quantizer.seed = 70 + s;
        RateProbe p = probe_rate(wcfg);
        wcfg.sigma.absolute = true;
        wcfg.sigma.sigma = p.lambda_hat + 0.5 * (1.0 - p.lambda_hat);
        std::vector<SweepPoint> pts = sweep_omega(wcfg, {0.0, 0.25, 0.5, 0.75}, 1e-8);
        size_t arg = 0;
        bool reached = true;
        for (size_t i = 0; i < pts.size(); ++i) {
            reached = reached && pts[i].cost.reached;
            if (pts[i].cost.reached && pts[i].cost.bits < pts[arg].cost.bits) arg = i;
        }
        c.require(reached, fmt("seed %llu: an omega sweep point never reached MSE 1e-8",
                               static_cast<unsigned long long>(s)));
        if (reached && pts[arg].value > 0.0) ++seeds_with_positive_argmin;
    }
    c.require(seeds_with_positive_argmin >= 1,
              "no seed preferred a positive omega over omega = 0");
}

void criterion_10(Check& c) {
    Topology topo = generate_erdos_renyi(4, 1.0, 22);
    GossipMatrix base = metropolis_weights(topo);

    auto check_kind = [&](AlgoKind kind, const Problem& prob, std::uint64_t seed) {
        BuiltAlgorithm built = build_algorithm(kind, prob, base, topo);
        LipschitzRatios r = lipschitz_ratios(built.spec, 10000, seed);
        const LipschitzInfo& lip = built.spec.lip;
        const char* name = algo_name(kind);
        c.require(r.A <= lip.L_A * (1.0 + 1e-6) + 1e-12,
                  fmt("%s: sampled L_A %.6f above certified %.6f", name, r.A, lip.L_A));
        c.require(r.C <= lip.L_C * (1.0 + 1e-6) + 1e-12,
                  fmt("%s: sampled L_C %.6f above certified %.6f", name, r.C, lip.L_C));
        c.require(r.Z <= lip.L_Z * (1.0 + 1e-6) + 1e-12,
                  fmt("%s: sampled L_Z %.6f above certified %.6f", name, r.Z, lip.L_Z));
    };

    auto [qdata, qprob] = gen_quadratic(4, 6, 6.0, 21);
    for (AlgoKind kind : {AlgoKind::GdStar, AlgoKind::Nids, AlgoKind::PrimalDual})
        check_kind(kind, qprob, 3101);

    auto [ldata, lprob] = gen_linreg(4, 12, 6, 0.3, 0.5, 0.04, 0.01, 23);
    for (AlgoKind kind :
         {AlgoKind::ProxExtra, AlgoKind::ProxNids, AlgoKind::ProxNext, AlgoKind::ProxDiging})
        check_kind(kind, lprob, 3102);
}

void criterion_11(Check& c) {
    struct Named {
        const char* label;
        Problem prob;
    };
    auto [qdata, qprob] = gen_quadratic(3, 5, 9.0, 41);
    auto [ldata, lprob] = gen_linreg(3, 4, 5, 0.3, 0.5, 0.04, 0.0, 42);
    auto [gdata, gprob] = gen_logreg_synthetic(3, 6, 5, 0.0, 43);
    const Named probs[] = {{"quadratic", qprob}, {"linreg", lprob}, {"logreg", gprob}};

    CounterRng rng(9011, 0);
    const double h = 1e-6;
    for (const Named& np : probs) {
        const Problem& p = np.prob;
        int bad = 0;
        double worst = 0.0;
        for (int t = 0; t < 100; ++t) {
            const int i = t % p.m;
            std::vector<double> x(static_cast<size_t>(p.d));
            for (double& v : x) v = 2.0 * rng.normal();
            std::vector<double> g(static_cast<size_t>(p.d));
            p.grad(i, x.data(), g.data());
            for (int j = 0; j < p.d; ++j) {
                const double keep = x[static_cast<size_t>(j)];
                x[static_cast<size_t>(j)] = keep + h;
                const double fp = p.value(i, x.data());
                x[static_cast<size_t>(j)] = keep - h;
                const double fm = p.value(i, x.data());
                x[static_cast<size_t>(j)] = keep;
                const double fd = (fp - fm) / (2.0 * h);
                const double err = std::fabs(g[static_cast<size_t>(j)] - fd);
                worst = std::max(worst, err);
                if (err > 1e-5) ++bad;
            }
        }
        c.require(bad == 0, fmt("%s: %d gradient components off by more than 1e-5 (worst %.2e)",
                                np.label, bad, worst));
    }
}

}  // namespace

int main() {
    int failures = 0;
    failures += run_criterion(1, "quantizer error bound (deterministic surely, probabilistic unbiased)",
                              5.0, criterion_1);
    failures += run_criterion(2, "adaptive codec roundtrip, block sizes, prefix-free stream", 10.0,
                              criterion_2);
    failures += run_criterion(3, "range collapse as eta -> 0 and index growth", 0.0, criterion_3);
    failures += run_criterion(4, "identity channel reproduces exact iterates bitwise", 0.0,
                              criterion_4);
    failures += run_criterion(5, "quantized trajectories stay inside the contraction envelope",
                              30.0, criterion_5);
    failures += run_criterion(6, "benchmark rates: exact vs closed form, quantized vs sigma",
                              120.0, criterion_6);
    failures += run_criterion(7, "l1-regularized runs reach target with bounded indices", 0.0,
                              criterion_7);
    failures += run_criterion(8, "bit cost scales near-linearly with dimension", 300.0,
                              criterion_8);
    failures += run_criterion(9, "bit cost vs sigma and omega has interior optima", 0.0,
                              criterion_9);
    failures += run_criterion(10, "sampled sensitivity ratios below certified constants", 0.0,
                              criterion_10);
    failures += run_criterion(11, "analytic gradients match central differences", 0.0,
                              criterion_11);
    if (failures == 0)
        std::printf("all 11 acceptance criteria passed\n");
    else
        std::printf("%d acceptance criteria FAILED\n", failures);
    return failures;
}
