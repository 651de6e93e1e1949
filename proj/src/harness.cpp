#include "qn/harness.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <system_error>

#include "json.hpp"
#include "qn/codec.hpp"
#include "qn/kernels.hpp"

namespace qn {

namespace {

using nlohmann::json;

[[noreturn]] void bad(const std::string& msg) { throw ConfigError("config: " + msg); }

void check_keys(const json& j, const std::string& where,
                std::initializer_list<const char*> allowed) {
    if (!j.is_object()) bad(where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* a : allowed) {
            if (it.key() == a) {
                known = true;
                break;
            }
        }
        if (!known) bad("unknown key \"" + it.key() + "\" in " + where);
    }
}

double get_num(const json& j, const std::string& where) {
    if (!j.is_number()) bad(where + " must be a number");
    return j.get<double>();
}

long long get_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) bad(where + " must be an integer");
    return j.get<long long>();
}

std::uint64_t get_seed(const json& j, const std::string& where) {
    if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
        bad(where + " must be a non-negative integer");
    return j.get<std::uint64_t>();
}

std::string get_str(const json& j, const std::string& where) {
    if (!j.is_string()) bad(where + " must be a string");
    return j.get<std::string>();
}

bool get_bool(const json& j, const std::string& where) {
    if (!j.is_boolean()) bad(where + " must be a boolean");
    return j.get<bool>();
}

void parse_problem(const json& j, ProblemSpec& p) {
    check_keys(j, "problem",
               {"kind", "m", "d", "n", "beta", "sparsity", "noise_var", "alpha", "kappa_target",
                "kappa", "seed"});
    if (j.contains("kind")) p.kind = get_str(j["kind"], "problem.kind");
    if (j.contains("m")) p.m = static_cast<int>(get_int(j["m"], "problem.m"));
    if (j.contains("d")) p.d = static_cast<int>(get_int(j["d"], "problem.d"));
    if (j.contains("n")) p.n = static_cast<int>(get_int(j["n"], "problem.n"));
    if (j.contains("beta")) p.beta = get_num(j["beta"], "problem.beta");
    if (j.contains("sparsity")) p.sparsity = get_num(j["sparsity"], "problem.sparsity");
    if (j.contains("noise_var")) p.noise_var = get_num(j["noise_var"], "problem.noise_var");
    if (j.contains("alpha")) p.alpha = get_num(j["alpha"], "problem.alpha");
    if (j.contains("kappa_target"))
        p.kappa_target = get_num(j["kappa_target"], "problem.kappa_target");
    if (j.contains("kappa")) p.kappa = get_num(j["kappa"], "problem.kappa");
    if (j.contains("seed")) p.seed = get_seed(j["seed"], "problem.seed");
}

void parse_graph(const json& j, GraphSpec& g) {
    check_keys(j, "graph", {"p", "seed"});
    if (j.contains("p")) g.p = get_num(j["p"], "graph.p");
    if (j.contains("seed")) g.seed = get_seed(j["seed"], "graph.seed");
}

void parse_algorithm(const json& j, AlgoConfig& a) {
    check_keys(j, "algorithm", {"kind", "gamma", "nu"});
    if (j.contains("kind")) a.kind = algo_from_name(get_str(j["kind"], "algorithm.kind"));
    if (j.contains("gamma")) a.gamma = get_num(j["gamma"], "algorithm.gamma");
    if (j.contains("nu")) a.nu = get_num(j["nu"], "algorithm.nu");
}

void parse_quantizer(const json& j, QuantizerConfig& q) {
    check_keys(j, "quantizer", {"mode", "eta0", "S", "omega", "seed"});
    if (j.contains("mode")) {
        const std::string mode = get_str(j["mode"], "quantizer.mode");
        if (mode == "deterministic")
            q.mode = QuantMode::deterministic;
        else if (mode == "probabilistic")
            q.mode = QuantMode::probabilistic;
        else
            bad("quantizer.mode must be deterministic | probabilistic");
    }
    if (j.contains("eta0")) q.eta0 = get_num(j["eta0"], "quantizer.eta0");
    if (j.contains("S")) q.S = static_cast<int>(get_int(j["S"], "quantizer.S"));
    if (j.contains("omega")) {
        const json& w = j["omega"];
        check_keys(w, "quantizer.omega", {"absolute", "fraction_of_omega_bar"});
        if (w.contains("absolute") == w.contains("fraction_of_omega_bar"))
            bad("quantizer.omega needs exactly one of absolute | fraction_of_omega_bar");
        if (w.contains("absolute")) {
            q.omega_absolute = true;
            q.omega = get_num(w["absolute"], "quantizer.omega.absolute");
        } else {
            q.omega_absolute = false;
            q.omega_frac =
                get_num(w["fraction_of_omega_bar"], "quantizer.omega.fraction_of_omega_bar");
        }
    }
    if (j.contains("seed")) q.seed = get_seed(j["seed"], "quantizer.seed");
}

void parse_sigma(const json& j, SigmaRule& s) {
    check_keys(j, "sigma", {"absolute", "multiplier", "offset"});
    if (j.contains("absolute")) {
        if (j.contains("multiplier") || j.contains("offset"))
            bad("sigma.absolute excludes multiplier/offset");
        s.absolute = true;
        s.sigma = get_num(j["absolute"], "sigma.absolute");
        return;
    }
    s.absolute = false;
    if (j.contains("multiplier")) s.mul = get_num(j["multiplier"], "sigma.multiplier");
    if (j.contains("offset")) s.add = get_num(j["offset"], "sigma.offset");
}

void parse_run(const json& j, ExperimentConfig& cfg) {
    check_keys(j, "run",
               {"horizon", "rate_window", "eps", "repetitions", "identity_channel", "out_dir"});
    if (j.contains("horizon")) cfg.horizon = get_int(j["horizon"], "run.horizon");
    if (j.contains("rate_window")) {
        const json& w = j["rate_window"];
        if (!w.is_array() || w.size() != 2) bad("run.rate_window must be [k0, k1]");
        cfg.rate_k0 = static_cast<int>(get_int(w[0], "run.rate_window[0]"));
        cfg.rate_k1 = static_cast<int>(get_int(w[1], "run.rate_window[1]"));
    }
    if (j.contains("eps")) {
        const json& e = j["eps"];
        if (!e.is_array() || e.empty()) bad("run.eps must be a non-empty array");
        cfg.eps_targets.clear();
        for (size_t i = 0; i < e.size(); ++i)
            cfg.eps_targets.push_back(get_num(e[i], "run.eps[" + std::to_string(i) + "]"));
    }
    if (j.contains("repetitions"))
        cfg.repetitions = static_cast<int>(get_int(j["repetitions"], "run.repetitions"));
    if (j.contains("identity_channel"))
        cfg.identity_channel = get_bool(j["identity_channel"], "run.identity_channel");
    if (j.contains("out_dir")) cfg.out_dir = get_str(j["out_dir"], "run.out_dir");
}

void validate(const ExperimentConfig& cfg) {
    const ProblemSpec& p = cfg.problem;
    if (p.kind != "linreg" && p.kind != "logreg" && p.kind != "quadratic")
        bad("problem.kind must be linreg | logreg | quadratic");
    if (p.m < 2) bad("problem.m must be >= 2 (the graph generator needs two nodes)");
    if (p.d < 1) bad("problem.d must be >= 1");
    if (p.n < 1) bad("problem.n must be >= 1");
    if (!(p.beta >= 0.0 && p.beta < 1.0)) bad("problem.beta must lie in [0, 1)");
    if (!(p.sparsity >= 0.0 && p.sparsity <= 1.0)) bad("problem.sparsity must lie in [0, 1]");
    if (!(p.noise_var >= 0.0)) bad("problem.noise_var must be >= 0");
    if (!(p.alpha >= 0.0)) bad("problem.alpha must be >= 0");
    if (p.kappa_target != 0.0 && !(p.kappa_target > 1.0))
        bad("problem.kappa_target must be > 1 (or 0 for the default ridge)");
    if (p.kind == "quadratic") {
        if (!(p.kappa >= 1.0)) bad("problem.kappa must be >= 1");
        if (p.alpha != 0.0) bad("quadratic problems are smooth; problem.alpha must be 0");
    }
    if (p.alpha > 0.0 && algo_requires_smooth(cfg.algorithm.kind))
        bad(std::string(algo_name(cfg.algorithm.kind)) +
            " has no proximal step; problem.alpha must be 0");
    if (!(cfg.graph.p > 0.0 && cfg.graph.p <= 1.0)) bad("graph.p must lie in (0, 1]");
    if (cfg.algorithm.gamma && !(*cfg.algorithm.gamma > 0.0)) bad("algorithm.gamma must be > 0");
    if (cfg.algorithm.nu && !(*cfg.algorithm.nu >= 0.0 && *cfg.algorithm.nu <= 1.0))
        bad("algorithm.nu must lie in [0, 1]");
    const QuantizerConfig& q = cfg.quantizer;
    if (q.S < 2) bad("quantizer.S must be >= 2");
    if (q.eta0 && !(*q.eta0 > 0.0)) bad("quantizer.eta0 must be > 0");
    if (q.omega_absolute && !(q.omega >= 0.0 && q.omega < 1.0))
        bad("quantizer.omega.absolute must lie in [0, 1)");
    if (!q.omega_absolute && !(q.omega_frac >= 0.0 && q.omega_frac < 1.0))
        bad("quantizer.omega.fraction_of_omega_bar must lie in [0, 1)");
    if (cfg.sigma.absolute && !(cfg.sigma.sigma > 0.0 && cfg.sigma.sigma < 1.0))
        bad("sigma.absolute must lie in (0, 1)");
    if (!cfg.sigma.absolute && !(cfg.sigma.mul >= 0.0 && cfg.sigma.add >= 0.0))
        bad("sigma.multiplier and sigma.offset must be >= 0");
    if (cfg.horizon < 1) bad("run.horizon must be >= 1");
    if (!(cfg.rate_k0 > 0 && cfg.rate_k1 > cfg.rate_k0))
        bad("run.rate_window needs 0 < k0 < k1");
    if (!cfg.identity_channel) {
        if (cfg.horizon < 200) bad("run.horizon must be >= 200 for rate estimation");
        if (cfg.horizon <= cfg.rate_k1) bad("run.horizon must exceed the rate window");
    }
    for (double e : cfg.eps_targets)
        if (!(e > 0.0)) bad("run.eps entries must be > 0");
    if (cfg.repetitions < 1) bad("run.repetitions must be >= 1");
}

double state_mse(const AlgorithmSpec& spec, const NetState& st, const std::vector<double>& x_star,
                 std::vector<double>& scratch) {
    primal_matrix(spec, st, scratch.data());
    return compute_mse(scratch.data(), x_star.data(), spec.m, spec.dim_x);
}

// Exact run to `horizon`, MSE sampled before every step.
std::vector<double> exact_mse_series(const AlgorithmSpec& spec, const std::vector<double>& x_star,
                                     long long horizon) {
    std::vector<double> mse(static_cast<size_t>(horizon) + 1);
    std::vector<double> X(static_cast<size_t>(spec.m) * spec.dim_x);
    NetState st = init_state(spec);
    for (long long k = 0; k <= horizon; ++k) {
        mse[static_cast<size_t>(k)] = state_mse(spec, st, x_star, X);
        if (k < horizon) step_unquantized(spec, st);
    }
    return mse;
}

}  // namespace

// The tail of an error series flattens once it reaches its attainable floor
// (reference-solution accuracy, quantizer resolution, or machine precision);
// a fit window that overlaps the plateau measures stagnation instead of the
// contraction rate.  Clamp the window to end before the plateau, then apply
// the hard numerical floor as a final guard.
double fit_rate(const std::vector<double>& mse, int k0, int k1) {
    const int last = static_cast<int>(mse.size()) - 1;
    if (k1 > last) {
        k1 = std::max(2, last);
        k0 = std::min(k0, std::max(1, k1 / 2));
    }
    double level = mse[static_cast<size_t>(last)];
    for (double v : mse) level = std::min(level, v);
    int kstar = last;  // first index within a factor 4 of the floor level
    for (int k = 0; k <= last; ++k) {
        if (mse[static_cast<size_t>(k)] <= 4.0 * level) {
            kstar = k;
            break;
        }
    }
    const int safe_end = kstar * 3 / 4;
    if (safe_end >= 8 && safe_end < k1) {
        k1 = safe_end;
        k0 = std::min(k0, k1 / 2);
    }
    constexpr double kFloor = 1e-26;
    while (k1 > 4 && mse[static_cast<size_t>(k1)] <= kFloor) {
        k0 = std::max(1, k0 / 2);
        k1 = std::max(2, k1 / 2);
    }
    return estimate_rate(mse, k0, k1);
}

namespace {

// Recount per-iteration bits from the recorded symbol streams, mirroring the
// channel's summation order, and require bitwise agreement with the totals
// reported by step().
void verify_bits_accounting(const std::vector<TransmitLog>& log, int S,
                            const std::vector<double>& bits, long long upto) {
    std::vector<double> counted(static_cast<size_t>(upto), 0.0);
    for (const TransmitLog& entry : log) {
        if (entry.k >= upto) continue;
        SymbolStreamDecoder dec(S);
        double entry_bits = 0.0;
        QuantIndex ell = 0;
        for (int sym : entry.symbols)
            if (dec.push(sym, &ell)) entry_bits += bit_cost_of_index(ell, S);
        counted[static_cast<size_t>(entry.k)] += entry_bits;
    }
    for (long long k = 0; k < upto; ++k)
        if (counted[static_cast<size_t>(k)] != bits[static_cast<size_t>(k)])
            throw std::logic_error("bit accounting mismatch at iteration " + std::to_string(k));
}

void finalize_record(RunRecord& rec, const ExperimentConfig& cfg, int m, int d) {
    rec.costs.clear();
    for (double e : cfg.eps_targets) rec.costs.push_back(comm_cost(rec, e));
    const long long H = static_cast<long long>(rec.mse.size()) - 1;
    rec.bits_per_agent_dim_iter =
        H > 0 ? rec.cum_bits.back() / (static_cast<double>(m) * d * H) : 0.0;
}

void write_outputs(const ExperimentConfig& cfg, const AssembledExperiment& ax,
                   const RunRecord& rec, const std::vector<double>& mse_exact) {
    if (cfg.out_dir.empty()) return;
    std::filesystem::create_directories(cfg.out_dir);
    RunRecord exact;
    exact.mse = mse_exact;
    exact.bits_per_agent.assign(mse_exact.size(), 0.0);
    exact.cum_bits.assign(mse_exact.size(), 0.0);
    emit_csv(exact, cfg.out_dir + "/unquantized.csv");
    emit_csv(rec, cfg.out_dir + "/quantized.csv");
    std::ofstream os(cfg.out_dir + "/summary.json", std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + cfg.out_dir + "/summary.json");
    os << summary_json(rec, cfg, ax.built.plan);
    if (!os) throw std::runtime_error("write failure on " + cfg.out_dir + "/summary.json");
}

void append_double(std::string& s, double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    s.append(buf, res.ptr);
}

const char* kCsvHeader = "k,mse,bits_per_agent,cum_bits_network";

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    check_keys(doc, "document", {"problem", "graph", "algorithm", "quantizer", "sigma", "run"});
    ExperimentConfig cfg;
    try {
        if (doc.contains("problem")) parse_problem(doc["problem"], cfg.problem);
        if (doc.contains("graph")) parse_graph(doc["graph"], cfg.graph);
        if (doc.contains("algorithm")) parse_algorithm(doc["algorithm"], cfg.algorithm);
        if (doc.contains("quantizer")) parse_quantizer(doc["quantizer"], cfg.quantizer);
        if (doc.contains("sigma")) parse_sigma(doc["sigma"], cfg.sigma);
        if (doc.contains("run")) parse_run(doc["run"], cfg);
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
    validate(cfg);
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("config: cannot open " + path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return parse_config(ss.str());
}

double compute_mse(const double* X, const double* x_star, int m, int d) {
    if (m < 1 || d < 1) throw std::invalid_argument("compute_mse: empty problem");
    const double ref = kern::nrm2sq(x_star, static_cast<size_t>(d));
    if (!(ref > 0.0)) throw std::invalid_argument("compute_mse: reference norm is zero");
    std::vector<double> diff(static_cast<size_t>(d));
    double num = 0.0;
    for (int i = 0; i < m; ++i) {
        kern::sub(X + static_cast<size_t>(i) * d, x_star, diff.data(), static_cast<size_t>(d));
        num += kern::nrm2sq(diff.data(), static_cast<size_t>(d));
    }
    return num / (m * ref);
}

EpsCost comm_cost(const RunRecord& rec, double eps) {
    if (!(eps > 0.0)) throw std::invalid_argument("comm_cost: eps must be > 0");
    EpsCost c;
    c.eps = eps;
    for (size_t k = 0; k < rec.mse.size(); ++k) {
        if (rec.mse[k] <= eps) {
            c.reached = true;
            c.k_eps = static_cast<long long>(k);
            c.bits = k < rec.cum_bits.size() ? rec.cum_bits[k] : 0.0;
            return c;
        }
    }
    c.reached = false;
    c.k_eps = -1;
    c.bits = rec.cum_bits.empty() ? 0.0 : rec.cum_bits.back();
    return c;
}

AssembledExperiment assemble(const ExperimentConfig& cfg) {
    validate(cfg);
    AssembledExperiment ax;
    const ProblemSpec& p = cfg.problem;
    if (p.kind == "linreg") {
        ax.problem = gen_linreg(p.m, p.n, p.d, p.beta, p.sparsity, p.noise_var, p.alpha, p.seed,
                                p.kappa_target)
                         .second;
    } else if (p.kind == "logreg") {
        ax.problem = gen_logreg_synthetic(p.m, p.n, p.d, p.alpha, p.seed).second;
    } else {
        ax.problem = gen_quadratic(p.m, p.d, p.kappa, p.seed).second;
    }
    ax.topo = generate_erdos_renyi(p.m, cfg.graph.p, cfg.graph.seed);
    ax.base = metropolis_weights(ax.topo);
    ax.built = build_algorithm(cfg.algorithm.kind, ax.problem, ax.base, ax.topo,
                               cfg.algorithm.gamma, cfg.algorithm.nu);
    ax.x_star = reference_solution(ax.problem);
    return ax;
}

RunRecord run_experiment(const ExperimentConfig& cfg) {
    AssembledExperiment ax = assemble(cfg);
    const AlgorithmSpec& spec = ax.built.spec;
    const int m = spec.m;
    const int d = spec.dim_x;
    const long long H = cfg.horizon;

    std::vector<double> mse_exact = exact_mse_series(spec, ax.x_star, H);

    RunRecord rec;
    rec.rate_bound = spec.rate_lambda.value_or(0.0);

    if (cfg.identity_channel) {
        // Same step() path as the quantized run, but over the perfect channel.
        PerfectChannel ch;
        NetState st = init_state(spec);
        std::vector<double> X(static_cast<size_t>(m) * d);
        rec.mse.resize(static_cast<size_t>(H) + 1);
        rec.bits_per_agent.assign(static_cast<size_t>(H) + 1, 0.0);
        rec.cum_bits.assign(static_cast<size_t>(H) + 1, 0.0);
        for (long long k = 0; k <= H; ++k) {
            rec.mse[static_cast<size_t>(k)] = state_mse(spec, st, ax.x_star, X);
            if (k < H) step(spec, st, ch);
        }
        finalize_record(rec, cfg, m, d);
        write_outputs(cfg, ax, rec, mse_exact);
        return rec;
    }

    rec.lambda_hat = fit_rate(mse_exact, cfg.rate_k0, cfg.rate_k1);
    rec.sigma =
        cfg.sigma.absolute ? cfg.sigma.sigma : cfg.sigma.mul * rec.lambda_hat + cfg.sigma.add;
    if (!(rec.sigma > rec.lambda_hat && rec.sigma < 1.0))
        throw std::runtime_error("sigma rule violated: need lambda_hat < sigma < 1 (lambda_hat=" +
                                 std::to_string(rec.lambda_hat) +
                                 ", sigma=" + std::to_string(rec.sigma) + ")");
    rec.omega_bar = omega_bar(rec.sigma, rec.lambda_hat, spec.R, spec.lip);
    rec.omega = cfg.quantizer.omega_absolute ? cfg.quantizer.omega
                                             : cfg.quantizer.omega_frac * rec.omega_bar;
    if (!(rec.omega < rec.omega_bar))
        throw std::runtime_error("omega rule violated: need omega < omega_bar (omega=" +
                                 std::to_string(rec.omega) +
                                 ", omega_bar=" + std::to_string(rec.omega_bar) + ")");
    if (!(rec.omega >= 0.0 && rec.omega < 1.0))
        throw std::runtime_error("omega must lie in [0, 1)");
    rec.eta0 = cfg.quantizer.eta0 ? *cfg.quantizer.eta0 : default_eta0(ax.built.kind);

    const AnqParams qp(rec.eta0, rec.omega, cfg.quantizer.S, cfg.quantizer.mode);
    const int reps = cfg.repetitions;
    const long long check_upto = std::min<long long>(H, 50);
    std::vector<double> mse_sum(static_cast<size_t>(H) + 1, 0.0);
    std::vector<double> bits_sum(static_cast<size_t>(H) + 1, 0.0);
    std::vector<double> X(static_cast<size_t>(m) * d);
    for (int r = 0; r < reps; ++r) {
        AnqChannel ch(qp, rec.sigma, cfg.quantizer.seed + static_cast<std::uint64_t>(r), m);
        const bool checking = (r == 0);
        NetState st = init_state(spec);
        std::vector<double> bits_r(static_cast<size_t>(H) + 1, 0.0);
        for (long long k = 0; k <= H; ++k) {
            mse_sum[static_cast<size_t>(k)] += state_mse(spec, st, ax.x_star, X);
            if (k < H) {
                if (checking) ch.set_recording(k < check_upto);
                StepStats ss = step(spec, st, ch);
                bits_r[static_cast<size_t>(k)] = ss.bits;
                rec.max_abs_index = std::max(rec.max_abs_index, ss.max_abs_index);
            }
        }
        if (checking) verify_bits_accounting(ch.log(), cfg.quantizer.S, bits_r, check_upto);
        for (long long k = 0; k <= H; ++k)
            bits_sum[static_cast<size_t>(k)] += bits_r[static_cast<size_t>(k)];
    }
    rec.mse.resize(static_cast<size_t>(H) + 1);
    rec.bits_per_agent.resize(static_cast<size_t>(H) + 1);
    rec.cum_bits.resize(static_cast<size_t>(H) + 1);
    double cum = 0.0;
    for (long long k = 0; k <= H; ++k) {
        const size_t kk = static_cast<size_t>(k);
        rec.mse[kk] = mse_sum[kk] / reps;
        const double network = bits_sum[kk] / reps;
        cum += network;
        rec.bits_per_agent[kk] = network / m;
        rec.cum_bits[kk] = cum;
    }
    finalize_record(rec, cfg, m, d);
    write_outputs(cfg, ax, rec, mse_exact);
    return rec;
}

RateProbe probe_rate(const ExperimentConfig& cfg) {
    AssembledExperiment ax = assemble(cfg);
    const long long horizon = std::max<long long>(cfg.rate_k1, 2);
    std::vector<double> mse = exact_mse_series(ax.built.spec, ax.x_star, horizon);
    RateProbe pr;
    pr.lambda_hat = fit_rate(mse, cfg.rate_k0, cfg.rate_k1);
    pr.sigma =
        cfg.sigma.absolute ? cfg.sigma.sigma : cfg.sigma.mul * pr.lambda_hat + cfg.sigma.add;
    pr.rate_bound = ax.built.spec.rate_lambda.value_or(0.0);
    pr.omega_bar = (pr.sigma > pr.lambda_hat && pr.sigma < 1.0)
                       ? omega_bar(pr.sigma, pr.lambda_hat, ax.built.spec.R, ax.built.spec.lip)
                       : 0.0;
    return pr;
}

std::vector<SweepPoint> sweep_omega(const ExperimentConfig& cfg, const std::vector<double>& fracs,
                                    double eps) {
    if (fracs.empty()) throw ConfigError("config: omega fraction list must not be empty");
    std::vector<SweepPoint> out;
    for (double f : fracs) {
        if (!(f >= 0.0 && f < 1.0))
            throw ConfigError("config: omega fractions must lie in [0, 1)");
        ExperimentConfig c = cfg;
        c.quantizer.omega_absolute = false;
        c.quantizer.omega_frac = f;
        c.out_dir.clear();
        RunRecord rec = run_experiment(c);
        SweepPoint pt;
        pt.value = f;
        pt.omega = rec.omega;
        pt.sigma = rec.sigma;
        pt.cost = comm_cost(rec, eps);
        out.push_back(pt);
    }
    return out;
}

std::vector<SweepPoint> sweep_sigma(const ExperimentConfig& cfg, const std::vector<double>& sigmas,
                                    double eps) {
    if (sigmas.empty()) throw ConfigError("config: sigma list must not be empty");
    std::vector<SweepPoint> out;
    for (double s : sigmas) {
        if (!(s > 0.0 && s < 1.0)) throw ConfigError("config: sigmas must lie in (0, 1)");
        ExperimentConfig c = cfg;
        c.sigma.absolute = true;
        c.sigma.sigma = s;
        c.out_dir.clear();
        RunRecord rec = run_experiment(c);
        SweepPoint pt;
        pt.value = s;
        pt.omega = rec.omega;
        pt.sigma = rec.sigma;
        pt.cost = comm_cost(rec, eps);
        out.push_back(pt);
    }
    return out;
}

DimensionSweep sweep_dimension(const ExperimentConfig& cfg, const std::vector<int>& d_list,
                               double eps) {
    if (cfg.problem.kind != "linreg" || !(cfg.problem.kappa_target > 1.0))
        throw ConfigError(
            "config: dimension sweep needs problem.kind=linreg with kappa_target > 1 so the "
            "conditioning stays fixed across d");
    if (d_list.empty()) throw ConfigError("config: dimension list must not be empty");
    DimensionSweep sw;
    for (int d : d_list) {
        if (d < 1) throw ConfigError("config: dimensions must be >= 1");
        ExperimentConfig c = cfg;
        c.problem.d = d;
        c.out_dir.clear();
        RunRecord rec = run_experiment(c);
        DimensionPoint pt;
        pt.d = d;
        pt.cost = comm_cost(rec, eps);
        sw.points.push_back(pt);
    }
    std::vector<double> lx, ly;
    for (const DimensionPoint& pt : sw.points)
        if (pt.cost.reached && pt.cost.bits > 0.0) {
            lx.push_back(std::log(static_cast<double>(pt.d)));
            ly.push_back(std::log(pt.cost.bits));
        }
    if (lx.size() >= 2) {
        const size_t n = lx.size();
        double mx = 0.0, my = 0.0;
        for (size_t i = 0; i < n; ++i) {
            mx += lx[i];
            my += ly[i];
        }
        mx /= n;
        my /= n;
        double sxx = 0.0, sxy = 0.0;
        for (size_t i = 0; i < n; ++i) {
            sxx += (lx[i] - mx) * (lx[i] - mx);
            sxy += (lx[i] - mx) * (ly[i] - my);
        }
        if (sxx > 0.0) {
            sw.slope_defined = true;
            sw.slope = sxy / sxx;
        }
    }
    return sw;
}

void emit_csv(const RunRecord& rec, const std::string& path) {
    if (rec.bits_per_agent.size() != rec.mse.size() || rec.cum_bits.size() != rec.mse.size())
        throw std::invalid_argument("emit_csv: series lengths differ");
    std::string out = kCsvHeader;
    out.push_back('\n');
    for (size_t k = 0; k < rec.mse.size(); ++k) {
        out += std::to_string(k);
        out.push_back(',');
        append_double(out, rec.mse[k]);
        out.push_back(',');
        append_double(out, rec.bits_per_agent[k]);
        out.push_back(',');
        append_double(out, rec.cum_bits[k]);
        out.push_back('\n');
    }
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("emit_csv: cannot open " + path);
    os << out;
    if (!os) throw std::runtime_error("emit_csv: write failure on " + path);
}

RunRecord read_csv(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("read_csv: cannot open " + path);
    std::string line;
    if (!std::getline(is, line) || line != kCsvHeader)
        throw std::runtime_error("read_csv: bad header in " + path);
    RunRecord rec;
    long long expect = 0;
    while (std::getline(is, line)) {
        const char* p = line.data();
        const char* end = p + line.size();
        long long k = -1;
        auto r = std::from_chars(p, end, k);
        if (r.ec != std::errc() || r.ptr == end || *r.ptr != ',' || k != expect)
            throw std::runtime_error("read_csv: bad row " + std::to_string(expect));
        p = r.ptr + 1;
        double v[3];
        for (int f = 0; f < 3; ++f) {
            auto rf = std::from_chars(p, end, v[f]);
            if (rf.ec != std::errc()) throw std::runtime_error("read_csv: bad field in row " +
                                                               std::to_string(expect));
            p = rf.ptr;
            if (f < 2) {
                if (p == end || *p != ',')
                    throw std::runtime_error("read_csv: bad field in row " +
                                             std::to_string(expect));
                ++p;
            } else if (p != end) {
                throw std::runtime_error("read_csv: trailing bytes in row " +
                                         std::to_string(expect));
            }
        }
        rec.mse.push_back(v[0]);
        rec.bits_per_agent.push_back(v[1]);
        rec.cum_bits.push_back(v[2]);
        ++expect;
    }
    return rec;
}

std::string summary_json(const RunRecord& rec, const ExperimentConfig& cfg,
                         const StepSizePlan& plan) {
    json j;
    j["algorithm"] = algo_name(cfg.algorithm.kind);
    j["gamma"] = plan.gamma;
    j["nu"] = plan.nu;
    j["step_source"] = plan.source;
    j["lambda_hat"] = rec.lambda_hat;
    j["rate_bound"] = rec.rate_bound;
    j["sigma"] = rec.sigma;
    j["omega"] = rec.omega;
    j["omega_bar"] = rec.omega_bar;
    j["eta0"] = rec.eta0;
    j["horizon"] = static_cast<long long>(rec.mse.size()) - 1;
    j["repetitions"] = cfg.repetitions;
    j["max_abs_index"] = rec.max_abs_index;
    j["bits_per_agent_dim_iter"] = rec.bits_per_agent_dim_iter;
    json costs = json::array();
    for (const EpsCost& c : rec.costs) {
        json e;
        e["eps"] = c.eps;
        e["reached"] = c.reached;
        e["k_eps"] = c.k_eps;
        e["bits"] = c.bits;
        costs.push_back(e);
    }
    j["costs"] = costs;
    return j.dump(2) + "\n";
}

double default_eta0(AlgoKind kind) {
    switch (kind) {
        case AlgoKind::GdStar: return 0.01;
        case AlgoKind::ProxExtra: return 6.67e-4;
        case AlgoKind::ProxNids: return 7.7e-4;
        case AlgoKind::Nids: return 0.1;
        case AlgoKind::ProxNext: return 2.34e-3;
        case AlgoKind::ProxDiging: return 3.05e-3;
        case AlgoKind::Next: return 0.029;
        case AlgoKind::PrimalDual: return 0.01;
    }
    throw std::logic_error("default_eta0: bad kind");
}

}  // namespace qn
