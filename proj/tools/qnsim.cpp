#include <cinttypes>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qn/codec.hpp"
#include "qn/harness.hpp"
#include "qn/rng.hpp"

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;

struct CommonOpts {
    CLI::Option* seed = nullptr;
    CLI::Option* out_dir = nullptr;
    CLI::Option* algo = nullptr;
    CLI::Option* eta0 = nullptr;
    CLI::Option* omega_frac = nullptr;
    CLI::Option* sigma = nullptr;
};

struct CliState {
    std::string config_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::string algo;
    double eta0 = 0.0;
    double omega_frac = 0.0;
    double sigma = 0.0;
};

CommonOpts add_common(CLI::App* cmd, CliState& st) {
    CommonOpts o;
    cmd->add_option("config", st.config_path, "JSON experiment config")->required();
    o.seed = cmd->add_option("--seed", st.seed, "override problem, graph and quantizer seeds");
    o.out_dir = cmd->add_option("--out-dir", st.out_dir, "directory for CSV/JSON outputs");
    o.algo = cmd->add_option("--algo", st.algo,
                             "override algorithm kind (gd-star, prox-extra, prox-nids, nids, "
                             "prox-next, prox-diging, next, primal-dual)");
    o.eta0 = cmd->add_option("--eta0", st.eta0, "override quantizer eta0");
    o.omega_frac =
        cmd->add_option("--omega-frac", st.omega_frac, "set omega as this fraction of omega_bar");
    o.sigma = cmd->add_option("--sigma", st.sigma, "set sigma to this absolute value");
    return o;
}

qn::ExperimentConfig config_with_overrides(const CliState& st, const CommonOpts& o) {
    qn::ExperimentConfig cfg = qn::load_config(st.config_path);
    if (o.seed->count()) {
        cfg.problem.seed = st.seed;
        cfg.graph.seed = st.seed;
        cfg.quantizer.seed = st.seed;
    }
    if (o.out_dir->count()) cfg.out_dir = st.out_dir;
    if (o.algo->count()) cfg.algorithm.kind = qn::algo_from_name(st.algo);
    if (o.eta0->count()) {
        if (!(st.eta0 > 0.0)) throw qn::ConfigError("config: --eta0 must be > 0");
        cfg.quantizer.eta0 = st.eta0;
    }
    if (o.omega_frac->count()) {
        if (!(st.omega_frac >= 0.0 && st.omega_frac < 1.0))
            throw qn::ConfigError("config: --omega-frac must lie in [0, 1)");
        cfg.quantizer.omega_absolute = false;
        cfg.quantizer.omega_frac = st.omega_frac;
    }
    if (o.sigma->count()) {
        if (!(st.sigma > 0.0 && st.sigma < 1.0))
            throw qn::ConfigError("config: --sigma must lie in (0, 1)");
        cfg.sigma.absolute = true;
        cfg.sigma.sigma = st.sigma;
    }
    return cfg;
}

void print_costs(const std::vector<qn::EpsCost>& costs) {
    std::printf("%-12s %-8s %-8s %s\n", "eps", "reached", "k_eps", "network_bits");
    for (const qn::EpsCost& c : costs) {
        if (c.reached)
            std::printf("%-12.3g %-8s %-8lld %.0f\n", c.eps, "yes", c.k_eps, c.bits);
        else
            std::printf("%-12.3g %-8s %-8s %.0f (total over horizon)\n", c.eps, "no", "-",
                        c.bits);
    }
}

int cmd_run(const CliState& st, const CommonOpts& o) {
    qn::ExperimentConfig cfg = config_with_overrides(st, o);
    qn::RunRecord rec = qn::run_experiment(cfg);
    std::printf("algorithm              %s\n", qn::algo_name(cfg.algorithm.kind));
    if (cfg.identity_channel) {
        std::printf("channel                identity (no quantization)\n");
    } else {
        std::printf("lambda_hat             %.10g\n", rec.lambda_hat);
        if (rec.rate_bound > 0.0) std::printf("rate_bound             %.10g\n", rec.rate_bound);
        std::printf("sigma                  %.10g\n", rec.sigma);
        std::printf("omega_bar              %.10g\n", rec.omega_bar);
        std::printf("omega                  %.10g\n", rec.omega);
        std::printf("eta0                   %.10g\n", rec.eta0);
        std::printf("max |index|            %lld\n", rec.max_abs_index);
        std::printf("bits/(agent*dim*iter)  %.6g\n", rec.bits_per_agent_dim_iter);
    }
    std::printf("final MSE              %.10g\n", rec.mse.back());
    print_costs(rec.costs);
    if (!cfg.out_dir.empty()) std::printf("outputs written to %s\n", cfg.out_dir.c_str());
    return rec.costs.front().reached || cfg.identity_channel ? 0 : kExitNoConvergence;
}

int cmd_rate(const CliState& st, const CommonOpts& o) {
    qn::ExperimentConfig cfg = config_with_overrides(st, o);
    qn::RateProbe pr = qn::probe_rate(cfg);
    std::printf("algorithm   %s\n", qn::algo_name(cfg.algorithm.kind));
    std::printf("lambda_hat  %.10g\n", pr.lambda_hat);
    if (pr.rate_bound > 0.0) std::printf("rate_bound  %.10g\n", pr.rate_bound);
    std::printf("sigma       %.10g\n", pr.sigma);
    if (pr.omega_bar > 0.0)
        std::printf("omega_bar   %.10g\n", pr.omega_bar);
    else
        std::printf("omega_bar   undefined (sigma rule gives sigma <= lambda_hat)\n");
    return 0;
}

void write_sweep_csv(const std::string& path, const std::vector<qn::SweepPoint>& pts) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path);
    os << "value,omega,sigma,reached,k_eps,bits\n";
    for (const qn::SweepPoint& pt : pts)
        os << pt.value << ',' << pt.omega << ',' << pt.sigma << ',' << (pt.cost.reached ? 1 : 0)
           << ',' << pt.cost.k_eps << ',' << pt.cost.bits << '\n';
}

int report_sweep(const std::vector<qn::SweepPoint>& pts, const char* label,
                 const std::string& out_dir, const char* csv_name) {
    std::printf("%-12s %-12s %-12s %-8s %-8s %s\n", label, "omega", "sigma", "reached", "k_eps",
                "network_bits");
    bool any = false;
    for (const qn::SweepPoint& pt : pts) {
        any = any || pt.cost.reached;
        std::printf("%-12.6g %-12.6g %-12.6g %-8s %-8lld %.0f\n", pt.value, pt.omega, pt.sigma,
                    pt.cost.reached ? "yes" : "no", pt.cost.k_eps, pt.cost.bits);
    }
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        write_sweep_csv(out_dir + "/" + csv_name, pts);
        std::printf("table written to %s/%s\n", out_dir.c_str(), csv_name);
    }
    return any ? 0 : kExitNoConvergence;
}

int cmd_sweep_omega(const CliState& st, const CommonOpts& o, std::vector<double> fracs,
                    double eps, bool eps_set) {
    qn::ExperimentConfig cfg = config_with_overrides(st, o);
    std::string out_dir = cfg.out_dir;
    if (!eps_set) eps = cfg.eps_targets.front();
    std::vector<qn::SweepPoint> pts = qn::sweep_omega(cfg, fracs, eps);
    return report_sweep(pts, "omega_frac", out_dir, "sweep_omega.csv");
}

int cmd_sweep_sigma(const CliState& st, const CommonOpts& o, std::vector<double> sigmas,
                    std::vector<double> tgrid, double eps, bool eps_set) {
    qn::ExperimentConfig cfg = config_with_overrides(st, o);
    std::string out_dir = cfg.out_dir;
    if (!eps_set) eps = cfg.eps_targets.front();
    if (sigmas.empty()) {
        // Map the t-grid onto (lambda_hat, 1): sigma = lambda_hat + t*(1 - lambda_hat).
        qn::RateProbe pr = qn::probe_rate(cfg);
        for (double t : tgrid) {
            if (!(t > 0.0 && t < 1.0))
                throw qn::ConfigError("config: --t-grid entries must lie in (0, 1)");
            sigmas.push_back(pr.lambda_hat + t * (1.0 - pr.lambda_hat));
        }
        std::printf("lambda_hat %.10g; sigma grid from t-grid\n", pr.lambda_hat);
    }
    std::vector<qn::SweepPoint> pts = qn::sweep_sigma(cfg, sigmas, eps);
    return report_sweep(pts, "sigma_target", out_dir, "sweep_sigma.csv");
}

int cmd_sweep_dim(const CliState& st, const CommonOpts& o, const std::vector<int>& dims,
                  double eps, bool eps_set) {
    qn::ExperimentConfig cfg = config_with_overrides(st, o);
    std::string out_dir = cfg.out_dir;
    if (!eps_set) eps = cfg.eps_targets.front();
    qn::DimensionSweep sw = qn::sweep_dimension(cfg, dims, eps);
    std::printf("%-8s %-8s %-8s %s\n", "d", "reached", "k_eps", "network_bits");
    bool any = false;
    for (const qn::DimensionPoint& pt : sw.points) {
        any = any || pt.cost.reached;
        std::printf("%-8d %-8s %-8lld %.0f\n", pt.d, pt.cost.reached ? "yes" : "no",
                    pt.cost.k_eps, pt.cost.bits);
    }
    if (sw.slope_defined)
        std::printf("log-log slope  %.6g\n", sw.slope);
    else
        std::printf("log-log slope  undefined (fewer than two reached points)\n");
    if (!out_dir.empty()) {
        std::filesystem::create_directories(out_dir);
        std::ofstream os(out_dir + "/sweep_dim.csv", std::ios::binary);
        if (!os) throw std::runtime_error("cannot open " + out_dir + "/sweep_dim.csv");
        os << "d,reached,k_eps,bits\n";
        for (const qn::DimensionPoint& pt : sw.points)
            os << pt.d << ',' << (pt.cost.reached ? 1 : 0) << ',' << pt.cost.k_eps << ','
               << pt.cost.bits << '\n';
        std::printf("table written to %s/sweep_dim.csv\n", out_dir.c_str());
    }
    return any ? 0 : kExitNoConvergence;
}

void print_index_report(qn::QuantIndex ell, const qn::AnqParams* params, int S) {
    qn::SymbolSeq seq = qn::encode_index(ell, S);
    std::printf("index           %lld\n", static_cast<long long>(ell));
    std::printf("block           %d\n", qn::block_of(ell, S));
    std::printf("symbols         ");
    for (size_t i = 0; i < seq.symbols.size(); ++i)
        std::printf("%s%d", i ? " " : "", seq.symbols[i]);
    std::printf("\n");
    std::printf("bits            %.10g\n", qn::bit_cost(seq, S));
    std::printf("wire bits/sym   %d\n", qn::wire_bits_per_symbol(S));
    std::vector<std::uint8_t> bytes = qn::pack_symbols(seq.symbols, S);
    std::printf("packed bytes    ");
    for (size_t i = 0; i < bytes.size(); ++i) std::printf("%s%02x", i ? " " : "", bytes[i]);
    std::printf("\n");
    if (params) std::printf("point           %.17g\n", qn::quant_point(ell, *params));
}

int cmd_codec(int S, bool has_index, long long index, bool has_value, double value, double eta,
              double omega, const std::string& mode_name, std::uint64_t qseed) {
    if (S < 2) throw qn::ConfigError("config: --alphabet must be >= 2");
    if (has_index == has_value)
        throw qn::ConfigError("config: codec-inspect needs exactly one of --index | --value");
    if (has_index) {
        print_index_report(index, nullptr, S);
        return 0;
    }
    if (!(eta > 0.0)) throw qn::ConfigError("config: --value needs --eta > 0");
    qn::QuantMode mode;
    if (mode_name == "deterministic")
        mode = qn::QuantMode::deterministic;
    else if (mode_name == "probabilistic")
        mode = qn::QuantMode::probabilistic;
    else
        throw qn::ConfigError("config: --mode must be deterministic | probabilistic");
    qn::AnqParams params(eta, omega, S, mode);
    qn::QuantIndex ell;
    if (mode == qn::QuantMode::deterministic) {
        ell = qn::quantize_det(value, params);
    } else {
        qn::CounterRng rng(qseed, 0);
        ell = qn::quantize_prob(value, params, rng);
    }
    std::printf("value           %.17g\n", value);
    print_index_report(ell, &params, S);
    const double q = qn::quant_point(ell, params);
    std::printf("|q - x|         %.10g\n", std::abs(q - value));
    std::printf("eta+omega|x|    %.10g\n", eta + omega * std::abs(value));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"simulator for linearly convergent decentralized optimization over "
                 "finite-bit adaptive-quantized links"};
    app.require_subcommand(1);

    CliState st;

    CLI::App* run = app.add_subcommand("run", "estimate the rate, tune the quantizer, run it");
    CommonOpts run_o = add_common(run, st);

    CLI::App* rate = app.add_subcommand("rate-estimate", "phase 1 only: fit lambda_hat");
    CommonOpts rate_o = add_common(rate, st);

    CLI::App* swo = app.add_subcommand("sweep-omega", "bit cost across omega/omega_bar fractions");
    CommonOpts swo_o = add_common(swo, st);
    std::vector<double> fracs = {0.0, 0.25, 0.5, 0.75};
    double swo_eps = 0.0;
    swo->add_option("--fracs", fracs, "omega fractions to sweep")->delimiter(',');
    CLI::Option* swo_eps_o = swo->add_option("--eps", swo_eps, "MSE target for the bit cost");

    CLI::App* sws = app.add_subcommand("sweep-sigma", "bit cost across contraction targets");
    CommonOpts sws_o = add_common(sws, st);
    std::vector<double> sigmas;
    std::vector<double> tgrid = {0.02, 0.1, 0.25, 0.5, 0.75, 0.95};
    double sws_eps = 0.0;
    sws->add_option("--sigmas", sigmas, "absolute sigma values")->delimiter(',');
    sws->add_option("--t-grid", tgrid,
                    "when --sigmas is absent: sigma = lambda_hat + t*(1-lambda_hat)")
        ->delimiter(',');
    CLI::Option* sws_eps_o = sws->add_option("--eps", sws_eps, "MSE target for the bit cost");

    CLI::App* swd = app.add_subcommand("sweep-dim", "bit cost across problem dimensions");
    CommonOpts swd_o = add_common(swd, st);
    std::vector<int> dims = {20, 40, 80, 160};
    double swd_eps = 0.0;
    swd->add_option("--dims", dims, "dimensions to sweep")->delimiter(',');
    CLI::Option* swd_eps_o = swd->add_option("--eps", swd_eps, "MSE target for the bit cost");

    CLI::App* codec = app.add_subcommand("codec-inspect", "show the encoding of one index/value");
    int cS = 3;
    long long c_index = 0;
    double c_value = 0.0, c_eta = 0.0, c_omega = 0.0;
    std::string c_mode = "deterministic";
    std::uint64_t c_qseed = 7;
    codec->add_option("--alphabet", cS, "working alphabet size S");
    CLI::Option* c_index_o = codec->add_option("--index", c_index, "quantization index");
    CLI::Option* c_value_o = codec->add_option("--value", c_value, "real value to quantize");
    codec->add_option("--eta", c_eta, "quantizer eta (with --value)");
    codec->add_option("--omega", c_omega, "quantizer omega (with --value)");
    codec->add_option("--mode", c_mode, "deterministic | probabilistic (with --value)");
    codec->add_option("--qseed", c_qseed, "rng seed for probabilistic mode");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (*run) return cmd_run(st, run_o);
        if (*rate) return cmd_rate(st, rate_o);
        if (*swo) return cmd_sweep_omega(st, swo_o, fracs, swo_eps, swo_eps_o->count() > 0);
        if (*sws)
            return cmd_sweep_sigma(st, sws_o, sigmas, tgrid, sws_eps, sws_eps_o->count() > 0);
        if (*swd) return cmd_sweep_dim(st, swd_o, dims, swd_eps, swd_eps_o->count() > 0);
        if (*codec)
            return cmd_codec(cS, c_index_o->count() > 0, c_index, c_value_o->count() > 0, c_value,
                             c_eta, c_omega, c_mode, c_qseed);
    } catch (const qn::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "config: %s\n", e.what());
        return kExitConfig;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
