#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "qn/algorithms.hpp"
#include "qn/engine.hpp"
#include "qn/graph.hpp"
#include "qn/problems.hpp"
#include "qn/quantizer.hpp"

namespace qn {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ProblemSpec {
    std::string kind = "linreg";  // linreg | logreg | quadratic
    int m = 20;
    int d = 40;
    int n = 20;  // rows per agent
    double beta = 0.3;
    double sparsity = 0.7;
    double noise_var = 0.04;
    double alpha = 0.0;
    double kappa_target = 0.0;  // linreg: 0 keeps the default ridge
    double kappa = 10.0;        // quadratic only
    std::uint64_t seed = 1;
};

struct GraphSpec {
    double p = 0.6;
    std::uint64_t seed = 1;
};

struct AlgoConfig {
    AlgoKind kind = AlgoKind::ProxNids;
    std::optional<double> gamma;  // empty: builder default (next: searched)
    std::optional<double> nu;     // empty: kind default shift
};

struct QuantizerConfig {
    QuantMode mode = QuantMode::deterministic;
    std::optional<double> eta0;  // empty: per-kind default
    int S = 3;
    bool omega_absolute = false;
    double omega = 0.0;       // used when omega_absolute
    double omega_frac = 0.5;  // fraction of omega_bar otherwise
    std::uint64_t seed = 77;
};

struct SigmaRule {
    bool absolute = false;
    double sigma = 0.0;  // used when absolute
    double mul = 0.99;   // otherwise sigma = mul*lambda_hat + add
    double add = 0.01;
};

struct ExperimentConfig {
    ProblemSpec problem;
    GraphSpec graph;
    AlgoConfig algorithm;
    QuantizerConfig quantizer;
    SigmaRule sigma;
    long long horizon = 1500;
    int rate_k0 = 50;
    int rate_k1 = 100;
    std::vector<double> eps_targets = {1e-8};
    int repetitions = 1;
    bool identity_channel = false;  // test flag: perfect channel, no tuning phase
    std::string out_dir;            // empty: no files written
};

// Strict parse of the JSON config document; unknown keys anywhere are
// rejected. Throws ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

// MSE = sum_i ||x_i - x*||^2 / (m ||x*||^2) over agent-major X (m blocks of d)
double compute_mse(const double* X, const double* x_star, int m, int d);

struct EpsCost {
    double eps = 0.0;
    bool reached = false;
    long long k_eps = -1;
    double bits = 0.0;  // cumulative network bits through k_eps (total when unreached)
};

struct RunRecord {
    // entry k: MSE before step k, bits transmitted during step k (0 for the
    // final entry, where no step was taken), running network total
    std::vector<double> mse;
    std::vector<double> bits_per_agent;
    std::vector<double> cum_bits;

    double lambda_hat = 0.0;
    double sigma = 0.0;
    double omega = 0.0;
    double omega_bar = 0.0;
    double eta0 = 0.0;
    double rate_bound = 0.0;  // closed-form contraction factor, 0 when unavailable
    long long max_abs_index = 0;
    double bits_per_agent_dim_iter = 0.0;  // horizon average
    std::vector<EpsCost> costs;
};

EpsCost comm_cost(const RunRecord& rec, double eps);

// Phase 1 runs the exact algorithm and fits lambda_hat on the configured
// window (slid earlier when the MSE has hit numerical floor); phase 2 tunes
// sigma/omega/eta by the configured rules and runs over the quantized
// channel, averaging MSE over `repetitions` quantizer seeds. Writes
// unquantized.csv, quantized.csv and summary.json when out_dir is set.
RunRecord run_experiment(const ExperimentConfig& cfg);

struct RateProbe {
    double lambda_hat = 0.0;
    double sigma = 0.0;      // sigma-rule applied to lambda_hat
    double omega_bar = 0.0;  // at that sigma
    double rate_bound = 0.0;
};

// phase 1 only
RateProbe probe_rate(const ExperimentConfig& cfg);

// estimate_rate on [k0, k1], with the window pulled back when the tail of the
// series has flattened onto its attainable floor (plateau or hard underflow)
double fit_rate(const std::vector<double>& mse, int k0, int k1);

struct SweepPoint {
    double value = 0.0;  // the swept quantity (omega fraction or sigma)
    double omega = 0.0;
    double sigma = 0.0;
    EpsCost cost;
};

std::vector<SweepPoint> sweep_omega(const ExperimentConfig& cfg,
                                    const std::vector<double>& fracs, double eps);
std::vector<SweepPoint> sweep_sigma(const ExperimentConfig& cfg,
                                    const std::vector<double>& sigmas, double eps);

struct DimensionPoint {
    int d = 0;
    EpsCost cost;
};

struct DimensionSweep {
    std::vector<DimensionPoint> points;
    bool slope_defined = false;
    double slope = 0.0;  // log-log least squares over reached points
};

// requires linreg with kappa_target > 1 so the conditioning stays fixed
DimensionSweep sweep_dimension(const ExperimentConfig& cfg, const std::vector<int>& d_list,
                               double eps);

// header "k,mse,bits_per_agent,cum_bits_network"; 17 significant digits,
// byte-deterministic
void emit_csv(const RunRecord& rec, const std::string& path);
// parses the three series back (summary fields are left at defaults)
RunRecord read_csv(const std::string& path);

// summary fields as a deterministic JSON document
std::string summary_json(const RunRecord& rec, const ExperimentConfig& cfg,
                         const StepSizePlan& plan);

// per-kind eta^0 defaults used when the config leaves eta0 unset
double default_eta0(AlgoKind kind);

struct AssembledExperiment {
    Problem problem;
    Topology topo;
    GossipMatrix base;
    BuiltAlgorithm built;
    std::vector<double> x_star;
};

// problem + graph + algorithm + reference solution for cfg
AssembledExperiment assemble(const ExperimentConfig& cfg);

} // namespace qn
