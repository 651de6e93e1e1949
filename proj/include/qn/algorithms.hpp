#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "qn/engine.hpp"
#include "qn/graph.hpp"
#include "qn/problems.hpp"

namespace qn {

enum class AlgoKind {
    GdStar,
    ProxExtra,
    ProxNids,
    Nids,
    ProxNext,
    ProxDiging,
    Next,
    PrimalDual,
};

const char* algo_name(AlgoKind kind);
AlgoKind algo_from_name(const std::string& name);
// these kinds have no proximal step and reject problems with alpha != 0
bool algo_requires_smooth(AlgoKind kind);

struct StepSizePlan {
    double gamma = 0.0;
    double nu = 0.0;  // spectrum shift applied to the base mixing matrix (0: none)
    double c = 0.0;   // nids auxiliary constant
    std::string source;  // "closed-form", "user", or "searched" (next)
};

struct BuiltAlgorithm {
    AlgorithmSpec spec;
    AlgoKind kind{};
    StepSizePlan plan;
    // true when the Lipschitz constants were estimated by sampling rather
    // than taken from a closed form (next)
    bool lipschitz_measured = false;
};

BuiltAlgorithm build_gd_star(const Problem& p, std::optional<double> gamma = {});
BuiltAlgorithm build_prox_extra(const Problem& p, const GossipMatrix& W,
                                std::optional<double> gamma = {});
BuiltAlgorithm build_prox_nids(const Problem& p, const GossipMatrix& W,
                               std::optional<double> gamma = {});
BuiltAlgorithm build_nids(const Problem& p, const GossipMatrix& W_tilde,
                          std::optional<double> gamma = {}, std::optional<double> c = {});
BuiltAlgorithm build_prox_next(const Problem& p, const GossipMatrix& W,
                               std::optional<double> gamma = {});
BuiltAlgorithm build_prox_diging(const Problem& p, const GossipMatrix& W,
                                 std::optional<double> gamma = {});
BuiltAlgorithm build_next(const Problem& p, const GossipMatrix& W, double gamma);
BuiltAlgorithm build_primal_dual(const Problem& p, const Topology& topo,
                                 std::optional<double> gamma = {});

// Dispatch on kind; applies the kind's default spectrum shift to `base`
// unless `nu` overrides it (nu = 0 forces the unshifted matrix). A missing
// gamma selects the kind's default rule; for next it triggers a
// deterministic step-size search.
BuiltAlgorithm build_algorithm(AlgoKind kind, const Problem& p, const GossipMatrix& base,
                               const Topology& topo, std::optional<double> gamma = {},
                               std::optional<double> nu = {});

// default spectrum shift the dispatcher applies for `kind` (0: none)
double default_shift(AlgoKind kind, double kappa);

// closed-form contraction factors; rho1_L/rho_m1_L are the extreme nonzero
// Laplacian eigenvalues, used only by PrimalDual
double closed_form_rate(AlgoKind kind, double kappa, double rho2, double rho1_L = 0.0,
                   double rho_m1_L = 0.0);

// deterministic probe over a fixed step-size grid for next
double next_gamma_search(const Problem& p, const GossipMatrix& W);

struct LipschitzRatios {
    double A = 0.0;
    double C = 0.0;
    double Z = 0.0;
};

// largest sampled sensitivity ratios of the spec's maps (numerator of A in
// the spec's own norm, everything else in l2)
LipschitzRatios lipschitz_ratios(const AlgorithmSpec& spec, int pairs, std::uint64_t seed);

// ratios inflated by `margin`, packaged as constants for specs lacking
// closed forms
LipschitzInfo measure_lipschitz(const AlgorithmSpec& spec, int pairs, double margin,
                                std::uint64_t seed);

} // namespace qn
