#pragma once

#include <cstdint>

#include "qn/rng.hpp"

namespace qn {

using QuantIndex = long long;

enum class QuantMode { deterministic, probabilistic };

// Non-uniform quantizer configuration. The point family grows geometrically
// away from zero so that the error at index ell stays within eta + omega*|x|;
// eta = 0 is rejected because no finite constellation can satisfy a purely
// multiplicative error bound.
struct AnqParams {
    double eta;
    double omega;
    int S;  // information symbols per codec digit
    QuantMode mode;

    AnqParams(double eta_, double omega_, int S_ = 2,
              QuantMode mode_ = QuantMode::deterministic);
};

// Below this, omega is treated as exactly zero (uniform grid q_ell = 2*eta*ell,
// both modes) instead of evaluating the 0/0 forms.
inline constexpr double kOmegaZeroThreshold = 1e-12;

// Quantization point for index ell.
//   deterministic: q_ell = (eta/omega) * [((1+omega)/(1-omega))^|ell| - 1] * sign(ell)
//   probabilistic: q_ell = (eta/omega) * [(sqrt(1+omega^2)+omega)^(2|ell|) - 1] * sign(ell)
// omega = 0 limit: q_ell = 2*eta*ell.
double quant_point(QuantIndex ell, const AnqParams& p);

// Nearest-point rule (ties toward smaller |ell|); sign(0) = 0.
// Throws std::domain_error when omega = 0 and |x|/(2 eta) exceeds the
// representable index range.
QuantIndex quantize_det(double x, const AnqParams& p);

// Two-point randomized rule over the bracket q_{ell-1} < |x| <= q_ell, chosen
// so that E[q] = x exactly; points are returned with probability 1.
QuantIndex quantize_prob(double x, const AnqParams& p, CounterRng& rng);

void quantize_vector(const double* x, int d, const AnqParams& p, CounterRng& rng,
                     QuantIndex* out);

// Maximum representable range delta for an N-point constellation.
// Odd N uses the symmetric family; even N uses the shifted families.
// eta = 0 returns 0 for every finite N (no finite constellation exists).
double max_range(QuantMode mode, double eta, double omega, long long N);

} // namespace qn
