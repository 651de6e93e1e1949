#include "qn/quantizer.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace qn {

namespace {

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

// |q_ell| for ell >= 0; factored so index search works on magnitudes.
inline double point_mag(long long ell, double eta, double omega, QuantMode mode) {
    if (ell == 0) return 0.0;
    if (omega < kOmegaZeroThreshold) return 2.0 * eta * static_cast<double>(ell);
    double g = (mode == QuantMode::deterministic) ? 2.0 * std::atanh(omega)
                                                  : 2.0 * std::asinh(omega);
    return (eta / omega) * std::expm1(static_cast<double>(ell) * g);
}

constexpr double kIndexLimit = 4.6e18;  // ~2^62; conservative ceil-safe bound

} // namespace

AnqParams::AnqParams(double eta_, double omega_, int S_, QuantMode mode_)
    : eta(eta_), omega(omega_), S(S_), mode(mode_) {
    if (!(eta > 0.0))
        throw std::invalid_argument("AnqParams: eta must be > 0 (a finite-point quantizer "
                                    "cannot satisfy a purely multiplicative error bound)");
    if (!(omega >= 0.0 && omega < 1.0))
        throw std::invalid_argument("AnqParams: omega must be in [0,1)");
    if (S < 2) throw std::invalid_argument("AnqParams: S must be >= 2");
}

double quant_point(QuantIndex ell, const AnqParams& p) {
    double mag = point_mag(ell < 0 ? -ell : ell, p.eta, p.omega, p.mode);
    return ell < 0 ? -mag : mag;
}

QuantIndex quantize_det(double x, const AnqParams& p) {
    if (p.mode != QuantMode::deterministic)
        throw std::invalid_argument("quantize_det: params are not deterministic mode");
    if (x == 0.0) return 0;
    double ax = std::fabs(x);
    double s = sgn(x);

    if (p.omega < kOmegaZeroThreshold) {
        double t = ax / (2.0 * p.eta);
        if (t >= kIndexLimit)
            throw std::domain_error("quantize_det: index exceeds representable range "
                                    "(omega = 0 and |x|/(2 eta) too large)");
        // nearest multiple of 2*eta, half-ties toward zero
        double ell = std::ceil(t - 0.5);
        return static_cast<QuantIndex>(s * ell);
    }

    // stable evaluation of Eq.-style index: ceil((ln(1-w) + ln(1 + w|x|/eta)) / (ln(1+w)-ln(1-w)))
    double g = 2.0 * std::atanh(p.omega);
    double u = (std::log1p(-p.omega) + std::log1p(p.omega * ax / p.eta)) / g;
    long long ell = static_cast<long long>(std::ceil(u));
    if (ell < 0) ell = 0;

    // The float ceil can land one off exactly at midpoints; verify against the
    // actual nearest point among {ell-1, ell, ell+1} with ties to smaller ell.
    long long best = ell;
    double best_d = std::numeric_limits<double>::infinity();
    for (long long c = ell > 0 ? ell - 1 : 0; c <= ell + 1; ++c) {
        double d = std::fabs(point_mag(c, p.eta, p.omega, p.mode) - ax);
        if (d < best_d || (d == best_d && c < best)) {
            best_d = d;
            best = c;
        }
    }
    return static_cast<QuantIndex>(s) * best;
}

QuantIndex quantize_prob(double x, const AnqParams& p, CounterRng& rng) {
    if (p.mode != QuantMode::probabilistic)
        throw std::invalid_argument("quantize_prob: params are not probabilistic mode");
    if (x == 0.0) return 0;
    double ax = std::fabs(x);
    long long s = x > 0.0 ? 1 : -1;

    long long hi;
    if (p.omega < kOmegaZeroThreshold) {
        double t = ax / (2.0 * p.eta);
        if (t >= kIndexLimit)
            throw std::domain_error("quantize_prob: index exceeds representable range");
        hi = static_cast<long long>(std::ceil(t));
    } else {
        double g = 2.0 * std::asinh(p.omega);
        hi = static_cast<long long>(std::ceil(std::log1p(p.omega * ax / p.eta) / g));
    }
    if (hi < 1) hi = 1;

    // enforce q_{hi-1} < ax <= q_hi (float ceil may be off by one)
    for (int guard = 0; guard < 4; ++guard) {
        double q_hi = point_mag(hi, p.eta, p.omega, p.mode);
        double q_lo = point_mag(hi - 1, p.eta, p.omega, p.mode);
        if (ax > q_hi) {
            ++hi;
            continue;
        }
        if (hi > 1 && ax <= q_lo) {
            --hi;
            continue;
        }
        if (ax == q_hi) return s * hi;
        double p_hi = (ax - q_lo) / (q_hi - q_lo);
        return s * (rng.uniform01() < p_hi ? hi : hi - 1);
    }
    throw std::runtime_error("quantize_prob: bracket search failed");
}

void quantize_vector(const double* x, int d, const AnqParams& p, CounterRng& rng,
                     QuantIndex* out) {
    if (p.mode == QuantMode::deterministic) {
        for (int i = 0; i < d; ++i) out[i] = quantize_det(x[i], p);
    } else {
        for (int i = 0; i < d; ++i) out[i] = quantize_prob(x[i], p, rng);
    }
}

double max_range(QuantMode mode, double eta, double omega, long long N) {
    if (N < 1) throw std::invalid_argument("max_range: N must be >= 1");
    if (eta == 0.0) return 0.0;  // converse: no finite constellation at eta = 0
    if (!(omega >= 0.0 && omega < 1.0)) throw std::invalid_argument("max_range: bad omega");

    bool odd = (N % 2) != 0;
    if (omega < kOmegaZeroThreshold) {
        // uniform limits of the families below
        if (mode == QuantMode::deterministic) return eta * static_cast<double>(N);
        return eta * static_cast<double>(N - 1);
    }

    if (mode == QuantMode::deterministic) {
        if (odd) {
            auto q = [&](long long ell) { return point_mag(ell, eta, omega, mode); };
            return 0.5 * (q((N - 1) / 2) + q((N + 1) / 2));
        }
        // even-N family: q_ell = (eta/omega) [ (1+w)^ell / (1-w)^(ell-1) - 1 ]
        auto q = [&](long long ell) {
            double e = static_cast<double>(ell);
            return (eta / omega) * std::expm1(e * std::log1p(omega) - (e - 1.0) * std::log1p(-omega));
        };
        return 0.5 * (q(N / 2) + q(N / 2 + 1));
    }

    if (odd) return point_mag((N - 1) / 2, eta, omega, mode);
    // even-N family: q_ell = (eta/omega) [ (sqrt(1+w^2)+w)^(2ell-1) / sqrt(1+w^2) - 1 ]
    auto q = [&](long long ell) {
        double e = static_cast<double>(ell);
        return (eta / omega) *
               std::expm1((2.0 * e - 1.0) * std::asinh(omega) - 0.5 * std::log1p(omega * omega));
    };
    return q(N / 2);
}

} // namespace qn
