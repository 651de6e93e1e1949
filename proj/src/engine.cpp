#include "qn/engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "qn/codec.hpp"
#include "qn/kernels.hpp"

namespace qn {

double AlgorithmSpec::state_norm(const double* z_full) const {
    if (norm) return norm(z_full);
    return std::sqrt(kern::nrm2sq(z_full, static_cast<std::size_t>(m) * dim_z));
}

double AlgorithmSpec::state_dist(const double* a, const double* b) const {
    std::vector<double> diff(static_cast<std::size_t>(m) * dim_z);
    kern::sub(a, b, diff.data(), diff.size());
    return state_norm(diff.data());
}

NetState init_state(const AlgorithmSpec& spec) {
    NetState st;
    st.z.assign(static_cast<std::size_t>(spec.m) * spec.dim_z, 0.0);
    st.c_hat.assign(spec.R,
                    std::vector<double>(static_cast<std::size_t>(spec.m) * spec.dim_c, 0.0));
    if (spec.init)
        for (int i = 0; i < spec.m; ++i)
            spec.init(i, st.z.data() + static_cast<std::size_t>(i) * spec.dim_z);
    return st;
}

void Channel::begin_iteration(long long) {}

TransmitResult PerfectChannel::transmit(long long, int, int, const double* c, double* c_hat,
                                        int n) {
    std::copy(c, c + n, c_hat);
    return {};
}

AnqChannel::AnqChannel(const AnqParams& params, double sigma, std::uint64_t seed, int m)
    : params_(params), sigma_(sigma) {
    if (!(sigma > 0.0 && sigma < 1.0))
        throw std::invalid_argument("AnqChannel: sigma must lie in (0,1)");
    if (m < 1) throw std::invalid_argument("AnqChannel: need at least one agent");
    rngs_.reserve(m);
    for (int i = 0; i < m; ++i) rngs_.emplace_back(seed, static_cast<std::uint64_t>(i));
}

double AnqChannel::eta_at(long long k) const {
    return params_.eta * std::pow(sigma_, static_cast<double>(k));
}

TransmitResult AnqChannel::transmit(long long k, int s, int agent, const double* c,
                                    double* c_hat, int n) {
    AnqParams pk(eta_at(k), params_.omega, params_.S, params_.mode);
    TransmitResult res;
    TransmitLog* rec = nullptr;
    if (recording_) {
        log_.push_back({k, s, agent, {}});
        rec = &log_.back();
    }
    for (int j = 0; j < n; ++j) {
        double x = c[j] - c_hat[j];
        QuantIndex idx = params_.mode == QuantMode::deterministic
                             ? quantize_det(x, pk)
                             : quantize_prob(x, pk, rngs_[agent]);
        c_hat[j] += quant_point(idx, pk);
        SymbolSeq seq = encode_index(idx, params_.S);
        res.bits += bit_cost(seq, params_.S);
        res.max_abs_index = std::max(res.max_abs_index, std::llabs(idx));
        if (rec) rec->symbols.insert(rec->symbols.end(), seq.symbols.begin(), seq.symbols.end());
    }
    return res;
}

StepStats step(const AlgorithmSpec& spec, NetState& st, Channel& ch) {
    const int m = spec.m, R = spec.R, dc = spec.dim_c, dz = spec.dim_z;
    ch.begin_iteration(st.k);
    StepStats stats;
    std::vector<double> zeros(static_cast<std::size_t>(m) * dc, 0.0);
    std::vector<double> c_raw(dc);
    for (int s = 1; s <= R; ++s) {
        const double* prev = s == 1 ? zeros.data() : st.c_hat[s - 2].data();
        double* cur = st.c_hat[s - 1].data();
        for (int i = 0; i < m; ++i) {
            spec.comm(s, i, st.z.data() + static_cast<std::size_t>(i) * dz, prev, c_raw.data());
            TransmitResult r =
                ch.transmit(st.k, s, i, c_raw.data(), cur + static_cast<std::size_t>(i) * dc, dc);
            stats.bits += r.bits;
            stats.max_abs_index = std::max(stats.max_abs_index, r.max_abs_index);
        }
    }
    std::vector<const double*> rounds(R);
    for (int s = 0; s < R; ++s) rounds[s] = st.c_hat[s].data();
    std::vector<double> z_next(st.z.size());
    for (int i = 0; i < m; ++i)
        spec.update(i, st.z.data() + static_cast<std::size_t>(i) * dz, rounds,
                    z_next.data() + static_cast<std::size_t>(i) * dz);
    st.z.swap(z_next);
    ++st.k;
    return stats;
}

StepStats step_unquantized(const AlgorithmSpec& spec, NetState& st) {
    PerfectChannel ch;
    return step(spec, st, ch);
}

void primal_matrix(const AlgorithmSpec& spec, const NetState& st, double* x_out) {
    for (int i = 0; i < spec.m; ++i)
        spec.primal(i, st.z.data() + static_cast<std::size_t>(i) * spec.dim_z,
                    x_out + static_cast<std::size_t>(i) * spec.dim_x);
}

double omega_bar(double sigma, double lambda, int R, const LipschitzInfo& lip) {
    if (!(lambda >= 0.0 && sigma > lambda && sigma < 1.0))
        throw std::invalid_argument("omega_bar: need 0 <= lambda < sigma < 1");
    if (R < 1) throw std::invalid_argument("omega_bar: R must be >= 1");
    double psi = std::max(1.0, std::pow(2.0 * lip.L_C, R - 1));
    double gain = R * psi;
    double denom = sigma - lambda + 2.0 * lip.L_A * lip.L_Z * gain * gain;
    return (sigma / R) * (sigma - lambda) / denom;
}

Envelope contraction_envelope(const AlgorithmSpec& spec, const std::vector<double>& z0,
                              const std::vector<double>& z_inf, double sigma, double lambda,
                              double omega, double eta0) {
    const LipschitzInfo& lip = spec.lip;
    const int R = spec.R;
    double wbar = omega_bar(sigma, lambda, R, lip);
    if (!(omega >= 0.0 && omega < wbar))
        throw std::invalid_argument("contraction_envelope: omega must lie in [0, omega_bar)");
    if (!(eta0 > 0.0)) throw std::invalid_argument("contraction_envelope: eta0 must be > 0");

    Envelope e;
    e.psi = std::max(1.0, std::pow(2.0 * lip.L_C, R - 1));

    std::vector<double> c(static_cast<std::size_t>(spec.m) * spec.dim_c);
    std::vector<double> zero_c(c.size(), 0.0);
    double cmax = 0.0;
    for (int s = 1; s <= R; ++s) {
        for (int i = 0; i < spec.m; ++i)
            spec.comm(s, i, z0.data() + static_cast<std::size_t>(i) * spec.dim_z, zero_c.data(),
                      c.data() + static_cast<std::size_t>(i) * spec.dim_c);
        cmax = std::max(cmax, std::sqrt(kern::nrm2sq(c.data(), c.size())));
    }
    e.c_star = cmax / lip.L_Z;

    e.L_A_tilde = 0.0;
    for (int s = 0; s < R; ++s) e.L_A_tilde += std::pow(lip.L_C, s);
    e.L_A_tilde *= lip.L_A;

    double md = static_cast<double>(spec.m) * spec.dim_c;
    double dist = spec.state_dist(z0.data(), z_inf.data());
    double head = std::max(e.c_star, dist);
    double amp = lip.L_A * e.psi * std::sqrt(md) * R * R * eta0 / (sigma - lambda);
    double bracket = 1.0 + (R * omega / sigma) * ((1.0 + lip.L_C * sigma) * e.psi - 1.0);
    e.V0 = head + amp * bracket / (1.0 - omega / wbar);

    double front =
        (std::sqrt(md) * eta0 * (1.0 + lip.L_C * sigma) + 2.0 * lip.L_Z * e.V0) / (sigma - omega);
    double ratio = 2.0 * lip.L_C / (1.0 - omega / sigma);
    double sum = 0.0;
    e.F.resize(R);
    for (int s = 1; s <= R; ++s) {
        sum += std::pow(ratio, s - 1);
        e.F[s - 1] = front * sum;
    }
    return e;
}

double estimate_rate(const std::vector<double>& mse, int k0, int k1) {
    if (k0 < 0 || k1 <= k0 || static_cast<std::size_t>(k1) >= mse.size())
        throw std::invalid_argument("estimate_rate: need 0 <= k0 < k1 < trajectory length");
    double a = mse[k0], b = mse[k1];
    if (!std::isfinite(a) || !std::isfinite(b) || a <= 0.0 || b <= 0.0)
        throw std::invalid_argument("estimate_rate: trajectory values must be finite and positive");
    return std::pow(b / a, 1.0 / (2.0 * (k1 - k0)));
}

std::vector<double> fixed_point(const AlgorithmSpec& spec, long long min_iters, double move_tol,
                                long long cap_factor) {
    if (min_iters < 1) throw std::invalid_argument("fixed_point: min_iters must be >= 1");
    if (cap_factor < 1) throw std::invalid_argument("fixed_point: cap_factor must be >= 1");
    NetState st = init_state(spec);
    for (long long k = 0; k < min_iters; ++k) step_unquantized(spec, st);
    const long long cap = cap_factor * min_iters;
    std::vector<double> prev, diff(st.z.size());
    for (long long k = min_iters; k < cap; ++k) {
        prev = st.z;
        step_unquantized(spec, st);
        kern::sub(st.z.data(), prev.data(), diff.data(), diff.size());
        if (std::sqrt(kern::nrm2sq(diff.data(), diff.size())) <= move_tol) break;
    }
    return st.z;
}

} // namespace qn
