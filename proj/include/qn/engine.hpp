#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qn/quantizer.hpp"
#include "qn/rng.hpp"

namespace qn {

struct LipschitzInfo {
    double L_A = 0.0;  // update sensitivity to any one round's decoded signal
    double L_C = 0.0;  // round-to-round signal sensitivity
    double L_Z = 0.0;  // signal sensitivity to the state
};

// One network optimizer expressed as communicate/update maps over stacked
// agent states. Round index s is 1-based; `c_prev` passed to comm() is the
// decoded network signal of round s-1 within the same iteration (zeros when
// s == 1). Buffers are agent-major: agent i owns [i*dim, (i+1)*dim).
struct AlgorithmSpec {
    std::string name;
    int m = 0;
    int R = 1;
    int dim_z = 0;  // per-agent state size
    int dim_c = 0;  // per-agent communicated signal size
    int dim_x = 0;  // per-agent decision variable size

    std::function<void(int s, int i, const double* z_i, const double* c_prev, double* out)> comm;
    std::function<void(int i, const double* z_i, const std::vector<const double*>& c_rounds,
                       double* z_out)>
        update;
    std::function<void(int i, double* z_i)> init;  // null: zero state
    std::function<void(int i, const double* z_i, double* x_out)> primal;

    LipschitzInfo lip;
    std::optional<double> rate_lambda;          // closed-form contraction factor, when known
    std::function<double(const double*)> norm;  // null: l2 over the stacked state
    std::function<void(CounterRng&, double*)> sample_feasible;  // null: standard normal
    std::string feasible_desc;

    double state_norm(const double* z_full) const;
    double state_dist(const double* a, const double* b) const;
};

struct NetState {
    long long k = 0;
    std::vector<double> z;                   // m * dim_z
    std::vector<std::vector<double>> c_hat;  // R buffers, each m * dim_c
};

NetState init_state(const AlgorithmSpec& spec);

struct TransmitResult {
    double bits = 0.0;
    long long max_abs_index = 0;
};

class Channel {
public:
    virtual ~Channel() = default;
    virtual void begin_iteration(long long k);
    virtual TransmitResult transmit(long long k, int s, int agent, const double* c,
                                    double* c_hat, int n) = 0;
};

// noiseless infinite-precision link: the decoded value equals the input
class PerfectChannel : public Channel {
public:
    TransmitResult transmit(long long, int, int, const double* c, double* c_hat,
                            int n) override;
};

struct TransmitLog {
    long long k;
    int s;
    int agent;
    std::vector<int> symbols;
};

// Differential coding over the adaptive quantizer: each link transmits
// Q_k(c - c_hat) and both ends advance c_hat by the decoded point, so the
// receivers' copies never drift from the sender's. eta shrinks by sigma
// every iteration; omega, S and the mode stay fixed.
class AnqChannel : public Channel {
public:
    AnqChannel(const AnqParams& params, double sigma, std::uint64_t seed, int m);

    TransmitResult transmit(long long k, int s, int agent, const double* c, double* c_hat,
                            int n) override;

    double eta_at(long long k) const;
    const AnqParams& params() const { return params_; }
    double sigma() const { return sigma_; }

    void set_recording(bool on) { recording_ = on; }
    const std::vector<TransmitLog>& log() const { return log_; }

private:
    AnqParams params_;  // eta holds the k = 0 value
    double sigma_;
    std::vector<CounterRng> rngs_;
    bool recording_ = false;
    std::vector<TransmitLog> log_;
};

struct StepStats {
    double bits = 0.0;            // network total this iteration
    long long max_abs_index = 0;  // largest |quantizer index| seen
};

StepStats step(const AlgorithmSpec& spec, NetState& st, Channel& ch);
StepStats step_unquantized(const AlgorithmSpec& spec, NetState& st);

void primal_matrix(const AlgorithmSpec& spec, const NetState& st, double* x_out);

// largest admissible quantizer contrast for a target rate sigma:
//   (sigma/R) * (sigma - lambda) / (sigma - lambda + 2 L_A L_Z (R max{1,(2 L_C)^(R-1)})^2)
double omega_bar(double sigma, double lambda, int R, const LipschitzInfo& lip);

// Coefficients of the linear-rate error envelope V0 * sigma^k and the
// per-round bounds F[s-1] * sigma^k on the quantizer input magnitude.
struct Envelope {
    double psi = 0.0;
    double c_star = 0.0;
    double L_A_tilde = 0.0;
    double V0 = 0.0;
    std::vector<double> F;
};

Envelope contraction_envelope(const AlgorithmSpec& spec, const std::vector<double>& z0,
                              const std::vector<double>& z_inf, double sigma, double lambda,
                              double omega, double eta0);

// geometric-decay fit on an MSE trajectory: (mse[k1]/mse[k0])^(1/(2(k1-k0)))
double estimate_rate(const std::vector<double>& mse, int k0 = 50, int k1 = 100);

// unquantized run to (numerical) convergence; returns the stacked final state
std::vector<double> fixed_point(const AlgorithmSpec& spec, long long min_iters,
                                double move_tol = 1e-9, long long cap_factor = 20);

} // namespace qn
