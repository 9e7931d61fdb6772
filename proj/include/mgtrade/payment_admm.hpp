#pragma once

// Payment bargaining among the trading microgrids: distributed ADMM over the
// log Nash product, and the closed-form equal-surplus oracle.

#include <cmath>
#include <cstddef>
#include <optional>
#include <vector>

#include "mgtrade/error.hpp"
#include "mgtrade/matrices.hpp"
#include "mgtrade/messages.hpp"

namespace mgtrade {

/// Cost reductions δ_i = C_i^Non − C_i^O of the trading microgrids.
struct Surplus {
    std::vector<std::size_t> members; // microgrid indices, parallel to delta
    std::vector<double> delta;

    std::size_t size() const { return delta.size(); }
    double total() const {
        double s = 0.0;
        for (double d : delta) s += d;
        return s;
    }

    static Surplus of(std::vector<double> delta) {
        Surplus s;
        for (std::size_t i = 0; i < delta.size(); ++i) s.members.push_back(i);
        s.delta = std::move(delta);
        return s;
    }
};

/// net_i = δ_i − Σδ/|M'|; every member keeps the same share Σδ/|M'|.
inline std::vector<double> nbs_payment_oracle(const Surplus& s) {
    if (s.size() == 0) throw ValidationError("nbs_payment_oracle: need at least one microgrid");
    const double share = s.total() / static_cast<double>(s.size());
    std::vector<double> net;
    for (double d : s.delta) net.push_back(d - share);
    return net;
}

inline double default_eps2(std::size_t traders) { return 1e-6 * static_cast<double>(traders); }

/// As in the energy phase, ρ₂ is relative to the problem scale: the ADMM runs
/// with ρ₂ · rho_scale, where rho_scale defaults to 1/B² for the mean surplus
/// B = Σδ/|M'|. This is the same iteration as running with ρ₂ on payments
/// measured in units of B.
struct P2Options {
    double rho2 = 1.0;
    std::optional<double> rho_scale;
    std::optional<double> eps2; // default_eps2(|M'|) when unset
    int max_iters = 2000;
};

struct ResidualP2 {
    int iteration = 0;
    double residual = 0.0;       // Σ_i ‖π̂_i − π_i‖
    double movement = 0.0;       // Σ_i ‖π̂_i(k) − π̂_i(k−1)‖
    double nash_objective = 0.0; // Σ_i ln(δ_i − Σ_j π_ij) at the local iterates
};

struct AdmmStateP2 {
    PaymentMatrix pi;
    PaymentMatrix pi_hat;
    PaymentMatrix gamma;
    double rho2 = 1.0;
    int k = 0;
    std::vector<ResidualP2> residual_history;

    AdmmStateP2() = default;
    AdmmStateP2(std::size_t traders, double rho) : pi(traders), pi_hat(traders), gamma(traders), rho2(rho) {
        if (!(rho > 0.0)) throw ValidationError("rho2 must be positive");
    }
};

/// Closed-form minimizer of −ln(δ_i − Σ_j π_ij) + Σ_j [ρ/2 (π̂_ij − π_ij)² − γ_ij π_ij].
/// Returns row i of π (own entry zero).
inline std::vector<double> local_step_p2(std::size_t i, double delta_i, const PaymentMatrix& pi_hat,
                                         const PaymentMatrix& gamma, double rho) {
    const std::size_t n = pi_hat.size();
    if (gamma.size() != n) throw DimensionError("local_step_p2: shape mismatch");
    if (i >= n) throw DimensionError("local_step_p2: index out of range");
    if (n < 2) throw ValidationError("local_step_p2: bargaining needs at least two microgrids");
    if (!(rho > 0.0)) throw ValidationError("local_step_p2: rho must be positive");
    double a = delta_i;
    for (std::size_t j = 0; j < n; ++j)
        if (j != i) a -= pi_hat(i, j) + gamma(i, j) / rho;
    const double c = static_cast<double>(n - 1) / rho;
    // Positive root of c μ² + a μ − 1 = 0, written to avoid cancellation for a > 0.
    const double mu = a >= 0.0 ? 2.0 / (a + std::sqrt(a * a + 4.0 * c)) : (-a + std::sqrt(a * a + 4.0 * c)) / (2.0 * c);
    std::vector<double> row(n, 0.0);
    for (std::size_t j = 0; j < n; ++j)
        if (j != i) row[j] = pi_hat(i, j) + (gamma(i, j) - mu) / rho;
    return row;
}

/// π̂_ij = [ρ(π_ij − π_ji) − (γ_ij − γ_ji)] / (2ρ), π̂_ji = −π̂_ij.
inline PaymentMatrix clearing_update_payment(const PaymentMatrix& pi, const PaymentMatrix& gamma, double rho) {
    if (!(rho > 0.0)) throw ValidationError("clearing_update_payment: rho must be positive");
    if (pi.size() != gamma.size()) throw DimensionError("clearing_update_payment: shape mismatch");
    PaymentMatrix out(pi.size());
    for (std::size_t i = 0; i < pi.size(); ++i)
        for (std::size_t j = i + 1; j < pi.size(); ++j) {
            const double v = (rho * (pi(i, j) - pi(j, i)) - (gamma(i, j) - gamma(j, i))) / (2.0 * rho);
            out(i, j) = v;
            out(j, i) = -v;
        }
    return out;
}

/// γ + ρ(π̂ − π), elementwise.
inline PaymentMatrix dual_update_payment(const PaymentMatrix& gamma, const PaymentMatrix& pi_hat,
                                         const PaymentMatrix& pi, double rho) {
    if (!(rho > 0.0)) throw ValidationError("dual_update_payment: rho must be positive");
    if (gamma.size() != pi_hat.size() || gamma.size() != pi.size())
        throw DimensionError("dual_update_payment: shape mismatch");
    PaymentMatrix out = gamma;
    for (std::size_t i = 0; i < out.size(); ++i)
        for (std::size_t j = 0; j < out.size(); ++j)
            if (i != j) out(i, j) += rho * (pi_hat(i, j) - pi(i, j));
    return out;
}

/// One trading microgrid's side of the payment phase; δ_i stays with the agent.
class PaymentAgent {
public:
    PaymentAgent(std::size_t index, std::size_t microgrid, double delta)
        : index_(index), microgrid_(microgrid), delta_(delta) {}

    ProposePayment on_broadcast(const BroadcastPayment& msg) {
        last_ = local_step_p2(index_, delta_, msg.pi_hat, msg.gamma, msg.rho);
        return ProposePayment{microgrid_, last_, msg.k};
    }

    /// ln(δ_i − Σ_j π_ij) at the latest proposal.
    double log_benefit() const {
        double paid = 0.0;
        for (double p : last_) paid += p;
        return std::log(delta_ - paid);
    }

    std::size_t index() const { return index_; }

private:
    std::size_t index_;
    std::size_t microgrid_;
    double delta_;
    std::vector<double> last_;
};

struct P2Result {
    PaymentMatrix payments;  // cleared π̂, exactly antisymmetric
    std::vector<double> net; // Σ_j π̂_ij per member
    int iterations = 0;
    bool converged = false;
    double rho = 0.0; // effective penalty used
    std::vector<ResidualP2> residuals;
};

/// Stops once Σ_i ‖π̂_i − π_i‖ and the movement of π̂ are both at most ε₂.
inline P2Result run_p2(const Surplus& s, const P2Options& opts = {}, const MessageSink& sink = {}) {
    const std::size_t n = s.size();
    if (s.members.size() != n) throw DimensionError("run_p2: members and delta differ in length");
    if (n < 2) throw ValidationError("run_p2: bargaining needs at least two microgrids");
    const double total = s.total();
    if (!(total > 0.0))
        throw NoBargainError("run_p2: total surplus " + std::to_string(total) + " is not positive");
    const double eps2 = opts.eps2.value_or(default_eps2(n));
    if (!(eps2 > 0.0)) throw ValidationError("eps2 must be positive");
    if (opts.max_iters < 1) throw ValidationError("max_iters must be >= 1");
    const double mean = total / static_cast<double>(n);
    const double rho = opts.rho2 * opts.rho_scale.value_or(1.0 / (mean * mean));
    AdmmStateP2 st(n, rho);
    auto emit = [&sink](const Message& m) {
        if (sink) sink(m);
    };

    std::vector<PaymentAgent> agents;
    for (std::size_t i = 0; i < n; ++i) agents.emplace_back(i, s.members[i], s.delta[i]);

    P2Result res;
    while (st.k < opts.max_iters) {
        ++st.k;
        BroadcastPayment b{st.pi_hat, st.gamma, st.rho2, st.k};
        emit(b);
        double nash = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            // Local steps are a handful of flops; running them inline keeps
            // the iteration cheap.
            ProposePayment p = agents[i].on_broadcast(b);
            emit(p);
            for (std::size_t j = 0; j < n; ++j) st.pi(i, j) = p.pi[j];
            nash += agents[i].log_benefit();
        }
        PaymentMatrix pi_hat = clearing_update_payment(st.pi, st.gamma, st.rho2);
        st.gamma = dual_update_payment(st.gamma, pi_hat, st.pi, st.rho2);
        double residual = 0.0, movement = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double r = 0.0, m = 0.0;
            for (std::size_t j = 0; j < n; ++j) {
                r += (pi_hat(i, j) - st.pi(i, j)) * (pi_hat(i, j) - st.pi(i, j));
                m += (pi_hat(i, j) - st.pi_hat(i, j)) * (pi_hat(i, j) - st.pi_hat(i, j));
            }
            residual += std::sqrt(r);
            movement += std::sqrt(m);
        }
        st.pi_hat = std::move(pi_hat);
        st.residual_history.push_back({st.k, residual, movement, nash});
        if (residual <= eps2 && movement <= eps2) {
            res.converged = true;
            break;
        }
    }
    emit(Terminate{Phase::payment, res.converged ? "converged" : "max_iters", st.k, st.pi_hat.data()});

    res.payments = st.pi_hat;
    for (std::size_t i = 0; i < n; ++i) res.net.push_back(res.payments.net(i));
    res.iterations = st.k;
    res.rho = rho;
    res.residuals = std::move(st.residual_history);
    return res;
}

} // namespace mgtrade
