#pragma once

// Distributed social-cost minimization: each microgrid solves its local QP
// against broadcast cleared trades and duals, the clearing house enforces
// pairwise market clearing in closed form.

#include <algorithm>
#include <cmath>
#include <future>
#include <optional>
#include <vector>

#include "mgtrade/benchmark.hpp"
#include "mgtrade/local_problem.hpp"
#include "mgtrade/matrices.hpp"
#include "mgtrade/messages.hpp"

namespace mgtrade {

enum class RhoSchedule {
    fixed,
    one_over_k, // ρ(k) = ρ₁/k
    residual_balancing,
};

inline const char* to_string(RhoSchedule s) {
    switch (s) {
    case RhoSchedule::fixed: return "fixed";
    case RhoSchedule::one_over_k: return "one-over-k";
    case RhoSchedule::residual_balancing: return "residual-balancing";
    }
    return "unknown";
}

/// 1e-4·√(M(M−1)T), floored at 1e-4 so a lone microgrid still gets a usable tolerance.
inline double default_eps1(std::size_t microgrids, std::size_t slots) {
    const std::size_t pairs = microgrids * (microgrids > 0 ? microgrids - 1 : 0) * slots;
    return 1e-4 * std::sqrt(static_cast<double>(std::max<std::size_t>(pairs, 1)));
}

/// Penalties are given relative to the problem's price and energy scales:
/// the ADMM runs with ρ₁ · rho_scale, where rho_scale defaults to the mean
/// buy price over the mean per-slot demand of a microgrid. This keeps ρ₁ = 1
/// a sensible choice whatever units the scenario uses.
struct P1Options {
    double rho1 = 1.0;
    std::optional<double> rho_scale; // energy_rho_scale(scenario) when unset
    std::optional<double> eps1; // default_eps1(M, T) when unset
    int max_iters = 20000;
    RhoSchedule rho_schedule = RhoSchedule::fixed;
    double eps_trade = 1e-3;
    double qp_tol = 1e-8;
};

struct ResidualP1 {
    int iteration = 0;
    double primal_residual = 0.0; // Σ_i ‖ê_i − e_i‖
    double dual_residual = 0.0;   // ρ Σ_i ‖ê_i(k) − ê_i(k−1)‖
    double objective = 0.0;       // Σ_i C_i^O of the local iterates
    double rho = 0.0;
};

struct AdmmStateP1 {
    TradeMatrix e;
    TradeMatrix e_hat;
    TradeMatrix lambda;
    double rho1 = 1.0;
    int k = 0;
    std::vector<ResidualP1> residual_history;

    AdmmStateP1() = default;
    AdmmStateP1(std::size_t microgrids, std::size_t slots, double rho)
        : e(microgrids, slots), e_hat(microgrids, slots), lambda(microgrids, slots), rho1(rho) {
        if (!(rho > 0.0)) throw ValidationError("rho1 must be positive");
    }
};

struct LocalStepP1 {
    Schedule schedule;
    std::vector<Series> trades; // indexed by counterpart microgrid; own entry is zero
    double cost = 0.0;          // C_i^O of the schedule
    double kkt_residual = 0.0;
};

namespace detail {

inline TradeTerms trade_terms(std::size_t i, const TradeMatrix& target, const TradeMatrix* dual, double rho,
                              TradeTerms::Mode mode) {
    TradeTerms terms;
    terms.mode = mode;
    terms.rho = rho;
    for (std::size_t j = 0; j < target.microgrids(); ++j) {
        if (j == i) continue;
        terms.target.push_back(target.series(i, j));
        if (dual) terms.dual.push_back(dual->series(i, j));
    }
    return terms;
}

inline LocalStepP1 finish_local(std::size_t i, std::size_t microgrids, const LocalProblem& lp, const QpSolution& sol,
                                const MicrogridParams& mg, const GridPrices& prices) {
    LocalStepP1 out;
    out.schedule = extract_schedule(lp.layout, sol.z, mg.storage);
    out.cost = operating_cost(out.schedule, mg, prices);
    out.kkt_residual = sol.kkt_residual;
    const std::vector<Series> e = extract_trades(lp.layout, sol.z);
    out.trades.assign(microgrids, Series(lp.layout.slots, 0.0));
    for (std::size_t j = 0, k = 0; j < microgrids; ++j)
        if (j != i) out.trades[j] = e[k++];
    return out;
}

} // namespace detail

/// Local QP of microgrid i at the current cleared trades and duals.
inline LocalStepP1 local_step_p1(std::size_t i, const MicrogridParams& mg, const GridPrices& prices,
                                 const TimeGrid& time, const TradeMatrix& e_hat, const TradeMatrix& lambda, double rho,
                                 double tol = 1e-8) {
    if (e_hat.microgrids() != lambda.microgrids() || e_hat.slots() != time.slots || lambda.slots() != time.slots)
        throw DimensionError("local_step_p1: trade matrices do not match the scenario");
    if (i >= e_hat.microgrids()) throw DimensionError("local_step_p1: microgrid index out of range");
    const LocalProblem lp =
        build_local_problem(mg, prices, time, detail::trade_terms(i, e_hat, &lambda, rho, TradeTerms::Mode::penalized));
    const QpSolution sol = detail::solve_local(lp, mg, tol);
    return detail::finish_local(i, e_hat.microgrids(), lp, sol, mg, prices);
}

inline LocalStepP1 local_step_p1(std::size_t i, const Scenario& sc, const AdmmStateP1& st, double tol = 1e-8) {
    if (i >= sc.size()) throw DimensionError("local_step_p1: microgrid index out of range");
    return local_step_p1(i, sc.microgrids[i], sc.prices, sc.time, st.e_hat, st.lambda, st.rho1, tol);
}

/// Local schedule with all trades of microgrid i fixed to `trades`.
inline LocalStepP1 settle_local(std::size_t i, const MicrogridParams& mg, const GridPrices& prices,
                                const TimeGrid& time, const TradeMatrix& trades, double tol = 1e-8) {
    const LocalProblem lp =
        build_local_problem(mg, prices, time, detail::trade_terms(i, trades, nullptr, 1.0, TradeTerms::Mode::pinned));
    const QpSolution sol = detail::solve_local(lp, mg, tol);
    return detail::finish_local(i, trades.microgrids(), lp, sol, mg, prices);
}

/// ê_ij = [ρ(e_ij − e_ji) − (λ_ij − λ_ji)] / (2ρ), ê_ji = −ê_ij.
inline TradeMatrix clearing_update_energy(const TradeMatrix& e, const TradeMatrix& lambda, double rho) {
    if (!(rho > 0.0)) throw ValidationError("clearing_update_energy: rho must be positive");
    if (e.microgrids() != lambda.microgrids() || e.slots() != lambda.slots())
        throw DimensionError("clearing_update_energy: shape mismatch");
    TradeMatrix out(e.microgrids(), e.slots());
    for (std::size_t i = 0; i < e.microgrids(); ++i)
        for (std::size_t j = i + 1; j < e.microgrids(); ++j)
            for (std::size_t t = 0; t < e.slots(); ++t) {
                const double v =
                    (rho * (e(i, j, t) - e(j, i, t)) - (lambda(i, j, t) - lambda(j, i, t))) / (2.0 * rho);
                out(i, j, t) = v;
                out(j, i, t) = -v;
            }
    return out;
}

/// λ + ρ(ê − e), elementwise.
inline TradeMatrix dual_update_energy(const TradeMatrix& lambda, const TradeMatrix& e_hat, const TradeMatrix& e,
                                      double rho) {
    if (!(rho > 0.0)) throw ValidationError("dual_update_energy: rho must be positive");
    if (lambda.data().size() != e_hat.data().size() || lambda.data().size() != e.data().size())
        throw DimensionError("dual_update_energy: shape mismatch");
    TradeMatrix out = lambda;
    for (std::size_t n = 0; n < out.data().size(); ++n) out.data()[n] += rho * (e_hat.data()[n] - e.data()[n]);
    return out;
}

/// Microgrids with max_{j,t} |x_ij^t| > eps_trade, in index order.
inline std::vector<std::size_t> select_traders(const TradeMatrix& trades, double eps_trade = 1e-3) {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < trades.microgrids(); ++i) {
        bool trading = false;
        for (std::size_t j = 0; j < trades.microgrids() && !trading; ++j)
            for (std::size_t t = 0; t < trades.slots() && !trading; ++t)
                trading = j != i && std::abs(trades(i, j, t)) > eps_trade;
        if (trading) out.push_back(i);
    }
    return out;
}

/// One microgrid's side of the energy phase. Its scenario data stays private;
/// only proposals leave the agent.
class EnergyAgent {
public:
    EnergyAgent(std::size_t index, MicrogridParams mg, GridPrices prices, TimeGrid time, double qp_tol = 1e-8)
        : index_(index), mg_(std::move(mg)), prices_(std::move(prices)), time_(time), qp_tol_(qp_tol) {}

    ProposeEnergy on_broadcast(const BroadcastEnergy& msg) {
        last_ = local_step_p1(index_, mg_, prices_, time_, msg.e_hat, msg.lambda, msg.rho, qp_tol_);
        return ProposeEnergy{index_, last_.trades, msg.k};
    }

    /// Re-solves with the final cleared trades pinned.
    const LocalStepP1& settle(const TradeMatrix& cleared) {
        last_ = settle_local(index_, mg_, prices_, time_, cleared, qp_tol_);
        return last_;
    }

    const LocalStepP1& last() const { return last_; }
    std::size_t index() const { return index_; }

private:
    std::size_t index_;
    MicrogridParams mg_;
    GridPrices prices_;
    TimeGrid time_;
    double qp_tol_;
    LocalStepP1 last_;
};

struct P1Result {
    std::vector<Schedule> schedules;
    std::vector<double> costs; // C_i^O per microgrid
    TradeMatrix trades;        // cleared, exactly antisymmetric
    double objective = 0.0;    // Σ_i C_i^O
    int iterations = 0;
    bool converged = false;
    bool settled = false; // false when the cleared trades could not be scheduled and trading was dropped
    std::vector<ResidualP1> residuals;
};

namespace detail {

inline double sum_row_norms(const TradeMatrix& a, const TradeMatrix& b) {
    double total = 0.0;
    for (std::size_t i = 0; i < a.microgrids(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < a.microgrids(); ++j)
            for (std::size_t t = 0; t < a.slots(); ++t) {
                const double d = a(i, j, t) - b(i, j, t);
                s += d * d;
            }
        total += std::sqrt(s);
    }
    return total;
}

} // namespace detail

/// Runs the energy phase over the given agents. The iteration stops once the
/// clearing residual Σ_i ‖ê_i − e_i‖ and the movement of the cleared trades
/// Σ_i ‖ê_i(k) − ê_i(k−1)‖ are both at most ε₁. Cleared trades of microgrids
/// that end up below eps_trade everywhere are dropped, then every agent
/// settles on the final trades.
inline P1Result run_p1(std::vector<EnergyAgent>& agents, std::size_t slots, const P1Options& opts,
                       const MessageSink& sink = {}) {
    const std::size_t M = agents.size();
    const double eps1 = opts.eps1.value_or(default_eps1(M, slots));
    if (!(eps1 > 0.0)) throw ValidationError("eps1 must be positive");
    if (opts.max_iters < 1) throw ValidationError("max_iters must be >= 1");
    const double rho_scale = opts.rho_scale.value_or(1.0);
    if (!(rho_scale > 0.0)) throw ValidationError("rho_scale must be positive");
    const double rho0 = opts.rho1 * rho_scale;
    AdmmStateP1 st(M, slots, rho0);
    auto emit = [&sink](const Message& m) {
        if (sink) sink(m);
    };

    P1Result res;
    auto iterate = [&](double eps) {
        while (st.k < opts.max_iters) {
            ++st.k;
            if (opts.rho_schedule == RhoSchedule::one_over_k) st.rho1 = rho0 / st.k;
            BroadcastEnergy b{st.e_hat, st.lambda, st.rho1, st.k};
            emit(b);
            std::vector<std::future<ProposeEnergy>> jobs;
            for (EnergyAgent& a : agents)
                jobs.push_back(std::async(std::launch::async, [&a, &b] { return a.on_broadcast(b); }));
            double objective = 0.0;
            for (std::size_t i = 0; i < M; ++i) {
                ProposeEnergy p = jobs[i].get();
                emit(p);
                for (std::size_t j = 0; j < M; ++j)
                    if (j != i) st.e.set_series(i, j, p.e[j]);
                objective += agents[i].last().cost;
            }
            TradeMatrix e_hat = clearing_update_energy(st.e, st.lambda, st.rho1);
            st.lambda = dual_update_energy(st.lambda, e_hat, st.e, st.rho1);
            const double primal = detail::sum_row_norms(e_hat, st.e);
            const double movement = detail::sum_row_norms(e_hat, st.e_hat);
            st.e_hat = std::move(e_hat);
            st.residual_history.push_back({st.k, primal, st.rho1 * movement, objective, st.rho1});
            if (primal <= eps && movement <= eps) return true;
            if (opts.rho_schedule == RhoSchedule::residual_balancing) {
                const double dual = st.rho1 * movement;
                if (primal > 10.0 * dual) st.rho1 *= 2.0;
                else if (dual > 10.0 * primal) st.rho1 /= 2.0;
            }
        }
        return false;
    };

    // Every agent re-solves with the cleared trades pinned; false if some
    // microgrid cannot absorb its cleared trades.
    auto settle = [&](const TradeMatrix& trades) {
        std::vector<std::future<LocalStepP1>> jobs;
        for (EnergyAgent& a : agents)
            jobs.push_back(std::async(std::launch::async, [&a, &trades] { return a.settle(trades); }));
        std::vector<LocalStepP1> out;
        bool ok = true;
        for (auto& j : jobs) {
            try {
                out.push_back(j.get());
            } catch (const Error&) {
                ok = false;
            }
        }
        if (!ok) return false;
        res.trades = trades;
        res.objective = 0.0;
        res.costs.clear();
        res.schedules.clear();
        for (LocalStepP1& s : out) {
            res.objective += s.cost;
            res.costs.push_back(s.cost);
            res.schedules.push_back(std::move(s.schedule));
        }
        return true;
    };

    // Cleared trades with the rows and columns of non-traders dropped.
    auto cleared = [&] {
        TradeMatrix t = st.e_hat;
        std::vector<bool> is_trader(M, false);
        for (std::size_t i : select_traders(t, opts.eps_trade)) is_trader[i] = true;
        for (std::size_t i = 0; i < M; ++i)
            for (std::size_t j = 0; j < M; ++j)
                if (!is_trader[i] || !is_trader[j])
                    for (std::size_t s = 0; s < slots; ++s) t(i, j, s) = 0.0;
        return t;
    };

    // A cleared point can sit just outside a microgrid's feasible set when the
    // tolerance is loose; tighten and keep iterating in that case.
    double eps = eps1;
    bool settled = false;
    for (;;) {
        res.converged = iterate(eps);
        const TradeMatrix t = cleared();
        emit(Terminate{Phase::energy, res.converged ? "converged" : "max_iters", st.k, t.data()});
        if (settle(t)) {
            settled = true;
            break;
        }
        if (!res.converged || st.k >= opts.max_iters) break;
        eps *= 0.01;
    }
    if (!settled) {
        res.converged = false;
        if (!settle(TradeMatrix(M, slots)))
            throw InfeasibleError("energy phase: local problems are infeasible without trading");
    }
    res.settled = settled;
    res.iterations = st.k;
    res.residuals = std::move(st.residual_history);
    return res;
}

inline double energy_rho_scale(const Scenario& sc) {
    double price = 0.0;
    for (double p : sc.prices.buy) price += p;
    price /= static_cast<double>(sc.time.slots);
    double load = 0.0;
    for (const MicrogridParams& mg : sc.microgrids) {
        for (double b : mg.inelastic_load) load += b;
        for (const UserParams& u : mg.users) load += u.total_demand_kwh;
    }
    load /= static_cast<double>(sc.time.slots * sc.size());
    if (!(price > 0.0) || !(load > 0.0)) return 1.0;
    return price / load;
}

inline std::vector<EnergyAgent> make_energy_agents(const Scenario& sc, double qp_tol = 1e-8) {
    std::vector<EnergyAgent> agents;
    for (std::size_t i = 0; i < sc.size(); ++i) agents.emplace_back(i, sc.microgrids[i], sc.prices, sc.time, qp_tol);
    return agents;
}

inline P1Result run_p1(const Scenario& sc, const P1Options& opts = {}, const MessageSink& sink = {}) {
    check_scenario(sc);
    for (const MicrogridParams& mg : sc.microgrids) precheck_supply(mg, sc.time);
    std::vector<EnergyAgent> agents = make_energy_agents(sc, opts.qp_tol);
    P1Options o = opts;
    if (!o.rho_scale) o.rho_scale = energy_rho_scale(sc);
    return run_p1(agents, sc.time.slots, o, sink);
}

} // namespace mgtrade
