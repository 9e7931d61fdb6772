#pragma once

// End-to-end run: standalone benchmarks, the energy phase, trader selection
// and the payment phase, with every exchange recorded as a message summary.

#include <chrono>
#include <cmath>
#include <string>
#include <vector>

#include "mgtrade/benchmark.hpp"
#include "mgtrade/messages.hpp"
#include "mgtrade/payment_admm.hpp"
#include "mgtrade/trading_admm.hpp"

namespace mgtrade {

struct AlgorithmOptions {
    P1Options p1;
    P2Options p2;
};

struct RunReport {
    std::vector<std::string> ids;
    std::vector<double> cost_no_trading;   // C_i^Non
    std::vector<double> cost_with_trading; // C_i^O at the traded schedule
    std::vector<double> payment;           // net payment, 0 for non-traders
    std::vector<Schedule> schedules;
    TradeMatrix trades;
    double social_cost = 0.0;
    std::vector<std::size_t> traders; // M'
    std::vector<double> delta;        // parallel to traders
    PaymentMatrix payments;           // pairwise, indexed like traders

    int p1_iterations = 0;
    bool p1_converged = false;
    std::vector<ResidualP1> p1_residuals;
    int p2_iterations = 0;
    bool p2_converged = true; // trivially true when no bargaining takes place
    std::vector<ResidualP2> p2_residuals;

    std::vector<std::string> notes;
    std::vector<MessageSummary> trace;
    double wall_clock_seconds = 0.0;

    std::size_t size() const { return ids.size(); }
    double final_cost(std::size_t i) const { return cost_with_trading[i] + payment[i]; }
    double total_no_trading() const {
        double s = 0.0;
        for (double c : cost_no_trading) s += c;
        return s;
    }
    double total_payment() const {
        double s = 0.0;
        for (double p : payment) s += p;
        return s;
    }
};

inline RunReport run_algorithm1(const Scenario& sc, const AlgorithmOptions& opts = {}) {
    const auto start = std::chrono::steady_clock::now();
    check_scenario(sc);
    for (const MicrogridParams& mg : sc.microgrids) precheck_supply(mg, sc.time);
    const std::size_t M = sc.size();
    const std::size_t T = sc.time.slots;

    RunReport rep;
    auto sink = [&rep](const Message& m) { rep.trace.push_back(summarize(m)); };
    for (const MicrogridParams& mg : sc.microgrids) rep.ids.push_back(mg.id);

    const std::vector<BenchmarkResult> bench = solve_benchmarks(sc, opts.p1.qp_tol);
    for (const BenchmarkResult& b : bench) rep.cost_no_trading.push_back(b.cost);

    P1Options p1 = opts.p1;
    if (!p1.rho_scale) p1.rho_scale = energy_rho_scale(sc);
    std::vector<EnergyAgent> agents = make_energy_agents(sc, p1.qp_tol);
    P1Result energy = run_p1(agents, T, p1, sink);
    rep.p1_iterations = energy.iterations;
    rep.p1_converged = energy.converged;
    rep.p1_residuals = std::move(energy.residuals);
    if (!energy.settled) rep.notes.push_back("cleared trades could not be scheduled; trading dropped");

    rep.traders = select_traders(energy.trades, p1.eps_trade);
    rep.trades = energy.trades;
    rep.schedules = std::move(energy.schedules);
    rep.cost_with_trading = energy.costs;
    std::vector<bool> is_trader(M, false);
    for (std::size_t i : rep.traders) is_trader[i] = true;
    // Non-traders keep their standalone schedule and cost.
    for (std::size_t i = 0; i < M; ++i)
        if (!is_trader[i]) {
            rep.schedules[i] = bench[i].schedule;
            rep.cost_with_trading[i] = bench[i].cost;
        }
    for (std::size_t i = 0; i < M; ++i) sink(ReportCost{i, rep.cost_no_trading[i], rep.cost_with_trading[i]});

    rep.payment.assign(M, 0.0);
    auto drop_trading = [&](const std::string& why) {
        rep.notes.push_back(why);
        rep.traders.clear();
        rep.trades = TradeMatrix(M, T);
        for (std::size_t i = 0; i < M; ++i) {
            rep.schedules[i] = bench[i].schedule;
            rep.cost_with_trading[i] = bench[i].cost;
        }
    };
    if (!rep.traders.empty()) {
        Surplus s;
        s.members = rep.traders;
        for (std::size_t i : rep.traders) s.delta.push_back(rep.cost_no_trading[i] - rep.cost_with_trading[i]);
        if (rep.traders.size() < 2) {
            drop_trading("a single trader cannot bargain; trading dropped");
        } else if (!(s.total() > 0.0)) {
            drop_trading("total surplus " + std::to_string(s.total()) + " is not positive; trading dropped");
        } else {
            P2Result pay = run_p2(s, opts.p2, sink);
            rep.delta = s.delta;
            rep.payments = pay.payments;
            for (std::size_t k = 0; k < rep.traders.size(); ++k) rep.payment[rep.traders[k]] = pay.net[k];
            rep.p2_iterations = pay.iterations;
            rep.p2_converged = pay.converged;
            rep.p2_residuals = std::move(pay.residuals);
            for (std::size_t k = 0; k < rep.traders.size(); ++k)
                if (!(pay.net[k] < s.delta[k]))
                    rep.notes.push_back("microgrid " + rep.ids[rep.traders[k]] + " ends above its standalone cost");
        }
    }
    rep.social_cost = 0.0;
    for (double c : rep.cost_with_trading) rep.social_cost += c;
    rep.wall_clock_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rep;
}

inline const std::vector<MessageSummary>& message_trace(const RunReport& report) { return report.trace; }

} // namespace mgtrade
