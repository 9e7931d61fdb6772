#pragma once

// Centralized reference solutions used to check the distributed results.
// The stacked QP is assembled here from scratch (storage levels eliminated,
// one variable per trading pair) and shares no assembly code with the local
// problems.

#include <cmath>
#include <vector>

#include <Eigen/Sparse>

#include "mgtrade/clearinghouse.hpp"
#include "mgtrade/domain.hpp"
#include "mgtrade/matrices.hpp"
#include "mgtrade/payment_admm.hpp"
#include "mgtrade/qp.hpp"

namespace mgtrade {

struct CentralizedSolution {
    std::vector<Schedule> schedules;
    std::vector<double> costs;
    TradeMatrix trades;
    double objective = 0.0;    // Σ_i C_i^O of the extracted schedules
    double qp_objective = 0.0; // same quantity read off the stacked QP
    double kkt_residual = 0.0;
    QpStatus status = QpStatus::max_iters;
};

inline CentralizedSolution centralized_p1(const Scenario& sc, double tol = 1e-8) {
    check_scenario(sc);
    for (const MicrogridParams& mg : sc.microgrids) precheck_supply(mg, sc.time);
    const std::size_t M = sc.size();
    const std::size_t T = sc.time.slots;
    const double h = sc.time.slot_hours;

    // Column offsets: per microgrid [g | qb | qs | rc | rd | x_1 .. x_N], then pair trades.
    std::vector<Index> base(M);
    Index n = 0;
    for (std::size_t i = 0; i < M; ++i) {
        base[i] = n;
        n += static_cast<Index>((5 + sc.microgrids[i].users.size()) * T);
    }
    auto col = [&](std::size_t i, std::size_t block, std::size_t t) {
        return base[i] + static_cast<Index>(block * T + t);
    };
    const Index trade_base = n;
    auto pair_col = [&](std::size_t i, std::size_t j, std::size_t t) { // i < j, value = e_ij
        const std::size_t p = i * M - i * (i + 1) / 2 + (j - i - 1);
        return trade_base + static_cast<Index>(p * T + t);
    };
    n += static_cast<Index>(M * (M - 1) / 2 * T);

    Vector q = Vector::Zero(n), lb(n), ub(n);
    lb.setConstant(-kInfinity);
    ub.setConstant(kInfinity);
    std::vector<Eigen::Triplet<double>> P, A, G;
    std::vector<double> beq, hin;
    double constant = 0.0;

    for (std::size_t i = 0; i < M; ++i) {
        const MicrogridParams& mg = sc.microgrids[i];
        const StorageParams& st = mg.storage;
        const double cs = st.amortized_cost_per_kwh;
        const double in = st.eff_charge, out = 1.0 / st.eff_discharge;
        for (std::size_t t = 0; t < T; ++t) {
            const double avail = mg.wind_fraction[t] * mg.wind_capacity_kw * h;
            lb[col(i, 0, t)] = 0.0, ub[col(i, 0, t)] = avail;
            lb[col(i, 1, t)] = 0.0, ub[col(i, 1, t)] = mg.max_buy_kw * h, q[col(i, 1, t)] = sc.prices.buy[t];
            lb[col(i, 2, t)] = 0.0, ub[col(i, 2, t)] = mg.max_sell_kw * h, q[col(i, 2, t)] = -sc.prices.sell[t];
            lb[col(i, 3, t)] = 0.0, ub[col(i, 3, t)] = st.max_charge_kw * h, q[col(i, 3, t)] = cs;
            lb[col(i, 4, t)] = 0.0, ub[col(i, 4, t)] = st.max_discharge_kw * h, q[col(i, 4, t)] = cs;
            for (std::size_t u = 0; u < mg.users.size(); ++u) {
                const UserParams& user = mg.users[u];
                const Index c = col(i, 5 + u, t);
                lb[c] = user.min_load[t], ub[c] = user.max_load[t];
                P.emplace_back(c, c, 2.0 * user.discomfort_weight);
                q[c] = -2.0 * user.discomfort_weight * user.preferred[t];
                constant += user.discomfort_weight * user.preferred[t] * user.preferred[t];
            }

            // Level after slot t, as s^0 + Σ_{τ≤t} (η_c r_c − r_d/η_d).
            const double s0 = st.initial_level_kwh;
            auto level_row = [&](double sign) {
                const Index r = static_cast<Index>(hin.size());
                for (std::size_t k = 0; k <= t; ++k) {
                    G.emplace_back(r, col(i, 3, k), sign * in);
                    G.emplace_back(r, col(i, 4, k), -sign * out);
                }
                return r;
            };
            level_row(1.0);
            hin.push_back(st.capacity_kwh - s0); // s^t ≤ S
            level_row(-1.0);
            hin.push_back(s0 - st.min_level()); // s^t ≥ (1 − DoD) S
            // q_s + g ≤ η G + s^t
            const Index r = level_row(-1.0);
            G.emplace_back(r, col(i, 2, t), 1.0);
            G.emplace_back(r, col(i, 0, t), 1.0);
            hin.push_back(avail + s0);

            // Balance.
            const Index b = static_cast<Index>(beq.size());
            A.emplace_back(b, col(i, 0, t), 1.0);
            A.emplace_back(b, col(i, 1, t), 1.0);
            A.emplace_back(b, col(i, 4, t), 1.0);
            A.emplace_back(b, col(i, 2, t), -1.0);
            A.emplace_back(b, col(i, 3, t), -1.0);
            for (std::size_t u = 0; u < mg.users.size(); ++u) A.emplace_back(b, col(i, 5 + u, t), -1.0);
            for (std::size_t j = 0; j < M; ++j) {
                if (j > i) A.emplace_back(b, pair_col(i, j, t), 1.0);
                if (j < i) A.emplace_back(b, pair_col(j, i, t), -1.0);
            }
            beq.push_back(mg.inelastic_load[t]);
        }
        // Terminal level equals the initial level.
        const Index r = static_cast<Index>(beq.size());
        for (std::size_t t = 0; t < T; ++t) {
            A.emplace_back(r, col(i, 3, t), in);
            A.emplace_back(r, col(i, 4, t), -out);
        }
        beq.push_back(0.0);
        for (std::size_t u = 0; u < mg.users.size(); ++u) {
            const Index row = static_cast<Index>(beq.size());
            for (std::size_t t = 0; t < T; ++t) A.emplace_back(row, col(i, 5 + u, t), 1.0);
            beq.push_back(mg.users[u].total_demand_kwh);
        }
    }

    QpProblem qp;
    qp.P.resize(n, n);
    qp.P.setFromTriplets(P.begin(), P.end());
    qp.q = q;
    qp.lb = lb;
    qp.ub = ub;
    qp.Aeq.resize(static_cast<Index>(beq.size()), n);
    qp.Aeq.setFromTriplets(A.begin(), A.end());
    qp.beq = Eigen::Map<const Vector>(beq.data(), static_cast<Index>(beq.size()));
    qp.Gineq.resize(static_cast<Index>(hin.size()), n);
    qp.Gineq.setFromTriplets(G.begin(), G.end());
    qp.hineq = Eigen::Map<const Vector>(hin.data(), static_cast<Index>(hin.size()));

    QpSettings settings;
    settings.tol = tol;
    settings.max_iters = 200;
    const QpSolution sol = solve_qp(qp, settings);
    if (sol.status == QpStatus::infeasible) throw InfeasibleError("centralized problem is infeasible");

    CentralizedSolution out;
    out.status = sol.status;
    out.kkt_residual = sol.kkt_residual;
    out.trades = TradeMatrix(M, T);
    for (std::size_t i = 0; i < M; ++i)
        for (std::size_t j = i + 1; j < M; ++j)
            for (std::size_t t = 0; t < T; ++t) {
                out.trades(i, j, t) = sol.z[pair_col(i, j, t)];
                out.trades(j, i, t) = -sol.z[pair_col(i, j, t)];
            }
    for (std::size_t i = 0; i < M; ++i) {
        const MicrogridParams& mg = sc.microgrids[i];
        Schedule s = Schedule::zeros(T, mg.users.size());
        for (std::size_t t = 0; t < T; ++t) {
            s.wind_use[t] = std::max(0.0, sol.z[col(i, 0, t)]);
            s.grid_buy[t] = std::max(0.0, sol.z[col(i, 1, t)]);
            s.grid_sell[t] = std::max(0.0, sol.z[col(i, 2, t)]);
            s.charge[t] = std::max(0.0, sol.z[col(i, 3, t)]);
            s.discharge[t] = std::max(0.0, sol.z[col(i, 4, t)]);
            for (std::size_t u = 0; u < mg.users.size(); ++u) s.elastic[u][t] = sol.z[col(i, 5 + u, t)];
        }
        s.storage_level = storage_trajectory(s.charge, s.discharge, mg.storage);
        out.costs.push_back(operating_cost(s, mg, sc.prices));
        out.objective += out.costs.back();
        out.schedules.push_back(std::move(s));
    }
    out.qp_objective = sol.objective + constant;
    return out;
}

struct Certificate {
    bool passed = false;
    double objective_gap = 0.0;  // |distributed − centralized| / max(1, |centralized|)
    double payment_error = 0.0;  // max |net − oracle net|, non-traders against 0
    double zero_sum_error = 0.0; // |Σ net|
    bool converged = false;
    std::vector<std::string> failures;
};

inline Certificate certify(const RunReport& report, const CentralizedSolution& central, double tol_rel = 1e-3,
                           double payment_tol = 1e-4) {
    Certificate c;
    c.objective_gap = std::abs(report.social_cost - central.objective) / std::max(1.0, std::abs(central.objective));
    std::vector<double> expected(report.size(), 0.0);
    if (!report.traders.empty()) {
        Surplus s;
        s.members = report.traders;
        s.delta = report.delta;
        const std::vector<double> net = nbs_payment_oracle(s);
        for (std::size_t k = 0; k < report.traders.size(); ++k) expected[report.traders[k]] = net[k];
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < report.size(); ++i) {
        c.payment_error = std::max(c.payment_error, std::abs(report.payment[i] - expected[i]));
        sum += report.payment[i];
    }
    c.zero_sum_error = std::abs(sum);
    c.converged = report.p1_converged && report.p2_converged;

    if (!(c.objective_gap <= tol_rel)) c.failures.push_back("objective gap " + std::to_string(c.objective_gap));
    if (!(c.payment_error <= payment_tol))
        c.failures.push_back("payments differ from the bargaining oracle by " + std::to_string(c.payment_error));
    if (!(c.zero_sum_error <= 1e-9)) c.failures.push_back("payments do not sum to zero");
    if (!c.converged) c.failures.push_back("iteration limit reached before convergence");
    c.passed = c.failures.empty();
    return c;
}

} // namespace mgtrade
