#pragma once

// Per-microgrid QP: the standalone cost minimization (no trading) and its
// trading variant with counterpart exchanges e_{i,j}^t in the balance.

#include <cstddef>
#include <algorithm>
#include <vector>

#include "mgtrade/domain.hpp"
#include "mgtrade/qp.hpp"

namespace mgtrade {

/// How counterpart trades enter the local problem.
struct TradeTerms {
    enum class Mode {
        none,      // no trade variables at all
        penalized, // free trades with ρ/2·(target − e)² − dual·e added to the cost
        pinned,    // trades fixed to `target`
    };

    Mode mode = Mode::none;
    std::vector<Series> target; // one per counterpart: ê_{i,j} (penalized) or e_{i,j} (pinned)
    std::vector<Series> dual;   // λ_{i,j}, penalized mode only
    double rho = 1.0;

    std::size_t counterparts() const { return mode == Mode::none ? 0 : target.size(); }
};

/// Column layout of the local QP.
struct LocalLayout {
    std::size_t slots = 0;
    std::size_t users = 0;
    std::size_t counterparts = 0;

    Index wind(std::size_t t) const { return at(0, t); }
    Index buy(std::size_t t) const { return at(1, t); }
    Index sell(std::size_t t) const { return at(2, t); }
    Index charge(std::size_t t) const { return at(3, t); }
    Index discharge(std::size_t t) const { return at(4, t); }
    Index level(std::size_t t) const { return at(5, t); }
    Index elastic(std::size_t n, std::size_t t) const { return at(6 + n, t); }
    Index trade(std::size_t k, std::size_t t) const { return at(6 + users + k, t); }
    Index size() const { return static_cast<Index>((6 + users + counterparts) * slots); }

private:
    Index at(std::size_t block, std::size_t t) const { return static_cast<Index>(block * slots + t); }
};

struct LocalProblem {
    LocalLayout layout;
    QpProblem qp;
    double constant = 0.0; // objective terms independent of the variables
};

inline LocalProblem build_local_problem(const MicrogridParams& mg, const GridPrices& prices, const TimeGrid& time,
                                        const TradeTerms& trades = {}) {
    const std::size_t T = time.slots;
    const double h = time.slot_hours;
    LocalProblem lp;
    LocalLayout& L = lp.layout;
    L.slots = T;
    L.users = mg.users.size();
    L.counterparts = trades.counterparts();
    for (const Series& s : trades.target) detail::require_length(s, T, "local problem: trade target");
    if (trades.mode == TradeTerms::Mode::penalized) {
        if (trades.dual.size() != trades.target.size())
            throw DimensionError("local problem: need one dual series per counterpart");
        for (const Series& s : trades.dual) detail::require_length(s, T, "local problem: trade dual");
        if (!(trades.rho > 0.0)) throw ValidationError("local problem: rho must be positive");
    }

    const StorageParams& st = mg.storage;
    QpBuilder b;
    // Variables are added in layout order.
    for (std::size_t t = 0; t < T; ++t) b.add_variable(0.0, mg.wind_fraction[t] * mg.wind_capacity_kw * h);
    for (std::size_t t = 0; t < T; ++t) b.add_variable(0.0, mg.max_buy_kw * h, prices.buy[t]);
    for (std::size_t t = 0; t < T; ++t) b.add_variable(0.0, mg.max_sell_kw * h, -prices.sell[t]);
    for (std::size_t t = 0; t < T; ++t) b.add_variable(0.0, st.max_charge_kw * h, st.amortized_cost_per_kwh);
    for (std::size_t t = 0; t < T; ++t) b.add_variable(0.0, st.max_discharge_kw * h, st.amortized_cost_per_kwh);
    for (std::size_t t = 0; t < T; ++t) b.add_variable(st.min_level(), st.capacity_kwh);
    for (const UserParams& u : mg.users) {
        // β(x − y)² = β x² − 2βy x + βy²
        for (std::size_t t = 0; t < T; ++t) {
            b.add_variable(u.min_load[t], u.max_load[t], -2.0 * u.discomfort_weight * u.preferred[t],
                           2.0 * u.discomfort_weight);
            lp.constant += u.discomfort_weight * u.preferred[t] * u.preferred[t];
        }
    }
    for (std::size_t k = 0; k < L.counterparts; ++k) {
        for (std::size_t t = 0; t < T; ++t) {
            const double target = trades.target[k][t];
            if (trades.mode == TradeTerms::Mode::pinned) {
                b.add_variable(target, target);
            } else {
                // ρ/2(ê − e)² − λe = ρ/2 e² − (ρê + λ)e + ρ/2 ê²
                b.add_variable(-kInfinity, kInfinity, -(trades.rho * target + trades.dual[k][t]), trades.rho);
                lp.constant += 0.5 * trades.rho * target * target;
            }
        }
    }

    for (std::size_t t = 0; t < T; ++t) {
        // Storage dynamics: s^t − s^{t−1} − η_c r_c^t + r_d^t/η_d = 0
        std::vector<QpBuilder::Term> dyn{{L.level(t), 1.0},
                                         {L.charge(t), -st.eff_charge},
                                         {L.discharge(t), 1.0 / st.eff_discharge}};
        double rhs = 0.0;
        if (t == 0) rhs = st.initial_level_kwh;
        else dyn.push_back({L.level(t - 1), -1.0});
        b.add_equality(dyn, rhs);

        // Balance: g + q_b + r_d + Σ_j e_j − q_s − r_c − Σ_n x_n = b^t
        std::vector<QpBuilder::Term> bal{{L.wind(t), 1.0},   {L.buy(t), 1.0},     {L.discharge(t), 1.0},
                                         {L.sell(t), -1.0},  {L.charge(t), -1.0}};
        for (std::size_t n = 0; n < L.users; ++n) bal.push_back({L.elastic(n, t), -1.0});
        for (std::size_t k = 0; k < L.counterparts; ++k) bal.push_back({L.trade(k, t), 1.0});
        b.add_equality(bal, mg.inelastic_load[t]);

        // Sale availability: q_s + g − s ≤ η G
        b.add_inequality({{L.sell(t), 1.0}, {L.wind(t), 1.0}, {L.level(t), -1.0}},
                         mg.wind_fraction[t] * mg.wind_capacity_kw * h);
    }
    b.add_equality({{L.level(T - 1), 1.0}}, st.initial_level_kwh);
    for (std::size_t n = 0; n < L.users; ++n) {
        std::vector<QpBuilder::Term> total;
        for (std::size_t t = 0; t < T; ++t) total.push_back({L.elastic(n, t), 1.0});
        b.add_equality(total, mg.users[n].total_demand_kwh);
    }
    lp.qp = b.build();
    return lp;
}

/// Unpacks the schedule; storage levels are recomputed from the recurrence.
inline Schedule extract_schedule(const LocalLayout& L, const Vector& z, const StorageParams& storage) {
    Schedule s = Schedule::zeros(L.slots, L.users);
    for (std::size_t t = 0; t < L.slots; ++t) {
        s.wind_use[t] = z[L.wind(t)];
        s.grid_buy[t] = z[L.buy(t)];
        s.grid_sell[t] = z[L.sell(t)];
        s.charge[t] = z[L.charge(t)];
        s.discharge[t] = z[L.discharge(t)];
        for (std::size_t n = 0; n < L.users; ++n) s.elastic[n][t] = z[L.elastic(n, t)];
    }
    // Interior-point iterates may sit a hair below zero on bounded coordinates.
    for (Series* v : {&s.wind_use, &s.grid_buy, &s.grid_sell, &s.charge, &s.discharge})
        for (double& x : *v) x = std::max(x, 0.0);
    s.storage_level = storage_trajectory(s.charge, s.discharge, storage);
    return s;
}

inline std::vector<Series> extract_trades(const LocalLayout& L, const Vector& z) {
    std::vector<Series> e(L.counterparts, Series(L.slots));
    for (std::size_t k = 0; k < L.counterparts; ++k)
        for (std::size_t t = 0; t < L.slots; ++t) e[k][t] = z[L.trade(k, t)];
    return e;
}

} // namespace mgtrade
