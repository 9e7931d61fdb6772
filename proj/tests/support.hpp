#pragma once

// Fixtures and independent oracles shared by the unit tests and the
// acceptance binary. Nothing here calls the closed forms under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "mgtrade/mgtrade.hpp"

namespace mgtrade::testing {

inline Scenario desk_scenario() { return generate_scenario(GeneratorOptions{}); }

/// Generator scenario with 1..max_microgrids microgrids and 1..3 users.
inline Scenario random_scenario(std::uint64_t seed, std::size_t max_microgrids = 4, std::size_t min_microgrids = 2) {
    std::mt19937_64 rng(seed * 7919 + 17);
    GeneratorOptions g;
    g.microgrids = min_microgrids + rng() % (max_microgrids - min_microgrids + 1);
    g.users = 1 + rng() % 3;
    g.seed = seed + 100;
    return generate_scenario(g);
}

/// One microgrid with nothing in it: no wind, no load, no storage.
inline MicrogridParams empty_microgrid(std::size_t T, const std::string& id = "0") {
    MicrogridParams mg;
    mg.id = id;
    mg.wind_fraction.assign(T, 0.0);
    mg.inelastic_load.assign(T, 0.0);
    mg.max_buy_kw = 100.0;
    mg.max_sell_kw = 100.0;
    mg.storage.dod = 1.0;
    return mg;
}

inline GridPrices flat_prices(std::size_t T, double buy, double sell) {
    return {Series(T, buy), Series(T, sell)};
}

/// Two microgrids over `T` slots: "wind" has a large turbine and no load,
/// "load" has no turbine and a steady demand. Prices make trading worthwhile.
inline Scenario complementary_pair(std::size_t T = 4) {
    Scenario sc;
    sc.time = {T, 1.0};
    sc.prices = flat_prices(T, 0.3, 0.05);
    MicrogridParams w = empty_microgrid(T, "wind");
    w.wind_capacity_kw = 100.0;
    w.wind_fraction.assign(T, 0.8);
    MicrogridParams l = empty_microgrid(T, "load");
    l.inelastic_load.assign(T, 50.0);
    UserParams u;
    u.preferred.assign(T, 5.0);
    u.min_load.assign(T, 2.0);
    u.max_load.assign(T, 8.0);
    u.total_demand_kwh = 5.0 * static_cast<double>(T);
    u.discomfort_weight = 0.5;
    l.users.push_back(u);
    sc.microgrids = {w, l};
    return sc;
}

/// Scenario made of `copies` copies of microgrid `k` of the desk scenario.
inline Scenario identical_microgrids(std::size_t copies, std::size_t k = 1) {
    Scenario desk = desk_scenario();
    Scenario sc;
    sc.time = desk.time;
    sc.prices = desk.prices;
    for (std::size_t c = 0; c < copies; ++c) {
        MicrogridParams mg = desk.microgrids[k];
        mg.id = "copy" + std::to_string(c);
        sc.microgrids.push_back(mg);
    }
    return sc;
}

// ---------------------------------------------------------------------------
// Independent oracles

/// Minimizer of Σ_k [λ_k (u_k − e_k) + ρ/2 (u_k − e_k)²] over (u_1, u_2)
/// subject to u_1 + u_2 = 0, from the dense 3x3 KKT system.
inline std::pair<double, double> pair_clearing_oracle(double e12, double e21, double l12, double l21, double rho) {
    Eigen::Matrix3d K;
    K << rho, 0.0, 1.0, 0.0, rho, 1.0, 1.0, 1.0, 0.0;
    Eigen::Vector3d rhs(rho * e12 - l12, rho * e21 - l21, 0.0);
    const Eigen::Vector3d x = K.fullPivLu().solve(rhs);
    return {x[0], x[1]};
}

/// Same pair problem through the QP subsolver.
inline std::pair<double, double> pair_clearing_qp(double e12, double e21, double l12, double l21, double rho) {
    QpBuilder b;
    const Index u = b.add_variable(-kInfinity, kInfinity, l12 - rho * e12, rho);
    const Index v = b.add_variable(-kInfinity, kInfinity, l21 - rho * e21, rho);
    b.add_equality({{u, 1.0}, {v, 1.0}}, 0.0);
    QpSettings s;
    s.tol = 1e-12;
    const QpSolution sol = solve_qp(b.build(), s);
    return {sol.z[0], sol.z[1]};
}

/// Damped Newton on f(π) = −ln(δ − Σπ) + Σ_j [γ_j (π̂_j − π_j) + ρ/2 (π̂_j − π_j)²].
inline std::vector<double> newton_payment_row(double delta, const std::vector<double>& pi_hat,
                                              const std::vector<double>& gamma, double rho) {
    const Eigen::Index m = static_cast<Eigen::Index>(pi_hat.size());
    const Eigen::VectorXd ph = Eigen::Map<const Eigen::VectorXd>(pi_hat.data(), m);
    const Eigen::VectorXd g = Eigen::Map<const Eigen::VectorXd>(gamma.data(), m);
    auto f = [&](const Eigen::VectorXd& p) {
        const double s = delta - p.sum();
        if (!(s > 0.0)) return std::numeric_limits<double>::infinity();
        return -std::log(s) + g.dot(ph - p) + 0.5 * rho * (ph - p).squaredNorm();
    };
    // Start strictly inside the domain.
    Eigen::VectorXd p = Eigen::VectorXd::Constant(m, std::min(0.0, (delta - 1.0) / static_cast<double>(m)));
    for (int it = 0; it < 200; ++it) {
        const double s = delta - p.sum();
        const Eigen::VectorXd grad = Eigen::VectorXd::Constant(m, 1.0 / s) - g - rho * (ph - p);
        Eigen::MatrixXd H = Eigen::MatrixXd::Constant(m, m, 1.0 / (s * s));
        H.diagonal().array() += rho;
        const Eigen::VectorXd step = H.ldlt().solve(-grad);
        double t = 1.0;
        const double f0 = f(p);
        while (t > 1e-20 && !(f(p + t * step) <= f0 + 1e-4 * t * grad.dot(step))) t *= 0.5;
        p += t * step;
        if (step.lpNorm<Eigen::Infinity>() < 1e-15 * (1.0 + p.lpNorm<Eigen::Infinity>())) break;
    }
    return std::vector<double>(p.data(), p.data() + m);
}

/// Independent absolute KKT residual under the documented sign convention,
/// recomputed with dense algebra.
inline double dense_kkt_residual(const QpProblem& p, const QpSolution& s) {
    const Eigen::MatrixXd P(p.P), A(p.Aeq), G(p.Gineq);
    double r = 0.0;
    Eigen::VectorXd stat = P * s.z + p.q + s.dual_box;
    if (A.rows()) {
        stat -= A.transpose() * s.dual_eq;
        r = std::max(r, (A * s.z - p.beq).lpNorm<Eigen::Infinity>());
    }
    if (G.rows()) {
        stat += G.transpose() * s.dual_ineq;
        const Eigen::VectorXd slack = p.hineq - G * s.z;
        for (Eigen::Index i = 0; i < slack.size(); ++i)
            r = std::max({r, -slack[i], -s.dual_ineq[i], std::abs(slack[i] * s.dual_ineq[i])});
    }
    if (stat.size()) r = std::max(r, stat.lpNorm<Eigen::Infinity>());
    for (Eigen::Index i = 0; i < s.z.size(); ++i) {
        r = std::max({r, p.lb[i] - s.z[i], s.z[i] - p.ub[i]});
        const double w = s.dual_box[i];
        const double gap = w > 0.0 ? p.ub[i] - s.z[i] : s.z[i] - p.lb[i];
        if (w != 0.0) r = std::max(r, std::isfinite(gap) ? std::abs(w * gap) : std::abs(w));
    }
    return r;
}

/// Random convex QP with a known feasible point: P = BᵀB + diag, equality and
/// inequality rows through z0, finite boxes around z0.
inline QpProblem random_qp(std::mt19937_64& rng, int n, int meq, int mineq, bool boxes = true) {
    std::uniform_real_distribution<double> U(-1.0, 1.0);
    Eigen::MatrixXd B(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) B(i, j) = U(rng);
    Eigen::MatrixXd P = B.transpose() * B / n;
    for (int i = 0; i < n; ++i) P(i, i) += (i % 3 == 0) ? 0.0 : 0.1; // some flat directions
    Eigen::VectorXd z0(n);
    for (int i = 0; i < n; ++i) z0[i] = U(rng);
    QpProblem p;
    p.P = P.sparseView();
    p.q.resize(n);
    for (int i = 0; i < n; ++i) p.q[i] = 3.0 * U(rng);
    Eigen::MatrixXd A(meq, n), G(mineq, n);
    for (int r = 0; r < meq; ++r)
        for (int c = 0; c < n; ++c) A(r, c) = U(rng);
    for (int r = 0; r < mineq; ++r)
        for (int c = 0; c < n; ++c) G(r, c) = U(rng);
    p.Aeq = A.sparseView();
    p.beq = A * z0;
    p.Gineq = G.sparseView();
    p.hineq = G * z0;
    for (int r = 0; r < mineq; ++r) p.hineq[r] += 0.5 * (U(rng) + 1.0);
    p.lb.resize(n);
    p.ub.resize(n);
    for (int i = 0; i < n; ++i) {
        p.lb[i] = boxes ? z0[i] - 0.5 - 0.5 * (U(rng) + 1.0) : -kInfinity;
        p.ub[i] = boxes ? z0[i] + 0.5 + 0.5 * (U(rng) + 1.0) : kInfinity;
    }
    return p;
}

/// Box-constrained minimum by projected gradient with step 1/L.
inline Eigen::VectorXd projected_gradient(const QpProblem& p, int iterations) {
    const Eigen::MatrixXd P(p.P);
    const double L = std::max(1e-12, P.operatorNorm());
    Eigen::VectorXd z = (p.lb + p.ub) / 2.0;
    for (int k = 0; k < iterations; ++k) {
        z -= (P * z + p.q) / L;
        z = z.cwiseMax(p.lb).cwiseMin(p.ub);
    }
    return z;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double r = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) r = std::max(r, std::abs(a[i] - b[i]));
    return r;
}

/// Convex combination of two schedules; storage levels follow linearly.
inline Schedule blend(const Schedule& a, const Schedule& b, double w) {
    auto mix = [w](const Series& x, const Series& y) {
        Series out(x.size());
        for (std::size_t t = 0; t < x.size(); ++t) out[t] = (1.0 - w) * x[t] + w * y[t];
        return out;
    };
    Schedule s;
    s.wind_use = mix(a.wind_use, b.wind_use);
    s.grid_buy = mix(a.grid_buy, b.grid_buy);
    s.grid_sell = mix(a.grid_sell, b.grid_sell);
    s.charge = mix(a.charge, b.charge);
    s.discharge = mix(a.discharge, b.discharge);
    s.storage_level = mix(a.storage_level, b.storage_level);
    for (std::size_t u = 0; u < a.elastic.size(); ++u) s.elastic.push_back(mix(a.elastic[u], b.elastic[u]));
    return s;
}

/// Feasible schedules of `mg`: standalone optima under randomly perturbed prices.
inline std::vector<Schedule> feasible_schedules(const MicrogridParams& mg, const GridPrices& prices,
                                                const TimeGrid& time, std::mt19937_64& rng, int count) {
    std::uniform_real_distribution<double> U(0.5, 1.5);
    std::vector<Schedule> out;
    for (int k = 0; k < count; ++k) {
        GridPrices p = prices;
        for (double& v : p.buy) v *= U(rng);
        for (std::size_t t = 0; t < p.sell.size(); ++t) p.sell[t] = std::min(p.sell[t] * U(rng), p.buy[t]);
        out.push_back(solve_benchmark(mg, p, time).schedule);
    }
    return out;
}

/// Central finite difference of operating_cost along one entry of the
/// schedule. Charge and discharge must stay nonnegative, so an entry within h
/// of zero gets a forward difference instead (those terms are linear).
template <class Access>
double central_difference(Schedule s, const MicrogridParams& mg, const GridPrices& prices, Access&& entry, double h,
                          bool nonnegative = false) {
    const double x = entry(s);
    entry(s) = x + h;
    const double up = operating_cost(s, mg, prices);
    if (nonnegative && x < h) {
        entry(s) = x;
        return (up - operating_cost(s, mg, prices)) / h;
    }
    entry(s) = x - h;
    const double down = operating_cost(s, mg, prices);
    entry(s) = x;
    return (up - down) / (2.0 * h);
}

} // namespace mgtrade::testing
