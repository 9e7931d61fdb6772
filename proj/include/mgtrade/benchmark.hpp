#pragma once

// Standalone (no trading) cost minimization per microgrid. The optimal cost
// is the microgrid's disagreement point in the payment bargaining.

#include <future>
#include <vector>

#include "mgtrade/domain.hpp"
#include "mgtrade/local_problem.hpp"
#include "mgtrade/qp.hpp"

namespace mgtrade {

struct BenchmarkResult {
    Schedule schedule;
    double cost = 0.0;
    double kkt_residual = 0.0;
    int qp_iterations = 0;
};

namespace detail {

inline QpSettings local_settings(double tol) {
    QpSettings s;
    s.tol = tol;
    s.max_iters = 200;
    return s;
}

/// Solves an assembled local problem, turning solver failures into errors.
inline QpSolution solve_local(const LocalProblem& lp, const MicrogridParams& mg, double tol) {
    QpSolution sol = solve_qp(lp.qp, local_settings(tol));
    if (sol.status == QpStatus::infeasible)
        throw InfeasibleError("microgrid " + mg.id + ": local problem is infeasible");
    if (sol.status != QpStatus::optimal)
        throw Error("microgrid " + mg.id + ": local solve stopped at KKT residual " +
                    std::to_string(sol.kkt_residual));
    return sol;
}

} // namespace detail

inline BenchmarkResult solve_benchmark(const MicrogridParams& mg, const GridPrices& prices, const TimeGrid& time,
                                       double tol = 1e-8) {
    check_microgrid(mg, time, "microgrid " + mg.id);
    precheck_supply(mg, time);
    const LocalProblem lp = build_local_problem(mg, prices, time);
    const QpSolution sol = detail::solve_local(lp, mg, tol);
    BenchmarkResult r;
    r.schedule = extract_schedule(lp.layout, sol.z, mg.storage);
    r.cost = operating_cost(r.schedule, mg, prices);
    r.kkt_residual = sol.kkt_residual;
    r.qp_iterations = sol.iterations;
    return r;
}

/// All microgrids of a scenario, solved concurrently.
inline std::vector<BenchmarkResult> solve_benchmarks(const Scenario& sc, double tol = 1e-8) {
    check_scenario(sc);
    std::vector<std::future<BenchmarkResult>> jobs;
    for (const MicrogridParams& mg : sc.microgrids)
        jobs.push_back(std::async(std::launch::async, [&sc, &mg, tol] {
            return solve_benchmark(mg, sc.prices, sc.time, tol);
        }));
    std::vector<BenchmarkResult> out;
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

} // namespace mgtrade
