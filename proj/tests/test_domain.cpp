#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace mgtrade;
using namespace mgtrade::testing;

namespace {

Schedule two_slot_schedule() {
    Schedule s = Schedule::zeros(2, 1);
    s.grid_buy = {10.0, 0.0};
    s.grid_sell = {0.0, 5.0};
    return s;
}

bool has(const std::vector<Violation>& vs, Constraint c, std::size_t slot = kNoSlot) {
    for (const Violation& v : vs)
        if (v.constraint == c && (slot == kNoSlot || v.slot == slot)) return true;
    return false;
}

} // namespace

TEST(EnergyCost, Examples) {
    const GridPrices p{{0.1, 0.2}, {0.05, 0.05}};
    EXPECT_NEAR(energy_cost(two_slot_schedule(), p), 0.75, 1e-12);
    EXPECT_EQ(energy_cost(Schedule::zeros(2, 0), p), 0.0);
    Schedule s = Schedule::zeros(2, 0);
    s.grid_buy = {5.0, 5.0};
    s.grid_sell = {5.0, 5.0};
    EXPECT_NEAR(energy_cost(s, flat_prices(2, 0.1, 0.1)), 0.0, 1e-15);
}

TEST(EnergyCost, RejectsLengthMismatch) {
    Schedule s = Schedule::zeros(3, 0);
    EXPECT_THROW(energy_cost(s, flat_prices(2, 0.1, 0.05)), DimensionError);
}

TEST(DiscomfortCost, Examples) {
    UserParams u;
    u.preferred = {4.0, 6.0};
    u.discomfort_weight = 3.0;
    EXPECT_EQ(discomfort_cost(Series{4.0, 6.0}, u), 0.0);
    u.discomfort_weight = 2.0;
    EXPECT_NEAR(discomfort_cost(Series{5.0, 5.0}, u), 4.0, 1e-12);
    UserParams z;
    z.preferred = {0.0};
    EXPECT_EQ(discomfort_cost(Series{3.0}, z), 0.0);
}

TEST(StorageCost, Examples) {
    StorageParams st;
    st.amortized_cost_per_kwh = 0.01;
    EXPECT_NEAR(storage_cost(Series{10.0, 0.0}, Series{0.0, 10.0}, st), 0.2, 1e-12);
    EXPECT_EQ(storage_cost(Series{0.0, 0.0}, Series{0.0, 0.0}, st), 0.0);
    EXPECT_NEAR(storage_cost(Series(24, 1.0), Series(24, 0.0), st), 0.24, 1e-12);
}

TEST(StorageTrajectory, Examples) {
    StorageParams st;
    st.capacity_kwh = 200.0;
    st.initial_level_kwh = 100.0;
    st.eff_charge = 0.95;
    st.eff_discharge = 0.95;
    EXPECT_NEAR(storage_trajectory(Series{10.0}, Series{0.0}, st)[0], 109.5, 1e-12);
    EXPECT_NEAR(storage_trajectory(Series{0.0}, Series{9.5}, st)[0], 90.0, 1e-12);
    const Series flat = storage_trajectory(Series(5, 0.0), Series(5, 0.0), st);
    for (double v : flat) EXPECT_EQ(v, 100.0);
}

TEST(OperatingCost, SumOfParts) {
    MicrogridParams mg = empty_microgrid(2);
    UserParams u;
    u.preferred = {4.0, 6.0};
    u.min_load = {0.0, 0.0};
    u.max_load = {10.0, 10.0};
    u.discomfort_weight = 2.0;
    mg.users.push_back(u);
    mg.storage.amortized_cost_per_kwh = 0.01;
    Schedule s = two_slot_schedule();
    s.elastic[0] = {5.0, 5.0};
    s.charge = {10.0, 0.0};
    s.discharge = {0.0, 10.0};
    EXPECT_NEAR(operating_cost(s, mg, GridPrices{{0.1, 0.2}, {0.05, 0.05}}), 4.95, 1e-12);
    EXPECT_EQ(operating_cost(Schedule::zeros(2, 0), empty_microgrid(2), flat_prices(2, 0.1, 0.05)), 0.0);
}

TEST(OperatingCost, BenchmarkMatchesCentralizedPerMicrogrid) {
    // The centralized oracle on a one-microgrid scenario is an independent
    // assembly of the same standalone problem.
    const Scenario desk = desk_scenario();
    for (const MicrogridParams& mg : desk.microgrids) {
        Scenario one{desk.time, desk.prices, {mg}};
        const double local = solve_benchmark(mg, desk.prices, desk.time).cost;
        const double central = centralized_p1(one).objective;
        EXPECT_NEAR(local, central, 1e-6 * std::abs(central));
    }
}

TEST(OperatingCostGradient, MatchesCentralDifferences) {
    std::mt19937_64 rng(42);
    const Scenario desk = desk_scenario();
    const MicrogridParams& mg = desk.microgrids[0];
    const auto pts = feasible_schedules(mg, desk.prices, desk.time, rng, 2);
    const Schedule s = blend(pts[0], pts[1], 0.3);
    const Schedule g = operating_cost_gradient(s, mg, desk.prices);
    const double h = 1e-3;
    for (std::size_t t = 0; t < desk.time.slots; ++t) {
        EXPECT_NEAR(central_difference(s, mg, desk.prices, [t](Schedule& x) -> double& { return x.grid_buy[t]; }, h),
                    g.grid_buy[t], 1e-7);
        EXPECT_NEAR(central_difference(s, mg, desk.prices, [t](Schedule& x) -> double& { return x.grid_sell[t]; }, h),
                    g.grid_sell[t], 1e-7);
        EXPECT_NEAR(central_difference(s, mg, desk.prices, [t](Schedule& x) -> double& { return x.charge[t]; }, h, true),
                    g.charge[t], 1e-7);
        EXPECT_NEAR(central_difference(s, mg, desk.prices, [t](Schedule& x) -> double& { return x.discharge[t]; }, h, true),
                    g.discharge[t], 1e-7);
        for (std::size_t u = 0; u < mg.users.size(); ++u)
            EXPECT_NEAR(
                central_difference(s, mg, desk.prices, [t, u](Schedule& x) -> double& { return x.elastic[u][t]; }, h),
                g.elastic[u][t], 1e-6 * std::max(1.0, std::abs(g.elastic[u][t])));
    }
}

class ValidateTest : public ::testing::Test {
protected:
    Scenario desk = desk_scenario();
    const MicrogridParams& mg = desk.microgrids[1];
    Schedule s = solve_benchmark(mg, desk.prices, desk.time).schedule;
};

TEST_F(ValidateTest, BenchmarkSolutionIsFeasible) {
    const auto vs = validate(s, mg, desk.time, 1e-6);
    for (const Violation& v : vs) ADD_FAILURE() << v.describe();
}

TEST_F(ValidateTest, BruteForceRecheck) {
    // Each inequality recomputed directly from the parameters.
    const double h = desk.time.slot_hours;
    const StorageParams& st = mg.storage;
    double level = st.initial_level_kwh;
    for (std::size_t t = 0; t < desk.time.slots; ++t) {
        const double avail = mg.wind_fraction[t] * mg.wind_capacity_kw * h;
        EXPECT_GE(s.wind_use[t], -1e-6);
        EXPECT_LE(s.wind_use[t], avail + 1e-6);
        EXPECT_LE(s.grid_buy[t], mg.max_buy_kw * h + 1e-6);
        EXPECT_LE(s.grid_sell[t], mg.max_sell_kw * h + 1e-6);
        EXPECT_LE(s.charge[t], st.max_charge_kw * h + 1e-6);
        EXPECT_LE(s.discharge[t], st.max_discharge_kw * h + 1e-6);
        level += st.eff_charge * s.charge[t] - s.discharge[t] / st.eff_discharge;
        EXPECT_NEAR(s.storage_level[t], level, 1e-6);
        EXPECT_GE(level, (1.0 - st.dod) * st.capacity_kwh - 1e-6);
        EXPECT_LE(level, st.capacity_kwh + 1e-6);
        double elastic = 0.0;
        for (std::size_t u = 0; u < mg.users.size(); ++u) {
            EXPECT_GE(s.elastic[u][t], mg.users[u].min_load[t] - 1e-6);
            EXPECT_LE(s.elastic[u][t], mg.users[u].max_load[t] + 1e-6);
            elastic += s.elastic[u][t];
        }
        EXPECT_NEAR(s.wind_use[t] + s.grid_buy[t] + s.discharge[t],
                    s.grid_sell[t] + s.charge[t] + mg.inelastic_load[t] + elastic, 1e-6);
        EXPECT_LE(s.grid_sell[t], avail - s.wind_use[t] + s.storage_level[t] + 1e-6);
    }
    EXPECT_NEAR(level, st.initial_level_kwh, 1e-6);
}

TEST_F(ValidateTest, WindBoundViolationNamesSlot) {
    const std::size_t t = 7;
    s.wind_use[t] = mg.wind_fraction[t] * mg.wind_capacity_kw * desk.time.slot_hours + 1.0;
    EXPECT_TRUE(has(validate(s, mg, desk.time), Constraint::wind_bound, t));
}

TEST_F(ValidateTest, TerminalLevelViolation) {
    s.storage_level.back() = mg.storage.initial_level_kwh + 5.0;
    EXPECT_TRUE(has(validate(s, mg, desk.time), Constraint::terminal_level));
}

TEST_F(ValidateTest, BalanceUsesTrades) {
    std::vector<Series> trades(2, Series(desk.time.slots, 0.0));
    trades[0][3] = 2.0;
    EXPECT_TRUE(has(validate(s, trades, mg, desk.time), Constraint::balance, 3));
    s.grid_buy[3] -= 2.0;
    if (s.grid_buy[3] >= 0.0) {
        EXPECT_FALSE(has(validate(s, trades, mg, desk.time), Constraint::balance, 3));
    }
}

TEST_F(ValidateTest, DimensionMismatchReported) {
    s.charge.pop_back();
    EXPECT_TRUE(has(validate(s, mg, desk.time), Constraint::dimension));
}

TEST(CheckScenario, RejectsBadParameters) {
    Scenario sc = desk_scenario();
    sc.microgrids[0].storage.dod = 1.5;
    EXPECT_THROW(check_scenario(sc), ValidationError);
    sc = desk_scenario();
    sc.prices.buy.pop_back();
    EXPECT_THROW(check_scenario(sc), Error);
    sc = desk_scenario();
    sc.microgrids[2].users[0].total_demand_kwh = 1e6;
    EXPECT_THROW(check_scenario(sc), ValidationError);
}

TEST(PrecheckSupply, FlagsUnservableLoad) {
    Scenario sc = desk_scenario();
    MicrogridParams mg = sc.microgrids[0];
    mg.inelastic_load[5] = 1e6;
    EXPECT_THROW(precheck_supply(mg, sc.time), InfeasibleError);
}
