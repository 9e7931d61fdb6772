#include <gtest/gtest.h>

#include "support.hpp"

using namespace mgtrade;
using namespace mgtrade::testing;

TEST(SolveBenchmark, EmptyMicrogridCostsNothing) {
    const std::size_t T = 4;
    const BenchmarkResult r = solve_benchmark(empty_microgrid(T), flat_prices(T, 0.2, 0.1), {T, 1.0});
    EXPECT_NEAR(r.cost, 0.0, 1e-8);
    for (std::size_t t = 0; t < T; ++t) {
        EXPECT_NEAR(r.schedule.grid_buy[t], 0.0, 1e-7);
        EXPECT_NEAR(r.schedule.grid_sell[t], 0.0, 1e-7);
        EXPECT_NEAR(r.schedule.wind_use[t], 0.0, 1e-7);
    }
}

TEST(SolveBenchmark, ForcedPurchase) {
    MicrogridParams mg = empty_microgrid(1);
    mg.inelastic_load = {10.0};
    const BenchmarkResult r = solve_benchmark(mg, flat_prices(1, 0.1, 0.05), {1, 1.0});
    EXPECT_NEAR(r.cost, 1.0, 1e-8);
    EXPECT_NEAR(r.schedule.grid_buy[0], 10.0, 1e-7);
}

TEST(SolveBenchmark, SlotHoursScalePowerLimits) {
    // 10 kW purchase limit over half-hour slots caps a slot at 5 kWh.
    MicrogridParams mg = empty_microgrid(2);
    mg.max_buy_kw = 10.0;
    mg.inelastic_load = {6.0, 1.0};
    EXPECT_THROW(solve_benchmark(mg, flat_prices(2, 0.1, 0.05), {2, 0.5}), InfeasibleError);
    mg.inelastic_load = {5.0, 1.0};
    EXPECT_NEAR(solve_benchmark(mg, flat_prices(2, 0.1, 0.05), {2, 0.5}).cost, 0.6, 1e-7);
}

TEST(SolveBenchmark, StorageArbitrageRespectsTerminalLevel) {
    MicrogridParams mg = empty_microgrid(2);
    mg.inelastic_load = {0.0, 10.0};
    mg.storage = {20.0, 1.0, 10.0, 10.0, 1.0, 1.0, 0.0, 5.0};
    // Cheap slot 0, dear slot 1: stock up, but the terminal condition forces
    // the battery back to its start level, so nothing is gained.
    const BenchmarkResult r = solve_benchmark(mg, GridPrices{{0.1, 0.5}, {0.0, 0.0}}, {2, 1.0});
    EXPECT_NEAR(r.schedule.storage_level[1], 5.0, 1e-6);
    EXPECT_TRUE(validate(r.schedule, mg, {2, 1.0}).empty());
}

TEST(SolveBenchmark, DeskMatchesIndependentAssembly) {
    const Scenario desk = desk_scenario();
    const auto all = solve_benchmarks(desk);
    ASSERT_EQ(all.size(), 3u);
    for (std::size_t i = 0; i < desk.size(); ++i) {
        const Scenario one{desk.time, desk.prices, {desk.microgrids[i]}};
        const CentralizedSolution c = centralized_p1(one);
        EXPECT_NEAR(all[i].cost, c.objective, 1e-6 * std::abs(c.objective));
        EXPECT_GT(all[i].cost, 0.0);
        EXPECT_LE(all[i].kkt_residual, 1e-8);
        EXPECT_TRUE(validate(all[i].schedule, desk.microgrids[i], desk.time).empty());
    }
}

TEST(SolveBenchmark, ConcurrentEqualsSequential) {
    const Scenario sc = random_scenario(3);
    const auto all = solve_benchmarks(sc);
    for (std::size_t i = 0; i < sc.size(); ++i)
        EXPECT_EQ(all[i].cost, solve_benchmark(sc.microgrids[i], sc.prices, sc.time).cost);
}

TEST(SolveBenchmark, InfeasibleSupplyRejected) {
    MicrogridParams mg = empty_microgrid(1);
    mg.inelastic_load = {1000.0};
    EXPECT_THROW(solve_benchmark(mg, flat_prices(1, 0.1, 0.05), {1, 1.0}), InfeasibleError);
}

TEST(SolveBenchmark, ValidatesParameters) {
    MicrogridParams mg = empty_microgrid(2);
    mg.wind_fraction = {0.5};
    EXPECT_THROW(solve_benchmark(mg, flat_prices(2, 0.1, 0.05), {2, 1.0}), DimensionError);
}
