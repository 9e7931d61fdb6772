#pragma once

// Scenario data, cost functions and feasibility checks for a set of
// interconnected microgrids. All quantities are per-slot energies (kWh);
// power limits given in kW are multiplied by TimeGrid::slot_hours.

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mgtrade/error.hpp"

namespace mgtrade {

using Series = std::vector<double>;

struct TimeGrid {
    std::size_t slots = 24;
    double slot_hours = 1.0;

    bool operator==(const TimeGrid&) const = default;
};

struct GridPrices {
    Series buy;  // per kWh drawn from the main grid
    Series sell; // per kWh fed back to the main grid

    bool operator==(const GridPrices&) const = default;
};

struct StorageParams {
    double capacity_kwh = 0.0;
    double dod = 1.0; // usable fraction of capacity, in (0, 1]
    double max_charge_kw = 0.0;
    double max_discharge_kw = 0.0;
    double eff_charge = 1.0;
    double eff_discharge = 1.0;
    double amortized_cost_per_kwh = 0.0;
    double initial_level_kwh = 0.0;

    double min_level() const { return (1.0 - dod) * capacity_kwh; }

    bool operator==(const StorageParams&) const = default;
};

struct UserParams {
    double total_demand_kwh = 0.0;
    Series min_load;
    Series max_load;
    Series preferred;
    double discomfort_weight = 0.0;

    bool operator==(const UserParams&) const = default;
};

struct MicrogridParams {
    std::string id;
    double wind_capacity_kw = 0.0;
    Series wind_fraction; // availability per kW of capacity, in [0, 1]
    double max_buy_kw = 0.0;
    double max_sell_kw = 0.0;
    Series inelastic_load;
    std::vector<UserParams> users;
    StorageParams storage;

    bool operator==(const MicrogridParams&) const = default;
};

struct Scenario {
    TimeGrid time;
    GridPrices prices;
    std::vector<MicrogridParams> microgrids;

    std::size_t size() const { return microgrids.size(); }

    bool operator==(const Scenario&) const = default;
};

/// One microgrid's internal decisions over the horizon.
struct Schedule {
    Series wind_use;
    Series grid_buy;
    Series grid_sell;
    std::vector<Series> elastic; // one series per user
    Series charge;
    Series discharge;
    Series storage_level; // s^1..s^T, derived from charge/discharge

    static Schedule zeros(std::size_t slots, std::size_t users) {
        Schedule s;
        s.wind_use.assign(slots, 0.0);
        s.grid_buy.assign(slots, 0.0);
        s.grid_sell.assign(slots, 0.0);
        s.elastic.assign(users, Series(slots, 0.0));
        s.charge.assign(slots, 0.0);
        s.discharge.assign(slots, 0.0);
        s.storage_level.assign(slots, 0.0);
        return s;
    }

    bool operator==(const Schedule&) const = default;
};

namespace detail {

inline void require_length(std::span<const double> v, std::size_t n, const char* what) {
    if (v.size() != n)
        throw DimensionError(std::string(what) + ": expected length " + std::to_string(n) + ", got " +
                             std::to_string(v.size()));
}

} // namespace detail

/// Σ_t (p_b^t·buy^t − p_s^t·sell^t). Negative for a net seller.
inline double energy_cost(std::span<const double> grid_buy, std::span<const double> grid_sell,
                          const GridPrices& prices) {
    const std::size_t n = prices.buy.size();
    detail::require_length(prices.sell, n, "energy_cost: sell prices");
    detail::require_length(grid_buy, n, "energy_cost: grid_buy");
    detail::require_length(grid_sell, n, "energy_cost: grid_sell");
    double c = 0.0;
    for (std::size_t t = 0; t < n; ++t) c += prices.buy[t] * grid_buy[t] - prices.sell[t] * grid_sell[t];
    return c;
}

inline double energy_cost(const Schedule& s, const GridPrices& prices) {
    return energy_cost(s.grid_buy, s.grid_sell, prices);
}

/// β·Σ_t (x^t − y^t)²
inline double discomfort_cost(std::span<const double> elastic, const UserParams& user) {
    detail::require_length(elastic, user.preferred.size(), "discomfort_cost: elastic");
    double c = 0.0;
    for (std::size_t t = 0; t < elastic.size(); ++t) {
        const double d = elastic[t] - user.preferred[t];
        c += d * d;
    }
    return user.discomfort_weight * c;
}

/// Amortized wear: c_s·(Σ charge + Σ discharge).
inline double storage_cost(std::span<const double> charge, std::span<const double> discharge,
                           const StorageParams& storage) {
    detail::require_length(discharge, charge.size(), "storage_cost: discharge");
    double total = 0.0;
    for (std::size_t t = 0; t < charge.size(); ++t) {
        if (charge[t] < 0.0 || discharge[t] < 0.0)
            throw ValidationError("storage_cost: negative charge or discharge at slot " + std::to_string(t));
        total += charge[t] + discharge[t];
    }
    return storage.amortized_cost_per_kwh * total;
}

/// s^t = s^{t−1} + η_c·charge^t − discharge^t/η_d, starting from the initial level.
inline Series storage_trajectory(std::span<const double> charge, std::span<const double> discharge,
                                 const StorageParams& storage) {
    detail::require_length(discharge, charge.size(), "storage_trajectory: discharge");
    Series level(charge.size());
    double s = storage.initial_level_kwh;
    for (std::size_t t = 0; t < charge.size(); ++t) {
        s += storage.eff_charge * charge[t] - discharge[t] / storage.eff_discharge;
        level[t] = s;
    }
    return level;
}

inline double operating_cost(const Schedule& s, const MicrogridParams& mg, const GridPrices& prices) {
    if (s.elastic.size() != mg.users.size())
        throw DimensionError("operating_cost: schedule has " + std::to_string(s.elastic.size()) +
                             " users, microgrid has " + std::to_string(mg.users.size()));
    double c = energy_cost(s, prices) + storage_cost(s.charge, s.discharge, mg.storage);
    for (std::size_t n = 0; n < mg.users.size(); ++n) c += discomfort_cost(s.elastic[n], mg.users[n]);
    return c;
}

/// Gradient of operating_cost with respect to every decision series, laid out
/// like a Schedule (storage_level entries are zero: the cost does not depend on it).
inline Schedule operating_cost_gradient(const Schedule& s, const MicrogridParams& mg, const GridPrices& prices) {
    const std::size_t n = prices.buy.size();
    Schedule g = Schedule::zeros(n, mg.users.size());
    for (std::size_t t = 0; t < n; ++t) {
        g.grid_buy[t] = prices.buy[t];
        g.grid_sell[t] = -prices.sell[t];
        g.charge[t] = mg.storage.amortized_cost_per_kwh;
        g.discharge[t] = mg.storage.amortized_cost_per_kwh;
    }
    for (std::size_t u = 0; u < mg.users.size(); ++u) {
        const UserParams& user = mg.users[u];
        detail::require_length(s.elastic.at(u), n, "operating_cost_gradient: elastic");
        for (std::size_t t = 0; t < n; ++t)
            g.elastic[u][t] = 2.0 * user.discomfort_weight * (s.elastic[u][t] - user.preferred[t]);
    }
    return g;
}

// ---------------------------------------------------------------------------
// Validation

enum class Constraint {
    wind_bound,
    purchase_bound,
    sale_bound,
    load_total,
    load_bounds,
    charge_bound,
    discharge_bound,
    storage_dynamics,
    dod_band,
    terminal_level,
    balance,
    sale_availability,
    dimension,
};

inline const char* to_string(Constraint c) {
    switch (c) {
    case Constraint::wind_bound: return "wind_bound";
    case Constraint::purchase_bound: return "purchase_bound";
    case Constraint::sale_bound: return "sale_bound";
    case Constraint::load_total: return "load_total";
    case Constraint::load_bounds: return "load_bounds";
    case Constraint::charge_bound: return "charge_bound";
    case Constraint::discharge_bound: return "discharge_bound";
    case Constraint::storage_dynamics: return "storage_dynamics";
    case Constraint::dod_band: return "dod_band";
    case Constraint::terminal_level: return "terminal_level";
    case Constraint::balance: return "balance";
    case Constraint::sale_availability: return "sale_availability";
    case Constraint::dimension: return "dimension";
    }
    return "unknown";
}

inline constexpr std::size_t kNoSlot = static_cast<std::size_t>(-1);

struct Violation {
    Constraint constraint;
    std::size_t slot = kNoSlot; // kNoSlot for horizon-wide constraints
    std::size_t user = kNoSlot; // set for per-user constraints
    double residual = 0.0;      // magnitude by which the constraint is violated

    std::string describe() const {
        std::string s = to_string(constraint);
        if (user != kNoSlot) s += " user " + std::to_string(user);
        if (slot != kNoSlot) s += " slot " + std::to_string(slot);
        return s + " residual " + std::to_string(residual);
    }
};

/// Checks every per-microgrid constraint. `trades` holds one per-slot series
/// per counterpart (energy bought, negative when sold); when empty the
/// no-trading supply/demand balance is checked instead.
inline std::vector<Violation> validate(const Schedule& s, std::span<const Series> trades, const MicrogridParams& mg,
                                       const TimeGrid& time, double tol = 1e-6) {
    std::vector<Violation> out;
    const std::size_t T = time.slots;
    const double h = time.slot_hours;
    auto bad_len = [&](std::span<const double> v) { return v.size() != T; };
    if (bad_len(s.wind_use) || bad_len(s.grid_buy) || bad_len(s.grid_sell) || bad_len(s.charge) ||
        bad_len(s.discharge) || bad_len(s.storage_level) || s.elastic.size() != mg.users.size() ||
        bad_len(mg.wind_fraction) || bad_len(mg.inelastic_load)) {
        out.push_back({Constraint::dimension, kNoSlot, kNoSlot, std::numeric_limits<double>::infinity()});
        return out;
    }
    for (const Series& x : s.elastic)
        if (bad_len(x)) {
            out.push_back({Constraint::dimension, kNoSlot, kNoSlot, std::numeric_limits<double>::infinity()});
            return out;
        }
    for (const Series& e : trades)
        if (bad_len(e)) {
            out.push_back({Constraint::dimension, kNoSlot, kNoSlot, std::numeric_limits<double>::infinity()});
            return out;
        }

    auto check_range = [&](Constraint c, double v, double lo, double hi, std::size_t t, std::size_t user = kNoSlot) {
        const double r = std::max(lo - v, v - hi);
        if (r > tol) out.push_back({c, t, user, r});
    };

    const StorageParams& st = mg.storage;
    const Series expected = storage_trajectory(s.charge, s.discharge, st);
    for (std::size_t t = 0; t < T; ++t) {
        const double avail = mg.wind_fraction[t] * mg.wind_capacity_kw * h;
        check_range(Constraint::wind_bound, s.wind_use[t], 0.0, avail, t);
        check_range(Constraint::purchase_bound, s.grid_buy[t], 0.0, mg.max_buy_kw * h, t);
        check_range(Constraint::sale_bound, s.grid_sell[t], 0.0, mg.max_sell_kw * h, t);
        check_range(Constraint::charge_bound, s.charge[t], 0.0, st.max_charge_kw * h, t);
        check_range(Constraint::discharge_bound, s.discharge[t], 0.0, st.max_discharge_kw * h, t);
        if (const double r = std::abs(s.storage_level[t] - expected[t]); r > tol)
            out.push_back({Constraint::storage_dynamics, t, kNoSlot, r});
        check_range(Constraint::dod_band, s.storage_level[t], st.min_level(), st.capacity_kwh, t);

        double elastic_total = 0.0;
        for (std::size_t n = 0; n < mg.users.size(); ++n) {
            const UserParams& user = mg.users[n];
            check_range(Constraint::load_bounds, s.elastic[n][t], user.min_load[t], user.max_load[t], t, n);
            elastic_total += s.elastic[n][t];
        }
        double net_trade = 0.0;
        for (const Series& e : trades) net_trade += e[t];
        const double supply = s.wind_use[t] + s.grid_buy[t] + s.discharge[t] + net_trade;
        const double demand = s.grid_sell[t] + s.charge[t] + mg.inelastic_load[t] + elastic_total;
        if (const double r = std::abs(supply - demand); r > tol) out.push_back({Constraint::balance, t, kNoSlot, r});

        // Sales are limited by the wind surplus plus the stored energy level.
        const double sale_cap = avail - s.wind_use[t] + s.storage_level[t];
        if (const double r = s.grid_sell[t] - sale_cap; r > tol)
            out.push_back({Constraint::sale_availability, t, kNoSlot, r});
    }
    for (std::size_t n = 0; n < mg.users.size(); ++n) {
        const Series& x = s.elastic[n];
        const double total = std::accumulate(x.begin(), x.end(), 0.0);
        if (const double r = std::abs(total - mg.users[n].total_demand_kwh); r > tol)
            out.push_back({Constraint::load_total, kNoSlot, n, r});
    }
    if (T > 0) {
        if (const double r = std::abs(s.storage_level[T - 1] - st.initial_level_kwh); r > tol)
            out.push_back({Constraint::terminal_level, T - 1, kNoSlot, r});
    }
    return out;
}

inline std::vector<Violation> validate(const Schedule& s, const MicrogridParams& mg, const TimeGrid& time,
                                       double tol = 1e-6) {
    return validate(s, std::span<const Series>{}, mg, time, tol);
}

// ---------------------------------------------------------------------------
// Scenario parameter checks

namespace detail {

inline void require(bool ok, const std::string& path, const std::string& what) {
    if (!ok) throw ValidationError(path + ": " + what);
}

} // namespace detail

/// Throws ValidationError (or DimensionError) naming the offending field.
inline void check_microgrid(const MicrogridParams& mg, const TimeGrid& time, const std::string& path) {
    using detail::require;
    const std::size_t T = time.slots;
    auto len = [&](const Series& v, const std::string& field) {
        if (v.size() != T)
            throw DimensionError(path + "." + field + ": expected length " + std::to_string(T) + ", got " +
                                 std::to_string(v.size()));
    };
    len(mg.wind_fraction, "wind_fraction");
    len(mg.inelastic_load, "inelastic_load");
    require(mg.wind_capacity_kw >= 0.0, path + ".wind_capacity_kw", "must be >= 0");
    require(mg.max_buy_kw >= 0.0, path + ".max_buy_kw", "must be >= 0");
    require(mg.max_sell_kw >= 0.0, path + ".max_sell_kw", "must be >= 0");
    for (std::size_t t = 0; t < T; ++t) {
        require(mg.wind_fraction[t] >= 0.0 && mg.wind_fraction[t] <= 1.0, path + ".wind_fraction",
                "entries must lie in [0, 1]");
        require(mg.inelastic_load[t] >= 0.0, path + ".inelastic_load", "entries must be >= 0");
    }
    const StorageParams& s = mg.storage;
    const std::string sp = path + ".storage";
    require(s.capacity_kwh >= 0.0, sp + ".capacity", "must be >= 0");
    require(s.dod > 0.0 && s.dod <= 1.0, sp + ".dod", "must lie in (0, 1]");
    require(s.max_charge_kw >= 0.0 && s.max_discharge_kw >= 0.0, sp, "charge/discharge limits must be >= 0");
    require(s.eff_charge > 0.0 && s.eff_charge <= 1.0, sp + ".eff_c", "must lie in (0, 1]");
    require(s.eff_discharge > 0.0 && s.eff_discharge <= 1.0, sp + ".eff_d", "must lie in (0, 1]");
    require(s.amortized_cost_per_kwh >= 0.0, sp + ".cs", "must be >= 0");
    require(s.initial_level_kwh >= s.min_level() - 1e-12 && s.initial_level_kwh <= s.capacity_kwh + 1e-12,
            sp + ".initial", "must lie in [(1 - dod) * capacity, capacity]");
    for (std::size_t n = 0; n < mg.users.size(); ++n) {
        const UserParams& u = mg.users[n];
        const std::string up = path + ".users[" + std::to_string(n) + "]";
        len(u.min_load, "users[" + std::to_string(n) + "].min");
        len(u.max_load, "users[" + std::to_string(n) + "].max");
        len(u.preferred, "users[" + std::to_string(n) + "].preferred");
        require(u.discomfort_weight >= 0.0, up + ".beta", "must be >= 0");
        double lo = 0.0, hi = 0.0;
        for (std::size_t t = 0; t < T; ++t) {
            require(u.min_load[t] >= 0.0 && u.min_load[t] <= u.max_load[t], up,
                    "need 0 <= min <= max at slot " + std::to_string(t));
            lo += u.min_load[t];
            hi += u.max_load[t];
        }
        require(u.total_demand_kwh >= lo - 1e-9 && u.total_demand_kwh <= hi + 1e-9, up + ".total_kwh",
                "must lie between the summed min and max loads");
    }
}

inline void check_scenario(const Scenario& sc) {
    using detail::require;
    require(sc.time.slots >= 1, "time.T", "must be >= 1");
    require(sc.time.slot_hours > 0.0, "time.slot_hours", "must be > 0");
    if (sc.prices.buy.size() != sc.time.slots || sc.prices.sell.size() != sc.time.slots)
        throw DimensionError("prices: buy and sell must have length T");
    for (std::size_t t = 0; t < sc.time.slots; ++t)
        require(sc.prices.buy[t] >= 0.0 && sc.prices.sell[t] >= 0.0, "prices", "entries must be >= 0");
    for (std::size_t i = 0; i < sc.microgrids.size(); ++i)
        check_microgrid(sc.microgrids[i], sc.time, "microgrids[" + std::to_string(i) + "]");
}

/// Per-slot supply capacity check run before any solve: wind availability,
/// grid purchases and storage discharge must be able to cover the inelastic
/// load plus the users' minimum elastic load.
inline void precheck_supply(const MicrogridParams& mg, const TimeGrid& time) {
    const double h = time.slot_hours;
    for (std::size_t t = 0; t < time.slots; ++t) {
        double need = mg.inelastic_load[t];
        for (const UserParams& u : mg.users) need += u.min_load[t];
        const double supply = mg.wind_fraction[t] * mg.wind_capacity_kw * h + mg.max_buy_kw * h +
                              mg.storage.max_discharge_kw * h;
        if (supply + 1e-9 < need)
            throw InfeasibleError("microgrid " + mg.id + ": slot " + std::to_string(t) + " demand " +
                                  std::to_string(need) + " exceeds maximum supply " + std::to_string(supply));
    }
}

} // namespace mgtrade
