#pragma once

// Report JSON and the plot-ready CSV outputs.

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgtrade/clearinghouse.hpp"
#include "mgtrade/csv.hpp"
#include "mgtrade/domain.hpp"

namespace mgtrade {

/// Per-microgrid rows mirror the cost table: cost without trading, cost with
/// trading, payment and their sum, followed by system totals.
inline nlohmann::json report_to_json(const RunReport& r) {
    using nlohmann::json;
    json rows = json::array();
    std::vector<bool> trader(r.size(), false);
    for (std::size_t i : r.traders) trader[i] = true;
    json total = {{"cost_no_trading", 0.0}, {"cost_with_trading", 0.0}, {"payment", 0.0}, {"cost_plus_payment", 0.0}};
    for (std::size_t i = 0; i < r.size(); ++i) {
        rows.push_back({{"id", r.ids[i]},
                        {"cost_no_trading", r.cost_no_trading[i]},
                        {"cost_with_trading", r.cost_with_trading[i]},
                        {"payment", r.payment[i]},
                        {"cost_plus_payment", r.final_cost(i)},
                        {"trader", static_cast<bool>(trader[i])}});
        total["cost_no_trading"] = total["cost_no_trading"].get<double>() + r.cost_no_trading[i];
        total["cost_with_trading"] = total["cost_with_trading"].get<double>() + r.cost_with_trading[i];
        total["payment"] = total["payment"].get<double>() + r.payment[i];
        total["cost_plus_payment"] = total["cost_plus_payment"].get<double>() + r.final_cost(i);
    }
    json traders = json::array();
    for (std::size_t k = 0; k < r.traders.size(); ++k)
        traders.push_back({{"id", r.ids[r.traders[k]]}, {"delta", r.delta.empty() ? 0.0 : r.delta[k]}});
    json payments = json::array();
    for (std::size_t i = 0; i < r.payments.size(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < r.payments.size(); ++j) row.push_back(r.payments(i, j));
        payments.push_back(row);
    }
    json trades = json::array();
    for (std::size_t i = 0; i < r.trades.microgrids(); ++i) {
        json row = json::array();
        for (std::size_t j = 0; j < r.trades.microgrids(); ++j) row.push_back(r.trades.series(i, j));
        trades.push_back(row);
    }
    std::map<std::string, std::size_t> counts, bytes;
    for (const MessageSummary& m : r.trace) {
        const std::string key = std::string(to_string(m.phase)) + "." + m.kind;
        ++counts[key];
        bytes[key] += m.bytes;
    }
    json messages = json::object();
    for (const auto& [k, n] : counts) messages[k] = {{"count", n}, {"bytes", bytes[k]}};

    return {{"microgrids", rows},
            {"total", total},
            {"social_cost", r.social_cost},
            {"traders", traders},
            {"payments", payments},
            {"trades", trades},
            {"energy_phase", {{"iterations", r.p1_iterations}, {"converged", r.p1_converged}}},
            {"payment_phase", {{"iterations", r.p2_iterations}, {"converged", r.p2_converged}}},
            {"messages", messages},
            {"notes", r.notes},
            {"wall_clock_seconds", r.wall_clock_seconds}};
}

inline void write_table_csv(std::ostream& out, const RunReport& r) {
    csv::Writer w(out);
    w.header({"microgrid", "cost_no_trading", "cost_with_trading", "payment", "cost_plus_payment"});
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0;
    for (std::size_t i = 0; i < r.size(); ++i) {
        w.row(r.ids[i], r.cost_no_trading[i], r.cost_with_trading[i], r.payment[i], r.final_cost(i));
        a += r.cost_no_trading[i], b += r.cost_with_trading[i], c += r.payment[i], d += r.final_cost(i);
    }
    w.row("total", a, b, c, d);
}

inline void write_costs_csv(std::ostream& out, const std::vector<std::string>& ids, const std::vector<double>& costs) {
    csv::Writer w(out);
    w.header({"microgrid", "cost_no_trading"});
    for (std::size_t i = 0; i < ids.size(); ++i) w.row(ids[i], costs[i]);
}

inline const std::vector<std::string>& schedule_columns() {
    static const std::vector<std::string> cols{"t",         "wind_avail", "wind_use",      "grid_buy",
                                               "grid_sell", "charge",     "discharge",     "storage_level",
                                               "inelastic", "elastic_total", "net_trade"};
    return cols;
}

/// One row per slot; t counts from 1. net_trade is Σ_j e_ij^t (positive = received).
inline void write_schedule_csv(std::ostream& out, const Schedule& s, const MicrogridParams& mg, const TimeGrid& time,
                               const Series& net_trade) {
    csv::Writer w(out);
    w.header(schedule_columns());
    for (std::size_t t = 0; t < time.slots; ++t) {
        double elastic = 0.0;
        for (const Series& x : s.elastic) elastic += x[t];
        w.row(t + 1, mg.wind_fraction[t] * mg.wind_capacity_kw * time.slot_hours, s.wind_use[t], s.grid_buy[t],
              s.grid_sell[t], s.charge[t], s.discharge[t], s.storage_level[t], mg.inelastic_load[t], elastic,
              net_trade.empty() ? 0.0 : net_trade[t]);
    }
}

inline void write_residuals_p1(std::ostream& out, const std::vector<ResidualP1>& rs) {
    csv::Writer w(out);
    w.header({"iteration", "primal_residual", "dual_residual", "objective"});
    for (const ResidualP1& r : rs) w.row(r.iteration, r.primal_residual, r.dual_residual, r.objective);
}

inline void write_residuals_p2(std::ostream& out, const std::vector<ResidualP2>& rs) {
    csv::Writer w(out);
    w.header({"iteration", "residual", "nash_objective"});
    for (const ResidualP2& r : rs) w.row(r.iteration, r.residual, r.nash_objective);
}

} // namespace mgtrade
