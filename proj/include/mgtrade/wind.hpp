#pragma once

// Turbine power curve: maps wind speed to the fraction of rated power.

#include <cmath>
#include <string>
#include <vector>

#include "mgtrade/csv.hpp"
#include "mgtrade/error.hpp"

namespace mgtrade {

struct WindCurve {
    double cut_in_mps = 3.0;
    double rated_mps = 13.0;
    double cut_out_mps = 25.0;

    void check() const {
        if (!(0.0 < cut_in_mps && cut_in_mps < rated_mps && rated_mps < cut_out_mps))
            throw ValidationError("wind curve: need 0 < cut_in < rated < cut_out");
    }

    bool operator==(const WindCurve&) const = default;
};

/// 0 below cut-in and from cut-out on, 1 on [rated, cut_out), and
/// (v³ − v_ci³)/(v_r³ − v_ci³) in between.
inline double power_fraction(double speed_mps, const WindCurve& curve = {}) {
    curve.check();
    if (!(speed_mps >= 0.0)) throw ValidationError("power_fraction: wind speed must be >= 0");
    if (speed_mps < curve.cut_in_mps || speed_mps >= curve.cut_out_mps) return 0.0;
    if (speed_mps >= curve.rated_mps) return 1.0;
    const double ci3 = std::pow(curve.cut_in_mps, 3);
    return (std::pow(speed_mps, 3) - ci3) / (std::pow(curve.rated_mps, 3) - ci3);
}

/// Reads hourly wind speeds from `column` of a CSV file and converts the first
/// `slots` rows to power fractions. Extra rows are ignored.
inline std::vector<double> ingest_speeds(const std::string& path, const std::string& column, std::size_t slots,
                                         const WindCurve& curve = {}) {
    const std::vector<double> speeds = csv::read_column(path, column);
    if (speeds.size() < slots)
        throw ParseError(path, "expected at least " + std::to_string(slots) + " rows, found " +
                                   std::to_string(speeds.size()));
    std::vector<double> out(slots);
    for (std::size_t t = 0; t < slots; ++t) {
        if (speeds[t] < 0.0) throw ParseError(path + ":" + std::to_string(t + 2), "negative wind speed");
        out[t] = power_fraction(speeds[t], curve);
    }
    return out;
}

} // namespace mgtrade
