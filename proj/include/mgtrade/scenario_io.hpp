#pragma once

// Scenario files (JSON) and the synthetic scenario generator.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mgtrade/csv.hpp"
#include "mgtrade/domain.hpp"
#include "mgtrade/error.hpp"
#include "mgtrade/wind.hpp"

namespace mgtrade {

using Json = nlohmann::json;

namespace detail {

class JsonReader {
public:
    JsonReader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {}

    bool has(const char* key) const { return j_.is_object() && j_.contains(key); }

    const std::string& path() const { return path_; }
    std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

    JsonReader object(const char* key) const {
        const Json& v = get(key);
        if (!v.is_object()) throw ParseError(child(key), "expected an object");
        return {v, child(key)};
    }

    double number(const char* key) const {
        const Json& v = get(key);
        if (!v.is_number()) throw ParseError(child(key), "expected a number");
        return v.get<double>();
    }

    double number_or(const char* key, double fallback) const { return has(key) ? number(key) : fallback; }

    std::size_t count(const char* key) const {
        const Json& v = get(key);
        if (!v.is_number_integer() || v.get<long long>() < 0)
            throw ParseError(child(key), "expected a non-negative integer");
        return v.get<std::size_t>();
    }

    std::string string(const char* key) const {
        const Json& v = get(key);
        if (!v.is_string()) throw ParseError(child(key), "expected a string");
        return v.get<std::string>();
    }

    Series series(const char* key, std::size_t length) const {
        const Json& v = get(key);
        if (!v.is_array()) throw ParseError(child(key), "expected an array of numbers");
        if (v.size() != length)
            throw ParseError(child(key),
                             "expected " + std::to_string(length) + " entries, got " + std::to_string(v.size()));
        Series out;
        for (std::size_t t = 0; t < v.size(); ++t) {
            if (!v[t].is_number()) throw ParseError(child(key) + "[" + std::to_string(t) + "]", "expected a number");
            out.push_back(v[t].get<double>());
        }
        return out;
    }

    std::vector<JsonReader> array(const char* key) const {
        const Json& v = get(key);
        if (!v.is_array()) throw ParseError(child(key), "expected an array");
        std::vector<JsonReader> out;
        for (std::size_t n = 0; n < v.size(); ++n)
            out.emplace_back(v[n], child(key) + "[" + std::to_string(n) + "]");
        return out;
    }

private:
    const Json& get(const char* key) const {
        if (!j_.is_object()) throw ParseError(path_.empty() ? "<root>" : path_, "expected an object");
        if (!j_.contains(key)) throw ParseError(child(key), "missing field");
        return j_.at(key);
    }

    const Json& j_;
    std::string path_;
};

inline std::string resolve(const std::filesystem::path& base, const std::string& file) {
    const std::filesystem::path p(file);
    return p.is_absolute() ? p.string() : (base / p).string();
}

/// Rethrows scenario validation failures as parse errors so that callers see
/// one error type for bad input files.
template <typename F>
void as_parse_error(F&& f) {
    try {
        f();
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        throw ParseError("scenario", e.what());
    }
}

} // namespace detail

/// Builds a Scenario from a parsed document. CSV paths are resolved against
/// `base_dir`. Errors name the offending field.
inline Scenario parse_scenario(const Json& doc, const std::filesystem::path& base_dir = ".") {
    using detail::JsonReader;
    const JsonReader root(doc, "");
    Scenario sc;
    const JsonReader time = root.object("time");
    sc.time.slots = time.count("T");
    sc.time.slot_hours = time.number_or("slot_hours", 1.0);
    if (sc.time.slots == 0) throw ParseError("time.T", "must be >= 1");
    if (!(sc.time.slot_hours > 0.0)) throw ParseError("time.slot_hours", "must be > 0");
    const std::size_t T = sc.time.slots;

    const JsonReader prices = root.object("prices");
    if (prices.has("buy")) {
        sc.prices.buy = prices.series("buy", T);
    } else if (prices.has("csv")) {
        const std::string file = detail::resolve(base_dir, prices.string("csv"));
        const std::string column = prices.has("buy_column") ? prices.string("buy_column") : "buy";
        Series all = csv::read_column(file, column);
        if (all.size() < T) throw ParseError(file, "expected at least " + std::to_string(T) + " price rows");
        sc.prices.buy.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(T));
    } else {
        throw ParseError("prices", "need either buy[] or csv");
    }
    if (prices.has("sell")) {
        sc.prices.sell = prices.series("sell", T);
    } else {
        const double rate = root.number_or("feed_in_rate", 0.1);
        const std::string mode = root.has("feed_in_mode") ? root.string("feed_in_mode") : "absolute";
        if (mode == "absolute") sc.prices.sell.assign(T, rate);
        else if (mode == "fraction")
            for (double b : sc.prices.buy) sc.prices.sell.push_back(rate * b);
        else throw ParseError("feed_in_mode", "expected 'absolute' or 'fraction'");
    }
    for (std::size_t t = 0; t < T; ++t)
        if (sc.prices.buy[t] < 0.0 || sc.prices.sell[t] < 0.0) throw ParseError("prices", "entries must be >= 0");

    for (const JsonReader& m : root.array("microgrids")) {
        MicrogridParams mg;
        mg.id = m.has("id") ? m.string("id") : std::to_string(sc.microgrids.size() + 1);
        const JsonReader wind = m.object("wind");
        mg.wind_capacity_kw = wind.number("capacity_kw");
        if (wind.has("fractions")) {
            mg.wind_fraction = wind.series("fractions", T);
        } else if (wind.has("speeds_csv")) {
            WindCurve curve;
            if (wind.has("curve")) {
                const JsonReader c = wind.object("curve");
                curve = {c.number("cut_in"), c.number("rated"), c.number("cut_out")};
                try {
                    curve.check();
                } catch (const ValidationError& e) {
                    throw ParseError(wind.child("curve"), e.what());
                }
            }
            const std::string column = wind.has("column") ? wind.string("column") : "speed";
            mg.wind_fraction = ingest_speeds(detail::resolve(base_dir, wind.string("speeds_csv")), column, T, curve);
        } else {
            throw ParseError(m.child("wind"), "need either fractions[] or speeds_csv");
        }
        mg.max_buy_kw = m.number("max_buy_kw");
        mg.max_sell_kw = m.number("max_sell_kw");
        mg.inelastic_load = m.series("inelastic", T);
        for (const JsonReader& u : m.array("users")) {
            UserParams up;
            up.total_demand_kwh = u.number("total_kwh");
            up.min_load = u.series("min", T);
            up.max_load = u.series("max", T);
            up.preferred = u.series("preferred", T);
            up.discomfort_weight = u.number("beta");
            mg.users.push_back(std::move(up));
        }
        const JsonReader s = m.object("storage");
        mg.storage.capacity_kwh = s.number("capacity");
        mg.storage.dod = s.number("dod");
        mg.storage.max_charge_kw = s.number("max_charge");
        mg.storage.max_discharge_kw = s.number("max_discharge");
        mg.storage.eff_charge = s.number("eff_c");
        mg.storage.eff_discharge = s.number("eff_d");
        mg.storage.amortized_cost_per_kwh = s.number("cs");
        mg.storage.initial_level_kwh = s.number("initial");
        sc.microgrids.push_back(std::move(mg));
    }
    if (sc.microgrids.empty()) throw ParseError("microgrids", "need at least one microgrid");
    detail::as_parse_error([&] { check_scenario(sc); });
    return sc;
}

inline Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path, "cannot open file");
    Json doc;
    try {
        doc = Json::parse(in);
    } catch (const Json::parse_error& e) {
        throw ParseError(path, e.what());
    }
    return parse_scenario(doc, std::filesystem::path(path).parent_path());
}

/// Fully explicit document: prices and wind fractions are written as arrays.
inline Json scenario_to_json(const Scenario& sc) {
    Json doc;
    doc["time"] = {{"T", sc.time.slots}, {"slot_hours", sc.time.slot_hours}};
    doc["prices"] = {{"buy", sc.prices.buy}, {"sell", sc.prices.sell}};
    Json mgs = Json::array();
    for (const MicrogridParams& mg : sc.microgrids) {
        Json users = Json::array();
        for (const UserParams& u : mg.users)
            users.push_back({{"total_kwh", u.total_demand_kwh},
                             {"min", u.min_load},
                             {"max", u.max_load},
                             {"preferred", u.preferred},
                             {"beta", u.discomfort_weight}});
        const StorageParams& s = mg.storage;
        mgs.push_back({{"id", mg.id},
                       {"wind", {{"capacity_kw", mg.wind_capacity_kw}, {"fractions", mg.wind_fraction}}},
                       {"max_buy_kw", mg.max_buy_kw},
                       {"max_sell_kw", mg.max_sell_kw},
                       {"inelastic", mg.inelastic_load},
                       {"users", users},
                       {"storage",
                        {{"capacity", s.capacity_kwh},
                         {"dod", s.dod},
                         {"max_charge", s.max_charge_kw},
                         {"max_discharge", s.max_discharge_kw},
                         {"eff_c", s.eff_charge},
                         {"eff_d", s.eff_discharge},
                         {"cs", s.amortized_cost_per_kwh},
                         {"initial", s.initial_level_kwh}}}});
    }
    doc["microgrids"] = mgs;
    return doc;
}

inline std::string emit_scenario(const Scenario& sc) { return scenario_to_json(sc).dump(2) + "\n"; }

namespace detail {

/// Uniform doubles from the raw 64-bit engine output, so generated files do
/// not depend on the standard library's distribution implementations.
class PortableRng {
public:
    explicit PortableRng(std::uint64_t seed) : engine_(seed) {}
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

private:
    std::mt19937_64 engine_;
};

inline double round_to(double v, double step) { return std::round(v / step) * step; }

} // namespace detail

struct GeneratorOptions {
    std::size_t microgrids = 3;
    std::size_t users = 3;
    std::uint64_t seed = 1;
    std::size_t slots = 24;
};

/// Synthetic day-ahead scenario. Microgrid k uses the parameter set k mod 3
/// of the three-microgrid reference case (wind capacity, grid limit, discomfort
/// weight, storage size and rate) with c_s = 0.01, efficiencies 0.95 and a
/// feed-in price of 0.1 per kWh. Wind follows a noisy diurnal speed profile
/// pushed through the default power curve; the first set has an evening load
/// peak, the others a daytime peak.
inline Scenario generate_scenario(const GeneratorOptions& opts) {
    if (opts.microgrids < 1) throw ValidationError("generate_scenario: need at least one microgrid");
    if (opts.slots < 1) throw ValidationError("generate_scenario: need at least one slot");
    constexpr double kCapacity[3] = {600.0, 1000.0, 1000.0};
    constexpr double kGridLimit[3] = {500.0, 300.0, 300.0};
    constexpr double kBeta[3] = {1.0, 0.5, 0.5};
    constexpr double kRate[3] = {30.0, 40.0, 50.0};
    constexpr double kStorage[3] = {100.0, 200.0, 200.0};
    constexpr double kDod = 0.8;
    const double two_pi = 2.0 * std::numbers::pi;

    detail::PortableRng rng(opts.seed);
    const std::size_t T = opts.slots;
    const double hour = 24.0 / static_cast<double>(T);
    Scenario sc;
    sc.time = {T, hour};
    for (std::size_t t = 0; t < T; ++t) {
        const double h = (static_cast<double>(t) + 0.5) * hour;
        const bool peak = h >= 10.0 && h < 20.0;
        const double buy = (peak ? 0.26 : 0.16) + 0.04 * std::sin(two_pi * (h - 9.0) / 24.0) + rng.uniform(0.0, 0.03);
        sc.prices.buy.push_back(detail::round_to(buy, 1e-4));
        sc.prices.sell.push_back(0.1);
    }

    for (std::size_t i = 0; i < opts.microgrids; ++i) {
        const std::size_t k = i % 3;
        MicrogridParams mg;
        mg.id = std::to_string(i + 1);
        mg.wind_capacity_kw = kCapacity[k];
        mg.max_buy_kw = kGridLimit[k];
        mg.max_sell_kw = kGridLimit[k];
        const double base = rng.uniform(4.0, 8.0);
        const double swing = rng.uniform(1.5, 3.5);
        const double phase = rng.uniform(0.0, 6.0);
        for (std::size_t t = 0; t < T; ++t) {
            const double h = (static_cast<double>(t) + 0.5) * hour;
            const double speed =
                std::max(0.0, base + swing * std::cos(two_pi * (h - 5.0 - phase) / 24.0) + rng.uniform(-1.0, 1.0));
            mg.wind_fraction.push_back(detail::round_to(power_fraction(speed), 1e-6));
        }

        const bool evening = k == 0;
        auto shape = [&](double h) {
            const double centre = evening ? 20.0 : 13.0;
            const double width = evening ? 3.0 : 4.0;
            double d = std::abs(h - centre);
            d = std::min(d, 24.0 - d);
            return 0.35 + 0.65 * std::exp(-0.5 * (d / width) * (d / width));
        };
        const double scale = rng.uniform(0.8, 1.2) * (k == 0 ? 0.6 : 1.0);
        for (std::size_t t = 0; t < T; ++t) {
            const double h = (static_cast<double>(t) + 0.5) * hour;
            mg.inelastic_load.push_back(detail::round_to(220.0 * scale * shape(h) * hour, 1e-3));
        }
        for (std::size_t n = 0; n < opts.users; ++n) {
            UserParams u;
            const double size = rng.uniform(20.0, 40.0) * scale * hour;
            for (std::size_t t = 0; t < T; ++t) {
                const double h = (static_cast<double>(t) + 0.5) * hour;
                const double y = detail::round_to(size * shape(h) * rng.uniform(0.9, 1.1), 1e-3);
                u.preferred.push_back(y);
                u.min_load.push_back(detail::round_to(0.3 * y, 1e-3));
                u.max_load.push_back(detail::round_to(1.6 * y, 1e-3));
                u.total_demand_kwh += y;
            }
            u.total_demand_kwh = detail::round_to(u.total_demand_kwh, 1e-3);
            u.discomfort_weight = kBeta[k];
            mg.users.push_back(std::move(u));
        }
        StorageParams& s = mg.storage;
        s.capacity_kwh = kStorage[k];
        s.dod = kDod;
        s.max_charge_kw = kRate[k];
        s.max_discharge_kw = kRate[k];
        s.eff_charge = 0.95;
        s.eff_discharge = 0.95;
        s.amortized_cost_per_kwh = 0.01;
        s.initial_level_kwh = s.min_level() + 0.5 * kDod * s.capacity_kwh;
        sc.microgrids.push_back(std::move(mg));
    }
    check_scenario(sc);
    for (const MicrogridParams& mg : sc.microgrids) precheck_supply(mg, sc.time);
    return sc;
}

} // namespace mgtrade
