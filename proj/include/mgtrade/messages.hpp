#pragma once

// Message contract between the clearing house and the microgrid agents.
// Payloads carry only coupling variables, duals and scalar cost reports.

#include <cstddef>
#include <functional>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "mgtrade/matrices.hpp"

namespace mgtrade {

inline constexpr std::size_t kClearingHouse = static_cast<std::size_t>(-1);
inline constexpr std::size_t kAllAgents = static_cast<std::size_t>(-2);

struct BroadcastEnergy {
    TradeMatrix e_hat;
    TradeMatrix lambda;
    double rho = 0.0;
    int k = 0;
};

struct ProposeEnergy {
    std::size_t from = 0;
    std::vector<Series> e; // one series per microgrid; own entry is zero
    int k = 0;
};

struct BroadcastPayment {
    PaymentMatrix pi_hat;
    PaymentMatrix gamma;
    double rho = 0.0;
    int k = 0;
};

struct ProposePayment {
    std::size_t from = 0;
    std::vector<double> pi;
    int k = 0;
};

/// Sent once per microgrid after the energy phase: the two scalar costs the
/// payment phase is built on.
struct ReportCost {
    std::size_t from = 0;
    double cost_no_trading = 0.0;
    double cost_with_trading = 0.0;
};

enum class Phase { energy, payment };

inline const char* to_string(Phase p) { return p == Phase::energy ? "energy" : "payment"; }

/// Ends a phase and hands every agent the final cleared values (trades or
/// payments, flattened).
struct Terminate {
    Phase phase = Phase::energy;
    std::string reason;
    int k = 0;
    std::vector<double> cleared;
};

using Message = std::variant<BroadcastEnergy, ProposeEnergy, BroadcastPayment, ProposePayment, ReportCost, Terminate>;

using MessageSink = std::function<void(const Message&)>;

/// What an auditor sees of a message: routing, sizes and field names.
struct MessageSummary {
    Phase phase = Phase::energy;
    std::string kind;
    int iteration = 0;
    std::size_t sender = kClearingHouse;
    std::size_t recipient = kAllAgents;
    std::vector<std::string> fields;
    std::size_t values = 0; // number of scalars carried
    std::size_t bytes = 0;  // 8 bytes per scalar plus a fixed 16-byte header

    bool operator==(const MessageSummary&) const = default;
};

inline MessageSummary summarize(const Message& m) {
    MessageSummary s;
    std::visit(
        [&s](const auto& msg) {
            using T = std::decay_t<decltype(msg)>;
            if constexpr (std::is_same_v<T, BroadcastEnergy>) {
                s = {Phase::energy, "BroadcastEnergy", msg.k, kClearingHouse, kAllAgents,
                     {"e_hat", "lambda", "rho", "k"}, msg.e_hat.data().size() + msg.lambda.data().size() + 2};
            } else if constexpr (std::is_same_v<T, ProposeEnergy>) {
                std::size_t n = 1;
                for (const Series& v : msg.e) n += v.size();
                s = {Phase::energy, "ProposeEnergy", msg.k, msg.from, kClearingHouse, {"i", "e_i", "k"}, n + 1};
            } else if constexpr (std::is_same_v<T, BroadcastPayment>) {
                s = {Phase::payment, "BroadcastPayment", msg.k, kClearingHouse, kAllAgents,
                     {"pi_hat", "gamma", "rho", "k"}, msg.pi_hat.data().size() + msg.gamma.data().size() + 2};
            } else if constexpr (std::is_same_v<T, ProposePayment>) {
                s = {Phase::payment, "ProposePayment", msg.k, msg.from, kClearingHouse, {"i", "pi_i", "k"},
                     msg.pi.size() + 2};
            } else if constexpr (std::is_same_v<T, ReportCost>) {
                s = {Phase::payment, "ReportCost", 0, msg.from, kClearingHouse,
                     {"i", "cost_no_trading", "cost_with_trading"}, 3};
            } else {
                s = {msg.phase, "Terminate", msg.k, kClearingHouse, kAllAgents, {"reason", "k", "cleared"},
                     msg.cleared.size() + 2};
            }
        },
        m);
    s.bytes = 16 + 8 * s.values;
    return s;
}

} // namespace mgtrade
