#pragma once

#include <algorithm>
#include <cstdint>
#include <mutex>
#include <optional>
#include <string>

#include "toolground/value.hpp"

namespace toolground {

struct BudgetConfig {
    int max_root_rounds = 15;
    int max_resolver_rounds = 3;
    int max_depth = 5;
    double max_wall_clock_seconds = 480.0;
    /// Optional cap on accumulated tool-call cost; unset means unbounded.
    std::optional<long long> max_tool_cost;
    /// Simulated seconds charged for every planner step.
    double planner_step_seconds = 0.0;
};

/// Counters for one episode. The wall clock is simulated and kept in integer
/// milliseconds so that accumulation is exact and order-independent.
struct BudgetState {
    BudgetConfig config;
    int root_rounds_used = 0;
    int resolver_rounds_used = 0;  // current resolver invocation
    int depth = 0;                 // current recursion depth
    std::int64_t wall_clock_ms = 0;
    long long tool_calls = 0;
    long long tool_cost_used = 0;

    int resolver_rounds_peak = 0;
    int depth_peak = 0;

    double wall_clock_used() const { return static_cast<double>(wall_clock_ms) / 1000.0; }
    std::int64_t wall_clock_max_ms() const { return to_ms(config.max_wall_clock_seconds); }
    std::int64_t remaining_ms() const { return std::max<std::int64_t>(0, wall_clock_max_ms() - wall_clock_ms); }

    static std::int64_t to_ms(double seconds) { return static_cast<std::int64_t>(seconds * 1000.0 + 0.5); }
};

struct BudgetEvent {
    enum class Kind { root_round, resolver_round, recursion, tool_call, tick };
    Kind kind = Kind::tick;
    double amount = 0.0;  // tool cost, tick seconds, or recursion depth

    static BudgetEvent root_round() { return {Kind::root_round, 0}; }
    static BudgetEvent resolver_round() { return {Kind::resolver_round, 0}; }
    static BudgetEvent recursion(int depth) { return {Kind::recursion, static_cast<double>(depth)}; }
    static BudgetEvent tool_call(long long cost) { return {Kind::tool_call, static_cast<double>(cost)}; }
    static BudgetEvent tick(double seconds) { return {Kind::tick, seconds}; }
};

enum class BudgetDecision { proceed, violation };

/// Applies one event. A violation leaves the counter at its last legal value,
/// so every used-counter stays within its maximum.
inline BudgetDecision enforce_budget(BudgetState& s, const BudgetEvent& e) {
    using K = BudgetEvent::Kind;
    switch (e.kind) {
        case K::root_round:
            if (s.root_rounds_used + 1 > s.config.max_root_rounds) return BudgetDecision::violation;
            ++s.root_rounds_used;
            return BudgetDecision::proceed;
        case K::resolver_round:
            if (s.resolver_rounds_used + 1 > s.config.max_resolver_rounds) return BudgetDecision::violation;
            ++s.resolver_rounds_used;
            s.resolver_rounds_peak = std::max(s.resolver_rounds_peak, s.resolver_rounds_used);
            return BudgetDecision::proceed;
        case K::recursion: {
            const int d = static_cast<int>(e.amount);
            s.depth_peak = std::max(s.depth_peak, std::min(d, s.config.max_depth));
            if (d >= s.config.max_depth) return BudgetDecision::violation;
            s.depth = d;
            return BudgetDecision::proceed;
        }
        case K::tool_call: {
            const auto cost = static_cast<long long>(e.amount);
            if (s.config.max_tool_cost && s.tool_cost_used + cost > *s.config.max_tool_cost) {
                return BudgetDecision::violation;
            }
            s.tool_cost_used += cost;
            ++s.tool_calls;
            return BudgetDecision::proceed;
        }
        case K::tick: {
            const auto ms = BudgetState::to_ms(e.amount);
            if (s.wall_clock_ms + ms > s.wall_clock_max_ms()) return BudgetDecision::violation;
            s.wall_clock_ms += ms;
            return BudgetDecision::proceed;
        }
    }
    return BudgetDecision::violation;
}

inline Value to_json(const BudgetState& s) {
    return Value{{"root_rounds_used", s.root_rounds_used},
                 {"max_root_rounds", s.config.max_root_rounds},
                 {"resolver_rounds_peak", s.resolver_rounds_peak},
                 {"max_resolver_rounds", s.config.max_resolver_rounds},
                 {"depth_peak", s.depth_peak},
                 {"max_depth", s.config.max_depth},
                 {"wall_clock_ms", s.wall_clock_ms},
                 {"max_wall_clock_ms", s.wall_clock_max_ms()},
                 {"tool_calls", s.tool_calls},
                 {"tool_cost_used", s.tool_cost_used}};
}

/// Thread-safe handle shared by the scheduler, resolver and executor.
class Budget {
public:
    explicit Budget(BudgetConfig cfg = {}) { state_.config = cfg; }

    BudgetDecision enforce(const BudgetEvent& e) {
        std::lock_guard lock(mu_);
        return enforce_budget(state_, e);
    }

    BudgetState snapshot() const {
        std::lock_guard lock(mu_);
        return state_;
    }

    /// Charges one executor attempt: a tool call plus `seconds` of simulated time.
    BudgetDecision charge_attempt(long long cost, double seconds) {
        std::lock_guard lock(mu_);
        BudgetState trial = state_;
        if (enforce_budget(trial, BudgetEvent::tick(seconds)) == BudgetDecision::violation) {
            ++clock_denials_;
            return BudgetDecision::violation;
        }
        if (enforce_budget(trial, BudgetEvent::tool_call(cost)) == BudgetDecision::violation) return BudgetDecision::violation;
        state_ = trial;
        return BudgetDecision::proceed;
    }

    std::int64_t remaining_ms() const {
        std::lock_guard lock(mu_);
        return state_.remaining_ms();
    }

    bool clock_exhausted() const {
        std::lock_guard lock(mu_);
        return state_.wall_clock_ms >= state_.wall_clock_max_ms();
    }

    /// Runs `fn(state)` under the lock, for composite updates.
    template <typename Fn>
    auto with_state(Fn&& fn) {
        std::lock_guard lock(mu_);
        return fn(state_);
    }

    const BudgetConfig& config() const { return state_.config; }

    /// Attempts refused because the wall clock could not absorb them.
    int clock_denials() const {
        std::lock_guard lock(mu_);
        return clock_denials_;
    }

private:
    mutable std::mutex mu_;
    BudgetState state_;
    int clock_denials_ = 0;
};

}  // namespace toolground
