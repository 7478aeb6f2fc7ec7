#pragma once

// Behavior statistics recomputed from raw trace steps: per-trace counts,
// accuracy-versus-count buckets, and tool usage shares.

#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "toolground/registry.hpp"
#include "toolground/rl.hpp"
#include "toolground/scheduler.hpp"

namespace toolground::stats {

struct TraceRow {
    std::string source;
    std::size_t index = 0;
    int tool_calls = 0;
    int ok_calls = 0;
    int rounds = 0;
    std::string outcome;
    std::optional<double> accuracy;

    double success_rate() const { return tool_calls > 0 ? static_cast<double>(ok_calls) / tool_calls : 0.0; }
};

struct Bucket {
    std::string label;
    double lo = 0.0;
    /// Inclusive upper bound.
    double hi = 0.0;
    int traces = 0;
    int graded = 0;
    double accuracy_sum = 0.0;

    std::optional<double> accuracy() const {
        if (graded == 0) return std::nullopt;
        return accuracy_sum / graded;
    }
};

struct UsageShare {
    std::string key;
    int calls = 0;
    double share = 0.0;
};

struct Aggregate {
    int traces = 0;
    int tool_calls = 0;
    int ok_calls = 0;
    int rounds = 0;
    int graded = 0;
    double accuracy_sum = 0.0;

    double success_rate() const { return tool_calls > 0 ? static_cast<double>(ok_calls) / tool_calls : 0.0; }
    double mean_calls() const { return traces > 0 ? static_cast<double>(tool_calls) / traces : 0.0; }
    double mean_rounds() const { return traces > 0 ? static_cast<double>(rounds) / traces : 0.0; }
    std::optional<double> accuracy() const {
        if (graded == 0) return std::nullopt;
        return accuracy_sum / graded;
    }
};

struct StatsReport {
    std::vector<TraceRow> rows;
    Aggregate aggregate;
    std::vector<Bucket> by_calls;
    std::vector<Bucket> by_rounds;
    std::vector<Bucket> by_success;
    std::vector<UsageShare> by_kind;
    std::vector<UsageShare> by_category;
};

inline std::vector<Bucket> call_buckets() {
    return {{"0", 0, 0}, {"1-4", 1, 4}, {"5-8", 5, 8}, {"9-12", 9, 12}, {"13+", 13, 1e18}};
}
inline std::vector<Bucket> round_buckets() {
    return {{"1-2", 0, 2}, {"3-5", 3, 5}, {"6-10", 6, 10}, {"11+", 11, 1e18}};
}
inline std::vector<Bucket> success_buckets() {
    return {{"[0,0.25)", 0, 0.25 - 1e-12}, {"[0.25,0.5)", 0.25, 0.5 - 1e-12},
            {"[0.5,0.75)", 0.5, 0.75 - 1e-12}, {"[0.75,1]", 0.75, 1.0}};
}

/// Issued tool calls; placeholder observations carry zero attempts.
inline std::vector<const Observation*> issued_calls(const Trajectory& t) {
    std::vector<const Observation*> out;
    for (const auto* o : t.observations()) {
        if (o->signal.attempts >= 1) out.push_back(o);
    }
    return out;
}

inline TraceRow trace_row(const Trajectory& t, const std::string& source = {}, std::size_t index = 0,
                          const rl::RewardConfig& reward = {}) {
    TraceRow r;
    r.source = source;
    r.index = index;
    for (const auto* o : issued_calls(t)) {
        ++r.tool_calls;
        if (o->ok()) ++r.ok_calls;
    }
    r.rounds = static_cast<int>(t.steps.size());
    r.outcome = std::string(to_string(t.outcome));
    if (t.task.gold_answer && !t.task.gold_answer->empty()) {
        r.accuracy = t.final ? rl::answer_reward(t.final->answer, *t.task.gold_answer, t.task.options, reward) : 0.0;
    }
    return r;
}

namespace detail {

inline void add_to(std::vector<Bucket>& buckets, double x, const std::optional<double>& acc) {
    for (auto& b : buckets) {
        if (x >= b.lo && x <= b.hi) {
            ++b.traces;
            if (acc) {
                ++b.graded;
                b.accuracy_sum += *acc;
            }
            return;
        }
    }
}

inline std::vector<UsageShare> shares(const std::map<std::string, int>& counts) {
    int total = 0;
    for (const auto& [_, n] : counts) total += n;
    std::vector<UsageShare> out;
    for (const auto& [k, n] : counts) out.push_back({k, n, total > 0 ? static_cast<double>(n) / total : 0.0});
    return out;
}

}  // namespace detail

struct NamedTrajectory {
    std::string source;
    const Trajectory* trajectory = nullptr;
};

/// Tools missing from `registry` (or every tool when it is null) are counted
/// under "unknown".
inline StatsReport trace_stats(const std::vector<NamedTrajectory>& traces, const ToolRegistry* registry = nullptr,
                               const rl::RewardConfig& reward = {}) {
    StatsReport rep;
    rep.by_calls = call_buckets();
    rep.by_rounds = round_buckets();
    rep.by_success = success_buckets();
    std::map<std::string, int> kinds, categories;
    std::map<std::string, std::size_t> per_source;
    for (const auto& nt : traces) {
        const auto& t = *nt.trajectory;
        auto row = trace_row(t, nt.source, per_source[nt.source]++, reward);
        auto& a = rep.aggregate;
        ++a.traces;
        a.tool_calls += row.tool_calls;
        a.ok_calls += row.ok_calls;
        a.rounds += row.rounds;
        if (row.accuracy) {
            ++a.graded;
            a.accuracy_sum += *row.accuracy;
        }
        detail::add_to(rep.by_calls, row.tool_calls, row.accuracy);
        detail::add_to(rep.by_rounds, row.rounds, row.accuracy);
        if (row.tool_calls > 0) detail::add_to(rep.by_success, row.success_rate(), row.accuracy);
        for (const auto* o : issued_calls(t)) {
            const ToolSpec* spec = registry != nullptr ? registry->find(o->tool_name) : nullptr;
            ++kinds[spec ? std::string(to_string(spec->kind)) : "unknown"];
            ++categories[spec ? spec->category : "unknown"];
        }
        rep.rows.push_back(std::move(row));
    }
    rep.by_kind = detail::shares(kinds);
    rep.by_category = detail::shares(categories);
    return rep;
}

inline StatsReport trace_stats(const std::vector<Trajectory>& traces, const ToolRegistry* registry = nullptr,
                               const rl::RewardConfig& reward = {}) {
    std::vector<NamedTrajectory> named;
    for (const auto& t : traces) named.push_back({"", &t});
    return trace_stats(named, registry, reward);
}

namespace detail {

inline std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", x);
    return buf;
}

inline std::string fmt(const std::optional<double>& x) { return x ? fmt(*x) : std::string(); }

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

}  // namespace detail

/// One CSV table with a leading `section` column.
inline std::string to_csv(const StatsReport& r) {
    using detail::csv_field;
    using detail::fmt;
    std::ostringstream o;
    o << "section,key,traces,tool_calls,ok_calls,success_rate,rounds,accuracy,share,outcome\n";
    for (const auto& row : r.rows) {
        o << "trace," << csv_field(row.source + "#" + std::to_string(row.index)) << ",1," << row.tool_calls << ','
          << row.ok_calls << ',' << fmt(row.success_rate()) << ',' << row.rounds << ',' << fmt(row.accuracy) << ",,"
          << row.outcome << '\n';
    }
    const auto& a = r.aggregate;
    o << "aggregate,all," << a.traces << ',' << a.tool_calls << ',' << a.ok_calls << ',' << fmt(a.success_rate()) << ','
      << a.rounds << ',' << fmt(a.accuracy()) << ",,\n";
    auto buckets = [&](const char* section, const std::vector<Bucket>& bs) {
        for (const auto& b : bs) {
            o << section << ',' << csv_field(b.label) << ',' << b.traces << ",,,,," << fmt(b.accuracy()) << ",,\n";
        }
    };
    buckets("calls_bucket", r.by_calls);
    buckets("rounds_bucket", r.by_rounds);
    buckets("success_bucket", r.by_success);
    for (const auto& s : r.by_kind) o << "kind_share," << csv_field(s.key) << ",," << s.calls << ",,,,," << fmt(s.share) << ",\n";
    for (const auto& s : r.by_category) {
        o << "category_share," << csv_field(s.key) << ",," << s.calls << ",,,,," << fmt(s.share) << ",\n";
    }
    return o.str();
}

inline std::string to_text(const StatsReport& r) {
    using detail::fmt;
    std::ostringstream o;
    const auto& a = r.aggregate;
    o << "traces: " << a.traces << "\n";
    if (a.traces == 0) return o.str();
    o << "tool calls: " << a.tool_calls << " (mean " << fmt(a.mean_calls()) << ")\n";
    o << "rounds: " << a.rounds << " (mean " << fmt(a.mean_rounds()) << ")\n";
    o << "success rate: " << fmt(a.success_rate()) << "\n";
    if (auto acc = a.accuracy()) o << "accuracy: " << fmt(*acc) << " over " << a.graded << " graded\n";
    auto table = [&](const char* title, const std::vector<Bucket>& bs) {
        o << title << ":\n";
        for (const auto& b : bs) {
            o << "  " << b.label << ": " << b.traces << " traces";
            if (auto acc = b.accuracy()) o << ", accuracy " << fmt(*acc);
            o << "\n";
        }
    };
    table("accuracy by tool calls", r.by_calls);
    table("accuracy by rounds", r.by_rounds);
    table("accuracy by success rate", r.by_success);
    o << "usage by kind:\n";
    for (const auto& s : r.by_kind) o << "  " << s.key << ": " << s.calls << " (" << fmt(s.share) << ")\n";
    o << "usage by category:\n";
    for (const auto& s : r.by_category) o << "  " << s.key << ": " << s.calls << " (" << fmt(s.share) << ")\n";
    return o.str();
}

}  // namespace toolground::stats
