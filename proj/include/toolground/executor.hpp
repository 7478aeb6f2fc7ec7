#pragma once

// Executes matched tool calls against an environment: validation and one
// repair pass, bounded retries per failure kind, result caching for
// deterministic tools, and normalization into Observations.

#include <array>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "toolground/budget.hpp"
#include "toolground/json_io.hpp"
#include "toolground/metatools.hpp"
#include "toolground/registry.hpp"
#include "toolground/schema.hpp"
#include "toolground/simenv.hpp"
#include "toolground/value.hpp"

namespace toolground {

enum class FailureKind { SchemaError, MissingArgument, UnavailableTool, EmptyResult, InvalidOutput, BudgetViolation };

inline constexpr std::array<FailureKind, 6> kAllFailureKinds = {
    FailureKind::SchemaError,   FailureKind::MissingArgument, FailureKind::UnavailableTool,
    FailureKind::EmptyResult,   FailureKind::InvalidOutput,   FailureKind::BudgetViolation};

inline std::string_view to_string(FailureKind k) {
    switch (k) {
        case FailureKind::SchemaError: return "SchemaError";
        case FailureKind::MissingArgument: return "MissingArgument";
        case FailureKind::UnavailableTool: return "UnavailableTool";
        case FailureKind::EmptyResult: return "EmptyResult";
        case FailureKind::InvalidOutput: return "InvalidOutput";
        case FailureKind::BudgetViolation: return "BudgetViolation";
    }
    return "?";
}

inline std::optional<FailureKind> failure_kind_from_string(std::string_view s) {
    for (auto k : kAllFailureKinds) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

struct ExecSignal {
    bool ok = false;
    std::optional<FailureKind> failure;
    int attempts = 1;
    double elapsed = 0.0;
    std::string message;
    bool cached = false;
};

struct Observation {
    std::string tool_name;
    Value final_args = Value::object();
    Value evidence;
    ExecSignal signal;
    int round = 0;
    std::string pointer;
    /// Pointer name declared by the action (`output`), if any.
    std::string alias;
    int depth = 0;

    bool ok() const { return signal.ok; }
};

inline Observation failed_observation(std::string tool, Value args, FailureKind kind, std::string message) {
    Observation o;
    o.tool_name = std::move(tool);
    o.final_args = std::move(args);
    o.signal.ok = false;
    o.signal.failure = kind;
    o.signal.message = std::move(message);
    return o;
}

inline Value to_json(const Observation& o) {
    Value signal{{"status", o.signal.ok ? "ok" : "failed"},
                 {"attempts", o.signal.attempts},
                 {"elapsed", o.signal.elapsed},
                 {"cached", o.signal.cached}};
    if (o.signal.failure) signal["failure"] = to_string(*o.signal.failure);
    if (!o.signal.message.empty()) signal["message"] = o.signal.message;
    Value j{{"call", {{"tool_name", o.tool_name}, {"final_args", o.final_args}}},
            {"evidence", o.evidence},
            {"signal", signal},
            {"round", o.round},
            {"pointer", o.pointer},
            {"depth", o.depth}};
    if (!o.alias.empty()) j["alias"] = o.alias;
    return canonicalize(j);
}

inline Observation observation_from_json(const Value& j) {
    using namespace json_io;
    check_keys(j, {"call", "evidence", "signal", "round", "pointer", "alias", "depth"}, "observation");
    const auto& call = required(j, "call", "observation");
    check_keys(call, {"tool_name", "final_args"}, "observation.call");
    const auto& sig = required(j, "signal", "observation");
    check_keys(sig, {"status", "failure", "attempts", "elapsed", "cached", "message"}, "observation.signal");
    Observation o;
    o.tool_name = get_string(call, "tool_name", "observation.call");
    o.final_args = required(call, "final_args", "observation.call");
    o.evidence = j.value("evidence", Value());
    const auto status = get_string(sig, "status", "observation.signal");
    if (status != "ok" && status != "failed") throw FormatError("observation.signal: bad status '" + status + "'");
    o.signal.ok = status == "ok";
    if (sig.contains("failure")) {
        auto k = failure_kind_from_string(get_string(sig, "failure", "observation.signal"));
        if (!k) throw FormatError("observation.signal: unknown failure kind");
        o.signal.failure = k;
    }
    if (o.signal.ok == o.signal.failure.has_value()) throw FormatError("observation.signal: status and failure disagree");
    o.signal.attempts = static_cast<int>(get_integer(sig, "attempts", "observation.signal"));
    o.signal.elapsed = get_number_or(sig, "elapsed", 0.0, "observation.signal");
    o.signal.cached = get_bool_or(sig, "cached", false, "observation.signal");
    o.signal.message = get_string_or(sig, "message", "", "observation.signal");
    o.round = static_cast<int>(get_integer_or(j, "round", 0, "observation"));
    o.pointer = get_string_or(j, "pointer", "", "observation");
    o.alias = get_string_or(j, "alias", "", "observation");
    o.depth = static_cast<int>(get_integer_or(j, "depth", 0, "observation"));
    return o;
}

struct CacheKey {
    std::string tool_name;
    std::string normalized_args;
    std::string world_id;

    auto operator<=>(const CacheKey&) const = default;
    std::string str() const { return tool_name + "|" + normalized_args + "|" + world_id; }
};

inline CacheKey cache_key(std::string_view tool_name, const Value& args, std::string_view world_id) {
    return {std::string(tool_name), canonical_dump(args), std::string(world_id)};
}

/// Episode-scoped, unbounded. Concurrent misses may both execute; equal
/// values make the last write harmless.
class ResultCache {
public:
    std::optional<Value> get(const CacheKey& k) const {
        std::lock_guard lock(mu_);
        auto it = entries_.find(k);
        if (it == entries_.end()) return std::nullopt;
        return std::optional<Value>(std::in_place, it->second);
    }
    void put(const CacheKey& k, Value v) {
        std::lock_guard lock(mu_);
        entries_[k] = std::move(v);
    }
    std::size_t size() const {
        std::lock_guard lock(mu_);
        return entries_.size();
    }
    void clear() {
        std::lock_guard lock(mu_);
        entries_.clear();
    }

private:
    mutable std::mutex mu_;
    std::map<CacheKey, Value> entries_;
};

/// Thrown by executors to report a specific failure kind.
class ToolError : public std::runtime_error {
public:
    ToolError(FailureKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    FailureKind kind() const { return kind_; }

private:
    FailureKind kind_;
};

struct ToolContext {
    const sim::Environment* env = nullptr;
    const ToolSpec* spec = nullptr;
    /// Text after ':' in the binding, e.g. "top_k" for "meta.table:top_k".
    std::string config;
    const ToolRegistry* registry = nullptr;
};

using ToolFn = std::function<Value(const ToolContext&, const Value& args)>;

class ExecutorTable {
public:
    void bind(std::string key, ToolFn fn) { fns_[std::move(key)] = std::move(fn); }

    /// Resolves "key" or "key:config".
    std::optional<std::pair<const ToolFn*, std::string>> find(std::string_view binding) const {
        const auto colon = binding.find(':');
        const auto key = binding.substr(0, colon);
        auto it = fns_.find(key);
        if (it == fns_.end()) return std::nullopt;
        std::string config = colon == std::string_view::npos ? std::string() : std::string(binding.substr(colon + 1));
        return std::pair{&it->second, std::move(config)};
    }

    bool has(std::string_view binding) const { return find(binding).has_value(); }

private:
    std::map<std::string, ToolFn, std::less<>> fns_;
};

inline bool is_empty_result(const Value& v) {
    return v.is_null() || (v.is_array() && v.empty()) || (v.is_object() && v.empty()) ||
           (v.is_string() && v.get_ref<const std::string&>().empty());
}

struct ExecServices {
    const sim::Environment* env = nullptr;
    Budget* budget = nullptr;
    const ExecutorTable* table = nullptr;
    ResultCache* cache = nullptr;
    const ToolRegistry* registry = nullptr;
};

/// Never throws for tool-level problems: every failure is an Observation.
inline Observation execute_action(const ToolSpec& spec, const Value& args, const ExecServices& svc) {
    const Value raw = args.is_null() ? Value::object() : args;
    auto fail = [&](FailureKind k, std::string msg, const Value& final_args, int attempts = 1, double elapsed = 0.0) {
        auto o = failed_observation(spec.name, final_args, k, std::move(msg));
        o.signal.attempts = attempts;
        o.signal.elapsed = elapsed;
        return o;
    };

    if (svc.budget != nullptr && svc.budget->clock_exhausted()) {
        return fail(FailureKind::BudgetViolation, "wall-clock budget exhausted", raw);
    }
    if (svc.env != nullptr) {
        if (auto why = unavailable_reason(spec.availability, svc.env->availability); !why.empty()) {
            return fail(FailureKind::UnavailableTool, "unavailable(" + why + "): " + spec.availability.str(), raw);
        }
    }
    if (contains_pointer(raw)) return fail(FailureKind::MissingArgument, "unresolved pointer in arguments", raw);

    auto repaired = repair_args(spec.input_schema, raw);
    if (!repaired.usable()) {
        std::string names;
        if (!repaired.missing.empty()) {
            for (const auto& m : repaired.missing) names += (names.empty() ? "" : ", ") + m;
            return fail(FailureKind::MissingArgument, "missing required: " + names, raw);
        }
        for (const auto& m : repaired.mismatched) names += (names.empty() ? "" : ", ") + m;
        return fail(FailureKind::SchemaError, "argument mismatch: " + names, raw);
    }
    Value final_args = *repaired.repaired_args;
    final_args = canonicalize(final_args);

    const std::string world_id = svc.env != nullptr ? svc.env->world.world_id : std::string();
    const auto key = cache_key(spec.name, final_args, world_id);
    if (spec.constraints.deterministic && svc.cache != nullptr) {
        if (auto hit = svc.cache->get(key)) {
            Observation o;
            o.tool_name = spec.name;
            o.final_args = final_args;
            o.evidence = *hit;
            o.signal.ok = true;
            o.signal.cached = true;
            return o;
        }
    }

    std::optional<std::pair<const ToolFn*, std::string>> bound;
    if (svc.table != nullptr) bound = svc.table->find(spec.binding);
    if (!bound) return fail(FailureKind::UnavailableTool, "no executor bound to '" + spec.binding + "'", final_args);

    const long long max_retries = spec.constraints.max_retries;
    const double cost = static_cast<double>(spec.constraints.budget_cost);
    int attempts = 0;
    double elapsed = 0.0;
    bool invalid_retried = false;
    while (true) {
        ++attempts;
        const double charge = std::min(cost, spec.constraints.timeout);
        if (svc.budget != nullptr &&
            svc.budget->charge_attempt(spec.constraints.budget_cost, charge) == BudgetDecision::violation) {
            return fail(FailureKind::BudgetViolation, "budget exceeded before attempt", final_args, attempts, elapsed);
        }
        elapsed += charge;
        if (cost > spec.constraints.timeout) {
            return fail(FailureKind::BudgetViolation, "timed out after " + format_number(spec.constraints.timeout) + " s",
                        final_args, attempts, elapsed);
        }

        ToolContext ctx{svc.env, &spec, bound->second, svc.registry};
        std::optional<FailureKind> failure;
        std::string message;
        Value out;
        try {
            out = (*bound->first)(ctx, final_args);
        } catch (const ToolError& e) {
            failure = e.kind();
            message = e.what();
        } catch (const meta::MetaError& e) {
            failure = FailureKind::SchemaError;
            message = e.what();
        } catch (const sim::SimError& e) {
            failure = FailureKind::SchemaError;
            message = e.what();
        } catch (const std::exception& e) {
            failure = FailureKind::InvalidOutput;
            message = std::string("executor error: ") + e.what();
        }
        if (!failure) {
            out = canonicalize(out);
            if (is_empty_result(out)) {
                failure = FailureKind::EmptyResult;
                message = "no usable evidence";
            } else if (!output_conforms(spec.output_schema, out)) {
                failure = FailureKind::InvalidOutput;
                message = "output does not match the declared " + spec.output_schema.shape + " shape";
            }
        }
        if (!failure) {
            if (spec.constraints.deterministic && svc.cache != nullptr) svc.cache->put(key, out);
            Observation o;
            o.tool_name = spec.name;
            o.final_args = final_args;
            o.evidence = std::move(out);
            o.signal.ok = true;
            o.signal.attempts = attempts;
            o.signal.elapsed = elapsed;
            return o;
        }
        const bool retry = (*failure == FailureKind::EmptyResult && attempts < 1 + max_retries) ||
                           (*failure == FailureKind::InvalidOutput && !invalid_retried && max_retries >= 1);
        if (*failure == FailureKind::InvalidOutput) invalid_retried = true;
        if (!retry) return fail(*failure, message, final_args, attempts, elapsed);
    }
}

}  // namespace toolground
