#pragma once

// Resolution engine: turns abstract actions into executed tool chains through
// the fixed level order L1 (as issued), L2 (parameter rewrite), L3 (tool
// substitution), L4 (decomposition into children), and runs action plans
// layered by their result-pointer dependencies.
//
// Policies are pluggable; a policy reads a ResolverPrompt and answers in the
// planner wire format (Thought / Plan / Actions). An empty Actions list means
// the policy gives up on the level.

#include <algorithm>
#include <exception>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <variant>
#include <vector>

#include "toolground/budget.hpp"
#include "toolground/executor.hpp"
#include "toolground/protocol.hpp"
#include "toolground/registry.hpp"
#include "toolground/router.hpp"
#include "toolground/simenv.hpp"

namespace toolground {

enum class ResolutionLevel { L1, L2, L3, L4, unresolved };

inline std::string_view to_string(ResolutionLevel l) {
    switch (l) {
        case ResolutionLevel::L1: return "L1";
        case ResolutionLevel::L2: return "L2";
        case ResolutionLevel::L3: return "L3";
        case ResolutionLevel::L4: return "L4";
        case ResolutionLevel::unresolved: return "unresolved";
    }
    return "unresolved";
}

inline std::optional<ResolutionLevel> resolution_level_from_string(std::string_view s) {
    for (auto l : {ResolutionLevel::L1, ResolutionLevel::L2, ResolutionLevel::L3, ResolutionLevel::L4,
                   ResolutionLevel::unresolved}) {
        if (to_string(l) == s) return l;
    }
    return std::nullopt;
}

struct ResolutionRequest {
    ActionRequest action;
    std::string goal;
    std::string parent_context;
    int depth = 0;
    std::set<std::string> banned_tools;
    /// Root round the request belongs to; used to mint child pointers.
    int round = 0;
    /// Index path of the action within its round ("0", "0_3", ...).
    std::string path = "0";
    /// Pointer minted for the action itself.
    std::string pointer;
};

struct LevelAttempt {
    ResolutionLevel level = ResolutionLevel::L1;
    /// skipped | gave_up | failed | resolved
    std::string status;
    std::string note;
};

struct ChildRecord {
    ActionRequest action;
    std::string pointer;
    int batch = -1;
    /// primitive | abstract
    std::string kind;
    /// ok | failed | deferred
    std::string status;
    std::optional<FailureKind> failure;
    /// Nested resolution record for abstract children, null otherwise.
    Value resolution;
};

struct ResolutionOutcome {
    ResolutionLevel level = ResolutionLevel::unresolved;
    std::vector<Observation> observations;
    std::vector<ActionRequest> deferred;
    std::string note;

    ActionRequest action;
    std::string pointer;
    int depth = 0;
    std::vector<LevelAttempt> attempts;
    int policy_rounds = 0;
    std::set<std::string> banned;
    std::vector<std::string> violations;
    std::optional<FailureKind> failure;
    std::vector<ChildRecord> children;
    /// Value bound to the action's pointer when resolved.
    std::optional<Value> result;

    bool resolved() const { return level != ResolutionLevel::unresolved; }
};

inline Value to_json(const ChildRecord& c) {
    Value j{{"action", to_json(c.action)},
            {"pointer", c.pointer},
            {"batch", c.batch},
            {"kind", c.kind},
            {"status", c.status}};
    if (c.failure) j["failure"] = to_string(*c.failure);
    if (!c.resolution.is_null()) j["resolution"] = c.resolution;
    return j;
}

inline Value to_json(const ResolutionOutcome& o) {
    Value attempts = Value::array();
    for (const auto& a : o.attempts) {
        Value e{{"level", to_string(a.level)}, {"status", a.status}};
        if (!a.note.empty()) e["note"] = a.note;
        attempts.push_back(std::move(e));
    }
    Value children = Value::array();
    for (const auto& c : o.children) children.push_back(to_json(c));
    Value deferred = Value::array();
    for (const auto& d : o.deferred) deferred.push_back(to_json(d));
    Value j{{"action", to_json(o.action)},
            {"pointer", o.pointer},
            {"depth", o.depth},
            {"level", to_string(o.level)},
            {"attempts", std::move(attempts)},
            {"policy_rounds", o.policy_rounds},
            {"banned", Value(std::vector<std::string>(o.banned.begin(), o.banned.end()))},
            {"violations", o.violations},
            {"note", o.note},
            {"children", std::move(children)},
            {"deferred", std::move(deferred)}};
    if (o.failure) j["failure"] = to_string(*o.failure);
    return canonicalize(j);
}

// ---- policy interface ----------------------------------------------------------

struct ResolverPrompt {
    /// L2 (rewrite), L3 (substitute) or L4 (decompose).
    ResolutionLevel mode = ResolutionLevel::L2;
    ActionRequest action;
    std::string goal;
    std::string parent_context;
    int depth = 0;
    /// Fixed tool for L2.
    const ToolSpec* target = nullptr;
    /// Routed candidates for L3.
    std::vector<RouteCandidate> candidates;
    std::set<std::string> banned;
    std::vector<std::string> failures;
    const ToolRegistry* registry = nullptr;
    const AvailabilityContext* availability = nullptr;
    /// 1 for the first prompt of a level, 2 after an unparseable reply.
    int attempt = 1;

    std::string render() const {
        std::string s = "You ground a single action for a tool execution engine.\n";
        s += "Mode: ";
        s += mode == ResolutionLevel::L2 ? "rewrite (keep the target tool, fix its parameters)"
             : mode == ResolutionLevel::L3 ? "substitute (pick one listed tool that can do the same job)"
                                           : "decompose (split into two or more child actions)";
        s += "\nGoal: " + goal + "\nParent context: " + parent_context + "\nDepth: " + std::to_string(depth);
        s += "\nAction: " + canonical_dump(to_json(action));
        s += "\nBanned tools:";
        for (const auto& b : banned) s += " " + b;
        if (!failures.empty()) {
            s += "\nEarlier problems:";
            for (const auto& f : failures) s += "\n- " + f;
        }
        if (target != nullptr) {
            s += "\nTarget tool: " + target->name + "\nTarget schema: " + canonical_dump(to_json(target->input_schema));
        }
        if (!candidates.empty()) {
            s += "\nCandidates:";
            for (const auto& c : candidates) {
                s += "\n- " + c.tool->name + " [" + c.tool->category + "] score=" + format_number(c.score) + ": " +
                     c.tool->description + " schema=" + canonical_dump(to_json(c.tool->input_schema));
            }
        }
        if (mode == ResolutionLevel::L4) {
            s += "\nChildren may name each other's results with $names declared in their `output` field.";
        }
        s += "\nAnswer with one JSON object {\"Thought\": ..., \"Plan\": ..., \"Actions\": [{\"tool\": ..., "
             "\"description\": ..., \"params\": {...}}]}. Never include Finish; an empty Actions list gives up.";
        return s;
    }
};

class ResolverPolicy {
public:
    virtual ~ResolverPolicy() = default;
    virtual std::string respond(const ResolverPrompt& prompt) = 0;
};

/// One prompt/response pair with a policy, kept for the trajectory text.
struct PolicyExchange {
    std::string role;
    std::string prompt;
    std::string response;
    int depth = 0;
    std::string level;
};

// ---- runtime ---------------------------------------------------------------------

struct RuntimeConfig {
    /// Upper bound on concurrently executing actions in one batch.
    int max_parallel = 4;
    /// Routed candidates offered to the substitution level.
    std::size_t substitute_k = 5;
    /// Policy prompts per level (the second one follows an unparseable reply).
    int prompts_per_level = 2;
};

class Runtime {
public:
    Runtime(const ToolRegistry& registry, const sim::Environment& env, Budget& budget, const ExecutorTable& table,
            ResultCache& cache, ResolverPolicy& resolver, RuntimeConfig config = {})
        : registry(registry), env(env), budget(budget), table(table), cache(cache), resolver(resolver), config(config) {}

    const ToolRegistry& registry;
    const sim::Environment& env;
    Budget& budget;
    const ExecutorTable& table;
    ResultCache& cache;
    ResolverPolicy& resolver;
    RuntimeConfig config;
    std::vector<PolicyExchange> exchanges;

    ExecServices services() const { return {&env, &budget, &table, &cache, &registry}; }
};

// ---- dependency layering -----------------------------------------------------------

struct PlannedAction {
    ActionRequest action;
    std::string pointer;
    /// Index path within the round ("2", "2_0", ...).
    std::string path;
};

struct Layering {
    std::vector<std::vector<std::size_t>> batches;
    /// Actions on or behind a pointer cycle.
    std::vector<std::size_t> stuck;
    /// deps[i]: indices action i waits for.
    std::vector<std::set<std::size_t>> deps;
};

/// Names each action produces: its minted pointer plus a declared `output`.
inline std::map<std::string, std::vector<std::size_t>> producers_of(const std::vector<PlannedAction>& actions) {
    std::map<std::string, std::vector<std::size_t>> out;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        out[actions[i].pointer].push_back(i);
        if (actions[i].action.output && *actions[i].action.output != actions[i].pointer) {
            out[*actions[i].action.output].push_back(i);
        }
    }
    return out;
}

inline Layering layer_actions(const std::vector<PlannedAction>& actions) {
    const auto producers = producers_of(actions);
    Layering lay;
    lay.deps.resize(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
        for (const auto& p : collect_pointers(actions[i].action.params)) {
            if (auto it = producers.find(p); it != producers.end()) lay.deps[i].insert(it->second.begin(), it->second.end());
        }
    }
    std::vector<int> layer(actions.size(), -1);
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < actions.size(); ++i) {
            if (layer[i] >= 0) continue;
            int l = 0;
            bool ready = true;
            for (auto d : lay.deps[i]) {
                if (d == i || layer[d] < 0) {
                    ready = false;
                    break;
                }
                l = std::max(l, layer[d] + 1);
            }
            if (ready) {
                layer[i] = l;
                changed = true;
            }
        }
    }
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (layer[i] < 0) {
            lay.stuck.push_back(i);
            continue;
        }
        if (static_cast<std::size_t>(layer[i]) >= lay.batches.size()) lay.batches.resize(static_cast<std::size_t>(layer[i]) + 1);
        lay.batches[static_cast<std::size_t>(layer[i])].push_back(i);
    }
    return lay;
}

class DependencyCycle : public std::runtime_error {
public:
    explicit DependencyCycle(std::vector<std::string> cycle)
        : std::runtime_error("DependencyCycle: " + join(cycle)), cycle_(std::move(cycle)) {}
    const std::vector<std::string>& cycle() const { return cycle_; }

private:
    static std::string join(const std::vector<std::string>& c) {
        std::string s;
        for (const auto& n : c) s += (s.empty() ? "" : " -> ") + n;
        return s;
    }
    std::vector<std::string> cycle_;
};

/// Pointer names along one dependency cycle among the stuck actions, first
/// name repeated at the end.
inline std::vector<std::string> find_cycle(const std::vector<PlannedAction>& actions, const Layering& lay) {
    if (lay.stuck.empty()) return {};
    const std::set<std::size_t> stuck(lay.stuck.begin(), lay.stuck.end());
    std::vector<std::size_t> path;
    std::map<std::size_t, std::size_t> seen_at;
    std::size_t cur = lay.stuck.front();
    while (!seen_at.contains(cur)) {
        seen_at[cur] = path.size();
        path.push_back(cur);
        std::size_t next = cur;
        for (auto d : lay.deps[cur]) {
            if (stuck.contains(d)) {
                next = d;
                break;
            }
        }
        cur = next;
    }
    std::vector<std::string> names;
    for (std::size_t k = seen_at[cur]; k < path.size(); ++k) names.push_back(actions[path[k]].pointer);
    names.push_back(actions[cur].pointer);
    return names;
}

/// Topological layering of one round's actions by pointer references.
/// Pointers already bound in `store` and not produced in the round add no edge.
inline std::vector<std::vector<std::size_t>> partition_round(const std::vector<ActionRequest>& actions,
                                                             [[maybe_unused]] const ResultStore& store,
                                                             int round = 0) {
    std::vector<PlannedAction> planned;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        planned.push_back({actions[i], mint_pointer(actions[i].tool_name, round, std::to_string(i)), std::to_string(i)});
    }
    auto lay = layer_actions(planned);
    if (!lay.stuck.empty()) throw DependencyCycle(find_cycle(planned, lay));
    return lay.batches;
}

// ---- primitive execution -------------------------------------------------------------

struct PrimitiveCall {
    const ToolSpec* spec = nullptr;
    Value args;
};

/// Executes calls in order, or concurrently (bounded by max_parallel) when the
/// batch's worst-case cost fits the remaining clock. Calls that would hit the
/// same cache key as an earlier call run after the concurrent pass so the
/// result matches serial execution.
inline std::vector<Observation> execute_calls(Runtime& rt, const std::vector<PrimitiveCall>& calls) {
    std::vector<Observation> out(calls.size());
    const auto svc = rt.services();
    auto run = [&](std::size_t i) {
        try {
            out[i] = execute_action(*calls[i].spec, calls[i].args, svc);
        } catch (const std::exception& e) {
            out[i] = failed_observation(calls[i].spec->name, calls[i].args, FailureKind::InvalidOutput, e.what());
        }
    };

    std::vector<std::size_t> first, later;
    std::set<std::string> seen;
    std::int64_t worst_ms = 0;
    for (std::size_t i = 0; i < calls.size(); ++i) {
        const auto& spec = *calls[i].spec;
        auto rep = repair_args(spec.input_schema, calls[i].args);
        const Value key_args = rep.usable() ? canonicalize(*rep.repaired_args) : calls[i].args;
        if (!seen.insert(spec.name + "|" + canonical_dump(key_args)).second) {
            later.push_back(i);
            continue;
        }
        first.push_back(i);
        const double charge = std::min(static_cast<double>(spec.constraints.budget_cost), spec.constraints.timeout);
        worst_ms += BudgetState::to_ms(charge) * (1 + spec.constraints.max_retries);
    }
    const bool parallel = rt.config.max_parallel > 1 && first.size() > 1 && worst_ms <= rt.budget.remaining_ms();
    if (!parallel) {
        for (std::size_t i = 0; i < calls.size(); ++i) run(i);
        return out;
    }
    const auto width = static_cast<std::size_t>(rt.config.max_parallel);
    for (std::size_t start = 0; start < first.size(); start += width) {
        std::vector<std::thread> workers;
        for (std::size_t k = start; k < std::min(first.size(), start + width); ++k) workers.emplace_back(run, first[k]);
        for (auto& w : workers) w.join();
    }
    for (auto i : later) run(i);
    return out;
}

// ---- plans -------------------------------------------------------------------------

struct PlanContext {
    int round = 0;
    /// Depth of the plan's actions; abstract ones resolve at this depth.
    int depth = 0;
    bool root = true;
    std::string goal;
    std::string parent_context;
    /// Branch ban set; null at the root.
    std::set<std::string>* banned = nullptr;
};

struct PlanResult {
    Layering layering;
    std::vector<Observation> observations;
    /// Batch index per observation (-1 for cycle failures).
    std::vector<int> observation_batch;
    std::vector<ActionRequest> deferred;
    std::vector<ResolutionOutcome> resolutions;
    std::vector<std::string> violations;
    std::vector<ChildRecord> records;
    std::vector<std::optional<Value>> results;
};

inline ResolutionOutcome resolve_action(Runtime& rt, const ResolutionRequest& req, ResultStore& store);

inline std::string join_names(const std::vector<std::string>& names) {
    std::string s;
    for (const auto& n : names) s += (s.empty() ? "" : ", ") + n;
    return s;
}

/// Runs a plan batch by batch. Each batch resolves pointers against `store`,
/// executes primitives, resolves abstract actions in order, then binds
/// results into `store` so later batches see them.
inline PlanResult run_plan(Runtime& rt, const std::vector<PlannedAction>& actions, ResultStore& store,
                           const PlanContext& ctx) {
    PlanResult res;
    res.layering = layer_actions(actions);
    res.results.resize(actions.size());
    res.records.resize(actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) {
        res.records[i].action = actions[i].action;
        res.records[i].pointer = actions[i].pointer;
    }
    std::map<std::string, std::vector<std::size_t>> declared;
    for (std::size_t i = 0; i < actions.size(); ++i) {
        if (actions[i].action.output) declared[*actions[i].action.output].push_back(i);
    }

    auto stamp = [&](Observation& o, std::size_t i) {
        o.round = ctx.round;
        o.pointer = actions[i].pointer;
        o.alias = actions[i].action.output.value_or("");
        o.depth = ctx.depth;
    };
    auto add_obs = [&](Observation o, int batch) {
        res.observations.push_back(std::move(o));
        res.observation_batch.push_back(batch);
    };
    auto fail_record = [&](std::size_t i, FailureKind k) {
        res.records[i].status = "failed";
        res.records[i].failure = k;
    };

    if (!res.layering.stuck.empty()) {
        const auto cycle = find_cycle(actions, res.layering);
        for (auto i : res.layering.stuck) {
            auto o = failed_observation(actions[i].action.tool_name, actions[i].action.params, FailureKind::MissingArgument,
                                        "dependency cycle: " + join_names(cycle));
            stamp(o, i);
            add_obs(std::move(o), -1);
            res.records[i].kind = "primitive";
            fail_record(i, FailureKind::MissingArgument);
        }
        res.violations.push_back("dependency_cycle");
    }

    for (std::size_t b = 0; b < res.layering.batches.size(); ++b) {
        const auto& batch = res.layering.batches[b];
        const int bi = static_cast<int>(b);
        std::vector<PrimitiveCall> calls;
        std::vector<std::size_t> call_idx;
        std::vector<std::pair<std::size_t, ActionRequest>> abstracts;

        for (auto i : batch) {
            res.records[i].batch = bi;
            const auto& a = actions[i].action;
            auto resolved = resolve_pointers(a.params, store);
            if (auto* missing = std::get_if<UnresolvedPointer>(&resolved)) {
                res.records[i].kind = "primitive";
                if (ctx.root) {
                    auto o = failed_observation(a.tool_name, a.params, FailureKind::MissingArgument,
                                                "unbound pointer: " + join_names(missing->names));
                    stamp(o, i);
                    add_obs(std::move(o), bi);
                    fail_record(i, FailureKind::MissingArgument);
                } else {
                    res.deferred.push_back(a);
                    res.records[i].status = "deferred";
                }
                continue;
            }
            ActionRequest concrete = a;
            concrete.params = std::get<Value>(std::move(resolved));
            const auto cls = classify_action(rt.registry, concrete, rt.env.availability);
            if (cls.reason == ActionClass::Reason::runtime_internal) {
                auto o = failed_observation(a.tool_name, concrete.params, FailureKind::UnavailableTool,
                                            "tool is reserved for the runtime");
                stamp(o, i);
                add_obs(std::move(o), bi);
                res.records[i].kind = "primitive";
                fail_record(i, FailureKind::UnavailableTool);
                res.violations.push_back("runtime_internal_request:" + a.tool_name);
                continue;
            }
            const bool banned = ctx.banned != nullptr && ctx.banned->contains(a.tool_name);
            if (cls.kind == ActionKind::primitive && !banned) {
                calls.push_back({cls.matched, concrete.params});
                call_idx.push_back(i);
                res.records[i].kind = "primitive";
            } else {
                abstracts.emplace_back(i, std::move(concrete));
                res.records[i].kind = "abstract";
            }
        }

        auto observations = execute_calls(rt, calls);
        for (std::size_t c = 0; c < observations.size(); ++c) {
            const auto i = call_idx[c];
            auto& o = observations[c];
            stamp(o, i);
            if (o.ok()) {
                res.results[i] = o.evidence;
                res.records[i].status = "ok";
            } else {
                fail_record(i, *o.signal.failure);
                if (*o.signal.failure == FailureKind::EmptyResult && ctx.banned != nullptr) ctx.banned->insert(o.tool_name);
            }
            add_obs(std::move(o), bi);
        }

        for (auto& [i, concrete] : abstracts) {
            ResolutionRequest req;
            req.action = concrete;
            req.goal = ctx.goal;
            req.parent_context = ctx.parent_context;
            req.depth = ctx.depth;
            if (ctx.banned != nullptr) req.banned_tools = *ctx.banned;
            req.round = ctx.round;
            req.pointer = actions[i].pointer;
            req.path = actions[i].path.empty() ? std::to_string(i) : actions[i].path;
            auto outcome = resolve_action(rt, req, store);
            if (ctx.banned != nullptr) ctx.banned->insert(outcome.banned.begin(), outcome.banned.end());
            for (auto& o : outcome.observations) add_obs(o, bi);
            for (auto& d : outcome.deferred) res.deferred.push_back(d);
            for (auto& v : outcome.violations) res.violations.push_back(v);
            if (outcome.result) res.results[i] = *outcome.result;
            if (outcome.resolved()) {
                res.records[i].status = outcome.level == ResolutionLevel::L4 && !outcome.result ? "deferred" : "ok";
            } else {
                fail_record(i, outcome.failure.value_or(FailureKind::UnavailableTool));
            }
            res.records[i].resolution = to_json(outcome);
            res.resolutions.push_back(std::move(outcome));
        }

        for (auto i : batch) {
            if (res.results[i]) store.bind(actions[i].pointer, *res.results[i], {ctx.round, actions[i].action.tool_name});
        }
        for (const auto& [name, members] : declared) {
            const bool touched =
                std::any_of(members.begin(), members.end(), [&](std::size_t m) { return res.records[m].batch == bi; });
            if (!touched) continue;
            Value list = Value::array();
            for (auto m : members) {
                if (res.results[m]) list.push_back(*res.results[m]);
            }
            if (list.empty()) continue;
            store.bind(name, members.size() >= 2 ? list : list.front(), {ctx.round, actions[members.front()].action.tool_name});
        }
    }
    return res;
}

// ---- resolution --------------------------------------------------------------------

namespace detail {

/// Saves and restores the per-invocation resolver round counter and depth.
class InvocationScope {
public:
    explicit InvocationScope(Budget& b) : budget_(b) {
        budget_.with_state([&](BudgetState& s) {
            saved_rounds_ = s.resolver_rounds_used;
            saved_depth_ = s.depth;
            s.resolver_rounds_used = 0;
            return 0;
        });
    }
    ~InvocationScope() {
        budget_.with_state([&](BudgetState& s) {
            s.resolver_rounds_used = saved_rounds_;
            s.depth = saved_depth_;
            return 0;
        });
    }
    InvocationScope(const InvocationScope&) = delete;
    InvocationScope& operator=(const InvocationScope&) = delete;

private:
    Budget& budget_;
    int saved_rounds_ = 0;
    int saved_depth_ = 0;
};

}  // namespace detail

/// Resolves one action. Never throws for resolution problems; an unresolved
/// action yields a failed observation naming the action's tool.
inline ResolutionOutcome resolve_action(Runtime& rt, const ResolutionRequest& req, ResultStore& store) {
    ResolutionOutcome out;
    out.action = req.action;
    out.pointer = req.pointer;
    out.depth = req.depth;
    out.banned = req.banned_tools;

    std::optional<FailureKind> last_failure;
    bool budget_stop = false;

    auto finish_unresolved = [&](std::string note) {
        out.level = ResolutionLevel::unresolved;
        out.failure = budget_stop ? FailureKind::BudgetViolation : last_failure.value_or(FailureKind::UnavailableTool);
        out.note = "unresolved: " + note;
        auto o = failed_observation(req.action.tool_name, req.action.params, *out.failure, out.note);
        o.signal.attempts = 0;
        o.round = req.round;
        o.pointer = req.pointer;
        o.alias = req.action.output.value_or("");
        o.depth = req.depth;
        out.observations.push_back(std::move(o));
        return out;
    };

    if (rt.budget.enforce(BudgetEvent::recursion(req.depth)) == BudgetDecision::violation) {
        budget_stop = true;
        out.attempts.push_back({ResolutionLevel::L1, "skipped", "depth limit"});
        return finish_unresolved("DepthExceeded at depth " + std::to_string(req.depth));
    }
    detail::InvocationScope scope(rt.budget);

    auto stamp = [&](Observation& o) {
        o.round = req.round;
        o.pointer = req.pointer;
        o.alias = req.action.output.value_or("");
        o.depth = req.depth;
    };
    // Executes one grounded action; true when it produced usable evidence.
    auto run_single = [&](const ToolSpec& spec, const Value& params) {
        auto obs = execute_calls(rt, {PrimitiveCall{&spec, params}});
        auto& o = obs.front();
        stamp(o);
        const bool ok = o.ok();
        if (ok) {
            out.result = o.evidence;
        } else {
            last_failure = o.signal.failure;
            if (*o.signal.failure == FailureKind::EmptyResult) out.banned.insert(spec.name);
        }
        out.observations.push_back(std::move(o));
        return ok;
    };
    // Prompts the policy (with one re-prompt after an unparseable reply);
    // nullopt when the level must give up.
    auto ask = [&](ResolverPrompt prompt) -> std::optional<PlannerMessage> {
        prompt.goal = req.goal;
        prompt.parent_context = req.parent_context;
        prompt.depth = req.depth;
        prompt.action = req.action;
        prompt.banned = out.banned;
        prompt.registry = &rt.registry;
        prompt.availability = &rt.env.availability;
        for (int attempt = 1; attempt <= rt.config.prompts_per_level; ++attempt) {
            if (rt.budget.enforce(BudgetEvent::resolver_round()) == BudgetDecision::violation) {
                budget_stop = true;
                return std::nullopt;
            }
            ++out.policy_rounds;
            prompt.attempt = attempt;
            const std::string text = prompt.render();
            std::string raw = rt.resolver.respond(prompt);
            rt.exchanges.push_back({"resolver", text, raw, req.depth, std::string(to_string(prompt.mode))});
            auto parsed = parse_planner_message(raw);
            if (auto* bad = std::get_if<ParseFailure>(&parsed)) {
                prompt.failures.push_back("unparseable reply: " + bad->str());
                out.violations.push_back("resolver_parse_failure");
                continue;
            }
            auto msg = std::get<PlannerMessage>(std::move(parsed));
            if (auto check = validate_termination(msg, false); !check.accepted) {
                out.violations.push_back(std::string(to_string(*check.violation)));
                auto o = failed_observation("Resolver_Message", Value::object(), FailureKind::InvalidOutput,
                                            "finish from a resolver was rejected");
                o.signal.attempts = 0;
                o.evidence = Value{{"answer", msg.finish->answer}, {"completion_basis", msg.finish->completion_basis}};
                stamp(o);
                out.observations.push_back(std::move(o));
                msg.finish.reset();
            }
            return msg;
        }
        return std::nullopt;
    };
    auto usable_tool = [&](const ToolSpec* spec) {
        return spec != nullptr && spec->exposure == Exposure::planner_visible &&
               unavailable_reason(spec->availability, rt.env.availability).empty() && !out.banned.contains(spec->name);
    };
    auto clock_gone = [&] {
        if (!rt.budget.clock_exhausted()) return false;
        budget_stop = true;
        return true;
    };

    const auto cls = classify_action(rt.registry, req.action, rt.env.availability);

    // L1: the action as issued.
    if (cls.kind == ActionKind::primitive && !out.banned.contains(cls.matched->name)) {
        if (run_single(*cls.matched, req.action.params)) {
            out.attempts.push_back({ResolutionLevel::L1, "resolved", ""});
            out.level = ResolutionLevel::L1;
            out.note = "L1: executed " + cls.matched->name;
            return out;
        }
        out.attempts.push_back({ResolutionLevel::L1, "failed", std::string(to_string(*last_failure))});
    } else {
        out.attempts.push_back({ResolutionLevel::L1, "skipped", std::string(to_string(cls.reason))});
    }
    if (clock_gone()) return finish_unresolved("wall-clock budget exhausted");

    // L2: same tool, rewritten parameters.
    if (usable_tool(cls.matched)) {
        ResolverPrompt p;
        p.mode = ResolutionLevel::L2;
        p.target = cls.matched;
        if (last_failure) p.failures.push_back("execution failed: " + std::string(to_string(*last_failure)));
        auto msg = ask(p);
        if (!msg || msg->actions.empty()) {
            out.attempts.push_back({ResolutionLevel::L2, "gave_up", budget_stop ? "resolver round budget" : ""});
        } else if (const auto& a = msg->actions.front(); a.tool_name != cls.matched->name) {
            out.attempts.push_back({ResolutionLevel::L2, "gave_up", "rewrite changed the tool"});
        } else if (contains_pointer(a.params) || !repair_args(cls.matched->input_schema, a.params).usable()) {
            out.attempts.push_back({ResolutionLevel::L2, "gave_up", "rewritten parameters do not validate"});
        } else if (run_single(*cls.matched, a.params)) {
            out.attempts.push_back({ResolutionLevel::L2, "resolved", ""});
            out.level = ResolutionLevel::L2;
            out.note = "L2: repaired parameters of " + cls.matched->name;
            return out;
        } else {
            out.attempts.push_back({ResolutionLevel::L2, "failed", std::string(to_string(*last_failure))});
        }
    } else {
        out.attempts.push_back({ResolutionLevel::L2, "skipped", cls.matched ? "tool not usable" : "unknown tool"});
    }
    if (budget_stop) return finish_unresolved("resolver round budget exhausted");
    if (clock_gone()) return finish_unresolved("wall-clock budget exhausted");

    // L3: a similar executable tool.
    {
        ResolverPrompt p;
        p.mode = ResolutionLevel::L3;
        RouteQuery q{req.action.tool_name, req.action.description.empty() ? req.goal : req.action.description, {}};
        for (auto& c : search_tools(rt.registry, q, rt.config.substitute_k + out.banned.size() + 1)) {
            if (c.tool == cls.matched || !usable_tool(c.tool)) continue;
            if (p.candidates.size() < rt.config.substitute_k) p.candidates.push_back(std::move(c));
        }
        if (last_failure) p.failures.push_back("execution failed: " + std::string(to_string(*last_failure)));
        auto msg = ask(p);
        if (!msg || msg->actions.empty()) {
            out.attempts.push_back({ResolutionLevel::L3, "gave_up", budget_stop ? "resolver round budget" : ""});
        } else {
            const auto& a = msg->actions.front();
            const auto* spec = rt.registry.find(a.tool_name);
            if (!usable_tool(spec) || spec == cls.matched) {
                out.attempts.push_back({ResolutionLevel::L3, "gave_up", "substitute not usable: " + a.tool_name});
            } else if (contains_pointer(a.params) || !repair_args(spec->input_schema, a.params).usable()) {
                out.attempts.push_back({ResolutionLevel::L3, "gave_up", "substitute parameters do not validate"});
            } else if (run_single(*spec, a.params)) {
                out.attempts.push_back({ResolutionLevel::L3, "resolved", spec->name});
                out.level = ResolutionLevel::L3;
                out.note = "L3: substituted " + spec->name;
                return out;
            } else {
                out.attempts.push_back({ResolutionLevel::L3, "failed", std::string(to_string(*last_failure))});
            }
        }
    }
    if (budget_stop) return finish_unresolved("resolver round budget exhausted");
    if (clock_gone()) return finish_unresolved("wall-clock budget exhausted");

    // L4: children, possibly abstract, possibly chained through pointers.
    ResolverPrompt p;
    p.mode = ResolutionLevel::L4;
    if (last_failure) p.failures.push_back("execution failed: " + std::string(to_string(*last_failure)));
    auto msg = ask(p);
    if (!msg || msg->actions.size() < 2) {
        out.attempts.push_back({ResolutionLevel::L4, "gave_up", budget_stop ? "resolver round budget" : "EmptyDecomposition"});
        return finish_unresolved(budget_stop ? "resolver round budget exhausted" : "EmptyDecomposition");
    }
    std::vector<PlannedAction> children;
    for (std::size_t j = 0; j < msg->actions.size(); ++j) {
        const auto& c = msg->actions[j];
        const auto path = req.path + "_" + std::to_string(j);
        children.push_back({c, mint_pointer(c.tool_name, req.round, path), path});
    }
    PlanContext ctx;
    ctx.round = req.round;
    ctx.depth = req.depth + 1;
    ctx.root = false;
    ctx.goal = req.goal;
    ctx.parent_context = req.action.description.empty() ? req.action.tool_name : req.action.description;
    ctx.banned = &out.banned;
    auto plan = run_plan(rt, children, store, ctx);

    std::size_t ok_count = 0;
    for (auto& o : plan.observations) {
        if (o.ok()) {
            ++ok_count;
        } else if (o.signal.failure) {
            last_failure = o.signal.failure;
        }
        out.observations.push_back(std::move(o));
    }
    out.deferred = std::move(plan.deferred);
    out.children = std::move(plan.records);
    for (auto& v : plan.violations) out.violations.push_back(std::move(v));
    for (auto it = plan.results.rbegin(); it != plan.results.rend(); ++it) {
        if (*it) {
            out.result = **it;
            break;
        }
    }
    if (ok_count == 0 && out.deferred.empty()) {
        out.attempts.push_back({ResolutionLevel::L4, "failed", "no child produced evidence"});
        return finish_unresolved("all " + std::to_string(children.size()) + " children failed");
    }
    out.attempts.push_back({ResolutionLevel::L4, "resolved", std::to_string(children.size()) + " children"});
    out.level = ResolutionLevel::L4;
    out.note = "L4: " + std::to_string(children.size()) + " children, " + std::to_string(ok_count) + " ok, " +
               std::to_string(out.deferred.size()) + " deferred";
    return out;
}

}  // namespace toolground
