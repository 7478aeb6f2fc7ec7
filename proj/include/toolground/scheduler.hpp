#pragma once

// Root episode loop: planner step, dependency layering, controlled-parallel
// execution and resolution, aggregation at the round boundary, budget
// enforcement and termination.

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "toolground/budget.hpp"
#include "toolground/executor.hpp"
#include "toolground/json_io.hpp"
#include "toolground/protocol.hpp"
#include "toolground/registry.hpp"
#include "toolground/resolver.hpp"
#include "toolground/simenv.hpp"

namespace toolground {

struct Objective {
    std::string question;
    std::vector<std::string> options;
    std::string world_id;
    std::optional<std::string> gold_answer;
};

// ---- planner interface ------------------------------------------------------------

struct PlannerInput {
    int round = 0;
    /// Rendered environment text for this step.
    std::string prompt;
    /// Set on the single re-prompt that follows an unparseable reply.
    bool reprompt = false;
    std::string parse_error;
    /// Bindings committed so far (read-only).
    const ResultStore* results = nullptr;
    std::uint64_t seed = 0;
};

class PlannerPolicy {
public:
    virtual ~PlannerPolicy() = default;
    virtual std::string respond(const PlannerInput& input) = 0;
};

/// Replays a fixed list of turns. A turn is either a wire message object or a
/// raw string sent verbatim. Strings may reference committed results:
/// "{{len $p}}" (element count, or string length) and "{{value $p}}".
class ScriptedPlanner final : public PlannerPolicy {
public:
    ScriptedPlanner(std::vector<Value> turns, bool repeat_last = false)
        : turns_(std::move(turns)), repeat_last_(repeat_last) {}

    static ScriptedPlanner from_json(const Value& j) {
        using namespace json_io;
        require_object(j, "planner script");
        check_keys(j, {"about", "turns", "repeat_last"}, "planner script");
        const auto& turns = required(j, "turns", "planner script");
        if (!turns.is_array()) throw FormatError("planner script: turns must be a list");
        std::vector<Value> out;
        for (const auto& t : turns) {
            if (!t.is_object() && !t.is_string()) throw FormatError("planner script: a turn is an object or a string");
            out.push_back(t);
        }
        return ScriptedPlanner(std::move(out), get_bool_or(j, "repeat_last", false, "planner script"));
    }

    static ScriptedPlanner load(const std::string& path) {
        return from_json(json_io::parse_text(json_io::read_file(path), path));
    }

    std::string respond(const PlannerInput& in) override {
        const std::size_t i = calls_++;
        Value turn;
        if (i < turns_.size()) {
            turn = turns_[i];
        } else if (repeat_last_ && !turns_.empty()) {
            turn = turns_.back();
        } else {
            turn = Value{{"Thought", "script exhausted"}, {"Plan", ""}, {"Actions", Value::array()}};
        }
        turn = expand(turn, in.results);
        return turn.is_string() ? turn.get<std::string>() : turn.dump();
    }

    std::size_t calls() const { return calls_; }

    /// Expands result references inside one string.
    static std::string expand_refs(const std::string& s, const ResultStore* store) {
        std::string out;
        std::size_t pos = 0;
        while (true) {
            const auto open = s.find("{{", pos);
            if (open == std::string::npos) break;
            const auto close = s.find("}}", open + 2);
            if (close == std::string::npos) break;
            out += s.substr(pos, open - pos);
            out += render_ref(text::trim(s.substr(open + 2, close - open - 2)), store);
            pos = close + 2;
        }
        out += s.substr(pos);
        return out;
    }

private:
    static std::string render_ref(const std::string& expr, const ResultStore* store) {
        const auto space = expr.find(' ');
        if (space == std::string::npos) return "{{" + expr + "}}";
        const auto op = expr.substr(0, space);
        const auto name = text::trim(expr.substr(space + 1));
        const Value* v = store ? store->get(name) : nullptr;
        if (v == nullptr) return "unknown";
        if (op == "len") {
            if (v->is_array() || v->is_object()) return std::to_string(v->size());
            if (v->is_string()) return std::to_string(v->get_ref<const std::string&>().size());
            return "1";
        }
        if (op == "value") return v->is_string() ? v->get<std::string>() : canonical_dump(*v);
        return "{{" + expr + "}}";
    }

    static Value expand(const Value& v, const ResultStore* store) {
        if (v.is_string()) return expand_refs(v.get<std::string>(), store);
        if (v.is_array()) {
            Value out = Value::array();
            for (const auto& e : v) out.push_back(expand(e, store));
            return out;
        }
        if (v.is_object()) {
            Value out = Value::object();
            for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = expand(it.value(), store);
            return out;
        }
        return v;
    }

    std::vector<Value> turns_;
    bool repeat_last_ = false;
    std::size_t calls_ = 0;
};

// ---- trajectory --------------------------------------------------------------------

enum class Outcome { finished, max_rounds, budget_exhausted, protocol_failure };

inline std::string_view to_string(Outcome o) {
    switch (o) {
        case Outcome::finished: return "finished";
        case Outcome::max_rounds: return "max_rounds";
        case Outcome::budget_exhausted: return "budget_exhausted";
        case Outcome::protocol_failure: return "protocol_failure";
    }
    return "?";
}

inline std::optional<Outcome> outcome_from_string(std::string_view s) {
    for (auto o : {Outcome::finished, Outcome::max_rounds, Outcome::budget_exhausted, Outcome::protocol_failure}) {
        if (to_string(o) == s) return o;
    }
    return std::nullopt;
}

enum class SpanRole { planner, resolver, observation, environment };

inline std::string_view to_string(SpanRole r) {
    switch (r) {
        case SpanRole::planner: return "planner";
        case SpanRole::resolver: return "resolver";
        case SpanRole::observation: return "observation";
        case SpanRole::environment: return "environment";
    }
    return "?";
}

inline std::optional<SpanRole> span_role_from_string(std::string_view s) {
    for (auto r : {SpanRole::planner, SpanRole::resolver, SpanRole::observation, SpanRole::environment}) {
        if (to_string(r) == s) return r;
    }
    return std::nullopt;
}

/// Half-open byte range [start, end) of Trajectory::text.
struct TokenSpan {
    SpanRole role = SpanRole::environment;
    std::size_t start = 0;
    std::size_t end = 0;

    bool operator==(const TokenSpan&) const = default;
};

struct PlannedEntry {
    ActionRequest action;
    std::string pointer;
    int batch = 0;
};

struct Step {
    int round = 0;
    std::string state_digest;
    /// Raw planner replies for this round (two when a re-prompt happened).
    std::vector<std::string> raw_messages;
    std::vector<std::string> parse_failures;
    std::optional<PlannerMessage> message;
    std::vector<PlannedEntry> plan;
    std::vector<Observation> observations;
    std::vector<Value> resolutions;
    std::vector<std::string> violations;
    Value budget = Value::object();
};

struct FinalAnswer {
    std::string answer;
    std::string basis;
};

struct Trajectory {
    Objective task;
    std::vector<Step> steps;
    std::optional<FinalAnswer> final;
    std::vector<TokenSpan> token_spans;
    std::string text;
    Outcome outcome = Outcome::protocol_failure;
    Value budget = Value::object();
    std::uint64_t seed = 0;
    Value grounding;

    std::vector<const Observation*> observations() const {
        std::vector<const Observation*> out;
        for (const auto& s : steps) {
            for (const auto& o : s.observations) out.push_back(&o);
        }
        return out;
    }
};

/// Appends role-tagged text; separators between spans belong to no span.
class TextRecorder {
public:
    explicit TextRecorder(Trajectory& t) : t_(t) {}
    void add(SpanRole role, std::string_view s) {
        if (s.empty()) return;
        if (!t_.text.empty()) t_.text.push_back('\n');
        const auto start = t_.text.size();
        t_.text += s;
        t_.token_spans.push_back({role, start, t_.text.size()});
    }

private:
    Trajectory& t_;
};

// ---- rendering -------------------------------------------------------------------

inline std::string fnv1a_hex(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline std::string observation_line(const Observation& o) {
    std::string s = o.pointer + " " + o.tool_name + " " + canonical_dump(o.final_args) + " -> ";
    if (o.ok()) return s + "ok " + canonical_dump(o.evidence);
    return s + "failed " + std::string(to_string(*o.signal.failure)) + ": " + o.signal.message;
}

inline std::string observation_summary(const Observation& o) {
    return o.pointer + " " + o.tool_name + (o.ok() ? " ok" : " failed " + std::string(to_string(*o.signal.failure)));
}

struct EpisodeState {
    Objective objective;
    std::vector<Observation> evidence_buffer;
    std::vector<int> evidence_round;
    std::vector<PlannerMessage> history;
    ResultStore results;
    std::optional<sim::GroundingBlock> grounding;
};

inline std::string render_planner_input(const EpisodeState& st, const sim::Environment& env, const BudgetState& b,
                                        int round) {
    std::string s = "Question: " + st.objective.question + "\n";
    if (!st.objective.options.empty()) {
        s += "Options:\n";
        for (std::size_t i = 0; i < st.objective.options.size(); ++i) {
            s += std::string(1, static_cast<char>('A' + i)) + ". " + st.objective.options[i] + "\n";
        }
    }
    s += "Round " + std::to_string(round) + " of " + std::to_string(b.config.max_root_rounds) + "; clock " +
         format_number(b.wall_clock_used()) + " of " + format_number(b.config.max_wall_clock_seconds) + " s; " +
         std::to_string(b.tool_calls) + " tool calls so far\n";
    if (st.grounding) {
        s += "Video segments:\n";
        for (const auto& seg : st.grounding->segments) {
            s += "- segment " + std::to_string(seg.segment.id) + " [" + format_number(seg.segment.t_start) + ", " +
                 format_number(seg.segment.t_end) + "] score " + format_number(seg.score) + ": " + seg.segment.caption;
            if (!seg.segment.transcript.empty()) s += " | said: " + seg.segment.transcript;
            s += "\n";
        }
        s += "Frames:";
        for (auto [id, t] : st.grounding->packed_frames) s += " " + sim::frame_ref(env.world, t);
        s += "\n";
    }
    const int last = round - 1;
    bool older = false;
    for (std::size_t i = 0; i < st.evidence_buffer.size(); ++i) {
        if (st.evidence_round[i] < last) {
            if (!older) s += "Earlier results:\n";
            older = true;
            s += "- " + observation_summary(st.evidence_buffer[i]) + "\n";
        }
    }
    bool latest = false;
    for (std::size_t i = 0; i < st.evidence_buffer.size(); ++i) {
        if (st.evidence_round[i] == last) {
            if (!latest) s += "Latest results:\n";
            latest = true;
            s += "- " + observation_line(st.evidence_buffer[i]) + "\n";
        }
    }
    s += "Reply with one JSON object holding Thought, Plan, Evidence and either Actions "
         "(tool, description, params, optional output name) or Finish (chain_complete, completion_basis, answer).";
    return s;
}

// ---- episode ---------------------------------------------------------------------

struct EpisodeConfig {
    BudgetConfig budget;
    RuntimeConfig runtime;
    std::uint64_t seed = 0;
};

inline Value to_json(const PlannedEntry& e) {
    return Value{{"action", to_json(e.action)}, {"pointer", e.pointer}, {"batch", e.batch}};
}

/// Runs one episode to termination. Deterministic for fixed scripted
/// policies, world and configuration.
inline Trajectory run_episode(const Objective& objective, PlannerPolicy& planner, ResolverPolicy& resolver,
                              const ToolRegistry& registry, const sim::Environment& env, const ExecutorTable& table,
                              const EpisodeConfig& cfg = {}) {
    Budget budget(cfg.budget);
    ResultCache cache;
    Runtime rt(registry, env, budget, table, cache, resolver, cfg.runtime);

    Trajectory traj;
    traj.task = objective;
    if (traj.task.world_id.empty()) traj.task.world_id = env.world.world_id;
    traj.seed = cfg.seed;
    TextRecorder rec(traj);

    EpisodeState st;
    st.objective = traj.task;
    if (!env.segments.empty()) {
        st.grounding = sim::build_grounding_block(env.segments, objective.question, env.config);
        traj.grounding = sim::to_json(*st.grounding, env.world);
    }

    std::vector<ActionRequest> carried;
    std::optional<Outcome> outcome;
    for (int round = 1; !outcome; ++round) {
        if (budget.enforce(BudgetEvent::root_round()) == BudgetDecision::violation) {
            outcome = Outcome::max_rounds;
            break;
        }
        if (budget.clock_exhausted() ||
            budget.enforce(BudgetEvent::tick(cfg.budget.planner_step_seconds)) == BudgetDecision::violation) {
            outcome = Outcome::budget_exhausted;
            break;
        }
        Step step;
        step.round = round;
        PlannerInput in;
        in.round = round;
        in.prompt = render_planner_input(st, env, budget.snapshot(), round);
        in.results = &st.results;
        in.seed = cfg.seed;
        step.state_digest = fnv1a_hex(in.prompt);
        rec.add(SpanRole::environment, in.prompt);

        std::optional<PlannerMessage> msg;
        for (int attempt = 0; attempt < 2 && !msg; ++attempt) {
            std::string raw = planner.respond(in);
            rec.add(SpanRole::planner, raw);
            step.raw_messages.push_back(raw);
            auto parsed = parse_planner_message(raw);
            if (auto* bad = std::get_if<ParseFailure>(&parsed)) {
                step.parse_failures.push_back(bad->str());
                in.reprompt = true;
                in.parse_error = bad->str();
                in.prompt = "Your last reply could not be read (" + bad->str() + "). Answer again with one JSON object.";
                if (attempt == 0) rec.add(SpanRole::environment, in.prompt);
                continue;
            }
            msg = std::get<PlannerMessage>(std::move(parsed));
        }
        if (!msg) {
            step.budget = to_json(budget.snapshot());
            traj.steps.push_back(std::move(step));
            outcome = Outcome::protocol_failure;
            break;
        }
        st.history.push_back(*msg);
        step.message = *msg;

        const auto check = validate_termination(*msg, true);
        if (msg->finish && check.accepted) {
            traj.final = FinalAnswer{msg->finish->answer, msg->finish->completion_basis};
            step.budget = to_json(budget.snapshot());
            traj.steps.push_back(std::move(step));
            outcome = Outcome::finished;
            break;
        }
        if (!check.accepted) step.violations.push_back(std::string(to_string(*check.violation)));

        std::vector<PlannedAction> planned;
        for (const auto& a : msg->actions) {
            const auto path = std::to_string(planned.size());
            planned.push_back({a, mint_pointer(a.tool_name, round, path), path});
        }
        for (const auto& a : carried) {
            const auto path = std::to_string(planned.size());
            planned.push_back({a, mint_pointer(a.tool_name, round, path), path});
        }
        carried.clear();

        ResultStore overlay(&st.results);
        PlanContext ctx;
        ctx.round = round;
        ctx.depth = 0;
        ctx.root = true;
        ctx.goal = objective.question;
        ctx.parent_context = msg->plan;
        const std::size_t exchanges_before = rt.exchanges.size();
        auto plan = run_plan(rt, planned, overlay, ctx);

        for (std::size_t b = 0; b < plan.layering.batches.size(); ++b) {
            for (auto i : plan.layering.batches[b]) step.plan.push_back({planned[i].action, planned[i].pointer, static_cast<int>(b)});
        }
        for (auto i : plan.layering.stuck) step.plan.push_back({planned[i].action, planned[i].pointer, -1});

        std::vector<std::size_t> order(plan.observations.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::vector<std::string> keys(order.size());
        for (std::size_t i = 0; i < order.size(); ++i) keys[i] = canonical_dump(plan.observations[i].final_args);
        std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
            const auto& a = plan.observations[x];
            const auto& b = plan.observations[y];
            if (plan.observation_batch[x] != plan.observation_batch[y]) return plan.observation_batch[x] < plan.observation_batch[y];
            if (a.tool_name != b.tool_name) return a.tool_name < b.tool_name;
            return keys[x] < keys[y];
        });
        for (auto i : order) step.observations.push_back(plan.observations[i]);
        for (auto& r : plan.resolutions) step.resolutions.push_back(to_json(r));
        for (auto& v : plan.violations) step.violations.push_back(v);

        for (std::size_t e = exchanges_before; e < rt.exchanges.size(); ++e) {
            rec.add(SpanRole::environment, rt.exchanges[e].prompt);
            rec.add(SpanRole::resolver, rt.exchanges[e].response);
        }
        std::string obs_text;
        for (const auto& o : step.observations) obs_text += (obs_text.empty() ? "" : "\n") + observation_line(o);
        rec.add(SpanRole::observation, obs_text);

        overlay.commit_into(st.results);
        for (const auto& o : step.observations) {
            st.evidence_buffer.push_back(o);
            st.evidence_round.push_back(round);
        }
        carried = std::move(plan.deferred);
        step.budget = to_json(budget.snapshot());
        traj.steps.push_back(std::move(step));

        const bool clock_done = budget.clock_exhausted() || budget.clock_denials() > 0;
        if (clock_done && budget.snapshot().root_rounds_used < cfg.budget.max_root_rounds) {
            outcome = Outcome::budget_exhausted;
        }
    }
    traj.outcome = *outcome;
    traj.budget = to_json(budget.snapshot());
    return traj;
}

}  // namespace toolground
