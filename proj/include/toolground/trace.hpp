#pragma once

// Versioned trace files: one JSON document per episode, or one document per
// line (JSONL) for batches. Readers reject unknown formats and versions.

#include <stdexcept>
#include <string>
#include <vector>

#include "toolground/executor.hpp"
#include "toolground/json_io.hpp"
#include "toolground/protocol.hpp"
#include "toolground/scheduler.hpp"

namespace toolground {

inline constexpr std::string_view kTraceFormat = "toolground-trace";
inline constexpr int kTraceVersion = 1;

class TraceError : public std::runtime_error {
public:
    TraceError(const std::string& file, const std::string& detail)
        : std::runtime_error("ParseError [" + file + "]: " + detail), file_(file) {}
    const std::string& file() const { return file_; }

private:
    std::string file_;
};

inline Value to_json(const Step& s) {
    Value plan = Value::array();
    for (const auto& e : s.plan) plan.push_back(to_json(e));
    Value obs = Value::array();
    for (const auto& o : s.observations) obs.push_back(to_json(o));
    return Value{{"round", s.round},
                 {"state_digest", s.state_digest},
                 {"raw_messages", s.raw_messages},
                 {"parse_failures", s.parse_failures},
                 {"message", s.message ? to_json(*s.message) : Value()},
                 {"plan", std::move(plan)},
                 {"observations", std::move(obs)},
                 {"resolutions", s.resolutions},
                 {"violations", s.violations},
                 {"budget", s.budget}};
}

inline Value to_json(const Trajectory& t) {
    Value task{{"world_id", t.task.world_id}, {"question", t.task.question}, {"options", t.task.options}};
    if (t.task.gold_answer) task["gold_answer"] = *t.task.gold_answer;
    Value steps = Value::array();
    for (const auto& s : t.steps) steps.push_back(to_json(s));
    Value spans = Value::array();
    for (const auto& sp : t.token_spans) spans.push_back({{"role", to_string(sp.role)}, {"start", sp.start}, {"end", sp.end}});
    Value traj{{"task", std::move(task)},
               {"seed", t.seed},
               {"outcome", to_string(t.outcome)},
               {"final", t.final ? Value{{"answer", t.final->answer}, {"basis", t.final->basis}} : Value()},
               {"budget", t.budget},
               {"grounding", t.grounding},
               {"steps", std::move(steps)},
               {"text", t.text},
               {"token_spans", std::move(spans)}};
    return Value{{"format", kTraceFormat}, {"version", kTraceVersion}, {"trajectory", std::move(traj)}};
}

namespace detail {

inline std::vector<std::string> strings_of(const Value& j, const char* key, const char* what) {
    std::vector<std::string> out;
    if (!j.contains(key)) return out;
    if (!j[key].is_array()) throw json_io::FormatError(std::string(what) + ": " + key + " must be a list");
    for (const auto& e : j[key]) {
        if (!e.is_string()) throw json_io::FormatError(std::string(what) + ": " + key + " entries must be strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

inline Step step_from_json(const Value& j) {
    using namespace json_io;
    check_keys(j, {"round", "state_digest", "raw_messages", "parse_failures", "message", "plan", "observations",
                   "resolutions", "violations", "budget"},
               "step");
    Step s;
    s.round = static_cast<int>(get_integer(j, "round", "step"));
    s.state_digest = get_string_or(j, "state_digest", "", "step");
    s.raw_messages = strings_of(j, "raw_messages", "step");
    s.parse_failures = strings_of(j, "parse_failures", "step");
    if (j.contains("message") && !j["message"].is_null()) {
        auto parsed = parse_planner_message(j["message"].dump());
        if (auto* bad = std::get_if<ParseFailure>(&parsed)) throw FormatError("step.message: " + bad->str());
        s.message = std::get<PlannerMessage>(std::move(parsed));
        if (!s.raw_messages.empty()) s.message->raw_text = s.raw_messages.back();
    }
    if (j.contains("plan")) {
        for (const auto& e : j["plan"]) {
            check_keys(e, {"action", "pointer", "batch"}, "plan entry");
            s.plan.push_back({action_from_json(required(e, "action", "plan entry")), get_string(e, "pointer", "plan entry"),
                              static_cast<int>(get_integer(e, "batch", "plan entry"))});
        }
    }
    if (j.contains("observations")) {
        for (const auto& o : j["observations"]) s.observations.push_back(observation_from_json(o));
    }
    if (j.contains("resolutions")) {
        for (const auto& r : j["resolutions"]) s.resolutions.push_back(r);
    }
    s.violations = strings_of(j, "violations", "step");
    s.budget = j.value("budget", Value::object());
    return s;
}

}  // namespace detail

inline Trajectory trajectory_from_json(const Value& doc) {
    using namespace json_io;
    require_object(doc, "trace");
    check_keys(doc, {"format", "version", "trajectory"}, "trace");
    if (get_string(doc, "format", "trace") != kTraceFormat) throw FormatError("trace: unknown format");
    if (get_integer(doc, "version", "trace") != kTraceVersion) throw FormatError("trace: unsupported version");
    const auto& j = required(doc, "trajectory", "trace");
    check_keys(j, {"task", "seed", "outcome", "final", "budget", "grounding", "steps", "text", "token_spans"}, "trajectory");
    Trajectory t;
    const auto& task = required(j, "task", "trajectory");
    check_keys(task, {"world_id", "question", "options", "gold_answer"}, "task");
    t.task.world_id = get_string_or(task, "world_id", "", "task");
    t.task.question = get_string_or(task, "question", "", "task");
    t.task.options = detail::strings_of(task, "options", "task");
    if (task.contains("gold_answer") && !task["gold_answer"].is_null()) t.task.gold_answer = get_string(task, "gold_answer", "task");
    t.seed = j.value("seed", std::uint64_t{0});
    auto oc = outcome_from_string(get_string(j, "outcome", "trajectory"));
    if (!oc) throw FormatError("trajectory: unknown outcome");
    t.outcome = *oc;
    if (j.contains("final") && !j["final"].is_null()) {
        const auto& f = j["final"];
        check_keys(f, {"answer", "basis"}, "final");
        t.final = FinalAnswer{get_string_or(f, "answer", "", "final"), get_string_or(f, "basis", "", "final")};
    }
    t.budget = j.value("budget", Value::object());
    t.grounding = j.value("grounding", Value());
    for (const auto& s : required(j, "steps", "trajectory")) t.steps.push_back(detail::step_from_json(s));
    t.text = get_string_or(j, "text", "", "trajectory");
    if (j.contains("token_spans")) {
        for (const auto& sp : j["token_spans"]) {
            check_keys(sp, {"role", "start", "end"}, "token span");
            auto role = span_role_from_string(get_string(sp, "role", "token span"));
            if (!role) throw FormatError("token span: unknown role");
            t.token_spans.push_back({*role, static_cast<std::size_t>(get_integer(sp, "start", "token span")),
                                     static_cast<std::size_t>(get_integer(sp, "end", "token span"))});
        }
    }
    return t;
}

/// Deterministic text of one trace document.
inline std::string trace_text(const Trajectory& t) { return to_json(t).dump(1) + "\n"; }

inline void write_trace(const std::string& path, const Trajectory& t) { json_io::write_file(path, trace_text(t)); }

inline void write_trace_lines(const std::string& path, const std::vector<Trajectory>& ts) {
    std::string out;
    for (const auto& t : ts) out += to_json(t).dump() + "\n";
    json_io::write_file(path, out);
}

/// Reads a single-document trace or a JSONL batch.
inline std::vector<Trajectory> read_traces(const std::string& path) {
    std::string content;
    try {
        content = json_io::read_file(path);
    } catch (const std::exception& e) {
        throw TraceError(path, e.what());
    }
    std::vector<Trajectory> out;
    try {
        try {
            out.push_back(trajectory_from_json(Value::parse(content)));
            return out;
        } catch (const nlohmann::json::parse_error&) {
            out.clear();
        }
        std::size_t pos = 0;
        while (pos < content.size()) {
            auto nl = content.find('\n', pos);
            if (nl == std::string::npos) nl = content.size();
            const auto line = text::trim(std::string_view(content).substr(pos, nl - pos));
            pos = nl + 1;
            if (line.empty()) continue;
            out.push_back(trajectory_from_json(Value::parse(line)));
        }
    } catch (const std::exception& e) {
        throw TraceError(path, e.what());
    }
    if (out.empty()) throw TraceError(path, "no trace documents");
    return out;
}

}  // namespace toolground
