#pragma once

// Scenario configuration and the single-episode runner used by the CLI.

#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolground/builtin_tools.hpp"
#include "toolground/chat_policy.hpp"
#include "toolground/json_io.hpp"
#include "toolground/registry.hpp"
#include "toolground/rule_policy.hpp"
#include "toolground/scheduler.hpp"
#include "toolground/stats.hpp"
#include "toolground/trace.hpp"
#include "toolground/world.hpp"

namespace toolground {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Exactly one of `script` and `endpoint` may be set. A resolver with neither
/// uses the built-in rule defaults.
struct PolicySource {
    std::string script;
    std::string endpoint;
    std::string model = "default";
};

struct BudgetOverrides {
    std::optional<int> max_root_rounds;
    std::optional<int> max_resolver_rounds;
    std::optional<int> max_depth;
    std::optional<double> max_wall_clock_seconds;
    std::optional<long long> max_tool_cost;
    std::optional<double> planner_step_seconds;
};

struct ScenarioConfig {
    std::string world;
    std::string question;
    std::vector<std::string> options;
    std::optional<std::string> gold;
    PolicySource planner;
    PolicySource resolver;
    std::string manifest;
    BudgetOverrides budget;
    std::optional<int> max_parallel;
    std::uint64_t seed = 0;
    std::string output;
};

inline BudgetConfig apply(const BudgetOverrides& o, BudgetConfig b = {}) {
    if (o.max_root_rounds) b.max_root_rounds = *o.max_root_rounds;
    if (o.max_resolver_rounds) b.max_resolver_rounds = *o.max_resolver_rounds;
    if (o.max_depth) b.max_depth = *o.max_depth;
    if (o.max_wall_clock_seconds) b.max_wall_clock_seconds = *o.max_wall_clock_seconds;
    if (o.max_tool_cost) b.max_tool_cost = *o.max_tool_cost;
    if (o.planner_step_seconds) b.planner_step_seconds = *o.planner_step_seconds;
    return b;
}

namespace detail {

inline std::string resolve_path(const std::string& p, const std::filesystem::path& base) {
    if (p.empty() || base.empty()) return p;
    std::filesystem::path fp(p);
    return fp.is_absolute() ? p : (base / fp).lexically_normal().string();
}

inline void apply_policy(PolicySource& dst, const Value& j, const char* what, const std::filesystem::path& base) {
    using namespace json_io;
    check_keys(j, {"script", "endpoint", "model"}, what);
    if (j.contains("script")) {
        dst.script = resolve_path(get_string(j, "script", what), base);
        dst.endpoint.clear();
    }
    if (j.contains("endpoint")) {
        dst.endpoint = get_string(j, "endpoint", what);
        if (!j.contains("script")) dst.script.clear();
    }
    if (j.contains("model")) dst.model = get_string(j, "model", what);
}

}  // namespace detail

/// Overlays the fields present in `j` onto `cfg`. Relative paths are taken
/// relative to `base`.
inline void apply_scenario_json(ScenarioConfig& cfg, const Value& j, const std::filesystem::path& base = {}) {
    using namespace json_io;
    const char* what = "scenario";
    require_object(j, what);
    check_keys(j, {"about", "world", "question", "options", "gold", "planner", "resolver", "manifest", "budget",
                   "max_parallel", "seed", "output"},
               what);
    if (j.contains("world")) cfg.world = detail::resolve_path(get_string(j, "world", what), base);
    if (j.contains("question")) cfg.question = get_string(j, "question", what);
    if (j.contains("options")) {
        cfg.options.clear();
        for (const auto& o : j["options"]) {
            if (!o.is_string()) throw FormatError("scenario: options must be strings");
            cfg.options.push_back(o.get<std::string>());
        }
    }
    if (j.contains("gold")) cfg.gold = j["gold"].is_null() ? std::nullopt : std::optional(get_string(j, "gold", what));
    if (j.contains("planner")) detail::apply_policy(cfg.planner, j["planner"], "scenario.planner", base);
    if (j.contains("resolver")) detail::apply_policy(cfg.resolver, j["resolver"], "scenario.resolver", base);
    if (j.contains("manifest")) cfg.manifest = detail::resolve_path(get_string(j, "manifest", what), base);
    if (j.contains("budget")) {
        const auto& b = j["budget"];
        const char* bw = "scenario.budget";
        check_keys(b, {"max_root_rounds", "max_resolver_rounds", "max_depth", "max_wall_clock_seconds", "max_tool_cost",
                       "planner_step_seconds"},
                   bw);
        if (b.contains("max_root_rounds")) cfg.budget.max_root_rounds = static_cast<int>(get_integer(b, "max_root_rounds", bw));
        if (b.contains("max_resolver_rounds")) {
            cfg.budget.max_resolver_rounds = static_cast<int>(get_integer(b, "max_resolver_rounds", bw));
        }
        if (b.contains("max_depth")) cfg.budget.max_depth = static_cast<int>(get_integer(b, "max_depth", bw));
        if (b.contains("max_wall_clock_seconds")) cfg.budget.max_wall_clock_seconds = get_number(b, "max_wall_clock_seconds", bw);
        if (b.contains("max_tool_cost")) cfg.budget.max_tool_cost = get_integer(b, "max_tool_cost", bw);
        if (b.contains("planner_step_seconds")) cfg.budget.planner_step_seconds = get_number(b, "planner_step_seconds", bw);
    }
    if (j.contains("max_parallel")) cfg.max_parallel = static_cast<int>(get_integer(j, "max_parallel", what));
    if (j.contains("seed")) cfg.seed = static_cast<std::uint64_t>(get_integer(j, "seed", what));
    if (j.contains("output")) cfg.output = detail::resolve_path(get_string(j, "output", what), base);
}

inline void apply_scenario_file(ScenarioConfig& cfg, const std::string& path) {
    const auto j = json_io::parse_text(json_io::read_file(path), path);
    apply_scenario_json(cfg, j, std::filesystem::path(path).parent_path());
}

inline ScenarioConfig load_scenario(const std::string& path) {
    ScenarioConfig cfg;
    apply_scenario_file(cfg, path);
    return cfg;
}

inline void validate(const ScenarioConfig& c) {
    if (!c.planner.script.empty() && !c.planner.endpoint.empty()) {
        throw ConfigError("planner: script and endpoint are mutually exclusive");
    }
    if (!c.resolver.script.empty() && !c.resolver.endpoint.empty()) {
        throw ConfigError("resolver: script and endpoint are mutually exclusive");
    }
    if (c.planner.script.empty() && c.planner.endpoint.empty()) throw ConfigError("planner: a script or endpoint is required");
    if (c.world.empty()) throw ConfigError("world not found: no world file given");
    if (c.question.empty()) throw ConfigError("question is required");
    if (c.max_parallel && *c.max_parallel < 1) throw ConfigError("max_parallel must be >= 1");
}

struct ScenarioResult {
    Trajectory trajectory;
    int tool_calls = 0;
    /// Zero once an episode ran to any terminal outcome.
    int exit_code = 0;
};

/// Loads everything the config names, runs one episode, writes the trace when
/// an output path is set, and prints a short summary.
inline ScenarioResult run_scenario(const ScenarioConfig& cfg, std::ostream& out) {
    validate(cfg);
    if (!std::filesystem::is_regular_file(cfg.world)) throw ConfigError("world not found: " + cfg.world);
    const auto world = sim::load_world(cfg.world);
    const std::string manifest = cfg.manifest.empty() ? default_manifest_path() : cfg.manifest;
    auto registry = load_manifest(manifest);
    registry.freeze();
    const sim::Environment env(world);
    const auto table = default_executor_table();

    std::unique_ptr<PlannerPolicy> planner;
    if (!cfg.planner.script.empty()) {
        planner = std::make_unique<ScriptedPlanner>(ScriptedPlanner::load(cfg.planner.script));
    } else {
        planner = std::make_unique<ChatPlanner>(parse_endpoint(cfg.planner.endpoint, cfg.planner.model),
                                                planner_system_prompt(tool_catalog(registry, env.availability)));
    }
    std::unique_ptr<ResolverPolicy> resolver;
    if (!cfg.resolver.endpoint.empty()) {
        resolver = std::make_unique<ChatResolver>(parse_endpoint(cfg.resolver.endpoint, cfg.resolver.model));
    } else if (!cfg.resolver.script.empty()) {
        resolver = std::make_unique<RuleTablePolicy>(load_rule_table(cfg.resolver.script));
    } else {
        resolver = std::make_unique<RuleTablePolicy>();
    }

    Objective obj{cfg.question, cfg.options, world.world_id, cfg.gold};
    EpisodeConfig ec;
    ec.budget = apply(cfg.budget);
    if (cfg.max_parallel) ec.runtime.max_parallel = *cfg.max_parallel;
    ec.seed = cfg.seed;

    ScenarioResult r;
    r.trajectory = run_episode(obj, *planner, *resolver, registry, env, table, ec);
    r.tool_calls = static_cast<int>(stats::issued_calls(r.trajectory).size());
    if (!cfg.output.empty()) write_trace(cfg.output, r.trajectory);

    const auto& t = r.trajectory;
    out << "outcome: " << to_string(t.outcome) << "\n";
    out << "answer: " << (t.final ? t.final->answer : std::string("(none)")) << "\n";
    out << "rounds: " << t.steps.size() << "\n";
    out << "tool calls: " << r.tool_calls << "\n";
    if (!cfg.output.empty()) out << "trace: " << cfg.output << "\n";
    r.exit_code = 0;
    return r;
}

}  // namespace toolground
