#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "toolground/builtin_tools.hpp"
#include "toolground/registry.hpp"
#include "toolground/resolver.hpp"
#include "toolground/rule_policy.hpp"
#include "toolground/scheduler.hpp"
#include "toolground/simenv.hpp"
#include "toolground/world.hpp"

namespace tgtest {

using namespace toolground;

inline std::string data_path(const std::string& rel) { return std::string(TOOLGROUND_DATA_DIR) + "/" + rel; }

inline const ToolRegistry& default_registry() {
    static const ToolRegistry reg = [] {
        auto r = load_manifest(data_path("default_manifest.json"));
        r.freeze();
        return r;
    }();
    return reg;
}

inline const ExecutorTable& default_table() {
    static const ExecutorTable t = default_executor_table();
    return t;
}

inline sim::SyntheticWorld load_named_world(const std::string& name) {
    return sim::load_world(data_path("worlds/" + name + ".json"));
}

inline const std::vector<std::string>& fixture_world_names() {
    static const std::vector<std::string> names{"bathroom_cleaning", "kitchen_talk", "empty_room",
                                                "short_clip",        "silent_street", "long_lecture"};
    return names;
}

/// Seeded generator helpers for property tests.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(gen_); }
    long integer(long lo, long hi) { return std::uniform_int_distribution<long>(lo, hi)(gen_); }
    bool coin(double p = 0.5) { return std::bernoulli_distribution(p)(gen_); }
    template <typename T>
    const T& pick(const std::vector<T>& xs) {
        return xs[static_cast<std::size_t>(integer(0, static_cast<long>(xs.size()) - 1))];
    }
    std::string word(std::size_t max_len = 8) {
        static const std::string alpha = "abcdefghijklmnopqrstuvwxyz";
        std::string s;
        const auto n = static_cast<std::size_t>(integer(1, static_cast<long>(max_len)));
        for (std::size_t i = 0; i < n; ++i) s += alpha[static_cast<std::size_t>(integer(0, 25))];
        return s;
    }
    std::mt19937_64& engine() { return gen_; }

private:
    std::mt19937_64 gen_;
};

/// Resolver that replays fixed replies and records every prompt.
class ScriptedResolver final : public ResolverPolicy {
public:
    explicit ScriptedResolver(std::vector<std::string> replies = {}, std::string fallback = "")
        : replies_(replies.begin(), replies.end()), fallback_(std::move(fallback)) {}

    std::string respond(const ResolverPrompt& p) override {
        prompts.push_back(p);
        if (replies_.empty()) return fallback_;
        auto r = replies_.front();
        replies_.pop_front();
        return r;
    }

    std::vector<ResolverPrompt> prompts;

private:
    std::deque<std::string> replies_;
    std::string fallback_;
};

/// Resolver whose reply is computed from the prompt.
class LambdaResolver final : public ResolverPolicy {
public:
    explicit LambdaResolver(std::function<std::string(const ResolverPrompt&)> fn) : fn_(std::move(fn)) {}
    std::string respond(const ResolverPrompt& p) override {
        ++calls;
        return fn_(p);
    }
    int calls = 0;

private:
    std::function<std::string(const ResolverPrompt&)> fn_;
};

inline std::string actions_reply(const std::vector<Value>& actions) {
    Value m{{"Thought", "ground"}, {"Plan", "ground"}, {"Actions", Value::array()}};
    for (const auto& a : actions) m["Actions"].push_back(a);
    return m.dump();
}

inline Value action_json(const std::string& tool, Value params, const std::string& output = {}) {
    Value a{{"tool", tool}, {"params", std::move(params)}};
    if (!output.empty()) a["output"] = output;
    return a;
}

/// Owns everything a Runtime references.
struct Harness {
    explicit Harness(sim::SyntheticWorld world, BudgetConfig budget = {}, RuntimeConfig rc = {},
                     const ToolRegistry* registry = nullptr, const ExecutorTable* table = nullptr)
        : env(std::move(world)),
          budget(budget),
          registry(registry ? *registry : default_registry()),
          table(table ? *table : default_table()),
          rc(rc) {}

    Runtime runtime(ResolverPolicy& resolver) { return Runtime(registry, env, budget, table, cache, resolver, rc); }

    sim::Environment env;
    Budget budget;
    ResultCache cache;
    const ToolRegistry& registry;
    const ExecutorTable& table;
    RuntimeConfig rc;
};

inline Trajectory run_fig6(int max_parallel = 4) {
    const std::string dir = data_path("scenarios/fig6/");
    auto planner = ScriptedPlanner::load(dir + "planner.json");
    RuleTablePolicy resolver(load_rule_table(dir + "rules.json"));
    sim::Environment env(load_named_world("bathroom_cleaning"));
    Objective obj{"How many separate times does the person clean the toilet?", {}, "bathroom_cleaning", "2"};
    EpisodeConfig cfg;
    cfg.seed = 7;
    cfg.runtime.max_parallel = max_parallel;
    return run_episode(obj, planner, resolver, default_registry(), env, default_table(), cfg);
}

/// Registry holding the default tools plus `extra`.
inline ToolRegistry registry_with(const std::vector<ToolSpec>& extra) {
    ToolRegistry r;
    for (const auto* s : default_registry().entries()) r.register_tool(*s);
    for (const auto& s : extra) r.register_tool(s);
    r.freeze();
    return r;
}

}  // namespace tgtest
