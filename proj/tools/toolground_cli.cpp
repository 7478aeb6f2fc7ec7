#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "toolground/config.hpp"
#include "toolground/registry.hpp"
#include "toolground/rl.hpp"
#include "toolground/stats.hpp"
#include "toolground/trace.hpp"

namespace tg = toolground;

namespace {

struct RunFlags {
    std::string config;
    tg::ScenarioConfig scenario;
    std::optional<int> max_root_rounds, max_resolver_rounds, max_depth;
    std::optional<double> max_wall_clock_seconds, planner_step_seconds;
    std::optional<long long> max_tool_cost;
    std::optional<std::string> gold;
};

struct RewardFlags {
    double lambda_valid = 0.1;
    double lambda_cost = 0.1;
    double epsilon = 1e-8;
    int repeat_threshold = 3;
    std::string evaluator = "auto";

    tg::rl::RewardConfig config() const {
        tg::rl::RewardConfig c;
        c.lambda_valid = lambda_valid;
        c.lambda_cost = lambda_cost;
        c.epsilon = epsilon;
        c.repeat_threshold = repeat_threshold;
        c.evaluator = evaluator == "mcq"  ? tg::rl::AnswerEvaluator::exact_match_mcq
                      : evaluator == "f1" ? tg::rl::AnswerEvaluator::token_f1
                                          : tg::rl::AnswerEvaluator::automatic;
        tg::rl::validate(c);
        return c;
    }
};

void add_reward_flags(CLI::App* app, RewardFlags& f) {
    app->add_option("--lambda-valid", f.lambda_valid, "Weight of the validity indicator");
    app->add_option("--lambda-cost", f.lambda_cost, "Weight of the cost indicator");
    app->add_option("--epsilon", f.epsilon, "Advantage denominator offset");
    app->add_option("--repeat-threshold", f.repeat_threshold, "Calls per cache key that count as repeated probing");
    app->add_option("--evaluator", f.evaluator, "Answer evaluator")->check(CLI::IsMember({"auto", "mcq", "f1"}));
}

std::string manifest_or_default(const std::string& m) { return m.empty() ? tg::default_manifest_path() : m; }

void emit(const std::string& path, const std::string& content) {
    if (path.empty() || path == "-") {
        std::cout << content;
        return;
    }
    tg::json_io::write_file(path, content);
}

struct LoadedTrace {
    std::string source;
    tg::Trajectory trajectory;
};

std::vector<LoadedTrace> load_all(const std::vector<std::string>& paths) {
    std::vector<LoadedTrace> out;
    for (const auto& p : paths) {
        for (auto& t : tg::read_traces(p)) out.push_back({p, std::move(t)});
    }
    return out;
}

int cmd_run(RunFlags& f) {
    auto& cfg = f.scenario;
    if (f.max_root_rounds) cfg.budget.max_root_rounds = f.max_root_rounds;
    if (f.max_resolver_rounds) cfg.budget.max_resolver_rounds = f.max_resolver_rounds;
    if (f.max_depth) cfg.budget.max_depth = f.max_depth;
    if (f.max_wall_clock_seconds) cfg.budget.max_wall_clock_seconds = f.max_wall_clock_seconds;
    if (f.planner_step_seconds) cfg.budget.planner_step_seconds = f.planner_step_seconds;
    if (f.max_tool_cost) cfg.budget.max_tool_cost = f.max_tool_cost;
    if (f.gold) cfg.gold = f.gold;
    if (!f.config.empty()) tg::apply_scenario_file(cfg, f.config);
    return tg::run_scenario(cfg, std::cout).exit_code;
}

int cmd_tools_list(const std::string& manifest, const std::string& kind, const std::string& category, bool json) {
    const auto reg = tg::load_manifest(manifest_or_default(manifest));
    tg::Value out = tg::Value::array();
    for (const auto* s : reg.entries()) {
        if (!kind.empty() && tg::to_string(s->kind) != kind) continue;
        if (!category.empty() && s->category != category) continue;
        if (json) {
            out.push_back(tg::to_json(*s));
        } else {
            std::cout << s->name << "\t" << tg::to_string(s->kind) << "\t" << s->category << "\t" << s->description
                      << "\n";
        }
    }
    if (json) std::cout << out.dump(1) << "\n";
    return 0;
}

int cmd_tools_count(const std::string& manifest, bool by_category) {
    const auto reg = tg::load_manifest(manifest_or_default(manifest));
    const auto base = tg::count_tools(reg, {tg::ToolKind::base, std::nullopt});
    const auto meta = tg::count_tools(reg, {tg::ToolKind::meta, std::nullopt});
    std::cout << "total " << reg.size() << "\nbase " << base << "\nmeta " << meta << "\n";
    if (by_category) {
        for (auto c : tg::kBaseCategories) {
            std::cout << "base/" << c << " " << tg::count_tools(reg, {tg::ToolKind::base, std::string(c)}) << "\n";
        }
        for (auto c : tg::kMetaCategories) {
            std::cout << "meta/" << c << " " << tg::count_tools(reg, {tg::ToolKind::meta, std::string(c)}) << "\n";
        }
    }
    return 0;
}

int cmd_trace_stats(const std::vector<std::string>& paths, const std::string& manifest, bool csv, const std::string& out,
                    const RewardFlags& rf) {
    const auto traces = load_all(paths);
    std::optional<tg::ToolRegistry> reg;
    if (!manifest.empty() || !paths.empty()) reg = tg::load_manifest(manifest_or_default(manifest));
    std::vector<tg::stats::NamedTrajectory> named;
    for (const auto& t : traces) named.push_back({t.source, &t.trajectory});
    const auto report = tg::stats::trace_stats(named, reg ? &*reg : nullptr, rf.config());
    emit(out, csv ? tg::stats::to_csv(report) : tg::stats::to_text(report));
    return 0;
}

tg::Value score_line(const LoadedTrace& t, std::size_t index, const tg::rl::TrajectoryScore& s) {
    auto j = tg::rl::to_json(s);
    j["trace"] = t.source;
    j["index"] = index;
    j["world_id"] = t.trajectory.task.world_id;
    j["question"] = t.trajectory.task.question;
    return j;
}

std::optional<std::string> gold_for(const tg::Trajectory& t, const std::optional<std::string>& override_gold) {
    return override_gold ? override_gold : t.task.gold_answer;
}

int cmd_rl_score(const std::vector<std::string>& paths, const std::optional<std::string>& gold, const std::string& out,
                 const RewardFlags& rf) {
    const auto cfg = rf.config();
    std::string text;
    std::map<std::string, std::size_t> per_source;
    for (const auto& t : load_all(paths)) {
        const auto s = tg::rl::score_trajectory(t.trajectory, gold_for(t.trajectory, gold), cfg);
        text += score_line(t, per_source[t.source]++, s).dump() + "\n";
    }
    emit(out, text);
    return 0;
}

int cmd_rl_advantages(const std::vector<std::string>& paths, int group_size, const std::optional<std::string>& gold,
                      const std::string& out, const RewardFlags& rf) {
    const auto cfg = rf.config();
    if (group_size < 2) throw tg::rl::RlError(tg::rl::RlErrorKind::GroupTooSmall, "group size must be >= 2");
    std::map<std::pair<std::string, std::string>, std::vector<double>> by_task;
    std::vector<std::pair<std::string, std::string>> order;
    for (const auto& t : load_all(paths)) {
        const auto s = tg::rl::score_trajectory(t.trajectory, gold_for(t.trajectory, gold), cfg);
        auto key = std::make_pair(t.trajectory.task.world_id, t.trajectory.task.question);
        if (!by_task.contains(key)) order.push_back(key);
        by_task[key].push_back(s.total);
    }
    std::string text;
    std::size_t group_id = 0;
    for (const auto& key : order) {
        const auto& rewards = by_task[key];
        if (rewards.size() % static_cast<std::size_t>(group_size) != 0) {
            throw tg::rl::RlError(tg::rl::RlErrorKind::GroupTooSmall,
                                  "task '" + key.second + "' has " + std::to_string(rewards.size()) +
                                      " rollouts, not a multiple of the group size");
        }
        for (std::size_t i = 0; i < rewards.size(); i += static_cast<std::size_t>(group_size)) {
            tg::rl::GroupBatch b;
            b.rewards.assign(rewards.begin() + static_cast<long>(i), rewards.begin() + static_cast<long>(i + group_size));
            b = tg::rl::group_advantages(std::move(b), cfg);
            tg::Value j{{"group", group_id++},
                        {"world_id", key.first},
                        {"question", key.second},
                        {"rewards", b.rewards},
                        {"skipped", b.skipped},
                        {"advantages", b.advantages ? tg::Value(*b.advantages) : tg::Value()}};
            text += j.dump() + "\n";
        }
    }
    emit(out, text);
    return 0;
}

std::map<std::string, double> read_map(const std::string& arg) {
    const auto text = std::filesystem::is_regular_file(arg) ? tg::json_io::read_file(arg) : arg;
    const auto j = tg::json_io::parse_text(text, arg);
    if (!j.is_object()) throw tg::json_io::FormatError(arg + ": expected an object of source weights");
    std::map<std::string, double> out;
    for (const auto& [k, v] : j.items()) {
        if (!v.is_number()) throw tg::json_io::FormatError(arg + ": value of " + k + " is not a number");
        out[k] = v.get<double>();
    }
    return out;
}

int cmd_rl_reweight(const std::string& weights, const std::string& rewards, double smoothing, double floor) {
    const auto out = tg::rl::update_source_weights(read_map(weights), read_map(rewards), smoothing, floor);
    std::cout << tg::Value(out).dump() << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Recursive tool-grounding runtime for video question answering"};
    app.require_subcommand(1);

    RunFlags rf;
    auto* run = app.add_subcommand("run", "Run one scenario episode");
    run->add_option("-c,--config", rf.config, "Scenario JSON; its fields override flags")->check(CLI::ExistingFile);
    run->add_option("--world", rf.scenario.world, "World file");
    run->add_option("--question", rf.scenario.question, "Question text");
    run->add_option("--option", rf.scenario.options, "Answer option (repeatable)");
    run->add_option("--gold", rf.gold, "Gold answer");
    run->add_option("--planner-script", rf.scenario.planner.script, "Scripted planner file");
    run->add_option("--planner-endpoint", rf.scenario.planner.endpoint, "Chat completions URL for the planner");
    run->add_option("--planner-model", rf.scenario.planner.model, "Planner model name");
    run->add_option("--resolver-rules", rf.scenario.resolver.script, "Resolver rule file");
    run->add_option("--resolver-endpoint", rf.scenario.resolver.endpoint, "Chat completions URL for the resolver");
    run->add_option("--resolver-model", rf.scenario.resolver.model, "Resolver model name");
    run->add_option("--manifest", rf.scenario.manifest, "Tool manifest (default: $TOOLGROUND_MANIFEST or bundled)");
    run->add_option("--max-root-rounds", rf.max_root_rounds, "Root planner round limit");
    run->add_option("--max-resolver-rounds", rf.max_resolver_rounds, "Resolver rounds per invocation");
    run->add_option("--max-depth", rf.max_depth, "Recursion depth limit");
    run->add_option("--max-wall-clock", rf.max_wall_clock_seconds, "Simulated wall clock limit in seconds");
    run->add_option("--max-tool-cost", rf.max_tool_cost, "Accumulated tool cost limit");
    run->add_option("--planner-step-seconds", rf.planner_step_seconds, "Simulated seconds per planner step");
    run->add_option("--max-parallel", rf.scenario.max_parallel, "Concurrent tool calls per batch");
    run->add_option("--seed", rf.scenario.seed, "Episode seed");
    run->add_option("-o,--output", rf.scenario.output, "Trace output path");

    std::string manifest, kind, category;
    bool json = false, by_category = false;
    auto* tools = app.add_subcommand("tools", "Inspect the tool registry");
    tools->require_subcommand(1);
    auto* tlist = tools->add_subcommand("list", "List tools");
    tlist->add_option("--manifest", manifest, "Tool manifest");
    tlist->add_option("--kind", kind, "base or meta")->check(CLI::IsMember({"base", "meta"}));
    tlist->add_option("--category", category, "Category filter");
    tlist->add_flag("--json", json, "Print full specs as JSON");
    auto* tcount = tools->add_subcommand("count", "Count tools");
    tcount->add_option("--manifest", manifest, "Tool manifest");
    tcount->add_flag("--by-category", by_category, "Also count per category");

    std::vector<std::string> paths;
    std::string out;
    bool csv = false;
    RewardFlags reward;
    auto* trace = app.add_subcommand("trace", "Inspect trace files");
    trace->require_subcommand(1);
    auto* tstats = trace->add_subcommand("stats", "Behavior statistics over traces");
    tstats->add_option("traces", paths, "Trace files (single document or JSONL)")->check(CLI::ExistingFile);
    tstats->add_option("--manifest", manifest, "Tool manifest used for usage shares");
    tstats->add_flag("--csv", csv, "Print the CSV table instead of text");
    tstats->add_option("-o,--output", out, "Write the report to a file");
    add_reward_flags(tstats, reward);

    std::optional<std::string> gold;
    int group_size = 4;
    std::string weights, rewards;
    double smoothing = 0.5, floor = 0.1;
    auto* rl = app.add_subcommand("rl", "Reward and reweighting utilities");
    rl->require_subcommand(1);
    auto* rscore = rl->add_subcommand("score", "Score trajectories (JSONL output)");
    rscore->add_option("traces", paths, "Trace files")->required()->check(CLI::ExistingFile);
    rscore->add_option("--gold", gold, "Gold answer overriding the trace task");
    rscore->add_option("-o,--output", out, "Scores file");
    add_reward_flags(rscore, reward);
    auto* radv = rl->add_subcommand("advantages", "Group-relative advantages (JSONL output)");
    radv->add_option("traces", paths, "Trace files; rollouts of one task form consecutive groups")
        ->required()
        ->check(CLI::ExistingFile);
    radv->add_option("-G,--group-size", group_size, "Rollouts per group");
    radv->add_option("--gold", gold, "Gold answer overriding the trace task");
    radv->add_option("-o,--output", out, "Advantages file");
    add_reward_flags(radv, reward);
    auto* rre = rl->add_subcommand("reweight", "Update data-source sampling weights");
    rre->add_option("--weights", weights, "JSON object or file of current weights")->required();
    rre->add_option("--rewards", rewards, "JSON object or file of average rewards")->required();
    rre->add_option("--smoothing", smoothing, "Weight kept from the old distribution");
    rre->add_option("--floor", floor, "Minimum weight per source");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(rf);
        if (*tlist) return cmd_tools_list(manifest, kind, category, json);
        if (*tcount) return cmd_tools_count(manifest, by_category);
        if (*tstats) return cmd_trace_stats(paths, manifest, csv, out, reward);
        if (*rscore) return cmd_rl_score(paths, gold, out, reward);
        if (*radv) return cmd_rl_advantages(paths, group_size, gold, out, reward);
        if (*rre) return cmd_rl_reweight(weights, rewards, smoothing, floor);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
