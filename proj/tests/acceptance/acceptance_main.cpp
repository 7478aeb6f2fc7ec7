// Runs every acceptance criterion and prints one PASS/FAIL line per criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "support/fixtures.hpp"
#include "toolground/config.hpp"
#include "toolground/metatools.hpp"
#include "toolground/rl.hpp"
#include "toolground/trace.hpp"

using namespace toolground;
using namespace tgtest;

namespace {

/// Collects failed expectations for one criterion.
struct Check {
    std::vector<std::string> problems;
    std::string note;

    void expect(bool ok, const std::string& what) {
        if (!ok) problems.push_back(what);
    }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string join(const std::vector<std::string>& xs) {
    std::string s;
    for (const auto& x : xs) s += (s.empty() ? "" : "; ") + x;
    return s;
}

// ---- 1 -----------------------------------------------------------------------------

void registry_totals(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    auto r = load_manifest(default_manifest_path());
    c.expect(count_tools(r) == 134, "total " + std::to_string(count_tools(r)));
    c.expect(count_tools(r, {ToolKind::base, std::nullopt}) == 26, "base count");
    c.expect(count_tools(r, {ToolKind::meta, std::nullopt}) == 108, "meta count");
    const std::vector<std::size_t> expected{10, 7, 4, 3, 2};
    for (std::size_t i = 0; i < kBaseCategories.size(); ++i) {
        const auto n = count_tools(r, {ToolKind::base, std::string(kBaseCategories[i])});
        c.expect(n == expected[i], std::string(kBaseCategories[i]) + " = " + std::to_string(n));
    }
    const double dt = seconds_since(t0);
    c.expect(dt < 1.0, "took " + std::to_string(dt) + " s");
    c.note = "134/26/108, 10/7/4/3/2";
}

// ---- 2 -----------------------------------------------------------------------------

void case_study(Check& c) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto t = run_fig6();
    c.expect(t.outcome == Outcome::finished, "outcome " + std::string(to_string(t.outcome)));
    c.expect(t.final && t.final->answer == "2", "final answer");
    if (t.steps.size() < 2) {
        c.expect(false, "fewer than two rounds");
        return;
    }
    bool retrieval = false;
    for (const auto& o : t.steps[0].observations) retrieval = retrieval || (o.tool_name == "Temporal_Retrieval" && o.ok());
    c.expect(retrieval, "round 1 temporal retrieval");

    const auto& s = t.steps[1];
    c.expect(!s.resolutions.empty() && s.resolutions[0]["level"] == "L4", "round 2 resolved by decomposition");
    int positive = 0;
    bool sorted = false, merged = false;
    std::size_t merged_events = 0;
    for (const auto& o : s.observations) {
        if (o.tool_name == "Video_Clip_QA" && o.ok() && o.evidence.value("verdict", "") == "yes") ++positive;
        if (o.tool_name == "Sort_Time_Ranges" && o.ok()) sorted = true;
        if (o.tool_name == "Merge_Temporal_Segments" && o.ok() && o.final_args.contains("tolerance")) {
            merged = true;
            merged_events = o.evidence.size();
        }
    }
    c.expect(positive == 4, "positive clip_qa windows: " + std::to_string(positive));
    c.expect(sorted, "sort step");
    c.expect(merged, "merge step with tolerance");
    c.expect(merged_events == 2, "merged events: " + std::to_string(merged_events));
    const double dt = seconds_since(t0);
    c.expect(dt < 5.0, "took " + std::to_string(dt) + " s");
    c.note = std::to_string(positive) + " positive windows -> " + std::to_string(merged_events) + " events, answer " +
             (t.final ? t.final->answer : "none");
}

// ---- 3 -----------------------------------------------------------------------------

Value actions_turn(Value actions) { return Value{{"Thought", "look"}, {"Plan", "look"}, {"Actions", std::move(actions)}}; }

void budget_exactness(Check& c) {
    const std::string garbage_or_give_up = R"({"Thought":"none","Plan":"","Actions":[]})";
    {
        ScriptedPlanner planner({actions_turn(Value::array({{{"tool", "ASR"}, {"params", Value::object()}}}))}, true);
        RuleTablePolicy resolver;
        sim::Environment env(load_named_world("kitchen_talk"));
        const auto t = run_episode({"q", {}, "", std::nullopt}, planner, resolver, default_registry(), env, default_table());
        c.expect(t.outcome == Outcome::max_rounds && t.steps.size() == 15 && t.budget["root_rounds_used"] == 15,
                 "root rounds: " + std::to_string(t.steps.size()));
    }
    {
        Harness h(load_named_world("bathroom_cleaning"));
        LambdaResolver garbage([](const ResolverPrompt&) { return std::string("no json"); });
        auto rt = h.runtime(garbage);
        ResultStore store;
        ResolutionRequest req;
        req.action = ActionRequest{"Video_Clip_QA", "", {{"t_start", 0}}, std::nullopt};
        req.pointer = "$Video_Clip_QA_r1_0";
        resolve_action(rt, req, store);
        const auto peak = h.budget.snapshot().resolver_rounds_peak;
        c.expect(peak == 3 && garbage.calls == 3, "resolver rounds: " + std::to_string(peak));
    }
    {
        Harness h(load_named_world("bathroom_cleaning"));
        LambdaResolver splitter([&](const ResolverPrompt& p) {
            if (p.mode != ResolutionLevel::L4) return garbage_or_give_up;
            return actions_reply({action_json("Deeper_Step", Value::object()),
                                  action_json("Calculator", {{"a", p.depth}, {"b", 1}, {"op", "+"}})});
        });
        auto rt = h.runtime(splitter);
        ResultStore store;
        ResolutionRequest req;
        req.action = ActionRequest{"Deeper_Step", "keep splitting", Value::object(), std::nullopt};
        req.pointer = "$Deeper_Step_r1_0";
        const auto o = resolve_action(rt, req, store);
        const auto peak = h.budget.snapshot().depth_peak;
        c.expect(peak == 5 && to_json(o).dump().find("DepthExceeded") != std::string::npos,
                 "depth peak: " + std::to_string(peak));
    }
    {
        std::vector<Value> turns;
        for (int r = 0; r < 15; ++r) {
            Value acts = Value::array();
            for (int i = 0; i < 10; ++i) {
                const double s = (r * 10 + i) * 5.0;
                acts.push_back({{"tool", "Video_Clip_QA"}, {"params", {{"t_start", s}, {"t_end", s + 5}, {"query", "slides"}}}});
            }
            turns.push_back(actions_turn(acts));
        }
        ScriptedPlanner planner(turns);
        RuleTablePolicy resolver;
        sim::Environment env(load_named_world("long_lecture"));
        const auto t = run_episode({"q", {}, "", std::nullopt}, planner, resolver, default_registry(), env, default_table());
        c.expect(t.outcome == Outcome::budget_exhausted && t.budget["wall_clock_ms"] == 480000,
                 "wall clock ms: " + t.budget["wall_clock_ms"].dump());
    }
    c.note = "15 root rounds, 3 resolver rounds, depth 5, 480 s";
}

// ---- 4 -----------------------------------------------------------------------------

void advantage_oracle(Check& c) {
    Rng rng(404);
    int skipped = 0, checked = 0;
    for (int g = 0; g < 1000; ++g) {
        std::vector<double> r(4);
        const int mode = static_cast<int>(rng.integer(0, 9));
        for (auto& x : r) x = mode == 0 ? 0.7 : mode == 1 ? static_cast<double>(rng.integer(0, 1)) : rng.uniform(-1, 2);
        const auto out = rl::group_advantages({r, std::nullopt, false}, 1e-8);
        const bool all_equal = std::adjacent_find(r.begin(), r.end(), std::not_equal_to<>()) == r.end();
        if (all_equal) {
            c.expect(out.skipped && !out.advantages, "equal group not skipped");
            ++skipped;
            continue;
        }
        double mean = 0;
        for (double x : r) mean += x / 4.0;
        double sq = 0;
        for (double x : r) sq += (x - mean) * (x - mean);
        const double sd = std::sqrt(sq / 4.0);
        if (!out.advantages) {
            c.expect(false, "missing advantages");
            continue;
        }
        for (std::size_t i = 0; i < 4; ++i) {
            const double want = (r[i] - mean) / (sd + 1e-8);
            if (std::abs((*out.advantages)[i] - want) > 1e-9) c.expect(false, "group " + std::to_string(g) + " mismatch");
        }
        ++checked;
    }
    c.note = std::to_string(checked) + " groups matched, " + std::to_string(skipped) + " skipped";
}

// ---- 5 -----------------------------------------------------------------------------

void clipped_grid(Check& c) {
    const std::vector<std::pair<double, double>> eps{{0.2, 0.2}, {0.1, 0.3}, {0.3, 0.1}, {0.05, 0.05}};
    int points = 0, literal_reading_misses = 0;
    for (const auto& [el, eh] : eps) {
        for (int i = 0; i < 50; ++i) {
            const double rho = 0.05 + i * (2.95 / 49.0);
            for (int j = 0; j < 50; ++j) {
                const double a = -2.0 + j * (4.0 / 49.0);
                const double v = rl::clipped_term(rho, a, el, eh);
                const double lo = 1.0 - el, hi = 1.0 + eh;
                const double clip = rho < lo ? lo : (rho > hi ? hi : rho);
                const double direct = std::min(rho * a, clip * a);
                if (std::abs(v - direct) > 1e-12) c.expect(false, "formula mismatch at rho=" + std::to_string(rho));
                if (v > rho * a + 1e-12 || v > clip * a + 1e-12) c.expect(false, "not a lower bound at rho=" + std::to_string(rho));
                if (a <= 0 && v < rho * a - 1e-12) ++literal_reading_misses;
                ++points;
            }
        }
    }
    c.note = std::to_string(points) + " points; value <= rho*A and <= clip(rho)*A everywhere; the reading "
             "'>= rho*A for A <= 0' contradicts the formula at " + std::to_string(literal_reading_misses) + " points";
}

// ---- 6 -----------------------------------------------------------------------------

using Pair = std::pair<double, double>;

std::vector<Pair> oracle_merge(std::vector<Pair> rs, double tol) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < rs.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < rs.size() && !changed; ++j) {
                if (std::max(rs[i].first, rs[j].first) - std::min(rs[i].second, rs[j].second) <= tol) {
                    rs[i] = {std::min(rs[i].first, rs[j].first), std::max(rs[i].second, rs[j].second)};
                    rs.erase(rs.begin() + static_cast<long>(j));
                    changed = true;
                }
            }
        }
    }
    std::sort(rs.begin(), rs.end());
    return rs;
}

std::vector<Pair> bounds(const std::vector<meta::TimeRange>& rs) {
    std::vector<Pair> out;
    for (const auto& r : rs) out.emplace_back(r.t_start, r.t_end);
    return out;
}

void merge_oracle(Check& c) {
    Rng rng(606);
    for (int k = 0; k < 1000; ++k) {
        std::vector<meta::TimeRange> rs;
        std::vector<Pair> raw;
        const auto n = rng.integer(0, 15);
        for (long i = 0; i < n; ++i) {
            const double s = std::round(rng.uniform(0, 120) * 2) / 2;
            const double e = s + std::round(rng.uniform(0, 15) * 2) / 2;
            rs.push_back({s, e, Value{{"i", i}}});
            raw.emplace_back(s, e);
        }
        const double tol = std::round(rng.uniform(0, 6) * 2) / 2;
        const auto out = meta::merge_temporal_segments(rs, tol);
        const auto tag = "case " + std::to_string(k);
        c.expect(bounds(out) == oracle_merge(raw, tol), tag + " oracle");
        c.expect(bounds(meta::merge_temporal_segments(out, tol)) == bounds(out), tag + " idempotence");
        auto shuffled = rs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
        c.expect(canonical_dump(Value(bounds(meta::merge_temporal_segments(shuffled, tol)))) == canonical_dump(Value(bounds(out))),
                 tag + " shuffle");
        c.expect(meta::merge_temporal_segments(rs, tol + 1.5).size() <= out.size(), tag + " monotonicity");
    }
    c.note = "1000 random range sets";
}

// ---- 7 -----------------------------------------------------------------------------

void grounding_contract(Check& c) {
    std::string summary;
    for (const auto& name : fixture_world_names()) {
        sim::Environment env(load_named_world(name));
        const auto& segs = env.segments;
        double covered = 0;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            c.expect(segs[i].length() > 0 && segs[i].length() <= 60.0, name + " segment length");
            if (i > 0) c.expect(segs[i].t_start == segs[i - 1].t_end, name + " gap");
            covered += segs[i].length();
        }
        c.expect(!segs.empty() && segs.front().t_start == 0 && segs.back().t_end == env.world.duration, name + " tiling");
        c.expect(std::abs(covered - env.world.duration) < 1e-9, name + " coverage");
        const auto block = sim::build_grounding_block(segs, "what happens in the video");
        const std::size_t want = segs.size() > 3 ? 3 : segs.size();
        c.expect(block.segments.size() == want, name + " retained " + std::to_string(block.segments.size()));
        summary += (summary.empty() ? "" : ", ") + name + " " + std::to_string(segs.size()) + "->" + std::to_string(block.segments.size());
    }
    c.note = summary;
}

// ---- 8 -----------------------------------------------------------------------------

void failure_taxonomy(Check& c) {
    std::set<FailureKind> seen;
    auto run = [&](const std::string& world, const std::string& tool, const Value& args, const ExecutorTable* table = nullptr,
                   BudgetConfig budget = {}) {
        sim::Environment env(load_named_world(world));
        Budget b(budget);
        ResultCache cache;
        const auto o = execute_action(*default_registry().find(tool), args,
                                      {&env, &b, table ? table : &default_table(), &cache, &default_registry()});
        if (o.signal.failure) seen.insert(*o.signal.failure);
        return o.signal.failure;
    };
    c.expect(run("bathroom_cleaning", "Video_Clip_QA", {{"t_start", "soon"}, {"t_end", 5}, {"query", "x"}}) == FailureKind::SchemaError, "schema");
    c.expect(run("bathroom_cleaning", "Temporal_Retrieval", Value::object()) == FailureKind::MissingArgument, "missing");
    c.expect(run("silent_street", "ASR", Value::object()) == FailureKind::UnavailableTool, "unavailable");
    c.expect(run("bathroom_cleaning", "Temporal_Retrieval", {{"query", "zebra"}}) == FailureKind::EmptyResult, "empty");
    auto broken = default_table();
    broken.bind("sim.clip_qa", [](const ToolContext&, const Value&) { return Value("not a record"); });
    c.expect(run("bathroom_cleaning", "Video_Clip_QA", {{"t_start", 0}, {"t_end", 5}, {"query", "x"}}, &broken) ==
                 FailureKind::InvalidOutput, "invalid output");
    BudgetConfig tiny;
    tiny.max_wall_clock_seconds = 1;
    c.expect(run("bathroom_cleaning", "Temporal_Retrieval", {{"query", "cleaning"}}, nullptr, tiny) == FailureKind::BudgetViolation,
             "budget");
    c.expect(seen.size() == kAllFailureKinds.size(), "kinds seen: " + std::to_string(seen.size()));

    Harness h(load_named_world("bathroom_cleaning"));
    std::vector<std::set<std::string>> banned_in_prompts;
    LambdaResolver policy([&](const ResolverPrompt& p) {
        banned_in_prompts.push_back(p.banned);
        if (p.mode == ResolutionLevel::L4 && p.depth == 0) {
            return actions_reply({action_json("Temporal_Retrieval", {{"query", "zebra"}}),
                                  action_json("Calculator", {{"a", 1}, {"b", 2}, {"op", "+"}})});
        }
        return std::string(R"({"Thought":"none","Plan":"","Actions":[]})");
    });
    auto rt = h.runtime(policy);
    ResultStore store;
    ResolutionRequest req;
    req.action = ActionRequest{"Temporal_Retrieval", "", {{"query", "zebra"}}, std::nullopt};
    req.pointer = "$Temporal_Retrieval_r1_0";
    const auto o = resolve_action(rt, req, store);
    int executions = 0;
    for (const auto& obs : o.observations) executions += obs.tool_name == "Temporal_Retrieval" && obs.signal.attempts >= 1;
    c.expect(executions == 1, "banned tool executed " + std::to_string(executions) + " times");
    bool all_prompts_ban = !banned_in_prompts.empty();
    for (const auto& b : banned_in_prompts) all_prompts_ban = all_prompts_ban && b.contains("Temporal_Retrieval");
    c.expect(all_prompts_ban, "ban missing from a resolver prompt");
    c.note = "six kinds observed; banned tool ran once across the branch";
}

// ---- 9 -----------------------------------------------------------------------------

std::string read_bytes(const std::string& path) { return json_io::read_file(path); }

void determinism(Check& c) {
    const auto dir = std::filesystem::temp_directory_path() / "toolground_acceptance";
    std::filesystem::create_directories(dir);
    for (const auto* scen : {"fig6", "never_finish"}) {
        std::vector<std::string> files;
        for (int k = 0; k < 2; ++k) {
            auto cfg = load_scenario(data_path(std::string("scenarios/") + scen + "/scenario.json"));
            cfg.output = (dir / (std::string(scen) + "_" + std::to_string(k) + ".json")).string();
            std::ostringstream sink;
            run_scenario(cfg, sink);
            files.push_back(read_bytes(cfg.output));
        }
        c.expect(!files[0].empty() && files[0] == files[1], std::string(scen) + " traces differ");
    }
    auto dumps = [](const Trajectory& t) {
        std::multiset<std::string> out;
        for (const auto* o : t.observations()) out.insert(canonical_dump(to_json(*o)));
        return out;
    };
    c.expect(dumps(run_fig6(4)) == dumps(run_fig6(1)), "parallel and serial observation multisets differ");

    Harness hp(load_named_world("bathroom_cleaning"), {}, RuntimeConfig{4, 5, 2});
    Harness hs(load_named_world("bathroom_cleaning"), {}, RuntimeConfig{1, 5, 2});
    ScriptedResolver none;
    std::vector<PlannedAction> plan;
    for (int i = 0; i < 6; ++i) {
        const double s = i * 40.0;
        ActionRequest a{"Video_Clip_QA", "", {{"t_start", s}, {"t_end", s + 30}, {"query", "cleaning toilet"}}, std::nullopt};
        plan.push_back({a, mint_pointer(a.tool_name, 1, std::to_string(i)), std::to_string(i)});
    }
    auto run_round = [&](Harness& h) {
        auto rt = h.runtime(none);
        ResultStore store;
        PlanContext ctx;
        ctx.round = 1;
        std::multiset<std::string> out;
        for (const auto& o : run_plan(rt, plan, store, ctx).observations) out.insert(canonical_dump(to_json(o)));
        return out;
    };
    c.expect(run_round(hp) == run_round(hs), "independent round differs between parallel and serial");
    std::filesystem::remove_all(dir);
    c.note = "byte-identical traces for fig6 and never_finish; equal multisets";
}

// ---- 10 ----------------------------------------------------------------------------

PlannerMessage fuzz_message(Rng& rng) {
    PlannerMessage m;
    m.thought = rng.word(12);
    m.plan = rng.coin() ? rng.word(10) : "";
    for (long i = 0, n = rng.integer(0, 2); i < n; ++i) {
        m.evidence.push_back({rng.word(), rng.word(), rng.coin() ? "$" + rng.word(4) : "", static_cast<EvidenceStatus>(rng.integer(0, 2))});
    }
    if (rng.coin(0.3)) {
        m.finish = FinishDirective{rng.coin(0.8), rng.word(9), rng.word(5)};
        return m;
    }
    for (long i = 0, n = rng.integer(0, 4); i < n; ++i) {
        ActionRequest a;
        a.tool_name = "Tool_" + rng.word(6);
        a.description = rng.coin() ? rng.word(12) : "";
        for (long k = 0, nk = rng.integer(0, 3); k < nk; ++k) {
            const auto key = rng.word(5);
            switch (rng.integer(0, 3)) {
                case 0: a.params[key] = rng.integer(-9, 99); break;
                case 1: a.params[key] = rng.word(); break;
                case 2: a.params[key] = "$" + rng.word(4); break;
                default: a.params[key] = Value::array({rng.coin(), std::round(rng.uniform(0, 50) * 4) / 4});
            }
        }
        if (rng.coin(0.3)) a.output = "$" + rng.word(5);
        m.actions.push_back(std::move(a));
    }
    return m;
}

void protocol_suite(Check& c) {
    Rng rng(1010);
    for (int i = 0; i < 1000; ++i) {
        const auto m = fuzz_message(rng);
        const auto parsed = parse_planner_message(serialize_message(m));
        const auto* ok = std::get_if<PlannerMessage>(&parsed);
        c.expect(ok != nullptr && ok->same_content(m), "round trip " + std::to_string(i));
        c.expect(!(m.finish && !m.actions.empty()), "generator broke exclusivity");
    }
    for (int i = 0; i < 200; ++i) {
        PlannerMessage m;
        m.finish = FinishDirective{rng.coin(), rng.word(), rng.word()};
        const auto check = validate_termination(m, false);
        c.expect(!check.accepted && check.violation == ProtocolViolation::resolver_finish, "resolver finish accepted");
    }
    const auto both = parse_planner_message(
        R"({"Thought":"t","Actions":[{"tool":"ASR","params":{}}],"Finish":{"chain_complete":true,"completion_basis":"b","answer":"a"}})");
    c.expect(std::holds_alternative<ParseFailure>(both), "actions and finish together accepted");

    Harness h(load_named_world("bathroom_cleaning"));
    ScriptedResolver finisher({R"({"Thought":"t","Finish":{"chain_complete":true,"completion_basis":"b","answer":"9"}})"},
                              R"({"Thought":"t","Plan":"","Actions":[]})");
    auto rt = h.runtime(finisher);
    ResultStore store;
    ResolutionRequest req;
    req.action = ActionRequest{"Video_Clip_QA", "", {{"t_start", 0}}, std::nullopt};
    req.pointer = "$Video_Clip_QA_r1_0";
    const auto o = resolve_action(rt, req, store);
    bool demoted = false;
    for (const auto& obs : o.observations) demoted = demoted || (obs.tool_name == "Resolver_Message" && obs.evidence["answer"] == "9");
    c.expect(demoted && !o.resolved(), "resolver finish not demoted");
    c.note = "1000 fuzzed round trips; resolver finish demoted; exclusivity enforced";
}

// ---- 11 ----------------------------------------------------------------------------

void reward_identity(Check& c) {
    std::vector<Trajectory> fixtures{run_fig6()};
    for (const auto* scen : {"never_finish"}) {
        auto cfg = load_scenario(data_path(std::string("scenarios/") + scen + "/scenario.json"));
        std::ostringstream sink;
        fixtures.push_back(run_scenario(cfg, sink).trajectory);
    }
    {
        ScriptedPlanner planner(std::vector<Value>{Value("garbage"), Value("{bad")});
        RuleTablePolicy resolver;
        sim::Environment env(load_named_world("empty_room"));
        fixtures.push_back(run_episode({"q", {"a", "b"}, "", std::string("A")}, planner, resolver, default_registry(), env,
                                       default_table()));
    }
    const rl::RewardConfig cfg;
    std::string totals;
    for (const auto& t : fixtures) {
        const auto s = rl::score_trajectory(t, cfg);
        const double formula = s.r_ans + cfg.lambda_valid * s.c_valid - cfg.lambda_cost * s.c_cost;
        c.expect(s.total == formula, "total differs from formula");
        c.expect(s.r_ans >= 0 && s.r_ans <= 1 && (s.c_valid == 0 || s.c_valid == 1) && (s.c_cost == 0 || s.c_cost == 1), "ranges");
        std::ostringstream os;
        os << s.total;
        totals += (totals.empty() ? "" : ", ") + os.str();
    }
    c.expect(rl::score_trajectory(fixtures[0], cfg).total == 1.0 + cfg.lambda_valid, "fig6 total is not 1.1");

    Rng rng(1111);
    for (int k = 0; k < 1000; ++k) {
        const auto n = static_cast<std::size_t>(rng.integer(1, 9));
        std::map<std::string, double> w, r;
        double sum = 0;
        std::vector<double> raw(n);
        for (auto& x : raw) sum += (x = rng.uniform(0.01, 1.0));
        for (std::size_t i = 0; i < n; ++i) {
            const auto key = "s" + std::to_string(i);
            w[key] = raw[i] / sum;
            r[key] = rng.coin(0.1) ? 0.5 : rng.uniform(0, 1);
        }
        const double smoothing = rng.uniform(0, 1);
        const auto out = rl::update_source_weights(w, r, smoothing, 0.1);
        double total = 0;
        bool floored = true;
        for (const auto& [key, x] : out) {
            total += x;
            floored = floored && x >= 0.1 - 1e-12;
        }
        c.expect(std::abs(total - 1.0) < 1e-9, "weights sum " + std::to_string(total));
        c.expect(floored, "weight below floor");
    }
    c.note = "totals " + totals + "; 1000 reweightings sum to 1 with floor 0.1";
}

}  // namespace

int main() {
    const std::vector<std::pair<std::string, std::function<void(Check&)>>> criteria{
        {"registry totals", registry_totals},
        {"case-study reproduction", case_study},
        {"budget exactness", budget_exactness},
        {"advantage oracle", advantage_oracle},
        {"clipped-term grid", clipped_grid},
        {"meta-tool oracles", merge_oracle},
        {"grounding contract", grounding_contract},
        {"failure taxonomy totality", failure_taxonomy},
        {"determinism", determinism},
        {"protocol suite", protocol_suite},
        {"reward identity", reward_identity},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Check c;
        try {
            criteria[i].second(c);
        } catch (const std::exception& e) {
            c.problems.push_back(std::string("exception: ") + e.what());
        }
        const bool ok = c.problems.empty();
        failed += !ok;
        std::cout << (ok ? "PASS" : "FAIL") << " criterion " << (i + 1) << ": " << criteria[i].first << " ("
                  << (ok ? c.note : join(c.problems)) << ")\n";
    }
    std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed\n";
    return failed == 0 ? 0 : 1;
}
