#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "toolground/resolver.hpp"
#include "toolground/rule_policy.hpp"

using namespace toolground;
using tgtest::action_json;
using tgtest::actions_reply;
using tgtest::Harness;
using tgtest::LambdaResolver;
using tgtest::ScriptedResolver;

namespace {

const std::string kGiveUp = R"({"Thought":"none","Plan":"","Actions":[]})";

ResolutionRequest request(const std::string& tool, Value params, const std::string& description = "") {
    ResolutionRequest r;
    r.action = ActionRequest{tool, description, std::move(params), std::nullopt};
    r.goal = "How many times is the toilet cleaned?";
    r.round = 1;
    r.pointer = mint_pointer(tool, 1, "0");
    return r;
}

std::size_t executed_count(const ResolutionOutcome& o, const std::string& tool) {
    std::size_t n = 0;
    for (const auto& obs : o.observations) n += obs.tool_name == tool && obs.signal.attempts >= 1;
    return n;
}

}  // namespace

TEST(Resolver, PrimitiveResolvesAtL1WithoutPrompting) {
    Harness h(tgtest::load_named_world("bathroom_cleaning"));
    ScriptedResolver policy;
    auto rt = h.runtime(policy);
    ResultStore store;
    const auto o = resolve_action(rt, request("Temporal_Retrieval", {{"query", "cleaning toilet"}}), store);
    EXPECT_EQ(o.level, ResolutionLevel::L1);
    EXPECT_TRUE(policy.prompts.empty());
    EXPECT_TRUE(o.result.has_value());
}

TEST(Resolver, InvalidParamsAreRewrittenAtL2) {
    Harness h(tgtest::load_named_world("bathroom_cleaning"));
    ScriptedResolver policy({actions_reply({action_json("Video_Clip_QA", {{"t_start", 0}, {"t_end", 30}, {"query", "toilet"}})})});
    auto rt = h.runtime(policy);
    ResultStore store;
    const auto o = resolve_action(rt, request("Video_Clip_QA", {{"t_start", 0}}), store);
    EXPECT_EQ(o.level, ResolutionLevel::L2);
    ASSERT_EQ(policy.prompts.size(), 1u);
    EXPECT_EQ(policy.prompts[0].mode, ResolutionLevel::L2);
    EXPECT_EQ(policy.prompts[0].target->name, "Video_Clip_QA");
}

TEST(Resolver, UnknownToolIsSubstitutedAtL3) {
    Harness h(tgtest::load_named_world("bathroom_cleaning"));
    ScriptedResolver policy({actions_reply({action_json("Temporal_Retrieval", {{"query", "cleaning toilet"}})})});
    auto rt = h.runtime(policy);
    ResultStore store;
    const auto o = resolve_action(rt, request("Find_Cleaning_Windows", {}, "find windows where the toilet is cleaned"), store);
    EXPECT_EQ(o.level, ResolutionLevel::L3);
    ASSERT_EQ(o.attempts.size(), 3u);
    EXPECT_EQ(o.attempts[1].status, "skipped");
    EXPECT_FALSE(policy.prompts[0].candidates.empty());
}

TEST(Resolver, L3NeverOffersOrAcceptsTheOriginalTool) {
    Harness h(tgtest::load_named_world("bathroom_cleaning"));
    LambdaResolver policy([](const ResolverPrompt& p) {
        if (p.mode == ResolutionLevel::L3) {
            for (const auto& c : p.candidates) EXPECT_NE(c.tool->name, "Temporal_Retrieval");
            return actions_reply({action_json("Temporal_Retrieval", {{"query", "toilet"}})});
        }
        return kGiveUp;
    });
    auto rt = h.runtime(policy);
    ResultStore store;
    const auto o = resolve_action(rt, request("Temporal_Retrieval", {{"query", "zebra"}}), store);
    EXPECT_FALSE(o.resolved());
    EXPECT_EQ(o.attempts[2].level, ResolutionLevel::L3);
    EXPECT_EQ(o.attempts[2].status, "gave_up");
}

TEST(Resolver, EmptyResultBansTheToolForTheWholeBranch) {
    Harness h(tgtest::load_named_world("bathroom_cleaning"));
    LambdaResolver policy([](const ResolverPrompt& p) {
        if (p.mode == ResolutionLevel::L4 && p.depth == 0) {
            return actions_reply({action_json("Temporal_Retrieval", {{"query", "zebra"}}),
                                  action_json("Calculator", {{"a", 1}, {"b", 2}, {"op", "+"}})});
        }
        return kGiveUp;
    });
    auto rt = h.runtime(policy);
    ResultStore store;
    const auto o = resolve_action(rt, request("Temporal_Retrieval", {{"query", "zebra"}}), store);
    EXPECT_EQ(o.level, ResolutionLevel::L4);
    EXPECT_TRUE(o.banned.contains("Temporal_Retrieval"));
    EXPECT_EQ(executed_count(o, "Temporal_Retrieval"), 1u);
    EXPECT_EQ(o.attempts[1].status, "skipped");
    ASSERT_EQ(o.children.size(), 2u);
    EXPECT_EQ(o.children[0].kind, "abstract");
    EXPECT_EQ(o.children[1].status, "ok");
    EXPECT_EQ(h.budget.snapshot().tool_calls, 3);
}

TEST(Resolver, GarbageRepliesExhaustResolverRounds) {
    Harness h(tgtest::load_named_world("bathroom_cleaning"));
    LambdaResolver policy([](const ResolverPrompt&) { return std::string("not json at all"); });
    auto rt = h.runtime(policy);
    ResultStore store;
    const auto o = resolve_action(rt, request("Video_Clip_QA", {{"t_start", 0}}), store);
    EXPECT_FALSE(o.resolved());
    EXPECT_EQ(o.failure, FailureKind::BudgetViolation);
    EXPECT_EQ(o.policy_rounds, 3);
    EXPECT_EQ(policy.calls, 3);
    EXPECT_EQ(h.budget.snapshot().resolver_rounds_peak, 3);
    ASSERT_EQ(o.observations.size(), 1u);
    EXPECT_EQ(o.observations[0].signal.attempts, 0);
}

TEST(Resolver, RecursionStopsAtMaxDepth) {
    Harness h(tgtest::load_named_world("bathroom_cleaning"));
    LambdaResolver policy([](const ResolverPrompt& p) {
        if (p.mode != ResolutionLevel::L4) return kGiveUp;
        return actions_reply({action_json("Deeper_Step", Value::object()),
                              action_json("Calculator", {{"a", p.depth}, {"b", 1}, {"op", "+"}})});
    });
    auto rt = h.runtime(policy);
    ResultStore store;
    auto req = request("Deeper_Step", Value::object(), "keep splitting");
    const auto o = resolve_action(rt, req, store);
    EXPECT_EQ(o.level, ResolutionLevel::L4);
    const auto b = h.budget.snapshot();
    EXPECT_EQ(b.depth_peak, 5);
    EXPECT_LE(b.depth_peak, b.config.max_depth);
    EXPECT_NE(to_json(o).dump().find("DepthExceeded"), std::string::npos);
}

TEST(Resolver, ResolverFinishIsDemotedToObservation) {
    Harness h(tgtest::load_named_world("bathroom_cleaning"));
    ScriptedResolver policy({R"({"Thought":"done","Finish":{"chain_complete":true,"completion_basis":"guess","answer":"4"}})"},
                            kGiveUp);
    auto rt = h.runtime(policy);
    ResultStore store;
    const auto o = resolve_action(rt, request("Video_Clip_QA", {{"t_start", 0}}), store);
    EXPECT_FALSE(o.resolved());
    EXPECT_NE(std::find(o.violations.begin(), o.violations.end(), "resolver_finish"), o.violations.end());
    bool demoted = false;
    for (const auto& obs : o.observations) demoted = demoted || (obs.tool_name == "Resolver_Message" && obs.evidence["answer"] == "4");
    EXPECT_TRUE(demoted);
}

TEST(Resolver, UnparseableReplyIsRepromptedOnce) {
    Harness h(tgtest::load_named_world("bathroom_cleaning"));
    ScriptedResolver policy({"{oops", actions_reply({action_json("Video_Clip_QA", {{"t_start", 0}, {"t_end", 9}, {"query", "toilet"}})})});
    auto rt = h.runtime(policy);
    ResultStore store;
    const auto o = resolve_action(rt, request("Video_Clip_QA", {{"t_start", 0}}), store);
    EXPECT_EQ(o.level, ResolutionLevel::L2);
    ASSERT_EQ(policy.prompts.size(), 2u);
    EXPECT_EQ(policy.prompts[1].attempt, 2);
    EXPECT_FALSE(policy.prompts[1].failures.empty());
}

TEST(Layering, BatchesFollowPointerDependencies) {
    std::vector<PlannedAction> plan{
        {{"A", "", {{"x", 1}}, "$a"}, "$A_r1_0", "0"},
        {{"B", "", {{"in", "$a"}}, "$b"}, "$B_r1_1", "1"},
        {{"C", "", {{"x", 2}}, std::nullopt}, "$C_r1_2", "2"},
        {{"D", "", {{"p", "$b"}, {"q", "$C_r1_2"}}, std::nullopt}, "$D_r1_3", "3"},
    };
    const auto lay = layer_actions(plan);
    EXPECT_EQ(lay.batches, (std::vector<std::vector<std::size_t>>{{0, 2}, {1}, {3}}));
    EXPECT_TRUE(lay.stuck.empty());
}

TEST(Layering, CyclesAreReported) {
    std::vector<ActionRequest> acts{{"A", "", {{"x", "$b"}}, "$a"}, {"B", "", {{"x", "$a"}}, "$b"}};
    EXPECT_THROW(partition_round(acts, ResultStore()), DependencyCycle);
}

TEST(Layering, RandomAcyclicPlansRespectOrder) {
    tgtest::Rng rng(12);
    for (int c = 0; c < 200; ++c) {
        const auto n = static_cast<std::size_t>(rng.integer(1, 8));
        std::vector<PlannedAction> plan;
        for (std::size_t i = 0; i < n; ++i) {
            Value params = Value::object();
            for (std::size_t j = 0; j < i; ++j) {
                if (rng.coin(0.3)) params["p" + std::to_string(j)] = "$o" + std::to_string(j);
            }
            plan.push_back({{"T", "", params, "$o" + std::to_string(i)}, mint_pointer("T", 1, std::to_string(i)), std::to_string(i)});
        }
        const auto lay = layer_actions(plan);
        ASSERT_TRUE(lay.stuck.empty());
        std::vector<int> batch_of(n, -1);
        std::size_t seen = 0;
        for (std::size_t b = 0; b < lay.batches.size(); ++b) {
            for (auto i : lay.batches[b]) batch_of[i] = static_cast<int>(b), ++seen;
        }
        EXPECT_EQ(seen, n);
        for (std::size_t i = 0; i < n; ++i) {
            for (auto d : lay.deps[i]) EXPECT_LT(batch_of[d], batch_of[i]);
        }
    }
}

TEST(RulePolicy, TemplatesExpandAndReportMissing) {
    TemplateScope s;
    s.params = {{"windows", Value::array({{{"t_start", 1}}})}, {"query", "toilet"}};
    s.item = Value{{"t_start", 4}};
    EXPECT_EQ(expand_template("{{item.t_start}}", s), 4);
    EXPECT_EQ(expand_template("q={{params.query}} at {{item.t_start}}", s), "q=toilet at 4");
    EXPECT_EQ(expand_template("{{params.windows.0.t_start}}", s), 1);
    EXPECT_THROW(expand_template("{{params.nope}}", s), TemplateMissing);
}

TEST(RulePolicy, AliasesRepairParameters) {
    RuleTable table;
    const auto* clip = tgtest::default_registry().find("Video_Clip_QA");
    const auto r = repair_parameters({"Video_Clip_QA", "", {{"start", 1}, {"end", 4}, {"question", "toilet"}, {"junk", 1}}, std::nullopt},
                                     *clip, table);
    ASSERT_TRUE(r.has_value());
    EXPECT_EQ(r->params, (Value{{"t_start", 1}, {"t_end", 4}, {"query", "toilet"}}));
    EXPECT_FALSE(repair_parameters({"Video_Clip_QA", "", {{"start", 1}}, std::nullopt}, *clip, table).has_value());
}

TEST(RulePolicy, DecomposesByClauseAndGroundsChildren) {
    ResolutionRequest req = request("Study_Scene", {}, "find the person near the sink, then detect the mop");
    const auto kids = decompose_action(req, RuleTable{}, &tgtest::default_registry());
    ASSERT_EQ(kids.size(), 2u);
    for (const auto& k : kids) EXPECT_NE(tgtest::default_registry().find(k.tool_name), nullptr) << k.tool_name;
    EXPECT_TRUE(decompose_action(request("X", {}, "single clause"), RuleTable{}).empty());
}

TEST(RulePolicy, Fig6RuleExpandsForEachWindow) {
    const auto table = load_rule_table(tgtest::data_path("scenarios/fig6/rules.json"));
    auto req = request("Analyze_Cleaning_Events",
                       {{"windows", Value::parse(R"([{"t_start":1,"t_end":2},{"t_start":5,"t_end":9}])")}, {"query", "cleaning toilet"}});
    const auto kids = decompose_action(req, table);
    ASSERT_EQ(kids.size(), 5u);
    EXPECT_EQ(kids[1].params["t_start"], 5);
    EXPECT_EQ(kids[4].tool_name, "Merge_Temporal_Segments");
}
