#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "toolground/protocol.hpp"

using namespace toolground;
using tgtest::Rng;

namespace {

Value random_scalar(Rng& rng) {
    switch (rng.integer(0, 4)) {
        case 0: return rng.word();
        case 1: return rng.integer(-50, 50);
        case 2: return std::round(rng.uniform(0, 100) * 4) / 4;
        case 3: return rng.coin();
        default: return "$" + rng.word(5);
    }
}

Value random_params(Rng& rng, int depth = 0) {
    Value p = Value::object();
    const auto n = rng.integer(0, 4);
    for (long i = 0; i < n; ++i) {
        const auto key = rng.word(6);
        if (depth < 2 && rng.coin(0.2)) {
            p[key] = random_params(rng, depth + 1);
        } else if (depth < 2 && rng.coin(0.2)) {
            p[key] = Value::array({random_scalar(rng), random_scalar(rng)});
        } else {
            p[key] = random_scalar(rng);
        }
    }
    return p;
}

PlannerMessage random_message(Rng& rng) {
    PlannerMessage m;
    m.thought = rng.word(12) + " " + rng.word();
    m.plan = rng.coin() ? rng.word(10) : "";
    const auto ne = rng.integer(0, 2);
    for (long i = 0; i < ne; ++i) {
        m.evidence.push_back({rng.word(), rng.word(), rng.coin() ? "$" + rng.word(4) : "",
                              static_cast<EvidenceStatus>(rng.integer(0, 2))});
    }
    if (rng.coin(0.3)) {
        m.finish = FinishDirective{rng.coin(0.8), rng.word(9), rng.word(5)};
    } else {
        const auto na = rng.integer(0, 4);
        for (long i = 0; i < na; ++i) {
            ActionRequest a;
            a.tool_name = "Tool_" + rng.word(6);
            a.description = rng.coin() ? rng.word(15) : "";
            a.params = random_params(rng);
            if (rng.coin(0.3)) a.output = "$" + rng.word(5);
            m.actions.push_back(std::move(a));
        }
    }
    return m;
}

}  // namespace

TEST(PlannerProtocol, RoundTripOnFuzzedMessages) {
    Rng rng(1);
    for (int i = 0; i < 1000; ++i) {
        const auto m = random_message(rng);
        const auto wire = serialize_message(m);
        auto parsed = parse_planner_message(wire);
        ASSERT_TRUE(std::holds_alternative<PlannerMessage>(parsed)) << wire << "\n" << std::get<ParseFailure>(parsed).str();
        EXPECT_TRUE(std::get<PlannerMessage>(parsed).same_content(m)) << wire;
    }
}

TEST(PlannerProtocol, ThinkBlockAndSurroundingProseAreTolerated) {
    const std::string text =
        "<think>I should look at {weird braces</think>Here you go: "
        R"({"Thought":"t","Plan":"p","Actions":[{"tool":"ASR","params":{}}]})";
    auto parsed = parse_planner_message(text);
    ASSERT_TRUE(std::holds_alternative<PlannerMessage>(parsed));
    EXPECT_EQ(std::get<PlannerMessage>(parsed).actions.at(0).tool_name, "ASR");
}

TEST(PlannerProtocol, ParseFailureKinds) {
    auto kind = [](std::string_view t) { return std::get<ParseFailure>(parse_planner_message(t)).kind; };
    EXPECT_EQ(kind("no json here"), ParseFailure::Kind::no_json);
    EXPECT_EQ(kind(R"({"Thought": "x")"), ParseFailure::Kind::malformed_json);
    EXPECT_EQ(kind(R"({"Thought": "x", "Bogus": 1})"), ParseFailure::Kind::schema_mismatch);
    EXPECT_EQ(kind(R"({"Actions": [{"params": {}}]})"), ParseFailure::Kind::schema_mismatch);
    EXPECT_EQ(kind(R"({"Actions": [{"tool": "A", "output": "plain"}]})"), ParseFailure::Kind::schema_mismatch);
}

TEST(PlannerProtocol, ActionsAndFinishAreExclusive) {
    const auto r = parse_planner_message(
        R"({"Thought":"t","Actions":[{"tool":"ASR","params":{}}],"Finish":{"chain_complete":true,"completion_basis":"b","answer":"a"}})");
    ASSERT_TRUE(std::holds_alternative<ParseFailure>(r));
    EXPECT_NE(std::get<ParseFailure>(r).detail.find("exclusivity"), std::string::npos);
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const auto m = random_message(rng);
        EXPECT_FALSE(m.finish && !m.actions.empty());
    }
}

TEST(Termination, ResolverFinishAlwaysRejected) {
    Rng rng(4);
    for (int i = 0; i < 200; ++i) {
        PlannerMessage m;
        m.finish = FinishDirective{rng.coin(), rng.word(), rng.word()};
        const auto c = validate_termination(m, false);
        EXPECT_FALSE(c.accepted);
        EXPECT_EQ(c.violation, ProtocolViolation::resolver_finish);
    }
}

TEST(Termination, RootFinishNeedsCompleteChainAndAnswer) {
    PlannerMessage m;
    m.finish = FinishDirective{true, "basis", "2"};
    EXPECT_TRUE(validate_termination(m, true).accepted);
    m.finish->chain_complete = false;
    EXPECT_EQ(validate_termination(m, true).violation, ProtocolViolation::incomplete_finish);
    m.finish = FinishDirective{true, "basis", "  "};
    EXPECT_FALSE(validate_termination(m, true).accepted);
    PlannerMessage none;
    EXPECT_TRUE(validate_termination(none, true).accepted);
}

TEST(ResultPointers, ResolveNestedAndReportMissing) {
    ResultStore store;
    store.bind("$a", Value{1, 2, 3}, {1, "X"});
    const Value params{{"items", "$a"}, {"nested", {{"inner", Value::array({"$a", "plain"})}}}, {"n", 3}};
    auto r = resolve_pointers(params, store);
    ASSERT_TRUE(std::holds_alternative<Value>(r));
    EXPECT_EQ(std::get<Value>(r)["nested"]["inner"][0], (Value{1, 2, 3}));
    EXPECT_FALSE(store.contains("$b"));
    auto miss = resolve_pointers(Value{{"x", "$b"}}, store);
    ASSERT_TRUE(std::holds_alternative<UnresolvedPointer>(miss));
    EXPECT_EQ(std::get<UnresolvedPointer>(miss).names, std::vector<std::string>{"$b"});
}

TEST(ResultPointers, OverlayFallsThroughAndCommits) {
    ResultStore base;
    base.bind("$a", 1, {1, "X"});
    ResultStore overlay(&base);
    overlay.bind("$b", 2, {2, "Y"});
    EXPECT_EQ(*overlay.get("$a"), 1);
    EXPECT_FALSE(base.contains("$b"));
    overlay.commit_into(base);
    EXPECT_EQ(*base.get("$b"), 2);
    EXPECT_EQ(base.provenance("$b")->tool_name, "Y");
}

TEST(ResultPointers, MintedNamesAreValidPointers) {
    EXPECT_EQ(mint_pointer("Temporal_Retrieval", 1, "0"), "$Temporal_Retrieval_r1_0");
    EXPECT_EQ(mint_pointer("Odd Name-1", 3, "2_1"), "$Odd_Name_1_r3_2_1");
    EXPECT_TRUE(is_pointer_name(mint_pointer("X", 2, "0_1_2")));
    EXPECT_THROW(ResultStore().bind("nope", 1, {}), std::invalid_argument);
}

TEST(ResultPointers, CollectFindsAllReferences) {
    const auto ps = collect_pointers(Value::parse(R"({"a":"$x","b":["$y",{"c":"$x"}],"d":"text"})"));
    EXPECT_EQ(ps, (std::set<std::string>{"$x", "$y"}));
}
