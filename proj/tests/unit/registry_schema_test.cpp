#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "toolground/registry.hpp"
#include "toolground/router.hpp"
#include "toolground/schema.hpp"

using namespace toolground;
using tgtest::default_registry;
using tgtest::Rng;

namespace {

ParamSchema clip_schema() {
    ParamSchema s;
    s.fields.push_back({"t_start", ValueKind::time_seconds, true, std::nullopt, {}, ""});
    s.fields.push_back({"t_end", ValueKind::time_seconds, true, std::nullopt, {}, ""});
    s.fields.push_back({"k", ValueKind::integer, false, Value(5), {1.0, 50.0, std::nullopt, {}}, ""});
    s.fields.push_back({"mode", ValueKind::string, false, std::nullopt, {std::nullopt, std::nullopt, std::nullopt, {"fast", "slow"}}, ""});
    return s;
}

ToolSpec minimal_spec(const std::string& name) {
    ToolSpec s;
    s.name = name;
    s.description = "test tool";
    s.kind = ToolKind::base;
    s.category = "Visual/Video";
    s.binding = "sim.clip_qa";
    return s;
}

}  // namespace

TEST(DefaultManifest, Totals) {
    const auto& r = default_registry();
    EXPECT_EQ(count_tools(r), 134u);
    EXPECT_EQ(count_tools(r, {ToolKind::base, std::nullopt}), 26u);
    EXPECT_EQ(count_tools(r, {ToolKind::meta, std::nullopt}), 108u);
    const std::vector<std::size_t> expected{10, 7, 4, 3, 2};
    for (std::size_t i = 0; i < kBaseCategories.size(); ++i) {
        EXPECT_EQ(count_tools(r, {ToolKind::base, std::string(kBaseCategories[i])}), expected[i]) << kBaseCategories[i];
    }
    std::size_t meta_sum = 0;
    for (auto c : kMetaCategories) {
        const auto n = count_tools(r, {ToolKind::meta, std::string(c)});
        EXPECT_GE(n, 1u) << c;
        meta_sum += n;
    }
    EXPECT_EQ(meta_sum, 108u);
}

TEST(DefaultManifest, EveryBindingResolvesExceptExternal) {
    const auto& table = tgtest::default_table();
    for (const auto* s : default_registry().entries()) {
        if (s->binding.rfind("external.", 0) == 0) continue;
        EXPECT_TRUE(table.has(s->binding)) << s->name << " -> " << s->binding;
    }
}

TEST(DefaultManifest, RoundTripsThroughJson) {
    const auto& r = default_registry();
    const auto again = parse_manifest(manifest_to_json(r).dump());
    ASSERT_EQ(again.size(), r.size());
    for (const auto* s : r.entries()) EXPECT_EQ(to_json(*again.find(s->name)), to_json(*s));
}

TEST(Registry, LookupAbsenceIsAValue) {
    const auto& r = default_registry();
    AvailabilityContext silent;
    silent.modalities = {"video"};
    auto asr = r.lookup("ASR", silent);
    EXPECT_FALSE(asr);
    EXPECT_EQ(asr.absence, LookupResult::Absence::unavailable);
    EXPECT_NE(asr.spec, nullptr);
    auto missing = r.lookup("No_Such_Tool", silent);
    EXPECT_EQ(missing.absence, LookupResult::Absence::unknown_name);
    EXPECT_TRUE(r.lookup("Video_Clip_QA", silent));
}

TEST(Registry, DuplicateInvalidAndFrozen) {
    ToolRegistry r;
    r.register_tool(minimal_spec("A_Tool"));
    EXPECT_THROW(r.register_tool(minimal_spec("A_Tool")), RegistryError);
    auto bad = minimal_spec("Bad_Tool");
    bad.category = "Ranking";
    EXPECT_THROW(r.register_tool(bad), RegistryError);
    r.freeze();
    EXPECT_THROW(r.register_tool(minimal_spec("B_Tool")), RegistryError);
    EXPECT_EQ(r.size(), 1u);
}

TEST(Registry, ManifestParseErrors) {
    EXPECT_THROW(parse_manifest("not json"), RegistryError);
    EXPECT_THROW(parse_manifest(R"({"tools":[{"name":"X"}]})"), RegistryError);
    EXPECT_THROW(load_manifest("/nonexistent/manifest.json"), std::exception);
}

TEST(Registry, DefaultPathHonoursEnvironment) {
    ::setenv("TOOLGROUND_MANIFEST", "/tmp/custom.json", 1);
    EXPECT_EQ(default_manifest_path(), "/tmp/custom.json");
    ::unsetenv("TOOLGROUND_MANIFEST");
    EXPECT_NE(default_manifest_path().find("default_manifest.json"), std::string::npos);
}

TEST(Schema, ValidArgumentsPassUnchanged) {
    const auto r = validate_args(clip_schema(), Value{{"t_start", 1}, {"t_end", 2.5}});
    EXPECT_EQ(r.status, ValidationStatus::valid);
}

TEST(Schema, MissingUnsupportedAndMismatched) {
    const auto r = validate_args(clip_schema(), Value{{"t_end", "abc"}, {"extra", 1}, {"k", 99}});
    EXPECT_EQ(r.status, ValidationStatus::invalid);
    EXPECT_EQ(r.missing, std::vector<std::string>{"t_start"});
    EXPECT_EQ(r.unsupported, std::vector<std::string>{"extra"});
    EXPECT_EQ(r.mismatched, (std::vector<std::string>{"t_end", "k"}));
}

TEST(Schema, RepairDropsCoercesAndDefaults) {
    const auto r = repair_args(clip_schema(), Value{{"t_start", "3"}, {"t_end", 4}, {"junk", true}});
    EXPECT_EQ(r.status, ValidationStatus::repaired);
    EXPECT_EQ((*r.repaired_args)["t_start"], 3.0);
    EXPECT_EQ((*r.repaired_args)["k"], 5);
    EXPECT_FALSE(r.repaired_args->contains("junk"));
    EXPECT_EQ(r.unsupported, std::vector<std::string>{"junk"});
    ASSERT_EQ(r.coerced.size(), 1u);
    EXPECT_EQ(r.coerced[0].field, "t_start");
}

TEST(Schema, RepairNeverInventsRequiredValues) {
    const auto r = repair_args(clip_schema(), Value{{"t_end", 4}});
    EXPECT_EQ(r.status, ValidationStatus::invalid);
    EXPECT_EQ(r.missing, std::vector<std::string>{"t_start"});
}

TEST(Schema, OneOfAndPointersConform) {
    EXPECT_FALSE(validate_args(clip_schema(), Value{{"t_start", 1}, {"t_end", 2}, {"mode", "medium"}}).usable());
    EXPECT_TRUE(validate_args(clip_schema(), Value{{"t_start", "$p"}, {"t_end", 2}, {"mode", "fast"}}).usable());
}

TEST(Schema, RepairIsIdempotentOnRandomArgs) {
    Rng rng(8);
    const auto schema = clip_schema();
    const std::vector<Value> pool{Value(1), Value(2.5), Value("7"), Value("x"), Value(true), Value(-3), Value("fast")};
    for (int i = 0; i < 500; ++i) {
        Value args = Value::object();
        for (const char* key : {"t_start", "t_end", "k", "mode", "other"}) {
            if (rng.coin(0.7)) args[key] = rng.pick(pool);
        }
        const auto once = repair_args(schema, args);
        if (!once.usable()) continue;
        const auto twice = repair_args(schema, *once.repaired_args);
        EXPECT_EQ(twice.status, ValidationStatus::valid);
        EXPECT_EQ(*twice.repaired_args, *once.repaired_args);
    }
}

TEST(Router, ExactNameRanksFirst) {
    const auto c = search_tools(default_registry(), RouteQuery{"Video_Clip_QA", "", {}}, 5);
    ASSERT_FALSE(c.empty());
    EXPECT_EQ(c.front().tool->name, "Video_Clip_QA");
    EXPECT_EQ(c.front().reasons.front(), MatchReason::exact_name);
}

TEST(Router, PrefixPropertyAndDeterminism) {
    const RouteQuery q{"Analyze_Cleaning", "merge overlapping time windows into events", {}};
    const auto big = search_tools(default_registry(), q, 20);
    for (std::size_t k = 1; k <= 20; ++k) {
        const auto small = search_tools(default_registry(), q, k);
        ASSERT_LE(small.size(), k);
        for (std::size_t i = 0; i < small.size(); ++i) EXPECT_EQ(small[i].tool, big[i].tool);
    }
    for (std::size_t i = 1; i < big.size(); ++i) EXPECT_GE(big[i - 1].score, big[i].score);
}

TEST(Router, ClassifyReasons) {
    const auto& r = default_registry();
    sim::Environment env(tgtest::load_named_world("silent_street"));
    auto cls = [&](const std::string& tool, Value params) {
        return classify_action(r, ActionRequest{tool, "", std::move(params), std::nullopt}, env.availability);
    };
    EXPECT_EQ(cls("Video_Clip_QA", {{"t_start", 0}, {"t_end", 5}, {"query", "car"}}).kind, ActionKind::primitive);
    EXPECT_EQ(cls("Video_Clip_QA", {{"t_start", 0}, {"t_end", 5}, {"query", "car"}}).reason, ActionClass::Reason::matched);
    EXPECT_EQ(cls("Find_The_Car", {}).reason, ActionClass::Reason::unknown_name);
    EXPECT_EQ(cls("ASR", {}).reason, ActionClass::Reason::unavailable);
    EXPECT_EQ(cls("Tool_Search", {{"query", "x"}}).reason, ActionClass::Reason::runtime_internal);
    const auto invalid = cls("Video_Clip_QA", {{"t_start", 0}});
    EXPECT_EQ(invalid.kind, ActionKind::abstract);
    EXPECT_EQ(invalid.reason, ActionClass::Reason::invalid_params);
    EXPECT_EQ(invalid.matched->name, "Video_Clip_QA");
}
