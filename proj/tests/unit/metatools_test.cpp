#include <gtest/gtest.h>

#include <algorithm>

#include "support/fixtures.hpp"
#include "toolground/metatools.hpp"

using namespace toolground;
using namespace toolground::meta;
using tgtest::Rng;

namespace {

using Pair = std::pair<double, double>;

// Pairwise fixpoint: merge any two ranges within tolerance until none remain.
std::vector<Pair> oracle_merge(std::vector<Pair> rs, double tol) {
    bool changed = true;
    while (changed) {
        changed = false;
        for (std::size_t i = 0; i < rs.size() && !changed; ++i) {
            for (std::size_t j = i + 1; j < rs.size() && !changed; ++j) {
                const double gap = std::max(rs[i].first, rs[j].first) - std::min(rs[i].second, rs[j].second);
                if (gap <= tol) {
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

std::vector<Pair> bounds(const std::vector<TimeRange>& rs) {
    std::vector<Pair> out;
    for (const auto& r : rs) out.emplace_back(r.t_start, r.t_end);
    return out;
}

std::vector<TimeRange> random_ranges(Rng& rng, std::size_t n) {
    std::vector<TimeRange> rs;
    for (std::size_t i = 0; i < n; ++i) {
        const double s = std::round(rng.uniform(0, 100) * 2) / 2;
        const double len = std::round(rng.uniform(0, 12) * 2) / 2;
        rs.push_back({s, s + len, Value::object()});
    }
    return rs;
}

}  // namespace

TEST(MergeTemporalSegments, PaperStyleExample) {
    std::vector<TimeRange> rs{{10, 20, {}}, {21, 35, {}}, {300, 310, {}}, {312, 320, {}}};
    const auto out = merge_temporal_segments(rs, 2.0);
    ASSERT_EQ(out.size(), 2u);
    EXPECT_EQ(bounds(out), (std::vector<Pair>{{10, 35}, {300, 320}}));
}

TEST(MergeTemporalSegments, ToleranceBoundaryIsInclusive) {
    std::vector<TimeRange> rs{{0, 5, {}}, {7, 9, {}}};
    EXPECT_EQ(merge_temporal_segments(rs, 2.0).size(), 1u);
    EXPECT_EQ(merge_temporal_segments(rs, 1.999).size(), 2u);
}

TEST(MergeTemporalSegments, RejectsBadInput) {
    EXPECT_THROW(merge_temporal_segments({{5, 4, {}}}, 1.0), MetaError);
    EXPECT_THROW(merge_temporal_segments({{1, 4, {}}}, -1.0), MetaError);
    EXPECT_TRUE(merge_temporal_segments({}, 1.0).empty());
}

TEST(MergeTemporalSegments, PayloadsCombine) {
    std::vector<TimeRange> rs{{0, 5, {{"label", "a"}}}, {5, 9, {{"label", "b"}}}, {6, 7, {{"label", "a"}}}};
    const auto out = merge_temporal_segments(rs, 0.0);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out[0].payload["label"], (Value{"a", "b"}));
}

TEST(MergeTemporalSegments, OracleAndProperties) {
    Rng rng(2024);
    for (int c = 0; c < 300; ++c) {
        auto rs = random_ranges(rng, static_cast<std::size_t>(rng.integer(0, 14)));
        const double tol = std::round(rng.uniform(0, 5) * 2) / 2;
        const auto out = merge_temporal_segments(rs, tol);
        std::vector<Pair> in;
        for (const auto& r : rs) in.emplace_back(r.t_start, r.t_end);
        EXPECT_EQ(bounds(out), oracle_merge(in, tol));
        EXPECT_EQ(bounds(merge_temporal_segments(out, tol)), bounds(out));
        auto shuffled = rs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng.engine());
        EXPECT_EQ(bounds(merge_temporal_segments(shuffled, tol)), bounds(out));
        EXPECT_LE(merge_temporal_segments(rs, tol + 1.0).size(), out.size());
    }
}

TEST(SortTimeRanges, StableByStartThenEnd) {
    std::vector<TimeRange> rs{{5, 9, {{"i", 0}}}, {1, 3, {{"i", 1}}}, {5, 9, {{"i", 2}}}, {5, 6, {{"i", 3}}}};
    const auto out = sort_time_ranges(rs);
    std::vector<int> ids;
    for (const auto& r : out) ids.push_back(r.payload["i"].get<int>());
    EXPECT_EQ(ids, (std::vector<int>{1, 3, 0, 2}));
}

TEST(SortTimeRanges, SortedAndPermutation) {
    Rng rng(3);
    for (int c = 0; c < 100; ++c) {
        const auto rs = random_ranges(rng, 10);
        const auto out = sort_time_ranges(rs);
        ASSERT_EQ(out.size(), rs.size());
        for (std::size_t i = 1; i < out.size(); ++i) {
            EXPECT_TRUE(out[i - 1].t_start < out[i].t_start ||
                        (out[i - 1].t_start == out[i].t_start && out[i - 1].t_end <= out[i].t_end));
        }
        auto a = bounds(out), b = bounds(rs);
        std::sort(a.begin(), a.end());
        std::sort(b.begin(), b.end());
        EXPECT_EQ(a, b);
    }
}

TEST(RangesFromValue, AcceptsPairsAndRecords) {
    const auto rs = ranges_from_value(Value::parse(R"([[1,2],{"t_start":3,"t_end":4,"label":"x"}])"));
    ASSERT_EQ(rs.size(), 2u);
    EXPECT_EQ(rs[1].payload["label"], "x");
    EXPECT_THROW(ranges_from_value(Value::parse(R"([{"t_start":3}])")), MetaError);
}

TEST(CountOccurrences, CountsByKey) {
    const auto items = Value::parse(R"([{"l":"a"},{"l":"b"},{"l":"a"}])");
    const auto c = count_occurrences(items, "l");
    EXPECT_EQ(c.at("a"), 2);
    EXPECT_EQ(c.at("b"), 1);
    EXPECT_THROW(count_occurrences(Value::parse(R"([{"x":1}])"), "l"), MetaError);
}

TEST(FilterThreshold, KeepsMatching) {
    const auto items = Value::parse(R"([{"s":0.2},{"s":0.7},{"s":0.5}])");
    EXPECT_EQ(filter_threshold(items, "s", CompareOp::ge, 0.5).size(), 2u);
    EXPECT_EQ(filter_threshold(items, "s", CompareOp::lt, 0.5).size(), 1u);
    EXPECT_THROW(filter_threshold(Value::parse(R"([{"s":"x"}])"), "s", CompareOp::ge, 0.5), MetaError);
}

TEST(RerankCandidates, WeightedOrderIsStable) {
    const auto items = Value::parse(R"([{"a":1,"b":0,"id":0},{"a":0,"b":2,"id":1},{"a":1,"b":0,"id":2}])");
    const auto out = rerank_candidates(items, {{"a", 1.0}, {"b", 1.0}});
    EXPECT_EQ(out[0]["id"], 1);
    EXPECT_EQ(out[1]["id"], 0);
    EXPECT_EQ(out[2]["id"], 2);
}

TEST(FilterByValue, CanonicalEquality) {
    const auto items = Value::parse(R"([{"v":"yes"},{"v":"no"},{"v":2.0},{"v":2}])");
    EXPECT_EQ(filter_by_value(items, "v", "yes").size(), 1u);
    EXPECT_EQ(filter_by_value(items, "v", 2).size(), 2u);
}
