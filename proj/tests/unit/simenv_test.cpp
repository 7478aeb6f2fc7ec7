#include <gtest/gtest.h>

#include "support/fixtures.hpp"
#include "toolground/simenv.hpp"

using namespace toolground;
using namespace toolground::sim;
using tgtest::Rng;

namespace {

SyntheticWorld random_world(Rng& rng) {
    SyntheticWorld w;
    w.world_id = "w" + rng.word(4);
    w.duration = std::round(rng.uniform(1, 900));
    const auto ne = rng.integer(0, 12);
    for (long i = 0; i < ne; ++i) {
        const double s = std::round(rng.uniform(0, w.duration - 0.5));
        w.events.push_back({rng.word(), s, std::min(w.duration, s + std::round(rng.uniform(1, 40))), Value::object()});
    }
    if (rng.coin()) {
        double t = 0;
        while (t < w.duration) {
            const double e = std::min(w.duration, t + std::round(rng.uniform(1, 25)));
            w.transcript_units.push_back({t, e, rng.word() + " " + rng.word(), "A"});
            t = e + std::round(rng.uniform(0, 10));
        }
    }
    return w;
}

}  // namespace

TEST(Segmentation, TilesTheVideoWithBoundedPieces) {
    Rng rng(11);
    for (int c = 0; c < 300; ++c) {
        const auto w = random_world(rng);
        const auto segs = segment_video(w);
        ASSERT_FALSE(segs.empty());
        EXPECT_EQ(segs.front().t_start, 0.0);
        EXPECT_EQ(segs.back().t_end, w.duration);
        for (std::size_t i = 0; i < segs.size(); ++i) {
            EXPECT_GT(segs[i].length(), 0.0);
            EXPECT_LE(segs[i].length(), 60.0) << w.duration;
            EXPECT_EQ(segs[i].id, static_cast<int>(i));
            if (i > 0) EXPECT_EQ(segs[i].t_start, segs[i - 1].t_end);
            for (double t : segs[i].frame_times) {
                EXPECT_GE(t, segs[i].t_start);
                EXPECT_LE(t, segs[i].t_end);
            }
            EXPECT_LE(segs[i].frame_times.size(), 8u);
        }
    }
}

TEST(Segmentation, MethodFollowsAvailableSignals) {
    EXPECT_EQ(segment_video(tgtest::load_named_world("kitchen_talk")).front().method, SegmentMethod::asr);
    EXPECT_EQ(segment_video(tgtest::load_named_world("bathroom_cleaning")).front().method, SegmentMethod::scene);
    EXPECT_EQ(segment_video(tgtest::load_named_world("empty_room")).front().method, SegmentMethod::fixed);
}

TEST(Segmentation, ShortVideoIsOnePiece) {
    const auto segs = segment_video(tgtest::load_named_world("short_clip"));
    ASSERT_EQ(segs.size(), 1u);
    EXPECT_EQ(segs[0].t_end, 10.0);
}

TEST(Grounding, TopKByScoreWithStableTies) {
    Rng rng(5);
    for (int c = 0; c < 100; ++c) {
        const auto w = random_world(rng);
        const auto segs = segment_video(w);
        const std::string q = w.events.empty() ? rng.word() : w.events.front().label + " " + rng.word();
        const auto block = build_grounding_block(segs, q);
        ASSERT_EQ(block.segments.size(), std::min<std::size_t>(3, segs.size()));
        const auto qset = text::content_set(q);
        std::set<int> chosen;
        for (const auto& s : block.segments) chosen.insert(s.segment.id);
        const double worst = block.segments.back().score;
        for (const auto& s : segs) {
            if (chosen.contains(s.id)) continue;
            const double sc = segment_score(qset, s, 0.5);
            EXPECT_TRUE(sc < worst || (sc == worst && s.id > block.segments.back().segment.id));
        }
        for (const auto& [id, t] : block.packed_frames) EXPECT_TRUE(chosen.contains(id));
    }
    EXPECT_THROW(build_grounding_block({}, "x"), SimError);
}

TEST(ClipQa, MatchesOverlappingEventsOnly) {
    const auto w = tgtest::load_named_world("bathroom_cleaning");
    std::size_t cleaning = 0;
    for (const auto& e : w.events) {
        if (e.label != "cleaning toilet") continue;
        ++cleaning;
        const auto mid = (e.t_start + e.t_end) / 2;
        EXPECT_TRUE(clip_qa(w, e.t_start, mid, "cleaning toilet").yes);
    }
    EXPECT_EQ(cleaning, 4u);
    EXPECT_THROW(clip_qa(w, 10, 5, "x"), SimError);
    EXPECT_THROW(clip_qa(w, 0, w.duration + 1, "x"), SimError);
    EXPECT_FALSE(clip_qa(w, 0, w.duration, "zebra crossing").yes);
}

TEST(TemporalRetrieval, RankedAndTruncated) {
    const auto w = tgtest::load_named_world("bathroom_cleaning");
    const auto hits = temporal_retrieval(w, "cleaning toilet", 10);
    ASSERT_GE(hits.size(), 4u);
    for (std::size_t i = 1; i < hits.size(); ++i) EXPECT_GE(hits[i - 1].score, hits[i].score);
    EXPECT_EQ(temporal_retrieval(w, "cleaning toilet", 2).size(), 2u);
    EXPECT_TRUE(temporal_retrieval(w, "zebra", 5).empty());
    EXPECT_THROW(temporal_retrieval(w, "x", 0), SimError);
}

TEST(FrameTruth, InspectReportsVisibleLabels) {
    const auto w = tgtest::load_named_world("bathroom_cleaning");
    const auto& e = w.events.front();
    const auto view = inspect_frame(w, e.t_start);
    EXPECT_NE(std::find(view.labels.begin(), view.labels.end(), e.label), view.labels.end());
    EXPECT_THROW(inspect_frame(w, -1), SimError);
}

TEST(Worlds, FixturesLoadAndAvailabilityFollowsContent) {
    for (const auto& n : tgtest::fixture_world_names()) EXPECT_NO_THROW(tgtest::load_named_world(n)) << n;
    const auto silent = tgtest::load_named_world("silent_street").availability();
    EXPECT_FALSE(silent.modalities.contains("audio"));
    EXPECT_TRUE(tgtest::load_named_world("kitchen_talk").availability().modalities.contains("transcript"));
    EXPECT_THROW(load_world("/nonexistent.json"), std::exception);
}

TEST(Worlds, JsonRoundTrip) {
    Rng rng(77);
    for (int c = 0; c < 50; ++c) {
        const auto w = random_world(rng);
        EXPECT_EQ(to_json(world_from_json(to_json(w))), to_json(w));
    }
}
