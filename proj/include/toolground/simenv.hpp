#pragma once

// Preprocessing pipeline (segmentation, frame sampling, grounding block) and
// the ground-truth oracles behind the base tools.

#include <algorithm>
#include <cmath>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolground/text.hpp"
#include "toolground/value.hpp"
#include "toolground/world.hpp"

namespace toolground::sim {

enum class SimErrorKind { InvalidRange, OutOfRange, InvalidArgument };

class SimError : public std::runtime_error {
public:
    SimError(SimErrorKind kind, const std::string& msg) : std::runtime_error(msg), kind_(kind) {}
    SimErrorKind kind() const { return kind_; }

private:
    SimErrorKind kind_;
};

struct SimConfig {
    double segment_target = 30.0;
    double segment_min = 15.0;
    double segment_max = 45.0;
    double segment_cap = 60.0;
    double asr_coverage = 0.4;
    double frame_interval = 6.0;
    std::vector<int> frame_cap_ladder{8, 6, 4, 2};
    std::size_t grounding_k = 3;
    double grounding_alpha = 0.5;
    double grounding_frame_interval = 5.0;
    double match_threshold = 0.5;
};

inline Value to_json(const SimConfig& c) {
    return Value{{"segment_target", c.segment_target},
                 {"segment_min", c.segment_min},
                 {"segment_max", c.segment_max},
                 {"segment_cap", c.segment_cap},
                 {"asr_coverage", c.asr_coverage},
                 {"frame_interval", c.frame_interval},
                 {"frame_cap_ladder", c.frame_cap_ladder},
                 {"grounding_k", c.grounding_k},
                 {"grounding_alpha", c.grounding_alpha},
                 {"grounding_frame_interval", c.grounding_frame_interval},
                 {"match_threshold", c.match_threshold}};
}

enum class SegmentMethod { asr, scene, fixed };

inline std::string_view to_string(SegmentMethod m) {
    switch (m) {
        case SegmentMethod::asr: return "asr";
        case SegmentMethod::scene: return "scene";
        case SegmentMethod::fixed: return "fixed";
    }
    return "?";
}

struct Segment {
    int id = 0;
    double t_start = 0.0;
    double t_end = 0.0;
    std::string caption;
    std::string transcript;
    std::vector<double> frame_times;
    SegmentMethod method = SegmentMethod::fixed;

    double length() const { return t_end - t_start; }
};

inline bool overlaps(double a0, double a1, double b0, double b1) { return a0 < b1 && a1 > b0; }

/// Fraction of [0, duration] covered by the union of transcript units.
inline double transcript_coverage(const SyntheticWorld& w) {
    std::vector<std::pair<double, double>> iv;
    for (const auto& u : w.transcript_units) iv.emplace_back(u.t_start, u.t_end);
    std::sort(iv.begin(), iv.end());
    double covered = 0.0, cur0 = 0.0, cur1 = -1.0;
    for (auto [a, b] : iv) {
        if (a > cur1) {
            if (cur1 > cur0) covered += cur1 - cur0;
            cur0 = a;
            cur1 = b;
        } else {
            cur1 = std::max(cur1, b);
        }
    }
    if (cur1 > cur0) covered += cur1 - cur0;
    return covered / w.duration;
}

/// Cut points for [0, duration]. While more than segment_max remains, cut at
/// the candidate nearest prev+target inside [prev+min, prev+max] (earlier on a
/// tie), else at prev+target. A tail shorter than segment_min joins the last piece.
inline std::vector<double> cut_points(double duration, std::vector<double> candidates, const SimConfig& cfg) {
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());
    std::vector<double> cuts{0.0};
    double prev = 0.0;
    while (duration - prev > cfg.segment_max) {
        const double goal = prev + cfg.segment_target;
        std::optional<double> best;
        for (double c : candidates) {
            if (c < prev + cfg.segment_min || c > prev + cfg.segment_max || c >= duration) continue;
            if (!best || std::fabs(c - goal) < std::fabs(*best - goal)) best = c;
        }
        prev = best.value_or(goal);
        cuts.push_back(prev);
    }
    if (duration - prev < cfg.segment_min && cuts.size() > 1) cuts.pop_back();
    cuts.push_back(duration);
    return cuts;
}

/// Timestamps t_start + i*interval strictly inside the segment, thinned to
/// `cap` by evenly spaced indices that keep the first and last frame.
inline std::vector<double> sample_frames(double t_start, double t_end, double interval, int cap) {
    if (!(interval > 0.0)) throw SimError(SimErrorKind::InvalidArgument, "interval must be positive");
    std::vector<double> all;
    for (long i = 0;; ++i) {
        const double t = t_start + static_cast<double>(i) * interval;
        if (t >= t_end && !(i == 0 && t_end == t_start)) break;
        all.push_back(t);
        if (t >= t_end) break;
    }
    const auto n = all.size();
    if (cap <= 0 || n <= static_cast<std::size_t>(cap)) return all;
    if (cap == 1) return {all.front()};
    std::vector<double> out;
    for (int i = 0; i < cap; ++i) {
        const auto idx = static_cast<std::size_t>(std::lround(static_cast<double>(i) * static_cast<double>(n - 1) /
                                                              static_cast<double>(cap - 1)));
        out.push_back(all[idx]);
    }
    return out;
}

inline std::vector<double> sample_frames(const Segment& seg, double interval, int cap) {
    return sample_frames(seg.t_start, seg.t_end, interval, cap);
}

/// Cap at a given degradation level; levels past the ladder stay on its last rung.
inline int frame_cap(const SimConfig& cfg, std::size_t level) {
    if (cfg.frame_cap_ladder.empty()) return 8;
    return cfg.frame_cap_ladder[std::min(level, cfg.frame_cap_ladder.size() - 1)];
}

inline std::string caption_for(const SyntheticWorld& w, double a, double b) {
    std::vector<std::string> labels;
    std::vector<const Event*> hits;
    for (const auto& e : w.events) {
        if (overlaps(a, b, e.t_start, e.t_end)) hits.push_back(&e);
    }
    std::stable_sort(hits.begin(), hits.end(), [](const Event* x, const Event* y) { return x->t_start < y->t_start; });
    for (const auto* e : hits) {
        if (std::find(labels.begin(), labels.end(), e->label) == labels.end()) labels.push_back(e->label);
    }
    std::string out;
    for (const auto& l : labels) out += (out.empty() ? "" : "; ") + l;
    return out;
}

inline std::string transcript_for(const SyntheticWorld& w, double a, double b) {
    std::string out;
    for (const auto& u : w.transcript_units) {
        if (overlaps(a, b, u.t_start, u.t_end)) out += (out.empty() ? "" : " ") + u.text;
    }
    return out;
}

inline std::vector<Segment> segment_video(const SyntheticWorld& w, const SimConfig& cfg = {}) {
    SegmentMethod method = SegmentMethod::fixed;
    std::vector<double> candidates;
    if (!w.transcript_units.empty() && transcript_coverage(w) >= cfg.asr_coverage) {
        method = SegmentMethod::asr;
        for (const auto& u : w.transcript_units) {
            candidates.push_back(u.t_start);
            candidates.push_back(u.t_end);
        }
    } else if (!w.events.empty()) {
        method = SegmentMethod::scene;
        for (const auto& e : w.events) {
            candidates.push_back(e.t_start);
            candidates.push_back(e.t_end);
        }
    }
    const auto cuts = cut_points(w.duration, candidates, cfg);
    std::vector<Segment> out;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        Segment s;
        s.id = static_cast<int>(i);
        s.t_start = cuts[i];
        s.t_end = cuts[i + 1];
        s.caption = caption_for(w, s.t_start, s.t_end);
        s.transcript = transcript_for(w, s.t_start, s.t_end);
        s.frame_times = sample_frames(s.t_start, s.t_end, cfg.frame_interval, frame_cap(cfg, 0));
        s.method = method;
        out.push_back(std::move(s));
    }
    return out;
}

inline Value to_json(const Segment& s) {
    return canonicalize(Value{{"id", s.id},
                              {"t_start", s.t_start},
                              {"t_end", s.t_end},
                              {"caption", s.caption},
                              {"transcript", s.transcript},
                              {"frame_times", s.frame_times},
                              {"method", to_string(s.method)}});
}

struct ScoredSegment {
    Segment segment;
    double score = 0.0;
};

struct GroundingBlock {
    std::vector<ScoredSegment> segments;
    std::vector<std::pair<int, double>> packed_frames;
    std::string built_from;
};

inline double segment_score(const std::set<std::string>& q, const Segment& s, double alpha) {
    return alpha * text::coverage(q, text::content_set(s.caption)) +
           (1.0 - alpha) * text::coverage(q, text::content_set(s.transcript));
}

inline GroundingBlock build_grounding_block(const std::vector<Segment>& segments, const std::string& question,
                                            const SimConfig& cfg = {}) {
    if (segments.empty()) throw SimError(SimErrorKind::InvalidArgument, "no segments to ground");
    const auto q = text::content_set(question);
    std::vector<ScoredSegment> scored;
    for (const auto& s : segments) scored.push_back({s, segment_score(q, s, cfg.grounding_alpha)});
    std::stable_sort(scored.begin(), scored.end(), [](const ScoredSegment& a, const ScoredSegment& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.segment.id < b.segment.id;
    });
    if (scored.size() > cfg.grounding_k) scored.resize(cfg.grounding_k);
    GroundingBlock block;
    for (const auto& s : scored) {
        for (double t : sample_frames(s.segment, cfg.grounding_frame_interval, 0)) block.packed_frames.emplace_back(s.segment.id, t);
    }
    block.segments = std::move(scored);
    for (const auto& w : q) block.built_from += (block.built_from.empty() ? "" : " ") + w;
    return block;
}

inline std::string frame_ref(const SyntheticWorld& w, double t) { return w.world_id + "@" + format_number(t); }

inline Value to_json(const GroundingBlock& b, const SyntheticWorld& w) {
    Value segs = Value::array();
    for (const auto& s : b.segments) {
        auto j = to_json(s.segment);
        j["score"] = s.score;
        segs.push_back(canonicalize(j));
    }
    Value frames = Value::array();
    for (auto [id, t] : b.packed_frames) frames.push_back(canonicalize(Value{{"segment", id}, {"t", t}, {"frame_ref", frame_ref(w, t)}}));
    return Value{{"segments", segs}, {"packed_frames", frames}, {"built_from", b.built_from}};
}

/// Oracle matcher: Jaccard over content words of query and label.
inline double label_match(const std::string& query, const std::string& label) {
    return text::jaccard(text::content_set(query), text::content_set(label));
}

inline void check_window(const SyntheticWorld& w, double t_start, double t_end) {
    if (!(0.0 <= t_start && t_start < t_end && t_end <= w.duration)) {
        throw SimError(SimErrorKind::InvalidRange,
                       "invalid range [" + format_number(t_start) + ", " + format_number(t_end) + ")");
    }
}

struct ClipVerdict {
    bool yes = false;
    std::vector<const Event*> matched;
    double confidence = 0.0;
};

inline ClipVerdict clip_qa(const SyntheticWorld& w, double t_start, double t_end, const std::string& query,
                           const SimConfig& cfg = {}) {
    check_window(w, t_start, t_end);
    ClipVerdict v;
    double best = 0.0;
    for (const auto& e : w.events) {
        if (!overlaps(t_start, t_end, e.t_start, e.t_end)) continue;
        const double m = label_match(query, e.label);
        best = std::max(best, m);
        if (m >= cfg.match_threshold) v.matched.push_back(&e);
    }
    v.yes = !v.matched.empty();
    v.confidence = v.yes ? best : 1.0 - best;
    return v;
}

inline Value event_json(const Event& e) {
    return canonicalize(Value{{"label", e.label}, {"t_start", e.t_start}, {"t_end", e.t_end}});
}

inline Value clip_qa_json(const SyntheticWorld& w, double t_start, double t_end, const std::string& query,
                          const SimConfig& cfg = {}) {
    const auto v = clip_qa(w, t_start, t_end, query, cfg);
    Value matched = Value::array();
    for (const auto* e : v.matched) matched.push_back(event_json(*e));
    Value out{{"t_start", t_start},
              {"t_end", t_end},
              {"verdict", v.yes ? "yes" : "no"},
              {"matched_events", matched},
              {"confidence", v.confidence}};
    if (v.yes) out["label"] = v.matched.front()->label;
    return canonicalize(out);
}

struct RetrievalHit {
    double t_start = 0.0;
    double t_end = 0.0;
    std::string label;
    double score = 0.0;
};

/// Event-aligned windows whose labels share any content word with the query.
inline std::vector<RetrievalHit> temporal_retrieval(const SyntheticWorld& w, const std::string& query, long k) {
    if (k < 1) throw SimError(SimErrorKind::InvalidArgument, "k must be >= 1");
    std::vector<RetrievalHit> hits;
    for (const auto& e : w.events) {
        const double s = label_match(query, e.label);
        if (s > 0.0) hits.push_back({e.t_start, e.t_end, e.label, s});
    }
    std::stable_sort(hits.begin(), hits.end(), [](const RetrievalHit& a, const RetrievalHit& b) {
        if (a.score != b.score) return a.score > b.score;
        if (a.t_start != b.t_start) return a.t_start < b.t_start;
        return a.label < b.label;
    });
    if (hits.size() > static_cast<std::size_t>(k)) hits.resize(static_cast<std::size_t>(k));
    return hits;
}

inline Value to_json(const RetrievalHit& h) {
    return canonicalize(Value{{"t_start", h.t_start}, {"t_end", h.t_end}, {"label", h.label}, {"score", h.score}});
}

struct FrameView {
    std::vector<std::string> labels;
    std::string frame_ref;
};

inline FrameView inspect_frame(const SyntheticWorld& w, double t) {
    if (!(0.0 <= t && t <= w.duration)) throw SimError(SimErrorKind::OutOfRange, "t=" + format_number(t) + " outside video");
    return {w.frame_truth(t), frame_ref(w, t)};
}

/// Transcript units overlapping [a, b).
inline std::vector<const TranscriptUnit*> transcript_window(const SyntheticWorld& w, double a, double b) {
    std::vector<const TranscriptUnit*> out;
    for (const auto& u : w.transcript_units) {
        if (overlaps(a, b, u.t_start, u.t_end)) out.push_back(&u);
    }
    return out;
}

/// Sorted distinct event boundary times strictly inside the video.
inline std::vector<double> scene_changes(const SyntheticWorld& w) {
    std::set<double> cuts;
    for (const auto& e : w.events) {
        if (e.t_start > 0.0 && e.t_start < w.duration) cuts.insert(e.t_start);
        if (e.t_end > 0.0 && e.t_end < w.duration) cuts.insert(e.t_end);
    }
    return {cuts.begin(), cuts.end()};
}

/// A loaded world with its preprocessing done once.
struct Environment {
    SyntheticWorld world;
    SimConfig config;
    std::vector<Segment> segments;
    AvailabilityContext availability;

    explicit Environment(SyntheticWorld w, SimConfig cfg = {})
        : world(std::move(w)), config(std::move(cfg)), segments(segment_video(world, config)), availability(world.availability()) {}
};

}  // namespace toolground::sim
