#pragma once

// Synthetic video world: a timeline of labelled events plus transcript units.
// Immutable after load.

#include <algorithm>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolground/json_io.hpp"
#include "toolground/registry.hpp"
#include "toolground/value.hpp"

namespace toolground::sim {

struct Event {
    std::string label;
    double t_start = 0.0;
    double t_end = 0.0;
    Value attributes = Value::object();
};

struct TranscriptUnit {
    double t_start = 0.0;
    double t_end = 0.0;
    std::string text;
    std::string speaker;
};

struct SyntheticWorld {
    std::string world_id;
    double duration = 0.0;
    std::vector<Event> events;
    std::vector<TranscriptUnit> transcript_units;
    bool has_audio = true;

    /// Labels visible at time t: events with t_start <= t < t_end, in event order.
    std::vector<std::string> frame_truth(double t) const {
        std::vector<std::string> out;
        for (const auto& e : events) {
            if (e.t_start <= t && t < e.t_end && std::find(out.begin(), out.end(), e.label) == out.end()) {
                out.push_back(e.label);
            }
        }
        return out;
    }

    AvailabilityContext availability() const {
        AvailabilityContext ctx;
        ctx.modalities.insert("video");
        if (has_audio) ctx.modalities.insert("audio");
        if (!transcript_units.empty()) ctx.modalities.insert("transcript");
        ctx.indexes.insert("segments");
        if (!events.empty()) ctx.indexes.insert("events");
        return ctx;
    }
};

inline Value to_json(const SyntheticWorld& w) {
    Value events = Value::array();
    for (const auto& e : w.events) {
        events.push_back({{"label", e.label}, {"t_start", e.t_start}, {"t_end", e.t_end}, {"attributes", e.attributes}});
    }
    Value units = Value::array();
    for (const auto& u : w.transcript_units) {
        Value j{{"t_start", u.t_start}, {"t_end", u.t_end}, {"text", u.text}};
        if (!u.speaker.empty()) j["speaker"] = u.speaker;
        units.push_back(std::move(j));
    }
    return canonicalize(Value{{"world_id", w.world_id},
                              {"duration", w.duration},
                              {"events", events},
                              {"transcript_units", units},
                              {"has_audio", w.has_audio}});
}

inline SyntheticWorld world_from_json(const Value& j) {
    using namespace json_io;
    check_keys(j, {"world_id", "duration", "events", "transcript_units", "has_audio", "about"}, "world");
    SyntheticWorld w;
    w.world_id = get_string(j, "world_id", "world");
    w.duration = get_number(j, "duration", "world");
    if (!(w.duration > 0.0)) throw FormatError("world: duration must be positive");
    w.has_audio = get_bool_or(j, "has_audio", true, "world");
    auto in_range = [&](double a, double b) { return 0.0 <= a && a <= b && b <= w.duration; };
    if (j.contains("events")) {
        std::size_t i = 0;
        for (const auto& e : j.at("events")) {
            const auto what = "world.events[" + std::to_string(i++) + "]";
            check_keys(e, {"label", "t_start", "t_end", "attributes"}, what);
            Event ev;
            ev.label = get_string(e, "label", what);
            ev.t_start = get_number(e, "t_start", what);
            ev.t_end = get_number(e, "t_end", what);
            if (e.contains("attributes")) {
                require_object(e.at("attributes"), what + ".attributes");
                ev.attributes = e.at("attributes");
            }
            if (!in_range(ev.t_start, ev.t_end)) throw FormatError(what + ": times outside [0, duration]");
            w.events.push_back(std::move(ev));
        }
    }
    if (j.contains("transcript_units")) {
        std::size_t i = 0;
        for (const auto& u : j.at("transcript_units")) {
            const auto what = "world.transcript_units[" + std::to_string(i++) + "]";
            check_keys(u, {"t_start", "t_end", "text", "speaker"}, what);
            TranscriptUnit tu;
            tu.t_start = get_number(u, "t_start", what);
            tu.t_end = get_number(u, "t_end", what);
            tu.text = get_string(u, "text", what);
            tu.speaker = get_string_or(u, "speaker", "", what);
            if (!in_range(tu.t_start, tu.t_end)) throw FormatError(what + ": times outside [0, duration]");
            w.transcript_units.push_back(std::move(tu));
        }
    }
    return w;
}

inline SyntheticWorld load_world(const std::string& path) {
    return world_from_json(json_io::parse_text(json_io::read_file(path), path));
}

}  // namespace toolground::sim
