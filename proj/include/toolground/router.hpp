#pragma once

// Candidate retrieval over a frozen registry and primitive/abstract
// classification of planner actions.
//
// The shipped scorer is lexical:
//   score = w_name * [exact name] + w_tags * Jaccard(tags)
//         + w_desc * |query words ∩ (description + tags) words| / |query words|
// Scorers are pluggable through ToolScorer.

#include <algorithm>
#include <optional>
#include <string>
#include <vector>

#include "toolground/protocol.hpp"
#include "toolground/registry.hpp"
#include "toolground/schema.hpp"
#include "toolground/text.hpp"

namespace toolground {

struct RouteQuery {
    std::string name;
    std::string description;
    std::vector<std::string> tags;
};

struct RoutingWeights {
    double name = 0.5;
    double tags = 0.3;
    double description = 0.2;
};

enum class MatchReason { exact_name, tag_overlap, token_overlap };

inline std::string_view to_string(MatchReason r) {
    switch (r) {
        case MatchReason::exact_name: return "exact_name";
        case MatchReason::tag_overlap: return "tag_overlap";
        case MatchReason::token_overlap: return "token_overlap";
    }
    return "?";
}

struct RouteCandidate {
    const ToolSpec* tool = nullptr;
    double score = 0.0;
    std::vector<MatchReason> reasons;
};

class ToolScorer {
public:
    virtual ~ToolScorer() = default;
    /// Score in [0,1]; reasons receives the components that contributed.
    virtual double score(const RouteQuery& q, const ToolSpec& spec, std::vector<MatchReason>& reasons) const = 0;
};

class LexicalScorer final : public ToolScorer {
public:
    explicit LexicalScorer(RoutingWeights w = {}) : w_(w) {}

    double score(const RouteQuery& q, const ToolSpec& spec, std::vector<MatchReason>& reasons) const override {
        double total = 0.0;
        if (!q.name.empty() && text::to_lower(q.name) == text::to_lower(spec.name)) {
            total += w_.name;
            reasons.push_back(MatchReason::exact_name);
        }
        std::set<std::string> qtags, stags;
        for (const auto& t : q.tags) qtags.insert(text::to_lower(t));
        for (const auto& t : spec.tags) stags.insert(text::to_lower(t));
        if (const double j = text::jaccard(qtags, stags); j > 0.0) {
            total += w_.tags * j;
            reasons.push_back(MatchReason::tag_overlap);
        }
        std::string target = spec.description;
        for (const auto& t : spec.tags) target += " " + t;
        if (const double c = text::coverage(text::content_set(q.description), text::content_set(target)); c > 0.0) {
            total += w_.description * c;
            reasons.push_back(MatchReason::token_overlap);
        }
        return total;
    }

    const RoutingWeights& weights() const { return w_; }

private:
    RoutingWeights w_;
};

/// Up to k planner-visible candidates with positive score, ordered by score
/// (descending) then name. Runtime-internal tools are never returned.
inline std::vector<RouteCandidate> search_tools(const ToolRegistry& registry, const RouteQuery& query, std::size_t k,
                                                const ToolScorer& scorer) {
    std::vector<RouteCandidate> all;
    for (const auto* spec : registry.entries()) {
        if (spec->exposure != Exposure::planner_visible) continue;
        RouteCandidate c{spec, 0.0, {}};
        c.score = scorer.score(query, *spec, c.reasons);
        if (c.score > 0.0) all.push_back(std::move(c));
    }
    std::stable_sort(all.begin(), all.end(), [](const RouteCandidate& a, const RouteCandidate& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.tool->name < b.tool->name;
    });
    if (all.size() > k) all.resize(k);
    return all;
}

inline std::vector<RouteCandidate> search_tools(const ToolRegistry& registry, const RouteQuery& query, std::size_t k,
                                                RoutingWeights weights = {}) {
    return search_tools(registry, query, k, LexicalScorer(weights));
}

enum class ActionKind { primitive, abstract };

struct ActionClass {
    enum class Reason { matched, unknown_name, unavailable, runtime_internal, invalid_params };

    ActionKind kind = ActionKind::abstract;
    const ToolSpec* matched = nullptr;
    std::optional<ValidationReport> validation;
    Reason reason = Reason::unknown_name;
};

inline std::string_view to_string(ActionClass::Reason r) {
    switch (r) {
        case ActionClass::Reason::matched: return "matched";
        case ActionClass::Reason::unknown_name: return "unknown_name";
        case ActionClass::Reason::unavailable: return "unavailable";
        case ActionClass::Reason::runtime_internal: return "runtime_internal";
        case ActionClass::Reason::invalid_params: return "invalid_params";
    }
    return "?";
}

/// Primitive iff the exact name is registered, planner-visible, available,
/// and its params validate (possibly after mechanical repair). Everything
/// else is abstract; the matched tool is never silently substituted.
inline ActionClass classify_action(const ToolRegistry& registry, const ActionRequest& action,
                                   const AvailabilityContext& world_state) {
    ActionClass out;
    auto found = registry.lookup(action.tool_name, world_state);
    if (found.spec == nullptr) return out;
    out.matched = found.spec;
    if (found.spec->exposure == Exposure::runtime_internal) {
        out.reason = ActionClass::Reason::runtime_internal;
        return out;
    }
    if (!found) {
        out.reason = ActionClass::Reason::unavailable;
        return out;
    }
    auto report = repair_args(found.spec->input_schema, action.params);
    const bool ok = report.usable();
    out.validation = std::move(report);
    out.reason = ok ? ActionClass::Reason::matched : ActionClass::Reason::invalid_params;
    out.kind = ok ? ActionKind::primitive : ActionKind::abstract;
    return out;
}

}  // namespace toolground
