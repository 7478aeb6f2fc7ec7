#pragma once

// Trajectory reward, group-relative advantages, the clipped surrogate term,
// planner-token masking and data-source reweighting.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "toolground/executor.hpp"
#include "toolground/scheduler.hpp"
#include "toolground/text.hpp"

namespace toolground::rl {

enum class RlErrorKind { MissingGold, GroupTooSmall, MissingSpans, KeyMismatch, InvalidConfig, InvalidArgument };

inline std::string_view to_string(RlErrorKind k) {
    switch (k) {
        case RlErrorKind::MissingGold: return "MissingGold";
        case RlErrorKind::GroupTooSmall: return "GroupTooSmall";
        case RlErrorKind::MissingSpans: return "MissingSpans";
        case RlErrorKind::KeyMismatch: return "KeyMismatch";
        case RlErrorKind::InvalidConfig: return "InvalidConfig";
        case RlErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "?";
}

class RlError : public std::runtime_error {
public:
    RlError(RlErrorKind kind, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + ": " + detail), kind_(kind) {}
    RlErrorKind kind() const { return kind_; }

private:
    RlErrorKind kind_;
};

enum class AnswerEvaluator { automatic, exact_match_mcq, token_f1 };

struct RewardConfig {
    double lambda_valid = 0.1;
    double lambda_cost = 0.1;
    double epsilon = 1e-8;
    double eps_low = 0.2;
    double eps_high = 0.2;
    /// automatic: multiple choice when the task lists options, token F1 otherwise.
    AnswerEvaluator evaluator = AnswerEvaluator::automatic;
    /// Replaces the shipped open-ended evaluator when set; output is clamped to [0,1].
    std::function<double(const std::string& prediction, const std::string& gold)> custom_evaluator;
    /// Issuing one cache key this many times counts as repeated probing.
    int repeat_threshold = 3;
};

inline void validate(const RewardConfig& c) {
    auto bad = [](const std::string& m) { throw RlError(RlErrorKind::InvalidConfig, m); };
    if (!(c.lambda_valid >= 0 && c.lambda_valid <= 0.5)) bad("lambda_valid must lie in [0, 0.5]");
    if (!(c.lambda_cost >= 0 && c.lambda_cost <= 0.5)) bad("lambda_cost must lie in [0, 0.5]");
    if (!(c.epsilon > 0)) bad("epsilon must be > 0");
    if (!(c.eps_low > 0) || !(c.eps_high > 0)) bad("clip bounds must be > 0");
    if (c.repeat_threshold < 2) bad("repeat_threshold must be >= 2");
}

struct TrajectoryScore {
    double r_ans = 0.0;
    int c_valid = 0;
    int c_cost = 0;
    double total = 0.0;
};

// ---- answer evaluation -----------------------------------------------------------

/// Option letter named by an answer: a bare or bracketed leading letter
/// ("B", "(B)", "B. text"), an "answer is B" phrase, or the exact text of an
/// option.
inline std::optional<char> extract_choice(std::string_view answer, const std::vector<std::string>& options) {
    const auto a = text::trim(answer);
    if (a.empty()) return std::nullopt;
    const auto limit = static_cast<char>('A' + std::max<std::size_t>(options.size(), 1) - 1);
    auto in_range = [&](char c) { return c >= 'A' && (options.empty() ? c <= 'Z' : c <= limit); };
    static const std::regex kLeading(R"(^\(?([A-Za-z])\)?(?:[.:)]|\s|$))");
    static const std::regex kPhrase(R"((?:answer|option|choice)\s*(?:is|:)?\s*\(?([A-Z])\)?\b)", std::regex::icase);
    std::smatch m;
    const std::string s(a);
    if (std::regex_search(s, m, kLeading)) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(m[1].str()[0])));
        const bool bare = s.size() == 1 || s[0] == '(' || std::ispunct(static_cast<unsigned char>(s[1]));
        if (in_range(c) && (bare || std::isupper(static_cast<unsigned char>(s[0])))) {
            if (bare || s.size() <= 2 || !std::isalpha(static_cast<unsigned char>(s[1]))) return c;
        }
    }
    if (std::regex_search(s, m, kPhrase)) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(m[1].str()[0])));
        if (in_range(c)) return c;
    }
    const auto norm = text::to_lower(s);
    for (std::size_t i = 0; i < options.size(); ++i) {
        if (text::to_lower(text::trim(options[i])) == norm) return static_cast<char>('A' + i);
    }
    return std::nullopt;
}

/// Lowercase word tokens without articles.
inline std::vector<std::string> normalized_tokens(std::string_view s) {
    auto toks = text::tokenize(s);
    std::erase_if(toks, [](const std::string& t) { return t == "a" || t == "an" || t == "the"; });
    return toks;
}

inline double token_f1(std::string_view prediction, std::string_view gold) {
    const auto p = normalized_tokens(prediction);
    const auto g = normalized_tokens(gold);
    if (p.empty() && g.empty()) return 1.0;
    if (p.empty() || g.empty()) return 0.0;
    std::map<std::string, int> counts;
    for (const auto& t : g) ++counts[t];
    int common = 0;
    for (const auto& t : p) {
        if (auto it = counts.find(t); it != counts.end() && it->second > 0) {
            --it->second;
            ++common;
        }
    }
    if (common == 0) return 0.0;
    const double precision = static_cast<double>(common) / static_cast<double>(p.size());
    const double recall = static_cast<double>(common) / static_cast<double>(g.size());
    return 2 * precision * recall / (precision + recall);
}

inline double answer_reward(const std::string& prediction, const std::string& gold, const std::vector<std::string>& options,
                            const RewardConfig& cfg) {
    const bool mcq = cfg.evaluator == AnswerEvaluator::exact_match_mcq ||
                     (cfg.evaluator == AnswerEvaluator::automatic && !options.empty());
    if (mcq) {
        const auto p = extract_choice(prediction, options);
        const auto g = extract_choice(gold, options);
        if (p && g) return *p == *g ? 1.0 : 0.0;
        return text::to_lower(text::trim(prediction)) == text::to_lower(text::trim(gold)) ? 1.0 : 0.0;
    }
    const double r = cfg.custom_evaluator ? cfg.custom_evaluator(prediction, gold) : token_f1(prediction, gold);
    if (!std::isfinite(r)) return 0.0;
    return std::clamp(r, 0.0, 1.0);
}

// ---- trajectory indicators ---------------------------------------------------------

inline bool is_protocol_violation(std::string_view v) {
    return v == "incomplete_finish" || v == "resolver_finish" || v == "dependency_cycle" ||
           v.starts_with("runtime_internal_request");
}

/// 1 iff every planner reply parsed, no illegal action or finish was recorded,
/// and the episode did not end on a protocol failure.
inline int validity_indicator(const Trajectory& t) {
    if (t.outcome == Outcome::protocol_failure) return 0;
    for (const auto& s : t.steps) {
        if (!s.parse_failures.empty()) return 0;
        for (const auto& v : s.violations) {
            if (is_protocol_violation(v)) return 0;
        }
    }
    return 1;
}

/// Number of issued calls per cache key (tool, canonical args, world).
inline std::map<std::string, int> issued_keys(const Trajectory& t) {
    std::map<std::string, int> out;
    for (const auto* o : t.observations()) {
        if (o->signal.attempts < 1) continue;
        ++out[cache_key(o->tool_name, o->final_args, t.task.world_id).str()];
    }
    return out;
}

/// 1 iff the trajectory made no progress, probed one key repeatedly, or hit
/// the round limit.
inline int cost_indicator(const Trajectory& t, int repeat_threshold = 3) {
    if (t.outcome == Outcome::max_rounds) return 1;
    const auto obs = t.observations();
    const bool any_ok = std::any_of(obs.begin(), obs.end(), [](const Observation* o) { return o->ok(); });
    if (!any_ok && !t.final) return 1;
    for (const auto& [_, n] : issued_keys(t)) {
        if (n >= repeat_threshold) return 1;
    }
    return 0;
}

inline TrajectoryScore score_trajectory(const Trajectory& t, const std::optional<std::string>& gold,
                                        const RewardConfig& cfg = {}) {
    validate(cfg);
    if (!gold || text::trim(*gold).empty()) throw RlError(RlErrorKind::MissingGold, "no gold answer for the task");
    TrajectoryScore s;
    s.r_ans = t.final ? answer_reward(t.final->answer, *gold, t.task.options, cfg) : 0.0;
    s.c_valid = validity_indicator(t);
    s.c_cost = cost_indicator(t, cfg.repeat_threshold);
    s.total = s.r_ans + cfg.lambda_valid * s.c_valid - cfg.lambda_cost * s.c_cost;
    return s;
}

inline TrajectoryScore score_trajectory(const Trajectory& t, const RewardConfig& cfg = {}) {
    return score_trajectory(t, t.task.gold_answer, cfg);
}

inline Value to_json(const TrajectoryScore& s) {
    return Value{{"r_ans", s.r_ans}, {"c_valid", s.c_valid}, {"c_cost", s.c_cost}, {"total", s.total}};
}

// ---- advantages ------------------------------------------------------------------

struct GroupBatch {
    std::vector<double> rewards;
    std::optional<std::vector<double>> advantages;
    bool skipped = false;

    std::size_t G() const { return rewards.size(); }
};

/// (R_i - mean) / (population std + epsilon); groups whose rewards are all
/// equal are skipped and carry no advantages.
inline GroupBatch group_advantages(GroupBatch batch, double epsilon = 1e-8) {
    if (batch.rewards.size() < 2) throw RlError(RlErrorKind::GroupTooSmall, "a group needs at least 2 rewards");
    batch.advantages.reset();
    batch.skipped = false;
    const auto& r = batch.rewards;
    if (std::all_of(r.begin(), r.end(), [&](double x) { return x == r.front(); })) {
        batch.skipped = true;
        return batch;
    }
    const double n = static_cast<double>(r.size());
    const double mean = std::accumulate(r.begin(), r.end(), 0.0) / n;
    double var = 0.0;
    for (double x : r) var += (x - mean) * (x - mean);
    const double sd = std::sqrt(var / n);
    std::vector<double> adv;
    adv.reserve(r.size());
    for (double x : r) adv.push_back((x - mean) / (sd + epsilon));
    batch.advantages = std::move(adv);
    return batch;
}

inline GroupBatch group_advantages(GroupBatch batch, const RewardConfig& cfg) {
    return group_advantages(std::move(batch), cfg.epsilon);
}

// ---- clipped term ------------------------------------------------------------------

inline double clipped_term(double rho, double advantage, double eps_low, double eps_high) {
    if (!(rho > 0)) throw RlError(RlErrorKind::InvalidArgument, "ratio must be > 0");
    if (!(eps_low > 0) || !(eps_high > 0)) throw RlError(RlErrorKind::InvalidArgument, "clip bounds must be > 0");
    const double clipped = std::clamp(rho, 1.0 - eps_low, 1.0 + eps_high);
    return std::min(rho * advantage, clipped * advantage);
}

// ---- masking ---------------------------------------------------------------------

inline std::vector<TokenSpan> planner_token_mask(const Trajectory& t) {
    if (t.token_spans.empty()) throw RlError(RlErrorKind::MissingSpans, "trajectory has no token spans");
    std::vector<TokenSpan> out;
    for (const auto& s : t.token_spans) {
        if (s.role == SpanRole::planner) out.push_back(s);
    }
    return out;
}

// ---- source reweighting -------------------------------------------------------------

/// Lowers the sampling weight of sources that already score well. The target
/// weight is proportional to w_i * (1 - r_i) with rewards min-max normalized,
/// blended with the old weight, then floored and renormalized.
inline std::map<std::string, double> update_source_weights(const std::map<std::string, double>& weights,
                                                           const std::map<std::string, double>& avg_rewards,
                                                           double smoothing = 0.5, double floor = 0.1) {
    if (weights.size() != avg_rewards.size() ||
        !std::equal(weights.begin(), weights.end(), avg_rewards.begin(),
                    [](const auto& a, const auto& b) { return a.first == b.first; })) {
        throw RlError(RlErrorKind::KeyMismatch, "weights and rewards name different sources");
    }
    if (weights.empty()) throw RlError(RlErrorKind::InvalidArgument, "no sources");
    if (!(smoothing >= 0 && smoothing <= 1)) throw RlError(RlErrorKind::InvalidArgument, "smoothing must lie in [0,1]");
    if (!(floor >= 0) || floor * static_cast<double>(weights.size()) > 1.0 + 1e-12) {
        throw RlError(RlErrorKind::InvalidArgument, "floor times source count exceeds 1");
    }
    double sum = 0.0;
    for (const auto& [k, w] : weights) {
        if (!(w >= 0) || !std::isfinite(w)) throw RlError(RlErrorKind::InvalidArgument, "weight of " + k + " is invalid");
        sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-6) throw RlError(RlErrorKind::InvalidArgument, "weights must sum to 1");
    for (const auto& [k, r] : avg_rewards) {
        if (!std::isfinite(r)) throw RlError(RlErrorKind::InvalidArgument, "reward of " + k + " is not finite");
    }

    double lo = avg_rewards.begin()->second, hi = lo;
    for (const auto& [_, r] : avg_rewards) {
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    std::map<std::string, double> target;
    double tsum = 0.0;
    for (const auto& [k, w] : weights) {
        const double rn = hi > lo ? (avg_rewards.at(k) - lo) / (hi - lo) : 0.0;
        target[k] = (w / sum) * (1.0 - rn);
        tsum += target[k];
    }
    for (auto& [k, t] : target) t = tsum > 0 ? t / tsum : weights.at(k) / sum;

    std::map<std::string, double> out;
    for (const auto& [k, w] : weights) out[k] = smoothing * (w / sum) + (1.0 - smoothing) * target[k];

    std::map<std::string, bool> pinned;
    for (const auto& [k, _] : out) pinned[k] = false;
    while (true) {
        double free_sum = 0.0;
        std::size_t n_pinned = 0;
        for (const auto& [k, v] : out) {
            if (pinned[k]) {
                ++n_pinned;
            } else {
                free_sum += v;
            }
        }
        const double remaining = 1.0 - floor * static_cast<double>(n_pinned);
        const std::size_t n_free = out.size() - n_pinned;
        for (auto& [k, v] : out) {
            if (pinned[k]) {
                v = floor;
            } else {
                v = free_sum > 0 ? v * remaining / free_sum : remaining / static_cast<double>(n_free);
            }
        }
        bool changed = false;
        for (auto& [k, v] : out) {
            if (!pinned[k] && v < floor) {
                pinned[k] = true;
                changed = true;
            }
        }
        if (!changed) break;
    }
    return out;
}

}  // namespace toolground::rl
