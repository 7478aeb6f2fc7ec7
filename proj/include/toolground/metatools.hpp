#pragma once

// Meta tools over intermediate results: time-range sorting and merging,
// counting, thresholding, reranking and equality filtering.

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolground/value.hpp"

namespace toolground::meta {

enum class MetaErrorKind { InvalidRange, NegativeTolerance, MissingKey, NonNumericField, InvalidArgument };

inline std::string_view to_string(MetaErrorKind k) {
    switch (k) {
        case MetaErrorKind::InvalidRange: return "InvalidRange";
        case MetaErrorKind::NegativeTolerance: return "NegativeTolerance";
        case MetaErrorKind::MissingKey: return "MissingKey";
        case MetaErrorKind::NonNumericField: return "NonNumericField";
        case MetaErrorKind::InvalidArgument: return "InvalidArgument";
    }
    return "?";
}

class MetaError : public std::runtime_error {
public:
    MetaError(MetaErrorKind kind, long index, const std::string& msg)
        : std::runtime_error(std::string(to_string(kind)) + (index >= 0 ? "(" + std::to_string(index) + ")" : "") +
                             (msg.empty() ? "" : ": " + msg)),
          kind_(kind),
          index_(index) {}
    MetaErrorKind kind() const { return kind_; }
    /// Offending item index, or -1.
    long index() const { return index_; }

private:
    MetaErrorKind kind_;
    long index_;
};

struct TimeRange {
    double t_start = 0.0;
    double t_end = 0.0;
    Value payload = Value::object();

    bool operator==(const TimeRange& o) const {
        return t_start == o.t_start && t_end == o.t_end && canonical_dump(payload) == canonical_dump(o.payload);
    }
};

/// Accepts [t_start, t_end] or a record with t_start/t_end; other record
/// fields become the payload.
inline TimeRange range_from_value(const Value& v, long index) {
    TimeRange r;
    if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
        r.t_start = v[0].get<double>();
        r.t_end = v[1].get<double>();
    } else if (v.is_object()) {
        auto s = v.find("t_start");
        auto e = v.find("t_end");
        if (s == v.end() || e == v.end()) throw MetaError(MetaErrorKind::MissingKey, index, "t_start/t_end");
        if (!s->is_number() || !e->is_number()) throw MetaError(MetaErrorKind::NonNumericField, index, "t_start/t_end");
        r.t_start = s->get<double>();
        r.t_end = e->get<double>();
        for (auto it = v.begin(); it != v.end(); ++it) {
            if (it.key() != "t_start" && it.key() != "t_end") r.payload[it.key()] = it.value();
        }
    } else {
        throw MetaError(MetaErrorKind::InvalidRange, index, "not a time range");
    }
    if (!(0.0 <= r.t_start && r.t_start <= r.t_end)) throw MetaError(MetaErrorKind::InvalidRange, index, "");
    return r;
}

inline std::vector<TimeRange> ranges_from_value(const Value& v) {
    if (!v.is_array()) throw MetaError(MetaErrorKind::InvalidArgument, -1, "ranges must be a list");
    std::vector<TimeRange> out;
    long i = 0;
    for (const auto& x : v) out.push_back(range_from_value(x, i++));
    return out;
}

inline Value to_value(const TimeRange& r) {
    Value out = r.payload.is_object() ? r.payload : Value::object();
    out["t_start"] = r.t_start;
    out["t_end"] = r.t_end;
    return canonicalize(out);
}

inline Value to_value(const std::vector<TimeRange>& rs) {
    Value out = Value::array();
    for (const auto& r : rs) out.push_back(to_value(r));
    return out;
}

inline void check_ranges(const std::vector<TimeRange>& rs) {
    for (std::size_t i = 0; i < rs.size(); ++i) {
        if (!(0.0 <= rs[i].t_start && rs[i].t_start <= rs[i].t_end)) {
            throw MetaError(MetaErrorKind::InvalidRange, static_cast<long>(i), "");
        }
    }
}

/// Stable sort by (t_start, t_end).
inline std::vector<TimeRange> sort_time_ranges(std::vector<TimeRange> ranges) {
    check_ranges(ranges);
    std::stable_sort(ranges.begin(), ranges.end(), [](const TimeRange& a, const TimeRange& b) {
        if (a.t_start != b.t_start) return a.t_start < b.t_start;
        return a.t_end < b.t_end;
    });
    return ranges;
}

namespace detail {

/// Key-wise union of member payloads: one distinct value stays scalar,
/// several become a list in member order.
inline Value combine_payloads(const std::vector<const TimeRange*>& members) {
    if (members.size() == 1) return members.front()->payload;
    std::map<std::string, std::vector<Value>> by_key;
    std::map<std::string, std::vector<std::string>> seen;
    for (const auto* m : members) {
        if (!m->payload.is_object()) continue;
        for (auto it = m->payload.begin(); it != m->payload.end(); ++it) {
            auto dump = canonical_dump(it.value());
            auto& s = seen[it.key()];
            if (std::find(s.begin(), s.end(), dump) != s.end()) continue;
            s.push_back(std::move(dump));
            by_key[it.key()].push_back(it.value());
        }
    }
    Value out = Value::object();
    for (auto& [k, vals] : by_key) out[k] = vals.size() == 1 ? vals.front() : Value(vals);
    return out;
}

}  // namespace detail

/// Merges ranges whose gap (next.t_start - current end) is <= tolerance.
/// The result is sorted and no two output ranges are mergeable.
inline std::vector<TimeRange> merge_temporal_segments(std::vector<TimeRange> ranges, double tolerance) {
    check_ranges(ranges);
    if (!(tolerance >= 0.0)) throw MetaError(MetaErrorKind::NegativeTolerance, -1, "");
    std::sort(ranges.begin(), ranges.end(), [](const TimeRange& a, const TimeRange& b) {
        if (a.t_start != b.t_start) return a.t_start < b.t_start;
        if (a.t_end != b.t_end) return a.t_end < b.t_end;
        return canonical_dump(a.payload) < canonical_dump(b.payload);
    });
    std::vector<TimeRange> out;
    std::vector<const TimeRange*> members;
    TimeRange cur;
    auto flush = [&] {
        cur.payload = detail::combine_payloads(members);
        out.push_back(cur);
        members.clear();
    };
    for (const auto& r : ranges) {
        if (!members.empty() && r.t_start - cur.t_end <= tolerance) {
            cur.t_end = std::max(cur.t_end, r.t_end);
            members.push_back(&r);
            continue;
        }
        if (!members.empty()) flush();
        cur = r;
        members.push_back(&r);
    }
    if (!members.empty()) flush();
    return out;
}

inline std::string count_key(const Value& v) { return v.is_string() ? v.get<std::string>() : canonical_dump(v); }

/// Multiset counts keyed by the item (or item[key]) rendered as text.
inline std::map<std::string, long> count_occurrences(const Value& items, const std::string& key = {}) {
    if (!items.is_array()) throw MetaError(MetaErrorKind::InvalidArgument, -1, "items must be a list");
    std::map<std::string, long> out;
    long i = 0;
    for (const auto& item : items) {
        if (key.empty()) {
            ++out[count_key(item)];
        } else {
            if (!item.is_object() || !item.contains(key)) throw MetaError(MetaErrorKind::MissingKey, i, key);
            ++out[count_key(item.at(key))];
        }
        ++i;
    }
    return out;
}

inline double numeric_field(const Value& item, const std::string& field, long index) {
    if (!item.is_object() || !item.contains(field)) throw MetaError(MetaErrorKind::MissingKey, index, field);
    const auto& v = item.at(field);
    if (!v.is_number()) throw MetaError(MetaErrorKind::NonNumericField, index, field);
    return v.get<double>();
}

enum class CompareOp { ge, le, gt, lt, eq };

inline std::optional<CompareOp> compare_op_from_string(std::string_view s) {
    if (s == ">=" || s == "≥") return CompareOp::ge;
    if (s == "<=" || s == "≤") return CompareOp::le;
    if (s == ">") return CompareOp::gt;
    if (s == "<") return CompareOp::lt;
    if (s == "=" || s == "==") return CompareOp::eq;
    return std::nullopt;
}

inline bool compare(double a, CompareOp op, double b) {
    switch (op) {
        case CompareOp::ge: return a >= b;
        case CompareOp::le: return a <= b;
        case CompareOp::gt: return a > b;
        case CompareOp::lt: return a < b;
        case CompareOp::eq: return a == b;
    }
    return false;
}

inline Value filter_threshold(const Value& items, const std::string& field, CompareOp op, double value) {
    if (!items.is_array()) throw MetaError(MetaErrorKind::InvalidArgument, -1, "items must be a list");
    Value out = Value::array();
    long i = 0;
    for (const auto& item : items) {
        if (compare(numeric_field(item, field, i), op, value)) out.push_back(item);
        ++i;
    }
    return out;
}

struct ScoreField {
    std::string name;
    double weight = 1.0;
};

/// Stable sort by the weighted field sum, highest first.
inline Value rerank_candidates(const Value& items, const std::vector<ScoreField>& fields) {
    if (!items.is_array()) throw MetaError(MetaErrorKind::InvalidArgument, -1, "items must be a list");
    for (const auto& f : fields) {
        if (!std::isfinite(f.weight)) throw MetaError(MetaErrorKind::InvalidArgument, -1, "weight must be finite");
    }
    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t i = 0; i < items.size(); ++i) {
        double s = 0.0;
        for (const auto& f : fields) s += f.weight * numeric_field(items[i], f.name, static_cast<long>(i));
        scored.emplace_back(s, i);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
    Value out = Value::array();
    for (auto [_, i] : scored) out.push_back(items[i]);
    return out;
}

/// Items whose `field` equals `value` under canonical comparison.
inline Value filter_by_value(const Value& items, const std::string& field, const Value& value) {
    if (!items.is_array()) throw MetaError(MetaErrorKind::InvalidArgument, -1, "items must be a list");
    Value out = Value::array();
    const auto want = canonical_dump(value);
    long i = 0;
    for (const auto& item : items) {
        if (!item.is_object() || !item.contains(field)) throw MetaError(MetaErrorKind::MissingKey, i, field);
        if (canonical_dump(item.at(field)) == want) out.push_back(item);
        ++i;
    }
    return out;
}

}  // namespace toolground::meta
