#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

namespace toolground {

/// Tool arguments, evidence payloads and wire-format fragments. Records keep
/// their keys sorted, which makes every dump of a Value deterministic.
using Value = nlohmann::json;

/// `$` followed by a nonempty identifier ([A-Za-z0-9_]+).
inline bool is_pointer_name(std::string_view s) {
    if (s.size() < 2 || s.front() != '$') return false;
    for (char c : s.substr(1)) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
        if (!ok) return false;
    }
    return true;
}

inline bool is_pointer(const Value& v) {
    return v.is_string() && is_pointer_name(v.get_ref<const std::string&>());
}

inline bool contains_pointer(const Value& v) {
    if (is_pointer(v)) return true;
    if (v.is_array() || v.is_object()) {
        for (const auto& child : v) {
            if (contains_pointer(child)) return true;
        }
    }
    return false;
}

inline bool is_numeric(const Value& v) { return v.is_number(); }

/// Canonical number form: integral reals become integers, -0 becomes 0.
/// Non-integral reals keep their value and dump in shortest round-trip form.
inline Value canonicalize(const Value& v) {
    if (v.is_number_float()) {
        const double d = v.get<double>();
        if (std::isfinite(d) && std::floor(d) == d && std::fabs(d) < 9.0e15) {
            return Value(static_cast<std::int64_t>(d));
        }
        return v;
    }
    if (v.is_number_unsigned()) {
        const auto u = v.get<std::uint64_t>();
        if (u <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
            return Value(static_cast<std::int64_t>(u));
        }
        return v;
    }
    if (v.is_array()) {
        Value out = Value::array();
        for (const auto& e : v) out.push_back(canonicalize(e));
        return out;
    }
    if (v.is_object()) {
        Value out = Value::object();
        for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = canonicalize(it.value());
        return out;
    }
    return v;
}

/// Byte-stable serialization: sorted keys, canonical numbers, no whitespace.
inline std::string canonical_dump(const Value& v) { return canonicalize(v).dump(); }

inline bool semantically_equal(const Value& a, const Value& b) { return canonical_dump(a) == canonical_dump(b); }

/// Shortest decimal text for a number ("5", "12.5").
inline std::string format_number(double d) { return canonical_dump(Value(d)); }

/// Numeric view of a Value; throws std::invalid_argument for non-numbers.
inline double as_number(const Value& v) {
    if (!v.is_number()) throw std::invalid_argument("expected a number, got " + std::string(v.type_name()));
    return v.get<double>();
}

}  // namespace toolground
