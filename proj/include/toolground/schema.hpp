#pragma once

// Argument schemas for registered tools, plus validation and bounded repair.
//
// Repair is mechanical on purpose: it drops fields the schema does not name,
// fills declared defaults for absent optional fields, and coerces
// integer<->real and numeric strings. It never invents a value for a
// required field. Alias rewriting belongs to the resolver.

#include <charconv>
#include <optional>
#include <regex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "toolground/json_io.hpp"
#include "toolground/value.hpp"

namespace toolground {

enum class ValueKind { boolean, integer, real, string, time_seconds, time_range, list, record, pointer, any };

inline std::string_view to_string(ValueKind k) {
    switch (k) {
        case ValueKind::boolean: return "boolean";
        case ValueKind::integer: return "integer";
        case ValueKind::real: return "real";
        case ValueKind::string: return "string";
        case ValueKind::time_seconds: return "time_seconds";
        case ValueKind::time_range: return "time_range";
        case ValueKind::list: return "list";
        case ValueKind::record: return "record";
        case ValueKind::pointer: return "pointer";
        case ValueKind::any: return "any";
    }
    return "?";
}

inline std::optional<ValueKind> value_kind_from_string(std::string_view s) {
    for (auto k : {ValueKind::boolean, ValueKind::integer, ValueKind::real, ValueKind::string, ValueKind::time_seconds,
                   ValueKind::time_range, ValueKind::list, ValueKind::record, ValueKind::pointer, ValueKind::any}) {
        if (to_string(k) == s) return k;
    }
    return std::nullopt;
}

/// Name of the JSON shape a value actually has, in ValueKind vocabulary.
inline std::string observed_kind(const Value& v) {
    if (is_pointer(v)) return "pointer";
    if (v.is_boolean()) return "boolean";
    if (v.is_number_integer()) return "integer";
    if (v.is_number()) return "real";
    if (v.is_string()) return "string";
    if (v.is_array()) return "list";
    if (v.is_object()) return "record";
    return "null";
}

struct FieldConstraints {
    std::optional<double> min;
    std::optional<double> max;
    std::optional<std::string> pattern;
    std::vector<Value> one_of;

    bool empty() const { return !min && !max && !pattern && one_of.empty(); }
};

struct FieldSpec {
    std::string name;
    ValueKind kind = ValueKind::string;
    bool required = false;
    std::optional<Value> default_value;
    FieldConstraints constraints;
    std::string description;
};

/// Ordered argument contract of one tool.
struct ParamSchema {
    std::vector<FieldSpec> fields;

    const FieldSpec* find(std::string_view name) const {
        for (const auto& f : fields) {
            if (f.name == name) return &f;
        }
        return nullptr;
    }
    bool has_required(std::string_view name) const {
        const auto* f = find(name);
        return f != nullptr && f->required;
    }
};

inline bool conforms(ValueKind kind, const Value& v) {
    switch (kind) {
        case ValueKind::boolean: return v.is_boolean();
        case ValueKind::integer: return v.is_number_integer();
        case ValueKind::real: return v.is_number();
        case ValueKind::string: return v.is_string();
        case ValueKind::time_seconds: return v.is_number() && v.get<double>() >= 0.0;
        case ValueKind::time_range: {
            double s = 0, e = 0;
            if (v.is_array() && v.size() == 2 && v[0].is_number() && v[1].is_number()) {
                s = v[0].get<double>();
                e = v[1].get<double>();
            } else if (v.is_object() && v.contains("t_start") && v.contains("t_end") && v["t_start"].is_number() &&
                       v["t_end"].is_number()) {
                s = v["t_start"].get<double>();
                e = v["t_end"].get<double>();
            } else {
                return false;
            }
            return s >= 0.0 && s <= e;
        }
        case ValueKind::list: return v.is_array();
        case ValueKind::record: return v.is_object();
        case ValueKind::pointer: return is_pointer(v);
        case ValueKind::any: return true;
    }
    return false;
}

/// Empty string when `v` satisfies the constraints, otherwise a reason.
inline std::string constraint_problem(const FieldConstraints& c, const Value& v) {
    if (v.is_number()) {
        const double d = v.get<double>();
        if (c.min && d < *c.min) return "below minimum " + format_number(*c.min);
        if (c.max && d > *c.max) return "above maximum " + format_number(*c.max);
    }
    if (c.pattern && v.is_string()) {
        if (!std::regex_match(v.get<std::string>(), std::regex(*c.pattern))) return "does not match pattern " + *c.pattern;
    }
    if (!c.one_of.empty()) {
        bool found = false;
        for (const auto& allowed : c.one_of) found = found || semantically_equal(allowed, v);
        if (!found) return "not one of the allowed values";
    }
    return {};
}

enum class ValidationStatus { valid, repaired, invalid };

inline std::string_view to_string(ValidationStatus s) {
    switch (s) {
        case ValidationStatus::valid: return "valid";
        case ValidationStatus::repaired: return "repaired";
        case ValidationStatus::invalid: return "invalid";
    }
    return "?";
}

struct Coercion {
    std::string field;
    std::string from_kind;
    std::string to_kind;
    bool operator==(const Coercion&) const = default;
};

struct ValidationReport {
    ValidationStatus status = ValidationStatus::invalid;
    std::vector<std::string> missing;
    std::vector<std::string> unsupported;
    std::vector<Coercion> coerced;
    /// Fields present with a nonconforming kind or violating a constraint.
    std::vector<std::string> mismatched;
    std::optional<Value> repaired_args;

    bool usable() const { return status != ValidationStatus::invalid; }
};

/// Pointer values conform to every kind; they are resolved before execution.
inline ValidationReport validate_args(const ParamSchema& schema, const Value& args) {
    ValidationReport r;
    const Value obj = args.is_null() ? Value::object() : args;
    if (!obj.is_object()) {
        r.mismatched.push_back("<args>");
        return r;
    }
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (schema.find(it.key()) == nullptr) r.unsupported.push_back(it.key());
    }
    for (const auto& f : schema.fields) {
        auto it = obj.find(f.name);
        if (it == obj.end()) {
            if (f.required) r.missing.push_back(f.name);
            continue;
        }
        if (is_pointer(*it)) continue;
        if (!conforms(f.kind, *it) || !constraint_problem(f.constraints, *it).empty()) r.mismatched.push_back(f.name);
    }
    if (r.missing.empty() && r.unsupported.empty() && r.mismatched.empty()) {
        r.status = ValidationStatus::valid;
        r.repaired_args = obj;
    }
    return r;
}

namespace detail {

inline std::optional<double> parse_numeric_string(const std::string& s) {
    if (s.empty()) return std::nullopt;
    double d = 0;
    const char* first = s.data();
    const char* last = s.data() + s.size();
    if (*first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, d);
    if (ec != std::errc() || ptr != last || !std::isfinite(d)) return std::nullopt;
    return d;
}

/// Applies the coercion whitelist; nullopt when no whitelisted coercion fits.
inline std::optional<Value> coerce(ValueKind target, const Value& v) {
    const bool numeric_target =
        target == ValueKind::integer || target == ValueKind::real || target == ValueKind::time_seconds;
    if (!numeric_target) return std::nullopt;
    std::optional<double> d;
    if (v.is_number()) d = v.get<double>();
    if (v.is_string()) d = parse_numeric_string(v.get<std::string>());
    if (!d) return std::nullopt;
    if (target == ValueKind::integer) {
        if (std::floor(*d) != *d || std::fabs(*d) > 9.0e15) return std::nullopt;
        return Value(static_cast<std::int64_t>(*d));
    }
    return Value(*d);
}

}  // namespace detail

inline ValidationReport repair_args(const ParamSchema& schema, const Value& args) {
    Value obj = args.is_null() ? Value::object() : args;
    if (!obj.is_object()) return validate_args(schema, obj);

    bool changed = false;
    std::vector<std::string> dropped;
    std::vector<Coercion> coerced;

    for (auto it = obj.begin(); it != obj.end();) {
        if (schema.find(it.key()) == nullptr) {
            dropped.push_back(it.key());
            it = obj.erase(it);
            changed = true;
        } else {
            ++it;
        }
    }
    for (const auto& f : schema.fields) {
        auto it = obj.find(f.name);
        if (it == obj.end()) {
            if (!f.required && f.default_value) {
                obj[f.name] = *f.default_value;
                changed = true;
            }
            continue;
        }
        if (is_pointer(*it) || conforms(f.kind, *it)) continue;
        if (auto c = detail::coerce(f.kind, *it); c && conforms(f.kind, *c)) {
            coerced.push_back({f.name, observed_kind(*it), std::string(to_string(f.kind))});
            *it = *c;
            changed = true;
        }
    }

    ValidationReport r = validate_args(schema, obj);
    r.unsupported = std::move(dropped);
    r.coerced = std::move(coerced);
    r.repaired_args = obj;
    if (r.missing.empty() && r.mismatched.empty()) {
        r.status = changed ? ValidationStatus::repaired : ValidationStatus::valid;
        if (r.status == ValidationStatus::valid) {
            r.unsupported.clear();
            r.coerced.clear();
        }
    } else {
        r.status = ValidationStatus::invalid;
    }
    return r;
}

// ---- JSON form ---------------------------------------------------------------

inline Value to_json(const FieldConstraints& c) {
    Value j = Value::object();
    if (c.min) j["min"] = *c.min;
    if (c.max) j["max"] = *c.max;
    if (c.pattern) j["pattern"] = *c.pattern;
    if (!c.one_of.empty()) j["one_of"] = c.one_of;
    return j;
}

inline Value to_json(const ParamSchema& s) {
    Value fields = Value::array();
    for (const auto& f : s.fields) {
        Value jf = {{"name", f.name}, {"kind", std::string(to_string(f.kind))}, {"required", f.required}};
        if (f.default_value) jf["default"] = *f.default_value;
        if (!f.constraints.empty()) jf["constraints"] = to_json(f.constraints);
        if (!f.description.empty()) jf["description"] = f.description;
        fields.push_back(std::move(jf));
    }
    return Value{{"fields", fields}};
}

inline ParamSchema param_schema_from_json(const Value& j, std::string_view what) {
    using namespace json_io;
    check_keys(j, {"fields"}, what);
    ParamSchema s;
    const auto& fields = required(j, "fields", what);
    if (!fields.is_array()) throw FormatError(std::string(what) + ": fields must be a list");
    for (const auto& jf : fields) {
        check_keys(jf, {"name", "kind", "required", "default", "constraints", "description"}, what);
        FieldSpec f;
        f.name = get_string(jf, "name", what);
        const auto kind = get_string(jf, "kind", what);
        auto k = value_kind_from_string(kind);
        if (!k) throw FormatError(std::string(what) + ": unknown value kind '" + kind + "'");
        f.kind = *k;
        f.required = get_bool_or(jf, "required", false, what);
        if (jf.contains("default")) f.default_value = jf.at("default");
        f.description = get_string_or(jf, "description", "", what);
        if (jf.contains("constraints")) {
            const auto& jc = jf.at("constraints");
            check_keys(jc, {"min", "max", "pattern", "one_of"}, what);
            if (jc.contains("min")) f.constraints.min = get_number(jc, "min", what);
            if (jc.contains("max")) f.constraints.max = get_number(jc, "max", what);
            if (jc.contains("pattern")) f.constraints.pattern = get_string(jc, "pattern", what);
            if (jc.contains("one_of")) {
                if (!jc.at("one_of").is_array()) throw FormatError(std::string(what) + ": one_of must be a list");
                for (const auto& v : jc.at("one_of")) f.constraints.one_of.push_back(v);
            }
        }
        s.fields.push_back(std::move(f));
    }
    return s;
}

/// Empty when the schema is well formed; otherwise the first problem found.
inline std::string schema_problem(const ParamSchema& s) {
    for (std::size_t i = 0; i < s.fields.size(); ++i) {
        const auto& f = s.fields[i];
        if (f.name.empty()) return "field with empty name";
        for (std::size_t j = 0; j < i; ++j) {
            if (s.fields[j].name == f.name) return "duplicate field '" + f.name + "'";
        }
        if (f.required && f.default_value) return "required field '" + f.name + "' has a default";
        if (f.default_value) {
            if (!conforms(f.kind, *f.default_value)) return "default of '" + f.name + "' does not match its kind";
            if (auto p = constraint_problem(f.constraints, *f.default_value); !p.empty())
                return "default of '" + f.name + "' " + p;
        }
        if (f.constraints.pattern) {
            try {
                std::regex re(*f.constraints.pattern);
            } catch (const std::regex_error&) {
                return "field '" + f.name + "' has an invalid pattern";
            }
        }
    }
    return {};
}

}  // namespace toolground
