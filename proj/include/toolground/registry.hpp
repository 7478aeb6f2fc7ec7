#pragma once

// Tool registry: every independently callable entry is one tool, even when
// several entries share an executor binding. A registry is built during setup,
// frozen, and then only read (concurrent readers need no coordination).

#include <algorithm>
#include <array>
#include <cstdlib>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "toolground/json_io.hpp"
#include "toolground/schema.hpp"
#include "toolground/value.hpp"

namespace toolground {

enum class ToolKind { base, meta };
enum class Exposure { planner_visible, runtime_internal };

inline std::string_view to_string(ToolKind k) { return k == ToolKind::base ? "base" : "meta"; }
inline std::string_view to_string(Exposure e) {
    return e == Exposure::planner_visible ? "planner_visible" : "runtime_internal";
}

inline constexpr std::array<std::string_view, 5> kBaseCategories = {
    "Retrieval/Search", "Visual/Video", "Audio/Speech", "Execution/Coding", "Memory/System"};

inline constexpr std::array<std::string_view, 8> kMetaCategories = {
    "Ranking", "Aggregation", "Temporal/Window", "Math", "Text", "Filtering", "Grouping", "Sampling/Thresholding"};

inline bool is_category_of(ToolKind kind, std::string_view category) {
    if (kind == ToolKind::base) {
        return std::find(kBaseCategories.begin(), kBaseCategories.end(), category) != kBaseCategories.end();
    }
    return std::find(kMetaCategories.begin(), kMetaCategories.end(), category) != kMetaCategories.end();
}

/// Expected return structure. `shape` is one of list, record, string, number,
/// any; `required_fields` must be present on the record (or on every list item).
struct OutputSchema {
    std::string shape = "any";
    std::vector<std::string> required_fields;
};

inline bool output_conforms(const OutputSchema& s, const Value& v) {
    auto has_fields = [&](const Value& rec) {
        if (!rec.is_object()) return s.required_fields.empty();
        return std::all_of(s.required_fields.begin(), s.required_fields.end(),
                           [&](const std::string& f) { return rec.contains(f); });
    };
    if (s.shape == "any") return !v.is_discarded();
    if (s.shape == "list") {
        if (!v.is_array()) return false;
        return std::all_of(v.begin(), v.end(), has_fields);
    }
    if (s.shape == "record") return v.is_object() && has_fields(v);
    if (s.shape == "string") return v.is_string();
    if (s.shape == "number") return v.is_number();
    return false;
}

/// Closed predicate language over world state.
struct Availability {
    enum class Kind { always, requires_modality, requires_index };
    Kind kind = Kind::always;
    std::string argument;

    std::string str() const {
        switch (kind) {
            case Kind::always: return "always";
            case Kind::requires_modality: return "requires_modality(" + argument + ")";
            case Kind::requires_index: return "requires_index(" + argument + ")";
        }
        return "always";
    }

    static std::optional<Availability> parse(std::string_view s) {
        if (s == "always") return Availability{};
        for (auto [prefix, kind] : {std::pair{std::string_view("requires_modality("), Kind::requires_modality},
                                    std::pair{std::string_view("requires_index("), Kind::requires_index}}) {
            if (s.starts_with(prefix) && s.ends_with(")") && s.size() > prefix.size() + 1) {
                return Availability{kind, std::string(s.substr(prefix.size(), s.size() - prefix.size() - 1))};
            }
        }
        return std::nullopt;
    }
};

/// What the current world offers; derived from a loaded world or hand-built.
struct AvailabilityContext {
    std::set<std::string> modalities;
    std::set<std::string> indexes;
};

/// Empty when available, otherwise the unmet requirement ("modality", "index").
inline std::string unavailable_reason(const Availability& a, const AvailabilityContext& ctx) {
    switch (a.kind) {
        case Availability::Kind::always: return {};
        case Availability::Kind::requires_modality: return ctx.modalities.contains(a.argument) ? "" : "modality";
        case Availability::Kind::requires_index: return ctx.indexes.contains(a.argument) ? "" : "index";
    }
    return {};
}

struct RuntimeConstraints {
    double timeout = 30.0;
    long long max_retries = 0;
    long long budget_cost = 1;
    bool deterministic = true;
};

struct ToolSpec {
    std::string name;
    std::string description;
    std::vector<std::string> tags;
    ToolKind kind = ToolKind::base;
    std::string category;
    ParamSchema input_schema;
    OutputSchema output_schema;
    Availability availability;
    RuntimeConstraints constraints;
    Exposure exposure = Exposure::planner_visible;
    std::string binding;
};

enum class RegistryErrorKind { ParseError, DuplicateName, InvalidSpec, Frozen };

inline std::string_view to_string(RegistryErrorKind k) {
    switch (k) {
        case RegistryErrorKind::ParseError: return "ParseError";
        case RegistryErrorKind::DuplicateName: return "DuplicateName";
        case RegistryErrorKind::InvalidSpec: return "InvalidSpec";
        case RegistryErrorKind::Frozen: return "Frozen";
    }
    return "?";
}

class RegistryError : public std::runtime_error {
public:
    RegistryError(RegistryErrorKind kind, std::string entry, const std::string& detail)
        : std::runtime_error(std::string(to_string(kind)) + (entry.empty() ? "" : " [" + entry + "]") + ": " + detail),
          kind_(kind),
          entry_(std::move(entry)) {}

    RegistryErrorKind kind() const { return kind_; }
    const std::string& entry() const { return entry_; }

private:
    RegistryErrorKind kind_;
    std::string entry_;
};

/// Empty when `spec` satisfies every ToolSpec invariant.
inline std::string spec_problem(const ToolSpec& spec) {
    if (spec.name.empty()) return "empty name";
    if (!is_category_of(spec.kind, spec.category)) {
        return "category '" + spec.category + "' is not a " + std::string(to_string(spec.kind)) + " category";
    }
    if (!(spec.constraints.timeout > 0.0)) return "timeout must be > 0";
    if (spec.constraints.max_retries < 0) return "max_retries must be >= 0";
    if (spec.constraints.budget_cost < 0) return "budget_cost must be >= 0";
    if (spec.binding.empty()) return "empty binding";
    if (auto p = schema_problem(spec.input_schema); !p.empty()) return "input_schema: " + p;
    static const std::set<std::string, std::less<>> kShapes = {"any", "list", "record", "string", "number"};
    if (!kShapes.contains(spec.output_schema.shape)) return "unknown output shape '" + spec.output_schema.shape + "'";
    return {};
}

struct ToolFilter {
    std::optional<ToolKind> kind;
    std::optional<std::string> category;
};

/// Absence is a value: unknown name, or known but unavailable with a reason.
struct LookupResult {
    enum class Absence { none, unknown_name, unavailable };
    const ToolSpec* spec = nullptr;
    Absence absence = Absence::none;
    std::string reason;

    explicit operator bool() const { return spec != nullptr && absence == Absence::none; }
};

class ToolRegistry {
public:
    void register_tool(ToolSpec spec) {
        if (frozen_) throw RegistryError(RegistryErrorKind::Frozen, spec.name, "registry is frozen");
        if (auto p = spec_problem(spec); !p.empty()) throw RegistryError(RegistryErrorKind::InvalidSpec, spec.name, p);
        if (entries_.contains(spec.name)) {
            throw RegistryError(RegistryErrorKind::DuplicateName, spec.name, "name already registered");
        }
        auto name = spec.name;
        entries_.emplace(std::move(name), std::move(spec));
    }

    void freeze() { frozen_ = true; }
    bool frozen() const { return frozen_; }

    const ToolSpec* find(std::string_view name) const {
        auto it = entries_.find(name);
        return it == entries_.end() ? nullptr : &it->second;
    }

    LookupResult lookup(std::string_view name, const AvailabilityContext& ctx) const {
        const auto* spec = find(name);
        if (spec == nullptr) return {nullptr, LookupResult::Absence::unknown_name, "unknown_name"};
        if (auto why = unavailable_reason(spec->availability, ctx); !why.empty()) {
            return {spec, LookupResult::Absence::unavailable, why};
        }
        return {spec, LookupResult::Absence::none, {}};
    }

    std::size_t count(const ToolFilter& filter = {}) const {
        return static_cast<std::size_t>(std::count_if(entries_.begin(), entries_.end(), [&](const auto& kv) {
            const auto& s = kv.second;
            if (filter.kind && s.kind != *filter.kind) return false;
            if (filter.category && s.category != *filter.category) return false;
            return true;
        }));
    }

    /// Entries in name order.
    std::vector<const ToolSpec*> entries() const {
        std::vector<const ToolSpec*> out;
        out.reserve(entries_.size());
        for (const auto& [_, s] : entries_) out.push_back(&s);
        return out;
    }

    std::size_t size() const { return entries_.size(); }

private:
    std::map<std::string, ToolSpec, std::less<>> entries_;
    bool frozen_ = false;
};

inline std::size_t count_tools(const ToolRegistry& r, const ToolFilter& filter = {}) { return r.count(filter); }

// ---- manifest I/O ------------------------------------------------------------

inline Value to_json(const ToolSpec& s) {
    Value out_schema = {{"shape", s.output_schema.shape}};
    if (!s.output_schema.required_fields.empty()) out_schema["required_fields"] = s.output_schema.required_fields;
    return Value{{"name", s.name},
                 {"description", s.description},
                 {"tags", s.tags},
                 {"kind", std::string(to_string(s.kind))},
                 {"category", s.category},
                 {"input_schema", to_json(s.input_schema)},
                 {"output_schema", out_schema},
                 {"availability", s.availability.str()},
                 {"constraints",
                  {{"timeout", s.constraints.timeout},
                   {"max_retries", s.constraints.max_retries},
                   {"budget_cost", s.constraints.budget_cost},
                   {"deterministic", s.constraints.deterministic}}},
                 {"exposure", std::string(to_string(s.exposure))},
                 {"binding", s.binding}};
}

/// Parses one manifest entry; format problems are reported as FormatError.
inline ToolSpec tool_spec_from_json(const Value& j) {
    using namespace json_io;
    const std::string what = j.is_object() && j.contains("name") && j["name"].is_string()
                                 ? "tool '" + j["name"].get<std::string>() + "'"
                                 : std::string("tool entry");
    check_keys(j, {"name", "description", "tags", "kind", "category", "input_schema", "output_schema", "availability",
                   "constraints", "exposure", "binding"},
               what);
    ToolSpec s;
    s.name = get_string(j, "name", what);
    s.description = get_string(j, "description", what);
    const auto& tags = required(j, "tags", what);
    if (!tags.is_array()) throw FormatError(what + ": tags must be a list");
    for (const auto& t : tags) {
        if (!t.is_string()) throw FormatError(what + ": tags must be strings");
        s.tags.push_back(t.get<std::string>());
    }
    const auto kind = get_string(j, "kind", what);
    if (kind == "base") {
        s.kind = ToolKind::base;
    } else if (kind == "meta") {
        s.kind = ToolKind::meta;
    } else {
        throw FormatError(what + ": kind must be base or meta");
    }
    s.category = get_string(j, "category", what);
    s.input_schema = param_schema_from_json(required(j, "input_schema", what), what);

    const auto& jo = required(j, "output_schema", what);
    check_keys(jo, {"shape", "required_fields"}, what);
    s.output_schema.shape = get_string(jo, "shape", what);
    if (jo.contains("required_fields")) {
        for (const auto& f : jo.at("required_fields")) {
            if (!f.is_string()) throw FormatError(what + ": required_fields must be strings");
            s.output_schema.required_fields.push_back(f.get<std::string>());
        }
    }

    const auto avail = get_string(j, "availability", what);
    auto a = Availability::parse(avail);
    if (!a) throw FormatError(what + ": unknown availability predicate '" + avail + "'");
    s.availability = *a;

    const auto& jc = required(j, "constraints", what);
    check_keys(jc, {"timeout", "max_retries", "budget_cost", "deterministic"}, what);
    s.constraints.timeout = get_number(jc, "timeout", what);
    s.constraints.max_retries = get_integer(jc, "max_retries", what);
    s.constraints.budget_cost = get_integer(jc, "budget_cost", what);
    s.constraints.deterministic = get_bool_or(jc, "deterministic", true, what);

    const auto exposure = get_string(j, "exposure", what);
    if (exposure == "planner_visible") {
        s.exposure = Exposure::planner_visible;
    } else if (exposure == "runtime_internal") {
        s.exposure = Exposure::runtime_internal;
    } else {
        throw FormatError(what + ": unknown exposure '" + exposure + "'");
    }
    s.binding = get_string(j, "binding", what);
    return s;
}

/// Builds a frozen registry from manifest text `{"tools": [...]}`.
inline ToolRegistry parse_manifest(std::string_view text) {
    Value doc;
    try {
        doc = Value::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw RegistryError(RegistryErrorKind::ParseError, "", e.what());
    }
    ToolRegistry reg;
    try {
        json_io::check_keys(doc, {"tools", "about"}, "manifest");
        const auto& tools = json_io::required(doc, "tools", "manifest");
        if (!tools.is_array()) throw json_io::FormatError("manifest: tools must be a list");
        for (const auto& entry : tools) {
            ToolSpec spec;
            try {
                spec = tool_spec_from_json(entry);
            } catch (const json_io::FormatError& e) {
                const std::string name =
                    entry.is_object() && entry.contains("name") && entry["name"].is_string() ? entry["name"].get<std::string>() : "";
                throw RegistryError(RegistryErrorKind::ParseError, name, e.what());
            }
            reg.register_tool(std::move(spec));
        }
    } catch (const json_io::FormatError& e) {
        throw RegistryError(RegistryErrorKind::ParseError, "", e.what());
    }
    reg.freeze();
    return reg;
}

inline ToolRegistry load_manifest(const std::string& path) {
    std::string text;
    try {
        text = json_io::read_file(path);
    } catch (const std::runtime_error& e) {
        throw RegistryError(RegistryErrorKind::ParseError, "", e.what());
    }
    return parse_manifest(text);
}

inline Value manifest_to_json(const ToolRegistry& r) {
    Value tools = Value::array();
    for (const auto* s : r.entries()) tools.push_back(to_json(*s));
    return Value{{"tools", tools}};
}

/// Default manifest path: $TOOLGROUND_MANIFEST, else the shipped data file.
inline std::string default_manifest_path() {
    if (const char* env = std::getenv("TOOLGROUND_MANIFEST"); env != nullptr && *env != '\0') return env;
#ifdef TOOLGROUND_DATA_DIR
    return std::string(TOOLGROUND_DATA_DIR) + "/default_manifest.json";
#else
    return "data/default_manifest.json";
#endif
}

}  // namespace toolground
