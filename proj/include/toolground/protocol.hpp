#pragma once

// Planner/resolver wire protocol.
//
// A message may open with a <think>...</think> block and free prose; it must
// end with one JSON object using the fields Thought, Plan, Evidence, Actions
// and Finish. Actions carry tool, description and params (plus an optional
// `output` pointer name the action's evidence is also bound to).

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "toolground/json_io.hpp"
#include "toolground/text.hpp"
#include "toolground/value.hpp"

namespace toolground {

struct ActionRequest {
    std::string tool_name;
    std::string description;
    Value params = Value::object();
    /// Pointer name declared by the issuer for this action's result.
    std::optional<std::string> output;

    bool operator==(const ActionRequest&) const = default;
};

struct FinishDirective {
    bool chain_complete = false;
    std::string completion_basis;
    std::string answer;

    bool operator==(const FinishDirective&) const = default;
};

enum class EvidenceStatus { exact, approximate, missing };

inline std::string_view to_string(EvidenceStatus s) {
    switch (s) {
        case EvidenceStatus::exact: return "exact";
        case EvidenceStatus::approximate: return "approximate";
        case EvidenceStatus::missing: return "missing";
    }
    return "missing";
}

struct EvidenceItem {
    std::string label;
    std::string value;
    std::string citation;
    EvidenceStatus status = EvidenceStatus::missing;

    bool operator==(const EvidenceItem&) const = default;
};

struct PlannerMessage {
    std::string thought;
    std::string plan;
    std::vector<EvidenceItem> evidence;
    std::vector<ActionRequest> actions;
    std::optional<FinishDirective> finish;
    std::string raw_text;

    /// Equality over the protocol content; raw_text is not compared.
    bool same_content(const PlannerMessage& o) const {
        return thought == o.thought && plan == o.plan && evidence == o.evidence && actions == o.actions &&
               finish == o.finish;
    }
};

struct ParseFailure {
    enum class Kind { no_json, malformed_json, schema_mismatch };
    Kind kind = Kind::no_json;
    std::string detail;

    std::string str() const {
        switch (kind) {
            case Kind::no_json: return "no_json";
            case Kind::malformed_json: return "malformed_json: " + detail;
            case Kind::schema_mismatch: return "schema_mismatch: " + detail;
        }
        return detail;
    }
};

using ParseResult = std::variant<PlannerMessage, ParseFailure>;

namespace detail {

/// Drops a leading <think>...</think> block (after optional whitespace).
inline std::string_view strip_think(std::string_view text) {
    auto b = text.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto rest = text.substr(b);
    if (!rest.starts_with("<think>")) return text;
    auto close = rest.find("</think>");
    if (close == std::string_view::npos) return {};
    return rest.substr(close + 8);
}

/// Scans from `start` (a '{') and returns the index of the brace closing it,
/// honouring JSON string escapes; npos when unbalanced.
inline std::size_t match_object(std::string_view s, std::size_t start) {
    int depth = 0;
    bool in_string = false;
    bool escaped = false;
    for (std::size_t i = start; i < s.size(); ++i) {
        const char c = s[i];
        if (in_string) {
            if (escaped) {
                escaped = false;
            } else if (c == '\\') {
                escaped = true;
            } else if (c == '"') {
                in_string = false;
            }
            continue;
        }
        if (c == '"') {
            in_string = true;
        } else if (c == '{') {
            ++depth;
        } else if (c == '}') {
            if (--depth == 0) return i;
        }
    }
    return std::string_view::npos;
}

}  // namespace detail

/// The last balanced top-level object in `text`: the outermost object that
/// closes at the final '}'. nullopt when the text holds no '{' at all.
inline std::optional<std::string_view> extract_trailing_object(std::string_view text, bool* unbalanced = nullptr) {
    if (unbalanced) *unbalanced = false;
    const auto last_close = text.rfind('}');
    if (text.find('{') == std::string_view::npos) return std::nullopt;
    if (last_close == std::string_view::npos) {
        if (unbalanced) *unbalanced = true;
        return std::nullopt;
    }
    for (std::size_t s = text.find('{'); s != std::string_view::npos && s < last_close; s = text.find('{', s + 1)) {
        if (detail::match_object(text, s) == last_close) return text.substr(s, last_close - s + 1);
    }
    if (unbalanced) *unbalanced = true;
    return std::nullopt;
}

namespace detail {

inline std::string text_field(const Value& v, std::string_view key) {
    if (!v.contains(std::string(key))) return {};
    const auto& f = v.at(std::string(key));
    if (f.is_string()) return f.get<std::string>();
    if (f.is_number() || f.is_boolean()) return canonical_dump(f);
    throw json_io::FormatError(std::string(key) + " must be a string");
}

inline ActionRequest action_from_json(const Value& j) {
    using namespace json_io;
    check_keys(j, {"tool", "description", "params", "output"}, "action");
    ActionRequest a;
    a.tool_name = get_string(j, "tool", "action");
    if (a.tool_name.empty()) throw FormatError("action: empty tool name");
    a.description = get_string_or(j, "description", "", "action");
    if (j.contains("params")) {
        a.params = j.at("params");
        if (a.params.is_null()) a.params = Value::object();
        if (!a.params.is_object()) throw FormatError("action: params must be an object");
    }
    if (j.contains("output")) {
        auto out = get_string(j, "output", "action");
        if (!is_pointer_name(out)) throw FormatError("action: output must be a $pointer name");
        a.output = std::move(out);
    }
    return a;
}

inline FinishDirective finish_from_json(const Value& j) {
    using namespace json_io;
    check_keys(j, {"chain_complete", "completion_basis", "answer"}, "Finish");
    FinishDirective f;
    const auto& cc = required(j, "chain_complete", "Finish");
    if (!cc.is_boolean()) throw FormatError("Finish: chain_complete must be a boolean");
    f.chain_complete = cc.get<bool>();
    f.completion_basis = text_field(j, "completion_basis");
    f.answer = text_field(j, "answer");
    return f;
}

inline EvidenceItem evidence_from_json(const Value& j) {
    using namespace json_io;
    check_keys(j, {"label", "value", "citation", "evidence_status"}, "Evidence");
    EvidenceItem e;
    e.label = text_field(j, "label");
    e.value = text_field(j, "value");
    e.citation = text_field(j, "citation");
    const auto st = get_string_or(j, "evidence_status", "missing", "Evidence");
    if (st == "exact") {
        e.status = EvidenceStatus::exact;
    } else if (st == "approximate") {
        e.status = EvidenceStatus::approximate;
    } else if (st == "missing") {
        e.status = EvidenceStatus::missing;
    } else {
        throw FormatError("Evidence: evidence_status must be exact|approximate|missing");
    }
    return e;
}

}  // namespace detail

inline Value to_json(const ActionRequest& a) {
    Value j = {{"tool", a.tool_name}, {"params", a.params}};
    if (!a.description.empty()) j["description"] = a.description;
    if (a.output) j["output"] = *a.output;
    return j;
}

inline ActionRequest action_from_json(const Value& j) { return detail::action_from_json(j); }

inline Value to_json(const FinishDirective& f) {
    return Value{{"chain_complete", f.chain_complete}, {"completion_basis", f.completion_basis}, {"answer", f.answer}};
}

inline Value to_json(const PlannerMessage& m) {
    Value j = {{"Thought", m.thought}, {"Plan", m.plan}, {"Actions", Value::array()}};
    if (!m.evidence.empty()) {
        Value ev = Value::array();
        for (const auto& e : m.evidence) {
            ev.push_back({{"label", e.label},
                          {"value", e.value},
                          {"citation", e.citation},
                          {"evidence_status", std::string(to_string(e.status))}});
        }
        j["Evidence"] = std::move(ev);
    }
    for (const auto& a : m.actions) j["Actions"].push_back(to_json(a));
    if (m.finish) j["Finish"] = to_json(*m.finish);
    return j;
}

/// Wire text of a message (the JSON object only, no think block).
inline std::string serialize_message(const PlannerMessage& m) { return to_json(m).dump(); }

inline ParseResult parse_planner_message(std::string_view text) {
    using Kind = ParseFailure::Kind;
    const auto body = detail::strip_think(text);
    bool unbalanced = false;
    auto obj_text = extract_trailing_object(body, &unbalanced);
    if (!obj_text) {
        if (unbalanced) return ParseFailure{Kind::malformed_json, "unbalanced braces"};
        return ParseFailure{Kind::no_json, "no JSON object found"};
    }
    Value j;
    try {
        j = Value::parse(*obj_text);
    } catch (const nlohmann::json::parse_error& e) {
        return ParseFailure{Kind::malformed_json, e.what()};
    }

    PlannerMessage m;
    m.raw_text = std::string(text);
    try {
        json_io::check_keys(j, {"Thought", "Plan", "Evidence", "Actions", "Finish"}, "message");
        m.thought = detail::text_field(j, "Thought");
        m.plan = detail::text_field(j, "Plan");
        if (j.contains("Evidence") && !j["Evidence"].is_null()) {
            if (!j["Evidence"].is_array()) throw json_io::FormatError("Evidence must be a list");
            for (const auto& e : j["Evidence"]) m.evidence.push_back(detail::evidence_from_json(e));
        }
        if (j.contains("Actions") && !j["Actions"].is_null()) {
            if (!j["Actions"].is_array()) throw json_io::FormatError("Actions must be a list");
            for (const auto& a : j["Actions"]) m.actions.push_back(detail::action_from_json(a));
        }
        if (j.contains("Finish") && !j["Finish"].is_null()) m.finish = detail::finish_from_json(j["Finish"]);
    } catch (const json_io::FormatError& e) {
        return ParseFailure{Kind::schema_mismatch, e.what()};
    } catch (const nlohmann::json::exception& e) {
        return ParseFailure{Kind::schema_mismatch, e.what()};
    }
    if (!m.actions.empty() && m.finish) {
        return ParseFailure{Kind::schema_mismatch, "exclusivity: non-empty Actions together with Finish"};
    }
    return m;
}

// ---- termination -------------------------------------------------------------

enum class ProtocolViolation { resolver_finish, incomplete_finish };

inline std::string_view to_string(ProtocolViolation v) {
    return v == ProtocolViolation::resolver_finish ? "resolver_finish" : "incomplete_finish";
}

struct TerminationCheck {
    bool accepted = true;
    std::optional<ProtocolViolation> violation;
};

/// Only the root may finish, and only with chain_complete=true and an answer.
/// Messages without Finish are accepted (they simply continue).
inline TerminationCheck validate_termination(const PlannerMessage& msg, bool is_root) {
    if (!msg.finish) return {};
    if (!is_root) return {false, ProtocolViolation::resolver_finish};
    if (!msg.finish->chain_complete || text::trim(msg.finish->answer).empty()) {
        return {false, ProtocolViolation::incomplete_finish};
    }
    return {};
}

// ---- result pointers -----------------------------------------------------------

struct Provenance {
    int round = 0;
    std::string tool_name;
};

/// Pointer bindings. A store may layer over a parent; lookups fall through.
/// Writes happen at round boundaries from a single thread; reads may be concurrent.
class ResultStore {
public:
    ResultStore() = default;
    explicit ResultStore(const ResultStore* parent) : parent_(parent) {}

    void bind(const std::string& name, Value value, Provenance prov) {
        if (!is_pointer_name(name)) throw std::invalid_argument("not a pointer name: " + name);
        bindings_[name] = std::move(value);
        provenance_[name] = std::move(prov);
    }

    const Value* get(std::string_view name) const {
        if (auto it = bindings_.find(name); it != bindings_.end()) return &it->second;
        return parent_ ? parent_->get(name) : nullptr;
    }
    bool contains(std::string_view name) const { return get(name) != nullptr; }

    const Provenance* provenance(std::string_view name) const {
        if (auto it = provenance_.find(name); it != provenance_.end()) return &it->second;
        return parent_ ? parent_->provenance(name) : nullptr;
    }

    /// Own bindings only (not the parent's).
    const std::map<std::string, Value, std::less<>>& bindings() const { return bindings_; }
    const std::map<std::string, Provenance, std::less<>>& provenances() const { return provenance_; }

    /// Copies this layer's bindings into `target`.
    void commit_into(ResultStore& target) const {
        for (const auto& [k, v] : bindings_) target.bind(k, v, provenance_.at(k));
    }

private:
    const ResultStore* parent_ = nullptr;
    std::map<std::string, Value, std::less<>> bindings_;
    std::map<std::string, Provenance, std::less<>> provenance_;
};

inline void collect_pointers(const Value& v, std::set<std::string>& out) {
    if (is_pointer(v)) {
        out.insert(v.get<std::string>());
    } else if (v.is_array() || v.is_object()) {
        for (const auto& c : v) collect_pointers(c, out);
    }
}

inline std::set<std::string> collect_pointers(const Value& v) {
    std::set<std::string> out;
    collect_pointers(v, out);
    return out;
}

struct UnresolvedPointer {
    std::vector<std::string> names;
};

using ResolveResult = std::variant<Value, UnresolvedPointer>;

namespace detail {
inline Value substitute(const Value& v, const ResultStore& store, std::set<std::string>& missing) {
    if (is_pointer(v)) {
        const auto& name = v.get_ref<const std::string&>();
        if (const auto* bound = store.get(name)) return *bound;
        missing.insert(name);
        return v;
    }
    if (v.is_array()) {
        Value out = Value::array();
        for (const auto& e : v) out.push_back(substitute(e, store, missing));
        return out;
    }
    if (v.is_object()) {
        Value out = Value::object();
        for (auto it = v.begin(); it != v.end(); ++it) out[it.key()] = substitute(it.value(), store, missing);
        return out;
    }
    return v;
}
}  // namespace detail

/// Replaces every bound pointer, recursively. The store is never modified.
inline ResolveResult resolve_pointers(const Value& params, const ResultStore& store) {
    std::set<std::string> missing;
    Value out = detail::substitute(params, store, missing);
    if (!missing.empty()) return UnresolvedPointer{{missing.begin(), missing.end()}};
    return out;
}

/// Runtime-minted pointer for the k-th action (or child path) of a round.
inline std::string mint_pointer(std::string_view tool_name, int round, std::string_view index_path) {
    std::string name = "$";
    for (char c : tool_name) {
        const bool ok = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
        name.push_back(ok ? c : '_');
    }
    name += "_r" + std::to_string(round) + "_" + std::string(index_path);
    return name;
}

}  // namespace toolground
