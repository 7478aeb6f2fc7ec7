#pragma once

// Deterministic resolver policy driven by a rule table.
//
// Rule file:
//   {
//     "aliases": {"time_range_start": "t_start", ...},
//     "compatibility": {"intent_words": [...], "excluded_categories": [...]},
//     "rules": [
//       {"match": {"tool": "...", "description_contains": [...], "goal_contains": [...]},
//        "mode": "rewrite" | "substitute" | "decompose",
//        "tool": "...", "params": {...}, "children": [...], "reply": "..."}
//     ]
//   }
//
// Templates: a string that is exactly "{{x}}" becomes the typed value of x;
// placeholders inside longer strings are spliced as text. Names: params.<path>,
// item.<path> (inside for_each), goal, description, subject, index.

#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "toolground/json_io.hpp"
#include "toolground/protocol.hpp"
#include "toolground/registry.hpp"
#include "toolground/resolver.hpp"
#include "toolground/router.hpp"
#include "toolground/schema.hpp"
#include "toolground/text.hpp"

namespace toolground {

struct RuleMatch {
    std::optional<std::string> tool;
    std::vector<std::string> description_contains;
    std::vector<std::string> goal_contains;
};

enum class RuleMode { rewrite, substitute, decompose };

struct ResolverRule {
    RuleMatch match;
    RuleMode mode = RuleMode::rewrite;
    std::optional<std::string> tool;
    Value params;
    Value children;
    std::optional<std::string> reply;
};

struct Compatibility {
    /// Words that mark a request as looking at or searching the video.
    std::set<std::string> intent_words = {"find",   "when",    "where",  "see",    "seen",   "look",  "show",
                                          "shown",  "visible", "appear", "appears", "search", "locate", "watch",
                                          "video",  "clip",    "frame",  "scene",  "happen", "happens", "occur",
                                          "occurs", "moment",  "spot",   "detect", "inspect", "identify"};
    /// Categories never substituted for such requests.
    std::set<std::string> excluded_categories = {"Execution/Coding"};
};

struct RuleTable {
    std::map<std::string, std::string> aliases = {
        {"time_range_start", "t_start"}, {"time_range_end", "t_end"}, {"start", "t_start"},
        {"end", "t_end"},                {"start_time", "t_start"},   {"end_time", "t_end"},
        {"frame_count", "density"},      {"timestamp", "t"},          {"time", "t"},
        {"question", "query"},           {"text", "query"},           {"top_k", "k"},
        {"num_results", "k"},            {"list", "items"},           {"segments", "ranges"},
        {"windows", "ranges"},           {"gap", "tolerance"},        {"threshold", "value"}};
    Compatibility compatibility;
    std::vector<ResolverRule> rules;
};

namespace detail {

inline std::vector<std::string> string_list(const Value& j, std::string_view key, std::string_view what) {
    std::vector<std::string> out;
    if (!j.contains(std::string(key))) return out;
    const auto& v = j.at(std::string(key));
    if (!v.is_array()) throw json_io::FormatError(std::string(what) + ": " + std::string(key) + " must be a list");
    for (const auto& e : v) {
        if (!e.is_string()) throw json_io::FormatError(std::string(what) + ": " + std::string(key) + " entries must be strings");
        out.push_back(e.get<std::string>());
    }
    return out;
}

}  // namespace detail

inline RuleTable rule_table_from_json(const Value& j) {
    using namespace json_io;
    require_object(j, "rule table");
    check_keys(j, {"about", "aliases", "compatibility", "rules"}, "rule table");
    RuleTable t;
    if (j.contains("aliases")) {
        require_object(j["aliases"], "aliases");
        for (auto it = j["aliases"].begin(); it != j["aliases"].end(); ++it) {
            if (!it->is_string()) throw FormatError("aliases: values must be strings");
            t.aliases[it.key()] = it->get<std::string>();
        }
    }
    if (j.contains("compatibility")) {
        const auto& c = j["compatibility"];
        check_keys(c, {"intent_words", "excluded_categories"}, "compatibility");
        if (c.contains("intent_words")) {
            auto w = detail::string_list(c, "intent_words", "compatibility");
            t.compatibility.intent_words = {w.begin(), w.end()};
        }
        if (c.contains("excluded_categories")) {
            auto w = detail::string_list(c, "excluded_categories", "compatibility");
            t.compatibility.excluded_categories = {w.begin(), w.end()};
        }
    }
    if (j.contains("rules")) {
        if (!j["rules"].is_array()) throw FormatError("rules must be a list");
        for (const auto& r : j["rules"]) {
            check_keys(r, {"about", "match", "mode", "tool", "params", "children", "reply"}, "rule");
            ResolverRule rule;
            const auto& m = required(r, "match", "rule");
            check_keys(m, {"tool", "description_contains", "goal_contains"}, "rule.match");
            if (m.contains("tool")) rule.match.tool = get_string(m, "tool", "rule.match");
            rule.match.description_contains = detail::string_list(m, "description_contains", "rule.match");
            rule.match.goal_contains = detail::string_list(m, "goal_contains", "rule.match");
            const auto mode = get_string(r, "mode", "rule");
            if (mode == "rewrite") {
                rule.mode = RuleMode::rewrite;
            } else if (mode == "substitute") {
                rule.mode = RuleMode::substitute;
            } else if (mode == "decompose") {
                rule.mode = RuleMode::decompose;
            } else {
                throw FormatError("rule: mode must be rewrite|substitute|decompose");
            }
            if (r.contains("tool")) rule.tool = get_string(r, "tool", "rule");
            if (r.contains("params")) {
                rule.params = r["params"];
                require_object(rule.params, "rule.params");
            }
            if (r.contains("children")) {
                rule.children = r["children"];
                if (!rule.children.is_array()) throw FormatError("rule: children must be a list");
            }
            if (r.contains("reply")) rule.reply = get_string(r, "reply", "rule");
            if (rule.mode == RuleMode::decompose && !rule.reply && rule.children.is_null()) {
                throw FormatError("rule: decompose needs children or reply");
            }
            t.rules.push_back(std::move(rule));
        }
    }
    return t;
}

inline RuleTable load_rule_table(const std::string& path) {
    return rule_table_from_json(json_io::parse_text(json_io::read_file(path), path));
}

// ---- templates ---------------------------------------------------------------------

class TemplateMissing : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct TemplateScope {
    Value params = Value::object();
    std::optional<Value> item;
    std::string goal;
    std::string description;
    long long index = 0;
};

namespace detail {

inline const Value* walk(const Value& root, std::string_view path) {
    const Value* cur = &root;
    while (!path.empty()) {
        const auto dot = path.find('.');
        const auto key = std::string(path.substr(0, dot));
        path = dot == std::string_view::npos ? std::string_view{} : path.substr(dot + 1);
        if (cur->is_object()) {
            auto it = cur->find(key);
            if (it == cur->end()) return nullptr;
            cur = &*it;
        } else if (cur->is_array() && !key.empty() && std::all_of(key.begin(), key.end(), ::isdigit)) {
            const auto idx = std::stoul(key);
            if (idx >= cur->size()) return nullptr;
            cur = &(*cur)[idx];
        } else {
            return nullptr;
        }
    }
    return cur;
}

inline Value lookup_placeholder(std::string_view name, const TemplateScope& scope) {
    name = std::string_view(name).substr(name.find_first_not_of(' '));
    name = name.substr(0, name.find_last_not_of(' ') + 1);
    if (name == "goal") return scope.goal;
    if (name == "description") return scope.description;
    if (name == "index") return scope.index;
    if (name == "subject") {
        auto s = text::subject_phrase(scope.description);
        if (s.empty()) s = text::subject_phrase(scope.goal);
        if (s.empty()) throw TemplateMissing("no subject text");
        return s;
    }
    if (name == "item" || name.starts_with("item.")) {
        if (!scope.item) throw TemplateMissing("item used outside for_each");
        const auto* v = name == "item" ? &*scope.item : walk(*scope.item, name.substr(5));
        if (v == nullptr) throw TemplateMissing(std::string(name));
        return *v;
    }
    if (name == "params" || name.starts_with("params.")) {
        const auto* v = name == "params" ? &scope.params : walk(scope.params, name.substr(7));
        if (v == nullptr) throw TemplateMissing(std::string(name));
        return *v;
    }
    throw TemplateMissing("unknown placeholder " + std::string(name));
}

}  // namespace detail

/// Expands placeholders recursively; throws TemplateMissing for absent values.
inline Value expand_template(const Value& tmpl, const TemplateScope& scope) {
    if (tmpl.is_string()) {
        const auto& s = tmpl.get_ref<const std::string&>();
        if (s.starts_with("{{") && s.ends_with("}}") && s.find("{{", 2) == std::string::npos) {
            return detail::lookup_placeholder(std::string_view(s).substr(2, s.size() - 4), scope);
        }
        std::string out;
        std::size_t pos = 0;
        while (true) {
            const auto open = s.find("{{", pos);
            if (open == std::string::npos) break;
            const auto close = s.find("}}", open + 2);
            if (close == std::string::npos) break;
            out += s.substr(pos, open - pos);
            const auto v = detail::lookup_placeholder(std::string_view(s).substr(open + 2, close - open - 2), scope);
            out += v.is_string() ? v.get<std::string>() : canonical_dump(v);
            pos = close + 2;
        }
        out += s.substr(pos);
        return out;
    }
    if (tmpl.is_array()) {
        Value out = Value::array();
        for (const auto& e : tmpl) out.push_back(expand_template(e, scope));
        return out;
    }
    if (tmpl.is_object()) {
        Value out = Value::object();
        for (auto it = tmpl.begin(); it != tmpl.end(); ++it) out[it.key()] = expand_template(it.value(), scope);
        return out;
    }
    return tmpl;
}

// ---- rule matching -------------------------------------------------------------------

inline bool rule_matches(const RuleMatch& m, const ActionRequest& action, std::string_view goal) {
    if (m.tool && text::to_lower(*m.tool) != text::to_lower(action.tool_name)) return false;
    const auto desc = text::to_lower(action.description);
    for (const auto& w : m.description_contains) {
        if (desc.find(text::to_lower(w)) == std::string::npos) return false;
    }
    const auto g = text::to_lower(goal);
    for (const auto& w : m.goal_contains) {
        if (g.find(text::to_lower(w)) == std::string::npos) return false;
    }
    return true;
}

inline const ResolverRule* find_rule(const RuleTable& t, RuleMode mode, const ActionRequest& action,
                                     std::string_view goal) {
    for (const auto& r : t.rules) {
        if (r.mode == mode && rule_matches(r.match, action, goal)) return &r;
    }
    return nullptr;
}

// ---- grounding helpers --------------------------------------------------------------

/// Renames aliased keys to the candidate's field names, drops unsupported
/// fields, fills a missing required free-text field from the description or
/// goal, and returns the result only if it validates. Defaults are left to
/// the executor, so already-valid params come back unchanged.
inline std::optional<ActionRequest> repair_parameters(const ActionRequest& action, const ToolSpec& candidate,
                                                      const RuleTable& table, std::string_view goal = {}) {
    const auto& schema = candidate.input_schema;
    Value params = action.params.is_object() ? action.params : Value::object();
    Value renamed = Value::object();
    for (auto it = params.begin(); it != params.end(); ++it) {
        std::string key = it.key();
        if (schema.find(key) == nullptr) {
            auto a = table.aliases.find(key);
            if (a == table.aliases.end() || schema.find(a->second) == nullptr || params.contains(a->second)) continue;
            key = a->second;
        }
        if (!renamed.contains(key)) renamed[key] = it.value();
    }
    static const std::set<std::string, std::less<>> kFreeText = {"query", "label", "entity", "question"};
    for (const auto& f : schema.fields) {
        if (!f.required || renamed.contains(f.name) || f.kind != ValueKind::string || !kFreeText.contains(f.name)) continue;
        auto s = text::subject_phrase(action.description);
        if (s.empty()) s = text::subject_phrase(goal);
        if (s.empty()) return std::nullopt;
        renamed[f.name] = s;
    }
    auto report = repair_args(schema, renamed);
    if (!report.usable()) return std::nullopt;
    Value out = *report.repaired_args;
    for (const auto& f : schema.fields) {
        if (!renamed.contains(f.name)) out.erase(f.name);
    }
    return ActionRequest{candidate.name, action.description, out, action.output};
}

/// True when the request reads as looking at or searching the video.
inline bool has_visual_intent(const ActionRequest& action, std::string_view goal, const Compatibility& c) {
    for (const auto& src : {std::string_view(action.tool_name), std::string_view(action.description), goal}) {
        for (const auto& t : text::tokenize(src)) {
            if (c.intent_words.contains(t)) return true;
        }
    }
    return false;
}

inline bool compatible(const ToolSpec& spec, bool visual_intent, const Compatibility& c) {
    if (!visual_intent) return true;
    if (spec.kind == ToolKind::meta) return false;
    return !c.excluded_categories.contains(spec.category);
}

/// First candidate (in routing order) that is not banned, is compatible with
/// the request's intent, and accepts the repaired parameters.
inline std::optional<ActionRequest> substitute_tool(const ActionRequest& action, const std::vector<RouteCandidate>& candidates,
                                                    const std::set<std::string>& banned, const RuleTable& table,
                                                    std::string_view goal = {}) {
    const bool visual = has_visual_intent(action, goal, table.compatibility);
    for (const auto& c : candidates) {
        if (banned.contains(c.tool->name) || !compatible(*c.tool, visual, table.compatibility)) continue;
        if (auto r = repair_parameters(action, *c.tool, table, goal)) return r;
    }
    return std::nullopt;
}

namespace detail {

/// Splits a composite request into clauses at commas, semicolons, "and" and "then".
inline std::vector<std::string> split_clauses(std::string_view s) {
    std::vector<std::string> parts;
    std::string cur;
    auto flush = [&] {
        auto t = text::trim(cur);
        if (!t.empty()) parts.push_back(t);
        cur.clear();
    };
    const auto words = [&] {
        std::vector<std::string> w;
        std::string token;
        for (char c : s) {
            if (c == ',' || c == ';') {
                if (!token.empty()) w.push_back(token);
                token.clear();
                w.emplace_back(",");
            } else if (c == ' ' || c == '\t' || c == '\n') {
                if (!token.empty()) w.push_back(token);
                token.clear();
            } else {
                token.push_back(c);
            }
        }
        if (!token.empty()) w.push_back(token);
        return w;
    }();
    for (const auto& w : words) {
        const auto lw = text::to_lower(w);
        if (lw == "," || lw == "and" || lw == "then") {
            flush();
            continue;
        }
        cur += (cur.empty() ? "" : " ") + w;
    }
    flush();
    return parts;
}

inline std::string child_name(std::string_view clause) {
    std::string name = "Check";
    int n = 0;
    for (const auto& t : text::tokenize(text::subject_phrase(clause))) {
        if (++n > 4) break;
        std::string w = t;
        w[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(w[0])));
        name += "_" + w;
    }
    return name;
}

}  // namespace detail

/// Children for an action: the first matching decompose rule, otherwise one
/// child per clause of the description (grounded to a concrete tool when the
/// clause routes to a compatible one, abstract otherwise). Fewer than two
/// children means the action cannot be decomposed.
inline std::vector<ActionRequest> decompose_action(const ResolutionRequest& req, const RuleTable& table,
                                                   const ToolRegistry* registry = nullptr,
                                                   const AvailabilityContext* availability = nullptr) {
    std::vector<ActionRequest> out;
    if (const auto* rule = find_rule(table, RuleMode::decompose, req.action, req.goal); rule && !rule->children.is_null()) {
        TemplateScope scope;
        scope.params = req.action.params;
        scope.goal = req.goal;
        scope.description = req.action.description;
        try {
            for (const auto& child : rule->children) {
                json_io::check_keys(child, {"tool", "description", "params", "output", "for_each"}, "rule child");
                std::vector<std::optional<Value>> items;
                if (child.contains("for_each")) {
                    const auto list = expand_template(child["for_each"], scope);
                    if (!list.is_array()) throw TemplateMissing("for_each needs a list");
                    for (const auto& e : list) items.emplace_back(e);
                } else {
                    items.emplace_back(std::nullopt);
                }
                long long idx = 0;
                for (const auto& item : items) {
                    TemplateScope s = scope;
                    s.item = item;
                    s.index = idx++;
                    Value expanded = expand_template(child, s);
                    expanded.erase("for_each");
                    out.push_back(action_from_json(expanded));
                }
            }
        } catch (const TemplateMissing&) {
            return {};
        } catch (const json_io::FormatError&) {
            return {};
        }
        return out;
    }

    const auto clauses = detail::split_clauses(req.action.description);
    if (clauses.size() < 2) return out;
    for (const auto& clause : clauses) {
        ActionRequest child{detail::child_name(clause), clause, Value::object(), std::nullopt};
        const auto subject = text::subject_phrase(clause);
        if (subject.empty()) return {};
        child.params["query"] = subject;
        if (registry != nullptr) {
            std::vector<RouteCandidate> usable;
            for (auto& c : search_tools(*registry, RouteQuery{child.tool_name, clause, {}}, 8)) {
                if (availability && !unavailable_reason(c.tool->availability, *availability).empty()) continue;
                usable.push_back(std::move(c));
            }
            if (auto grounded = substitute_tool(child, usable, req.banned_tools, table, clause)) child = *grounded;
        }
        out.push_back(std::move(child));
    }
    return out;
}

// ---- the policy -----------------------------------------------------------------------

inline std::string wire_reply(std::string thought, std::string plan, const std::vector<ActionRequest>& actions) {
    PlannerMessage m;
    m.thought = std::move(thought);
    m.plan = std::move(plan);
    m.actions = actions;
    return serialize_message(m);
}

class RuleTablePolicy final : public ResolverPolicy {
public:
    explicit RuleTablePolicy(RuleTable table = {}) : table_(std::move(table)) {}

    const RuleTable& table() const { return table_; }

    std::string respond(const ResolverPrompt& p) override {
        switch (p.mode) {
            case ResolutionLevel::L2: return rewrite(p);
            case ResolutionLevel::L3: return substitute(p);
            case ResolutionLevel::L4: return decompose(p);
            default: return give_up("no such mode");
        }
    }

private:
    static std::string give_up(const std::string& why) { return wire_reply(why, "give up", {}); }

    std::string rewrite(const ResolverPrompt& p) {
        if (p.target == nullptr) return give_up("no target tool");
        const auto* rule = find_rule(table_, RuleMode::rewrite, p.action, p.goal);
        if (rule && rule->reply) return *rule->reply;
        ActionRequest action = p.action;
        if (rule && rule->params.is_object()) {
            try {
                const auto extra = expand_template(rule->params, scope_for(p));
                for (auto it = extra.begin(); it != extra.end(); ++it) action.params[it.key()] = it.value();
            } catch (const TemplateMissing& e) {
                return give_up(e.what());
            }
        }
        auto fixed = repair_parameters(action, *p.target, table_, p.goal);
        if (!fixed) return give_up("a required value is missing");
        return wire_reply("aliases mapped onto the target schema", "rewrite", {*fixed});
    }

    std::string substitute(const ResolverPrompt& p) {
        if (find_rule(table_, RuleMode::decompose, p.action, p.goal) != nullptr) {
            return give_up("a single tool cannot cover this action");
        }
        if (const auto* rule = find_rule(table_, RuleMode::substitute, p.action, p.goal)) {
            if (rule->reply) return *rule->reply;
            const ToolSpec* spec = (rule->tool && p.registry) ? p.registry->find(*rule->tool) : nullptr;
            if (spec != nullptr && !p.banned.contains(spec->name)) {
                ActionRequest action = p.action;
                if (rule->params.is_object()) {
                    try {
                        action.params = expand_template(rule->params, scope_for(p));
                    } catch (const TemplateMissing& e) {
                        return give_up(e.what());
                    }
                }
                if (auto fixed = repair_parameters(action, *spec, table_, p.goal)) {
                    return wire_reply("rule substitution", "substitute", {*fixed});
                }
            }
        }
        auto pick = substitute_tool(p.action, p.candidates, p.banned, table_, p.goal);
        if (!pick) return give_up("no compatible candidate");
        return wire_reply("closest compatible candidate", "substitute", {*pick});
    }

    std::string decompose(const ResolverPrompt& p) {
        if (const auto* rule = find_rule(table_, RuleMode::decompose, p.action, p.goal); rule && rule->reply) {
            return *rule->reply;
        }
        ResolutionRequest req;
        req.action = p.action;
        req.goal = p.goal;
        req.parent_context = p.parent_context;
        req.depth = p.depth;
        req.banned_tools = p.banned;
        auto children = decompose_action(req, table_, p.registry, p.availability);
        if (children.size() < 2) return give_up("cannot split this action");
        return wire_reply("split into child actions", "decompose", children);
    }

    static TemplateScope scope_for(const ResolverPrompt& p) {
        TemplateScope s;
        s.params = p.action.params;
        s.goal = p.goal;
        s.description = p.action.description;
        return s;
    }

    RuleTable table_;
};

}  // namespace toolground
