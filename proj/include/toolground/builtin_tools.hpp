#pragma once

// Executor bindings for every tool in the shipped manifest.

#include <cctype>
#include <cmath>
#include <string>
#include <string_view>

#include "toolground/executor.hpp"
#include "toolground/metatools.hpp"
#include "toolground/router.hpp"
#include "toolground/simenv.hpp"
#include "toolground/table_ops.hpp"
#include "toolground/text.hpp"

namespace toolground {

namespace builtin {

/// Arithmetic over numbers with + - * / % ** and parentheses, plus
/// abs, min, max, round, sqrt, floor, ceil.
class Expression {
public:
    explicit Expression(std::string_view src) : s_(src) {}

    double evaluate() {
        const double v = sum();
        skip();
        if (pos_ != s_.size()) fail("unexpected '" + std::string(1, s_[pos_]) + "'");
        return v;
    }

private:
    [[noreturn]] void fail(const std::string& why) { throw ToolError(FailureKind::SchemaError, "expression: " + why); }

    void skip() {
        while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    }

    bool eat(std::string_view tok) {
        skip();
        if (s_.substr(pos_, tok.size()) == tok) {
            pos_ += tok.size();
            return true;
        }
        return false;
    }

    double sum() {
        double v = product();
        while (true) {
            if (eat("+")) {
                v += product();
            } else if (eat("-")) {
                v -= product();
            } else {
                return v;
            }
        }
    }

    double product() {
        double v = unary();
        while (true) {
            skip();
            if (s_.substr(pos_, 2) == "**") return v;
            if (eat("*")) {
                v *= unary();
            } else if (eat("//")) {
                const double d = unary();
                if (d == 0) fail("division by zero");
                v = std::floor(v / d);
            } else if (eat("/")) {
                const double d = unary();
                if (d == 0) fail("division by zero");
                v /= d;
            } else if (eat("%")) {
                const double d = unary();
                if (d == 0) fail("modulo by zero");
                v = v - d * std::floor(v / d);
            } else {
                return v;
            }
        }
    }

    double unary() {
        if (eat("-")) return -unary();
        if (eat("+")) return unary();
        return power();
    }

    double power() {
        const double base = atom();
        if (eat("**")) return std::pow(base, unary());
        return base;
    }

    double atom() {
        skip();
        if (eat("(")) {
            const double v = sum();
            if (!eat(")")) fail("missing ')'");
            return v;
        }
        if (pos_ < s_.size() && std::isalpha(static_cast<unsigned char>(s_[pos_]))) {
            std::string name;
            while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) name += s_[pos_++];
            if (!eat("(")) fail("unknown name '" + name + "'");
            std::vector<double> args;
            if (!eat(")")) {
                do {
                    args.push_back(sum());
                } while (eat(","));
                if (!eat(")")) fail("missing ')'");
            }
            return call(name, args);
        }
        const auto start = pos_;
        while (pos_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '.')) ++pos_;
        if (start == pos_) fail(pos_ < s_.size() ? "unexpected '" + std::string(1, s_[pos_]) + "'" : "unexpected end");
        try {
            std::size_t used = 0;
            const auto text = std::string(s_.substr(start, pos_ - start));
            const double v = std::stod(text, &used);
            if (used != text.size()) fail("bad number");
            return v;
        } catch (const std::logic_error&) {
            fail("bad number");
        }
    }

    double call(const std::string& name, const std::vector<double>& a) {
        auto need = [&](std::size_t n) {
            if (a.size() != n) fail(name + " takes " + std::to_string(n) + " argument(s)");
        };
        if (name == "abs") return need(1), std::fabs(a[0]);
        if (name == "sqrt") {
            need(1);
            if (a[0] < 0) fail("sqrt of a negative number");
            return std::sqrt(a[0]);
        }
        if (name == "round") return need(1), std::nearbyint(a[0]);
        if (name == "floor") return need(1), std::floor(a[0]);
        if (name == "ceil") return need(1), std::ceil(a[0]);
        if (name == "min" || name == "max") {
            if (a.empty()) fail(name + " needs arguments");
            return name == "min" ? *std::min_element(a.begin(), a.end()) : *std::max_element(a.begin(), a.end());
        }
        fail("unknown function '" + name + "'");
    }

    std::string_view s_;
    std::size_t pos_ = 0;
};

inline const sim::Environment& env_of(const ToolContext& ctx) {
    if (ctx.env == nullptr) throw ToolError(FailureKind::UnavailableTool, "no environment loaded");
    return *ctx.env;
}

inline double num(const Value& args, const char* key, double fallback) {
    auto it = args.find(key);
    return it == args.end() || it->is_null() ? fallback : as_number(*it);
}

inline std::string str(const Value& args, const char* key) {
    auto it = args.find(key);
    return it == args.end() || !it->is_string() ? std::string() : it->get<std::string>();
}

inline Value window_bounds(const sim::SyntheticWorld& w, const Value& args) {
    return Value{{"t_start", num(args, "t_start", 0.0)}, {"t_end", num(args, "t_end", w.duration)}};
}

inline Value labels_json(const std::vector<std::string>& labels) {
    Value out = Value::array();
    for (const auto& l : labels) out.push_back(l);
    return out;
}

}  // namespace builtin

inline ExecutorTable default_executor_table() {
    using namespace builtin;
    ExecutorTable t;

    // retrieval
    t.bind("sim.temporal_retrieval", [](const ToolContext& ctx, const Value& a) {
        Value out = Value::array();
        for (const auto& h : sim::temporal_retrieval(env_of(ctx).world, str(a, "query"), static_cast<long>(num(a, "k", 5))))
            out.push_back(to_json(h));
        return out;
    });
    t.bind("sim.segment_retrieval", [](const ToolContext& ctx, const Value& a) {
        const auto& env = env_of(ctx);
        auto cfg = env.config;
        cfg.grounding_k = static_cast<std::size_t>(num(a, "k", 3));
        auto block = sim::build_grounding_block(env.segments, str(a, "query"), cfg);
        Value out = Value::array();
        for (const auto& s : block.segments) {
            if (s.score <= 0) continue;
            auto j = sim::to_json(s.segment);
            j["score"] = s.score;
            out.push_back(canonicalize(j));
        }
        return out;
    });
    t.bind("sim.transcript_search", [](const ToolContext& ctx, const Value& a) {
        const auto& w = env_of(ctx).world;
        const auto q = text::content_set(str(a, "query"));
        Value out = Value::array();
        for (const auto& u : w.transcript_units) {
            if (text::coverage(q, text::content_set(u.text)) > 0) {
                out.push_back(canonicalize(Value{{"t_start", u.t_start}, {"t_end", u.t_end}, {"text", u.text}}));
            }
        }
        return out;
    });
    t.bind("sim.caption_search", [](const ToolContext& ctx, const Value& a) {
        const auto q = text::content_set(str(a, "query"));
        Value out = Value::array();
        for (const auto& s : env_of(ctx).segments) {
            if (text::coverage(q, text::content_set(s.caption)) > 0) {
                out.push_back(canonicalize(Value{{"segment", s.id}, {"t_start", s.t_start}, {"t_end", s.t_end}, {"caption", s.caption}}));
            }
        }
        return out;
    });
    t.bind("sim.event_lookup", [](const ToolContext& ctx, const Value& a) {
        const auto& env = env_of(ctx);
        Value out = Value::array();
        for (const auto& e : env.world.events) {
            if (sim::label_match(str(a, "label"), e.label) >= env.config.match_threshold) out.push_back(sim::event_json(e));
        }
        return out;
    });
    t.bind("sim.frame_retrieval", [](const ToolContext& ctx, const Value& a) {
        const auto& env = env_of(ctx);
        const double step = num(a, "interval", 1.0);
        if (!(step > 0)) throw ToolError(FailureKind::SchemaError, "interval must be positive");
        const auto query = str(a, "query");
        std::vector<double> hits;
        for (long i = 0; static_cast<double>(i) * step <= env.world.duration; ++i) {
            const double t = static_cast<double>(i) * step;
            for (const auto& l : env.world.frame_truth(t)) {
                if (sim::label_match(query, l) >= env.config.match_threshold) {
                    hits.push_back(t);
                    break;
                }
            }
        }
        Value out = Value::array();
        for (auto i : meta::table::even_indices(hits.size(), static_cast<std::size_t>(num(a, "k", 8)))) {
            out.push_back(canonicalize(Value{{"t", hits[i]}, {"frame_ref", sim::frame_ref(env.world, hits[i])}}));
        }
        return out;
    });
    t.bind("external.unavailable", [](const ToolContext& ctx, const Value&) -> Value {
        throw ToolError(FailureKind::UnavailableTool, ctx.spec->name + " has no backing service");
    });

    // visual
    t.bind("sim.clip_qa", [](const ToolContext& ctx, const Value& a) {
        const auto& env = env_of(ctx);
        return sim::clip_qa_json(env.world, num(a, "t_start", 0), num(a, "t_end", 0), str(a, "query"), env.config);
    });
    t.bind("sim.inspect_frame", [](const ToolContext& ctx, const Value& a) {
        auto v = sim::inspect_frame(env_of(ctx).world, num(a, "t", 0));
        return Value{{"labels", labels_json(v.labels)}, {"frame_ref", v.frame_ref}};
    });
    t.bind("sim.crop", [](const ToolContext& ctx, const Value& a) {
        auto v = sim::inspect_frame(env_of(ctx).world, num(a, "t", 0));
        return Value{{"labels", labels_json(v.labels)}, {"frame_ref", v.frame_ref + "#" + str(a, "region")}, {"region", str(a, "region")}};
    });
    t.bind("sim.zoom", [](const ToolContext& ctx, const Value& a) {
        const auto& w = env_of(ctx).world;
        const double at = num(a, "t", 0);
        auto v = sim::inspect_frame(w, at);
        Value attrs = Value::array();
        for (const auto& e : w.events) {
            if (e.t_start <= at && at < e.t_end && !e.attributes.empty()) attrs.push_back(e.attributes);
        }
        return canonicalize(Value{{"labels", labels_json(v.labels)},
                                  {"frame_ref", v.frame_ref},
                                  {"factor", num(a, "factor", 2.0)},
                                  {"attributes", attrs}});
    });
    t.bind("sim.object_detection", [](const ToolContext& ctx, const Value& a) {
        const auto& w = env_of(ctx).world;
        const double at = num(a, "t", 0);
        auto v = sim::inspect_frame(w, at);
        std::set<std::string> objects;
        for (const auto& l : v.labels) {
            for (const auto& tok : text::content_tokens(l)) objects.insert(tok);
        }
        Value out = Value::array();
        for (const auto& o : objects) out.push_back(canonicalize(Value{{"object", o}, {"t", at}}));
        return out;
    });
    t.bind("sim.ocr", [](const ToolContext& ctx, const Value& a) {
        const auto& w = env_of(ctx).world;
        const auto win = window_bounds(w, a);
        Value out = Value::array();
        for (const auto& e : w.events) {
            if (!sim::overlaps(win["t_start"].get<double>(), win["t_end"].get<double>(), e.t_start, e.t_end)) continue;
            if (auto it = e.attributes.find("text"); it != e.attributes.end()) {
                out.push_back(canonicalize(Value{{"t_start", e.t_start}, {"t_end", e.t_end}, {"text", *it}}));
            }
        }
        return out;
    });
    t.bind("sim.scene_changes", [](const ToolContext& ctx, const Value&) {
        Value out = Value::array();
        for (double c : sim::scene_changes(env_of(ctx).world)) out.push_back(canonicalize(Value(c)));
        return out;
    });

    // audio
    t.bind("sim.asr", [](const ToolContext& ctx, const Value& a) {
        const auto& w = env_of(ctx).world;
        const auto win = window_bounds(w, a);
        Value out = Value::array();
        for (const auto* u : sim::transcript_window(w, win["t_start"].get<double>(), win["t_end"].get<double>())) {
            out.push_back(canonicalize(Value{{"t_start", u->t_start}, {"t_end", u->t_end}, {"text", u->text}}));
        }
        return out;
    });
    t.bind("sim.audio_events", [](const ToolContext& ctx, const Value& a) {
        const auto& w = env_of(ctx).world;
        const auto win = window_bounds(w, a);
        Value out = Value::array();
        for (const auto& e : w.events) {
            if (!sim::overlaps(win["t_start"].get<double>(), win["t_end"].get<double>(), e.t_start, e.t_end)) continue;
            if (auto it = e.attributes.find("sound"); it != e.attributes.end()) {
                out.push_back(canonicalize(Value{{"t_start", e.t_start}, {"t_end", e.t_end}, {"sound", *it}}));
            }
        }
        return out;
    });
    t.bind("sim.diarization", [](const ToolContext& ctx, const Value&) {
        Value out = Value::array();
        for (const auto& u : env_of(ctx).world.transcript_units) {
            if (!u.speaker.empty()) {
                out.push_back(canonicalize(Value{{"t_start", u.t_start}, {"t_end", u.t_end}, {"speaker", u.speaker}}));
            }
        }
        return out;
    });
    t.bind("sim.audio_qa", [](const ToolContext& ctx, const Value& a) {
        const auto& env = env_of(ctx);
        const auto win = window_bounds(env.world, a);
        const auto q = text::content_set(str(a, "query"));
        std::string heard;
        for (const auto* u : sim::transcript_window(env.world, win["t_start"].get<double>(), win["t_end"].get<double>())) {
            heard += (heard.empty() ? "" : " ") + u->text;
        }
        const double c = text::coverage(q, text::content_set(heard));
        return canonicalize(Value{{"verdict", c >= env.config.match_threshold ? "yes" : "no"}, {"confidence", c}, {"transcript", heard}});
    });

    // execution
    t.bind("exec.python", [](const ToolContext&, const Value& a) {
        const double r = Expression(str(a, "code")).evaluate();
        if (!std::isfinite(r)) throw ToolError(FailureKind::InvalidOutput, "result is not finite");
        return canonicalize(Value{{"result", r}});
    });
    t.bind("exec.calculator", [](const ToolContext&, const Value& a) {
        const double x = num(a, "a", 0), y = num(a, "b", 0);
        const auto op = str(a, "op");
        double r = 0;
        if (op == "+") {
            r = x + y;
        } else if (op == "-") {
            r = x - y;
        } else if (op == "*") {
            r = x * y;
        } else if (op == "/") {
            if (y == 0) throw ToolError(FailureKind::SchemaError, "division by zero");
            r = x / y;
        } else {
            throw ToolError(FailureKind::SchemaError, "unknown operator '" + op + "'");
        }
        return canonicalize(Value{{"result", r}});
    });
    t.bind("exec.format_time", [](const ToolContext&, const Value& a) {
        return Value(meta::table::format_timestamp(num(a, "seconds", 0)));
    });

    // runtime internal
    t.bind("runtime.tool_search", [](const ToolContext& ctx, const Value& a) {
        if (ctx.registry == nullptr) throw ToolError(FailureKind::UnavailableTool, "no registry attached");
        Value out = Value::array();
        for (const auto& c : search_tools(*ctx.registry, {"", str(a, "query"), {}}, static_cast<std::size_t>(num(a, "k", 5)))) {
            out.push_back(canonicalize(Value{{"name", c.tool->name}, {"score", c.score}}));
        }
        return out;
    });
    t.bind("runtime.context_compression", [](const ToolContext&, const Value& a) {
        const auto& items = a.at("items");
        const auto keep = static_cast<std::size_t>(num(a, "max_items", 5));
        Value kept = Value::array();
        for (std::size_t i = items.size() > keep ? items.size() - keep : 0; i < items.size(); ++i) kept.push_back(items[i]);
        return Value{{"kept", kept}, {"dropped", static_cast<long>(items.size() - kept.size())}};
    });
    t.bind("runtime.exception_recovery", [](const ToolContext&, const Value& a) {
        const auto kind = failure_kind_from_string(str(a, "failure"));
        if (!kind) throw ToolError(FailureKind::SchemaError, "unknown failure kind");
        std::string advice;
        switch (*kind) {
            case FailureKind::SchemaError: advice = "rewrite_parameters"; break;
            case FailureKind::MissingArgument: advice = "supply_missing_arguments"; break;
            case FailureKind::UnavailableTool: advice = "substitute_tool"; break;
            case FailureKind::EmptyResult: advice = "ban_tool_and_substitute"; break;
            case FailureKind::InvalidOutput: advice = "retry_once_then_substitute"; break;
            case FailureKind::BudgetViolation: advice = "stop_and_report"; break;
        }
        return Value{{"failure", to_string(*kind)}, {"advice", advice}};
    });

    // meta
    t.bind("meta.sort_time_ranges", [](const ToolContext&, const Value& a) {
        return meta::to_value(meta::sort_time_ranges(meta::ranges_from_value(a.at("ranges"))));
    });
    t.bind("meta.merge_temporal_segments", [](const ToolContext&, const Value& a) {
        return meta::to_value(meta::merge_temporal_segments(meta::ranges_from_value(a.at("ranges")), num(a, "tolerance", 2.0)));
    });
    t.bind("meta.count_occurrences", [](const ToolContext&, const Value& a) {
        Value out = Value::object();
        for (const auto& [k, n] : meta::count_occurrences(a.at("items"), str(a, "key"))) out[k] = n;
        return out;
    });
    t.bind("meta.filter_threshold", [](const ToolContext&, const Value& a) {
        auto op = meta::compare_op_from_string(a.contains("op") ? str(a, "op") : ">=");
        if (!op) throw ToolError(FailureKind::SchemaError, "unknown comparison '" + str(a, "op") + "'");
        return meta::filter_threshold(a.at("items"), str(a, "field"), *op, num(a, "value", 0));
    });
    t.bind("meta.rerank_candidates", [](const ToolContext&, const Value& a) {
        std::vector<meta::ScoreField> fields;
        const auto& sf = a.at("score_fields");
        if (sf.is_object()) {
            for (auto it = sf.begin(); it != sf.end(); ++it) fields.push_back({it.key(), as_number(it.value())});
        } else if (sf.is_array()) {
            for (const auto& f : sf) {
                if (f.is_array() && f.size() == 2) {
                    fields.push_back({f[0].get<std::string>(), as_number(f[1])});
                } else if (f.is_object()) {
                    fields.push_back({f.at("field").get<std::string>(), as_number(f.at("weight"))});
                } else {
                    throw ToolError(FailureKind::SchemaError, "score_fields entries are [name, weight] or {field, weight}");
                }
            }
        }
        return meta::rerank_candidates(a.at("items"), fields);
    });
    t.bind("meta.table", [](const ToolContext& ctx, const Value& a) {
        const auto& ops = meta::table_ops();
        auto it = ops.find(ctx.config);
        if (it == ops.end()) throw ToolError(FailureKind::UnavailableTool, "unknown table op '" + ctx.config + "'");
        return it->second(a);
    });
    return t;
}

}  // namespace toolground
