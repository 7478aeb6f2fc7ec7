#pragma once

// Generic table operations backing most meta entries of the manifest. Each
// entry binds to "meta.table:<op>" and supplies preset arguments through its
// schema defaults.
//
// Argument conventions: `items` is a list, `field` selects a record member
// (empty means the item itself), `ranges` holds time ranges, `text`/`other`
// are strings, `a`/`b` are numbers.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "toolground/metatools.hpp"
#include "toolground/text.hpp"
#include "toolground/value.hpp"

namespace toolground::meta {

using TableOp = std::function<Value(const Value& args)>;

namespace table {

inline const Value& arg(const Value& args, const char* name) {
    auto it = args.find(name);
    if (it == args.end()) throw MetaError(MetaErrorKind::MissingKey, -1, name);
    return *it;
}

inline Value arg_or(const Value& args, const char* name, Value fallback) {
    auto it = args.find(name);
    return it == args.end() ? std::move(fallback) : *it;
}

inline double num(const Value& args, const char* name) {
    const auto& v = arg(args, name);
    if (!v.is_number()) throw MetaError(MetaErrorKind::NonNumericField, -1, name);
    return v.get<double>();
}

inline double num_or(const Value& args, const char* name, double fallback) {
    return args.contains(name) ? num(args, name) : fallback;
}

inline long integer_or(const Value& args, const char* name, long fallback) {
    const double d = num_or(args, name, static_cast<double>(fallback));
    if (d < 0 || std::floor(d) != d) throw MetaError(MetaErrorKind::InvalidArgument, -1, std::string(name) + " must be a non-negative integer");
    return static_cast<long>(d);
}

inline std::string str(const Value& args, const char* name) {
    const auto& v = arg(args, name);
    if (!v.is_string()) throw MetaError(MetaErrorKind::InvalidArgument, -1, std::string(name) + " must be a string");
    return v.get<std::string>();
}

inline std::string str_or(const Value& args, const char* name, std::string fallback) {
    return args.contains(name) ? str(args, name) : std::move(fallback);
}

inline const Value& list(const Value& args, const char* name = "items") {
    const auto& v = arg(args, name);
    if (!v.is_array()) throw MetaError(MetaErrorKind::InvalidArgument, -1, std::string(name) + " must be a list");
    return v;
}

inline Value pick(const Value& item, const std::string& field, long index) {
    if (field.empty()) return item;
    if (!item.is_object() || !item.contains(field)) throw MetaError(MetaErrorKind::MissingKey, index, field);
    return item.at(field);
}

inline double pick_num(const Value& item, const std::string& field, long index) {
    auto v = pick(item, field, index);
    if (!v.is_number()) throw MetaError(MetaErrorKind::NonNumericField, index, field);
    return v.get<double>();
}

inline std::vector<double> numbers(const Value& args) {
    const auto& items = list(args);
    const auto field = str_or(args, "field", "");
    std::vector<double> out;
    long i = 0;
    for (const auto& it : items) out.push_back(pick_num(it, field, i++));
    return out;
}

inline Value sorted_by_field(const Value& args, bool descending) {
    const auto& items = list(args);
    const auto field = str_or(args, "field", "");
    std::vector<std::pair<double, std::size_t>> keyed;
    for (std::size_t i = 0; i < items.size(); ++i) keyed.emplace_back(pick_num(items[i], field, static_cast<long>(i)), i);
    std::stable_sort(keyed.begin(), keyed.end(), [descending](const auto& a, const auto& b) {
        return descending ? a.first > b.first : a.first < b.first;
    });
    Value out = Value::array();
    for (auto [_, i] : keyed) out.push_back(items[i]);
    return out;
}

inline Value take(const Value& xs, std::size_t n) {
    Value out = Value::array();
    for (std::size_t i = 0; i < std::min(n, xs.size()); ++i) out.push_back(xs[i]);
    return out;
}

inline Value mean_of(const std::vector<double>& xs) {
    if (xs.empty()) return Value();
    return canonicalize(Value(std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size())));
}

inline Value number(double d) { return canonicalize(Value(d)); }

inline Value filter_items(const Value& args, const std::function<bool(const Value&, long)>& keep) {
    const auto& items = list(args);
    Value out = Value::array();
    long i = 0;
    for (const auto& it : items) {
        if (keep(it, i)) out.push_back(it);
        ++i;
    }
    return out;
}

inline std::vector<std::size_t> even_indices(std::size_t n, std::size_t k) {
    std::vector<std::size_t> out;
    if (n == 0 || k == 0) return out;
    if (k >= n) {
        for (std::size_t i = 0; i < n; ++i) out.push_back(i);
        return out;
    }
    if (k == 1) return {0};
    for (std::size_t i = 0; i < k; ++i) {
        out.push_back(static_cast<std::size_t>(std::lround(static_cast<double>(i) * static_cast<double>(n - 1) /
                                                            static_cast<double>(k - 1))));
    }
    return out;
}

inline double quantile_of(std::vector<double> xs, double q) {
    std::sort(xs.begin(), xs.end());
    const double pos = q * static_cast<double>(xs.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    return xs[lo] + (xs[hi] - xs[lo]) * (pos - static_cast<double>(lo));
}

inline Value group_reduce(const Value& args, const std::function<Value(const std::vector<Value>&)>& reduce) {
    const auto& items = list(args);
    const auto field = str(args, "field");
    std::map<std::string, std::vector<Value>> groups;
    long i = 0;
    for (const auto& it : items) {
        groups[count_key(pick(it, field, i))].push_back(it);
        ++i;
    }
    Value out = Value::object();
    for (const auto& [k, members] : groups) out[k] = reduce(members);
    return out;
}

inline std::vector<double> member_numbers(const std::vector<Value>& members, const std::string& field) {
    std::vector<double> xs;
    long i = 0;
    for (const auto& m : members) xs.push_back(pick_num(m, field, i++));
    return xs;
}

inline std::string format_timestamp(double seconds) {
    if (seconds < 0) throw MetaError(MetaErrorKind::InvalidArgument, -1, "negative time");
    const auto total = static_cast<long>(std::floor(seconds));
    const long h = total / 3600, m = (total % 3600) / 60, s = total % 60;
    char buf[32];
    if (h > 0) {
        std::snprintf(buf, sizeof buf, "%ld:%02ld:%02ld", h, m, s);
    } else {
        std::snprintf(buf, sizeof buf, "%02ld:%02ld", m, s);
    }
    return buf;
}

inline std::regex compile(const std::string& pattern) {
    try {
        return std::regex(pattern);
    } catch (const std::regex_error&) {
        throw MetaError(MetaErrorKind::InvalidArgument, -1, "bad pattern");
    }
}

}  // namespace table

/// Every generic op by name.
inline const std::map<std::string, TableOp, std::less<>>& table_ops() {
    using namespace table;
    static const std::map<std::string, TableOp, std::less<>> ops = [] {
        std::map<std::string, TableOp, std::less<>> m;

        // ranking
        m["top_k"] = [](const Value& a) { return take(sorted_by_field(a, true), static_cast<std::size_t>(integer_or(a, "k", 5))); };
        m["bottom_k"] = [](const Value& a) { return take(sorted_by_field(a, false), static_cast<std::size_t>(integer_or(a, "k", 5))); };
        m["sort_by"] = [](const Value& a) { return sorted_by_field(a, arg_or(a, "descending", false).get<bool>()); };
        m["rank"] = [](const Value& a) {
            auto sorted = sorted_by_field(a, true);
            long r = 1;
            for (auto& it : sorted) {
                if (!it.is_object()) it = Value{{"value", it}};
                it["rank"] = r++;
            }
            return sorted;
        };
        m["reverse"] = [](const Value& a) {
            Value out = list(a);
            std::reverse(out.begin(), out.end());
            return out;
        };
        m["argmax"] = [](const Value& a) { auto s = sorted_by_field(a, true); return s.empty() ? Value() : s.front(); };
        m["argmin"] = [](const Value& a) { auto s = sorted_by_field(a, false); return s.empty() ? Value() : s.front(); };

        // aggregation
        m["sum"] = [](const Value& a) { auto xs = numbers(a); return number(std::accumulate(xs.begin(), xs.end(), 0.0)); };
        m["mean"] = [](const Value& a) { return mean_of(numbers(a)); };
        m["min"] = [](const Value& a) { auto xs = numbers(a); return xs.empty() ? Value() : number(*std::min_element(xs.begin(), xs.end())); };
        m["max"] = [](const Value& a) { auto xs = numbers(a); return xs.empty() ? Value() : number(*std::max_element(xs.begin(), xs.end())); };
        m["median"] = [](const Value& a) { auto xs = numbers(a); return xs.empty() ? Value() : number(quantile_of(xs, 0.5)); };
        m["length"] = [](const Value& a) { return Value(static_cast<long>(list(a).size())); };
        m["count_distinct"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            std::set<std::string> seen;
            long i = 0;
            for (const auto& it : list(a)) seen.insert(canonical_dump(pick(it, field, i++)));
            return Value(static_cast<long>(seen.size()));
        };
        m["unique"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            std::set<std::string> seen;
            Value out = Value::array();
            long i = 0;
            for (const auto& it : list(a)) {
                auto v = pick(it, field, i++);
                if (seen.insert(canonical_dump(v)).second) out.push_back(v);
            }
            return out;
        };
        m["flatten"] = [](const Value& a) {
            Value out = Value::array();
            for (const auto& it : list(a)) {
                if (it.is_array()) {
                    for (const auto& x : it) out.push_back(x);
                } else {
                    out.push_back(it);
                }
            }
            return out;
        };
        m["first"] = [](const Value& a) { const auto& xs = list(a); return xs.empty() ? Value() : xs.front(); };
        m["last"] = [](const Value& a) { const auto& xs = list(a); return xs.empty() ? Value() : xs.back(); };
        m["histogram"] = [](const Value& a) {
            auto xs = numbers(a);
            const double width = num_or(a, "bin_width", 10.0);
            if (!(width > 0)) throw MetaError(MetaErrorKind::InvalidArgument, -1, "bin_width must be positive");
            std::map<long, long> bins;
            for (double x : xs) ++bins[static_cast<long>(std::floor(x / width))];
            Value out = Value::array();
            for (auto [b, n] : bins) out.push_back(canonicalize(Value{{"lo", b * width}, {"hi", (b + 1) * width}, {"count", n}}));
            return out;
        };
        m["pluck"] = [](const Value& a) {
            const auto field = str(a, "field");
            Value out = Value::array();
            long i = 0;
            for (const auto& it : list(a)) out.push_back(pick(it, field, i++));
            return out;
        };
        m["concat"] = [](const Value& a) {
            Value out = list(a);
            for (const auto& x : list(a, "other")) out.push_back(x);
            return out;
        };
        m["mode"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            std::map<std::string, std::pair<long, long>> counts;  // key -> (count, first index)
            std::map<std::string, Value> vals;
            long i = 0;
            for (const auto& it : list(a)) {
                auto v = pick(it, field, i);
                auto k = canonical_dump(v);
                auto [pos, fresh] = counts.try_emplace(k, 0, i);
                ++pos->second.first;
                if (fresh) vals[k] = v;
                ++i;
            }
            if (counts.empty()) return Value();
            auto best = counts.begin();
            for (auto c = counts.begin(); c != counts.end(); ++c) {
                if (c->second.first > best->second.first ||
                    (c->second.first == best->second.first && c->second.second < best->second.second)) {
                    best = c;
                }
            }
            return vals[best->first];
        };

        // temporal / window
        m["total_duration"] = [](const Value& a) {
            double total = 0;
            for (const auto& r : ranges_from_value(list(a, "ranges"))) total += r.t_end - r.t_start;
            return number(total);
        };
        m["covered_duration"] = [](const Value& a) {
            double total = 0;
            for (const auto& r : merge_temporal_segments(ranges_from_value(list(a, "ranges")), 0.0)) total += r.t_end - r.t_start;
            return number(total);
        };
        m["gaps"] = [](const Value& a) {
            auto merged = merge_temporal_segments(ranges_from_value(list(a, "ranges")), 0.0);
            Value out = Value::array();
            for (std::size_t i = 1; i < merged.size(); ++i) {
                out.push_back(canonicalize(Value{{"t_start", merged[i - 1].t_end}, {"t_end", merged[i].t_start}}));
            }
            return out;
        };
        m["intersect"] = [](const Value& a) {
            auto xs = sort_time_ranges(ranges_from_value(list(a, "ranges")));
            auto ys = sort_time_ranges(ranges_from_value(list(a, "other")));
            Value out = Value::array();
            for (const auto& x : xs) {
                for (const auto& y : ys) {
                    const double s = std::max(x.t_start, y.t_start), e = std::min(x.t_end, y.t_end);
                    if (s < e) out.push_back(canonicalize(Value{{"t_start", s}, {"t_end", e}}));
                }
            }
            return out;
        };
        m["shift"] = [](const Value& a) {
            const double d = num(a, "offset");
            auto rs = ranges_from_value(list(a, "ranges"));
            for (auto& r : rs) {
                r.t_start = std::max(0.0, r.t_start + d);
                r.t_end = std::max(0.0, r.t_end + d);
            }
            return to_value(rs);
        };
        m["pad"] = [](const Value& a) {
            const double d = num(a, "amount");
            if (d < 0) throw MetaError(MetaErrorKind::InvalidArgument, -1, "amount must be >= 0");
            auto rs = ranges_from_value(list(a, "ranges"));
            for (auto& r : rs) {
                r.t_start = std::max(0.0, r.t_start - d);
                r.t_end += d;
            }
            return to_value(rs);
        };
        m["clip"] = [](const Value& a) {
            const double lo = num(a, "lo"), hi = num(a, "hi");
            Value out = Value::array();
            for (auto r : ranges_from_value(list(a, "ranges"))) {
                r.t_start = std::max(r.t_start, lo);
                r.t_end = std::min(r.t_end, hi);
                if (r.t_start < r.t_end) out.push_back(to_value(r));
            }
            return out;
        };
        m["durations"] = [](const Value& a) {
            Value out = Value::array();
            for (const auto& r : ranges_from_value(list(a, "ranges"))) out.push_back(number(r.t_end - r.t_start));
            return out;
        };
        m["overlapping"] = [](const Value& a) {
            const double lo = num(a, "lo"), hi = num(a, "hi");
            Value out = Value::array();
            for (const auto& r : ranges_from_value(list(a, "ranges"))) {
                if (r.t_start < hi && r.t_end > lo) out.push_back(to_value(r));
            }
            return out;
        };
        m["earliest"] = [](const Value& a) {
            auto rs = sort_time_ranges(ranges_from_value(list(a, "ranges")));
            return rs.empty() ? Value() : to_value(rs.front());
        };
        m["latest"] = [](const Value& a) {
            auto rs = ranges_from_value(list(a, "ranges"));
            std::stable_sort(rs.begin(), rs.end(), [](const TimeRange& x, const TimeRange& y) { return x.t_end > y.t_end; });
            return rs.empty() ? Value() : to_value(rs.front());
        };
        m["midpoints"] = [](const Value& a) {
            Value out = Value::array();
            for (const auto& r : ranges_from_value(list(a, "ranges"))) out.push_back(number((r.t_start + r.t_end) / 2.0));
            return out;
        };
        m["longest"] = [](const Value& a) {
            auto rs = ranges_from_value(list(a, "ranges"));
            std::stable_sort(rs.begin(), rs.end(), [](const TimeRange& x, const TimeRange& y) {
                return x.t_end - x.t_start > y.t_end - y.t_start;
            });
            return rs.empty() ? Value() : to_value(rs.front());
        };
        m["split_window"] = [](const Value& a) {
            const double s = num(a, "t_start"), e = num(a, "t_end"), size = num(a, "size");
            if (!(size > 0) || e < s) throw MetaError(MetaErrorKind::InvalidArgument, -1, "bad window");
            Value out = Value::array();
            for (double t = s; t < e; t += size) out.push_back(canonicalize(Value{{"t_start", t}, {"t_end", std::min(t + size, e)}}));
            return out;
        };

        // math
        m["add"] = [](const Value& a) { return number(num(a, "a") + num(a, "b")); };
        m["subtract"] = [](const Value& a) { return number(num(a, "a") - num(a, "b")); };
        m["multiply"] = [](const Value& a) { return number(num(a, "a") * num(a, "b")); };
        m["divide"] = [](const Value& a) {
            const double b = num(a, "b");
            if (b == 0) throw MetaError(MetaErrorKind::InvalidArgument, -1, "division by zero");
            return number(num(a, "a") / b);
        };
        m["abs"] = [](const Value& a) { return number(std::fabs(num(a, "a"))); };
        m["round"] = [](const Value& a) {
            const double p = std::pow(10.0, static_cast<double>(integer_or(a, "digits", 0)));
            return number(std::round(num(a, "a") * p) / p);
        };
        m["sqrt"] = [](const Value& a) {
            const double x = num(a, "a");
            if (x < 0) throw MetaError(MetaErrorKind::InvalidArgument, -1, "negative operand");
            return number(std::sqrt(x));
        };
        m["power"] = [](const Value& a) {
            const double r = std::pow(num(a, "a"), num(a, "b"));
            if (!std::isfinite(r)) throw MetaError(MetaErrorKind::InvalidArgument, -1, "result not finite");
            return number(r);
        };
        m["mod"] = [](const Value& a) {
            const double b = num(a, "b");
            if (b == 0) throw MetaError(MetaErrorKind::InvalidArgument, -1, "modulo by zero");
            return number(std::fmod(num(a, "a"), b));
        };
        m["percent"] = [](const Value& a) {
            const double b = num(a, "b");
            if (b == 0) throw MetaError(MetaErrorKind::InvalidArgument, -1, "division by zero");
            return number(100.0 * num(a, "a") / b);
        };
        m["clamp"] = [](const Value& a) {
            const double lo = num(a, "lo"), hi = num(a, "hi");
            if (lo > hi) throw MetaError(MetaErrorKind::InvalidArgument, -1, "lo > hi");
            return number(std::clamp(num(a, "a"), lo, hi));
        };
        m["scale"] = [](const Value& a) {
            const double f = num(a, "factor");
            Value out = Value::array();
            for (double x : numbers(a)) out.push_back(number(x * f));
            return out;
        };
        m["normalize"] = [](const Value& a) {
            auto xs = numbers(a);
            Value out = Value::array();
            if (xs.empty()) return out;
            const auto [lo, hi] = std::minmax_element(xs.begin(), xs.end());
            const double span = *hi - *lo;
            for (double x : xs) out.push_back(number(span > 0 ? (x - *lo) / span : 0.0));
            return out;
        };
        m["zscore"] = [](const Value& a) {
            auto xs = numbers(a);
            Value out = Value::array();
            if (xs.empty()) return out;
            const double mu = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
            double var = 0;
            for (double x : xs) var += (x - mu) * (x - mu);
            const double sd = std::sqrt(var / static_cast<double>(xs.size()));
            for (double x : xs) out.push_back(number(sd > 0 ? (x - mu) / sd : 0.0));
            return out;
        };
        m["cumsum"] = [](const Value& a) {
            Value out = Value::array();
            double acc = 0;
            for (double x : numbers(a)) out.push_back(number(acc += x));
            return out;
        };
        m["diff"] = [](const Value& a) {
            auto xs = numbers(a);
            Value out = Value::array();
            for (std::size_t i = 1; i < xs.size(); ++i) out.push_back(number(xs[i] - xs[i - 1]));
            return out;
        };

        // text
        m["lower"] = [](const Value& a) { return Value(text::to_lower(str(a, "text"))); };
        m["upper"] = [](const Value& a) {
            auto s = str(a, "text");
            std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
            return Value(s);
        };
        m["join"] = [](const Value& a) {
            const auto sep = str_or(a, "separator", " ");
            std::string out;
            bool first = true;
            for (const auto& it : list(a)) {
                if (!first) out += sep;
                first = false;
                out += it.is_string() ? it.get<std::string>() : canonical_dump(it);
            }
            return Value(out);
        };
        m["split"] = [](const Value& a) {
            const auto s = str(a, "text");
            const auto sep = str_or(a, "separator", " ");
            if (sep.empty()) throw MetaError(MetaErrorKind::InvalidArgument, -1, "empty separator");
            Value out = Value::array();
            std::size_t pos = 0;
            while (true) {
                auto next = s.find(sep, pos);
                auto piece = s.substr(pos, next == std::string::npos ? std::string::npos : next - pos);
                if (!piece.empty()) out.push_back(piece);
                if (next == std::string::npos) break;
                pos = next + sep.size();
            }
            return out;
        };
        m["contains"] = [](const Value& a) {
            return Value(text::to_lower(str(a, "text")).find(text::to_lower(str(a, "pattern"))) != std::string::npos);
        };
        m["replace"] = [](const Value& a) {
            auto s = str(a, "text");
            const auto from = str(a, "old"), to = str_or(a, "new", "");
            if (from.empty()) throw MetaError(MetaErrorKind::InvalidArgument, -1, "empty pattern");
            for (std::size_t pos = 0; (pos = s.find(from, pos)) != std::string::npos; pos += to.size()) s.replace(pos, from.size(), to);
            return Value(s);
        };
        m["strip"] = [](const Value& a) { return Value(text::trim(str(a, "text"))); };
        m["strlen"] = [](const Value& a) { return Value(static_cast<long>(str(a, "text").size())); };
        m["word_count"] = [](const Value& a) { return Value(static_cast<long>(text::tokenize(str(a, "text")).size())); };
        m["extract_numbers"] = [](const Value& a) {
            static const std::regex re(R"(-?\d+(\.\d+)?)");
            const auto s = str(a, "text");
            Value out = Value::array();
            for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) {
                out.push_back(number(std::stod(it->str())));
            }
            return out;
        };
        m["format_timestamp"] = [](const Value& a) { return Value(format_timestamp(num(a, "seconds"))); };
        m["concat_text"] = [](const Value& a) { return Value(str(a, "text") + str_or(a, "separator", " ") + str(a, "other")); };
        m["keyword_overlap"] = [](const Value& a) {
            return number(text::jaccard(text::content_set(str(a, "text")), text::content_set(str(a, "other"))));
        };
        m["regex_match"] = [](const Value& a) {
            const auto re = compile(str(a, "pattern"));
            const auto s = str(a, "text");
            Value out = Value::array();
            for (auto it = std::sregex_iterator(s.begin(), s.end(), re); it != std::sregex_iterator(); ++it) out.push_back(it->str());
            return out;
        };

        // filtering
        m["filter_eq"] = [](const Value& a) { return filter_by_value(list(a), str(a, "field"), arg(a, "value")); };
        m["filter_ne"] = [](const Value& a) {
            const auto field = str(a, "field");
            const auto want = canonical_dump(arg(a, "value"));
            return filter_items(a, [&](const Value& it, long i) { return canonical_dump(pick(it, field, i)) != want; });
        };
        m["filter_contains"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            const auto needle = text::to_lower(str(a, "pattern"));
            return filter_items(a, [&](const Value& it, long i) {
                auto v = pick(it, field, i);
                return v.is_string() && text::to_lower(v.get<std::string>()).find(needle) != std::string::npos;
            });
        };
        m["filter_range"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            const double lo = num(a, "lo"), hi = num(a, "hi");
            return filter_items(a, [&](const Value& it, long i) {
                const double x = pick_num(it, field, i);
                return lo <= x && x <= hi;
            });
        };
        m["filter_exists"] = [](const Value& a) {
            const auto field = str(a, "field");
            return filter_items(a, [&](const Value& it, long) { return it.is_object() && it.contains(field); });
        };
        m["drop_nulls"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            return filter_items(a, [&](const Value& it, long) {
                if (field.empty()) return !it.is_null();
                return it.is_object() && it.contains(field) && !it.at(field).is_null();
            });
        };
        m["dedupe"] = [](const Value& a) {
            std::set<std::string> seen;
            return filter_items(a, [&](const Value& it, long) { return seen.insert(canonical_dump(it)).second; });
        };
        m["filter_in"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            std::set<std::string> allowed;
            for (const auto& v : list(a, "values")) allowed.insert(canonical_dump(v));
            return filter_items(a, [&](const Value& it, long i) { return allowed.contains(canonical_dump(pick(it, field, i))); });
        };
        m["filter_not_in"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            std::set<std::string> banned;
            for (const auto& v : list(a, "values")) banned.insert(canonical_dump(v));
            return filter_items(a, [&](const Value& it, long i) { return !banned.contains(canonical_dump(pick(it, field, i))); });
        };
        m["filter_regex"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            const auto re = compile(str(a, "pattern"));
            return filter_items(a, [&](const Value& it, long i) {
                auto v = pick(it, field, i);
                return v.is_string() && std::regex_search(v.get<std::string>(), re);
            });
        };
        m["filter_min_duration"] = [](const Value& a) {
            const double lo = num(a, "min_duration");
            return filter_items(a, [&](const Value& it, long i) {
                auto r = range_from_value(it, i);
                return r.t_end - r.t_start >= lo;
            });
        };

        // grouping
        m["group_by"] = [](const Value& a) { return group_reduce(a, [](const std::vector<Value>& ms) { return Value(ms); }); };
        m["group_count"] = [](const Value& a) {
            return group_reduce(a, [](const std::vector<Value>& ms) { return Value(static_cast<long>(ms.size())); });
        };
        m["group_sum"] = [](const Value& a) {
            const auto vf = str(a, "value_field");
            return group_reduce(a, [&](const std::vector<Value>& ms) {
                auto xs = member_numbers(ms, vf);
                return number(std::accumulate(xs.begin(), xs.end(), 0.0));
            });
        };
        m["group_mean"] = [](const Value& a) {
            const auto vf = str(a, "value_field");
            return group_reduce(a, [&](const std::vector<Value>& ms) { return mean_of(member_numbers(ms, vf)); });
        };
        m["group_max"] = [](const Value& a) {
            const auto vf = str(a, "value_field");
            return group_reduce(a, [&](const std::vector<Value>& ms) {
                auto xs = member_numbers(ms, vf);
                return number(*std::max_element(xs.begin(), xs.end()));
            });
        };
        m["group_min"] = [](const Value& a) {
            const auto vf = str(a, "value_field");
            return group_reduce(a, [&](const std::vector<Value>& ms) {
                auto xs = member_numbers(ms, vf);
                return number(*std::min_element(xs.begin(), xs.end()));
            });
        };
        m["partition"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            const double t = num(a, "value");
            Value above = Value::array(), below = Value::array();
            long i = 0;
            for (const auto& it : list(a)) {
                (pick_num(it, field, i) >= t ? above : below).push_back(it);
                ++i;
            }
            return Value{{"above", above}, {"below", below}};
        };
        m["chunk"] = [](const Value& a) {
            const auto size = static_cast<std::size_t>(integer_or(a, "size", 2));
            if (size == 0) throw MetaError(MetaErrorKind::InvalidArgument, -1, "size must be positive");
            Value out = Value::array();
            Value cur = Value::array();
            for (const auto& it : list(a)) {
                cur.push_back(it);
                if (cur.size() == size) {
                    out.push_back(cur);
                    cur = Value::array();
                }
            }
            if (!cur.empty()) out.push_back(cur);
            return out;
        };
        m["bucket_by_time"] = [](const Value& a) {
            const double size = num_or(a, "size", 30.0);
            if (!(size > 0)) throw MetaError(MetaErrorKind::InvalidArgument, -1, "size must be positive");
            std::map<long, Value> buckets;
            long i = 0;
            for (const auto& it : list(a, "ranges")) {
                auto r = range_from_value(it, i++);
                auto& b = buckets[static_cast<long>(std::floor(r.t_start / size))];
                if (b.is_null()) b = Value::array();
                b.push_back(it);
            }
            Value out = Value::object();
            for (auto& [k, v] : buckets) out[format_number(static_cast<double>(k) * size)] = v;
            return out;
        };

        // sampling / thresholding
        m["uniform_sample"] = [](const Value& a) {
            const auto& items = list(a);
            Value out = Value::array();
            for (auto i : even_indices(items.size(), static_cast<std::size_t>(integer_or(a, "k", 4)))) out.push_back(items[i]);
            return out;
        };
        m["head"] = [](const Value& a) { return take(list(a), static_cast<std::size_t>(integer_or(a, "n", 3))); };
        m["tail"] = [](const Value& a) {
            const auto& items = list(a);
            const auto n = std::min(items.size(), static_cast<std::size_t>(integer_or(a, "n", 3)));
            Value out = Value::array();
            for (std::size_t i = items.size() - n; i < items.size(); ++i) out.push_back(items[i]);
            return out;
        };
        m["every_nth"] = [](const Value& a) {
            const auto n = static_cast<std::size_t>(integer_or(a, "n", 2));
            if (n == 0) throw MetaError(MetaErrorKind::InvalidArgument, -1, "n must be positive");
            const auto& items = list(a);
            Value out = Value::array();
            for (std::size_t i = 0; i < items.size(); i += n) out.push_back(items[i]);
            return out;
        };
        m["binarize"] = [](const Value& a) {
            const auto field = str(a, "field");
            const double t = num(a, "value");
            Value out = Value::array();
            long i = 0;
            for (auto it : list(a)) {
                const double x = pick_num(it, field, i++);
                it["above"] = x >= t;
                out.push_back(it);
            }
            return out;
        };
        m["top_fraction"] = [](const Value& a) {
            const double f = num_or(a, "fraction", 0.25);
            if (!(f > 0 && f <= 1)) throw MetaError(MetaErrorKind::InvalidArgument, -1, "fraction must be in (0, 1]");
            auto sorted = sorted_by_field(a, true);
            const auto n = static_cast<std::size_t>(std::ceil(f * static_cast<double>(sorted.size())));
            return take(sorted, n);
        };
        m["quantile"] = [](const Value& a) {
            const double q = num_or(a, "q", 0.5);
            if (!(q >= 0 && q <= 1)) throw MetaError(MetaErrorKind::InvalidArgument, -1, "q must be in [0, 1]");
            auto xs = numbers(a);
            return xs.empty() ? Value() : number(quantile_of(xs, q));
        };
        m["sample_times"] = [](const Value& a) {
            const double s = num(a, "t_start"), e = num(a, "t_end"), step = num_or(a, "interval", 6.0);
            if (!(step > 0) || e < s) throw MetaError(MetaErrorKind::InvalidArgument, -1, "bad sampling window");
            std::vector<double> ts;
            for (long i = 0; s + static_cast<double>(i) * step < e; ++i) ts.push_back(s + static_cast<double>(i) * step);
            Value out = Value::array();
            for (auto i : even_indices(ts.size(), static_cast<std::size_t>(integer_or(a, "cap", 8)))) out.push_back(number(ts[i]));
            return out;
        };
        m["above_mean"] = [](const Value& a) {
            const auto field = str_or(a, "field", "");
            auto xs = numbers(a);
            if (xs.empty()) return Value::array();
            const double mu = std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
            return filter_items(a, [&](const Value& it, long i) { return pick_num(it, field, i) > mu; });
        };
        m["gate"] = [](const Value& a) {
            const double t = num(a, "value");
            auto xs = numbers(a);
            const bool pass = !xs.empty() && *std::max_element(xs.begin(), xs.end()) >= t;
            return Value{{"pass", pass}, {"max", xs.empty() ? Value() : number(*std::max_element(xs.begin(), xs.end()))}};
        };
        return m;
    }();
    return ops;
}

}  // namespace toolground::meta
