#pragma once

// Strict readers for the JSON documents the runtime consumes (manifests,
// worlds, scripts, traces). Unknown keys are an error wherever a reader says so.

#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>

#include "toolground/value.hpp"

namespace toolground::json_io {

class FormatError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

inline void require_object(const Value& v, std::string_view what) {
    if (!v.is_object()) throw FormatError(std::string(what) + ": expected an object");
}

inline void check_keys(const Value& obj, std::initializer_list<std::string_view> allowed, std::string_view what) {
    require_object(obj, what);
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool known = false;
        for (auto a : allowed) known = known || it.key() == a;
        if (!known) throw FormatError(std::string(what) + ": unknown field '" + it.key() + "'");
    }
}

inline const Value& required(const Value& obj, std::string_view key, std::string_view what) {
    auto it = obj.find(std::string(key));
    if (it == obj.end()) throw FormatError(std::string(what) + ": missing field '" + std::string(key) + "'");
    return *it;
}

inline std::string get_string(const Value& obj, std::string_view key, std::string_view what) {
    const auto& v = required(obj, key, what);
    if (!v.is_string()) throw FormatError(std::string(what) + ": field '" + std::string(key) + "' must be a string");
    return v.get<std::string>();
}

inline std::string get_string_or(const Value& obj, std::string_view key, std::string fallback, std::string_view what) {
    if (!obj.contains(std::string(key))) return fallback;
    return get_string(obj, key, what);
}

inline double get_number(const Value& obj, std::string_view key, std::string_view what) {
    const auto& v = required(obj, key, what);
    if (!v.is_number()) throw FormatError(std::string(what) + ": field '" + std::string(key) + "' must be a number");
    return v.get<double>();
}

inline double get_number_or(const Value& obj, std::string_view key, double fallback, std::string_view what) {
    if (!obj.contains(std::string(key))) return fallback;
    return get_number(obj, key, what);
}

inline long long get_integer(const Value& obj, std::string_view key, std::string_view what) {
    const auto& v = required(obj, key, what);
    if (!v.is_number_integer()) throw FormatError(std::string(what) + ": field '" + std::string(key) + "' must be an integer");
    return v.get<long long>();
}

inline long long get_integer_or(const Value& obj, std::string_view key, long long fallback, std::string_view what) {
    if (!obj.contains(std::string(key))) return fallback;
    return get_integer(obj, key, what);
}

inline bool get_bool_or(const Value& obj, std::string_view key, bool fallback, std::string_view what) {
    if (!obj.contains(std::string(key))) return fallback;
    const auto& v = obj.at(std::string(key));
    if (!v.is_boolean()) throw FormatError(std::string(what) + ": field '" + std::string(key) + "' must be a boolean");
    return v.get<bool>();
}

inline std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline void write_file(const std::string& path, std::string_view content) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

inline Value parse_text(std::string_view text, std::string_view what) {
    try {
        return Value::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError(std::string(what) + ": " + e.what());
    }
}

}  // namespace toolground::json_io
