#pragma once

// Lexical helpers shared by routing, the synthetic world's oracles and the
// rule-table resolver. Everything here is lowercase ASCII token arithmetic.

#include <algorithm>
#include <cctype>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace toolground::text {

/// Lowercased alphanumeric runs. Underscores and punctuation separate tokens,
/// so "Merge_Temporal_Segments" yields {merge, temporal, segments}.
inline std::vector<std::string> tokenize(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : s) {
        auto c = static_cast<unsigned char>(ch);
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

inline bool is_stopword(std::string_view w) {
    static const std::set<std::string, std::less<>> kStop = {
        "a",     "an",    "the",   "is",    "are",  "was",   "were", "be",    "been",
        "of",    "in",    "on",    "at",    "to",   "for",   "from", "by",    "with",
        "and",   "or",    "when",  "where", "what", "which", "who",  "whom",  "how",
        "does",  "do",    "did",   "this",  "that", "these", "those", "it",   "its",
        "as",    "into",  "about", "there", "their", "any",  "all",  "each",  "if",
        "then",  "than",  "so",    "such",  "can",  "will",  "would", "should", "has",
        "have",  "had",   "not",   "no",    "but",  "over",  "under", "up",   "out",
        "i",     "you",   "we",    "they",  "he",   "she",   "them", "his",   "her",
        "our",   "your",  "my",    "me",    "us",   "many",  "much", "some",  "via"};
    return kStop.contains(w);
}

/// Verbs that express the intent of a request rather than its subject.
/// Stripped when a free-text query is derived from an action description.
inline bool is_intent_verb(std::string_view w) {
    static const std::set<std::string, std::less<>> kIntent = {
        "find",   "locate",  "search", "check",  "identify", "show",  "determine",
        "detect", "look",    "get",    "return", "list",     "verify", "inspect",
        "see",    "analyze", "analyse", "tell",  "give",     "retrieve"};
    return kIntent.contains(w);
}

/// Tokens with stopwords removed, in original order (duplicates kept).
inline std::vector<std::string> content_tokens(std::string_view s) {
    auto toks = tokenize(s);
    std::erase_if(toks, [](const std::string& t) { return is_stopword(t); });
    return toks;
}

inline std::set<std::string> content_set(std::string_view s) {
    auto toks = content_tokens(s);
    return {toks.begin(), toks.end()};
}

inline std::size_t intersection_size(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::size_t n = 0;
    for (const auto& x : a) n += b.contains(x) ? 1 : 0;
    return n;
}

/// |a ∩ b| / |a ∪ b|; zero when both are empty.
inline double jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
    if (a.empty() && b.empty()) return 0.0;
    const auto inter = intersection_size(a, b);
    const auto uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

/// Fraction of `query` covered by `target`; zero for an empty query.
inline double coverage(const std::set<std::string>& query, const std::set<std::string>& target) {
    if (query.empty()) return 0.0;
    return static_cast<double>(intersection_size(query, target)) / static_cast<double>(query.size());
}

/// Content words of a request minus intent verbs, joined by single spaces.
/// "find when the oven is opened" -> "oven opened".
inline std::string subject_phrase(std::string_view s) {
    std::string out;
    for (const auto& t : content_tokens(s)) {
        if (is_intent_verb(t)) continue;
        if (!out.empty()) out.push_back(' ');
        out += t;
    }
    return out;
}

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

inline std::string trim(std::string_view s) {
    auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace toolground::text
