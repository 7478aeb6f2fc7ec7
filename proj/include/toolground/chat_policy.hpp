#pragma once

// Planner and resolver policies backed by an OpenAI-style chat completions
// endpoint. The endpoint must answer POST <path> with
// {"choices":[{"message":{"content":"..."}}]}.

#include <httplib.h>

#include <regex>
#include <stdexcept>
#include <string>
#include <vector>

#include "toolground/registry.hpp"
#include "toolground/resolver.hpp"
#include "toolground/scheduler.hpp"

namespace toolground {

class EndpointError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path = "/v1/chat/completions";
    std::string model = "default";
    double timeout_seconds = 60.0;
};

inline Endpoint parse_endpoint(const std::string& url, std::string model = "default") {
    static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, kUrl)) throw EndpointError("invalid endpoint URL: " + url);
    Endpoint e;
    e.base = m[1].str();
    if (m[2].matched && m[2].str() != "/") e.path = m[2].str();
    e.model = std::move(model);
    return e;
}

struct ChatMessage {
    std::string role;
    std::string content;
};

/// Sends one chat request and returns the first choice's content.
inline std::string chat_complete(const Endpoint& ep, const std::vector<ChatMessage>& messages) {
    Value body{{"model", ep.model}, {"temperature", 0}, {"messages", Value::array()}};
    for (const auto& m : messages) body["messages"].push_back({{"role", m.role}, {"content", m.content}});
    httplib::Client cli(ep.base);
    const auto secs = static_cast<time_t>(ep.timeout_seconds);
    cli.set_connection_timeout(secs, 0);
    cli.set_read_timeout(secs, 0);
    auto res = cli.Post(ep.path, body.dump(), "application/json");
    if (!res) throw EndpointError("request to " + ep.base + ep.path + " failed: " + httplib::to_string(res.error()));
    if (res->status != 200) throw EndpointError("endpoint returned HTTP " + std::to_string(res->status));
    Value reply;
    try {
        reply = Value::parse(res->body);
        return reply.at("choices").at(0).at("message").at("content").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw EndpointError(std::string("malformed completion: ") + e.what());
    }
}

/// Compact listing of the tools a planner may call.
inline std::string tool_catalog(const ToolRegistry& registry, const AvailabilityContext& ctx) {
    std::string s;
    for (const auto* spec : registry.entries()) {
        if (spec->exposure != Exposure::planner_visible) continue;
        if (!unavailable_reason(spec->availability, ctx).empty()) continue;
        s += "- " + spec->name + " (" + std::string(to_string(spec->kind)) + ", " + spec->category + "): " +
             spec->description + " params " + to_json(spec->input_schema).dump() + "\n";
    }
    return s;
}

inline std::string planner_system_prompt(const std::string& catalog) {
    return "You answer questions about a video by calling tools over several rounds.\n"
           "Each round, reply with exactly one JSON object with the keys Thought, Plan, Evidence and either "
           "Actions or Finish, never both.\n"
           "Evidence is a list of {\"label\", \"value\", \"citation\", \"evidence_status\"} where the status "
           "is exact, approximate or missing.\n"
           "Actions is a list of {\"tool\", \"description\", \"params\", \"output\"}. A tool name that is "
           "not in the catalog is treated as an abstract step and grounded for you. A string parameter starting "
           "with $ refers to the output of an earlier action: either the name given in its output field or "
           "the pointer shown next to an earlier result.\n"
           "Finish is {\"chain_complete\": true, \"completion_basis\": \"...\", \"answer\": \"...\"}; send it only "
           "when the evidence settles the question. For multiple choice, answer with the option letter.\n"
           "Tools:\n" +
           catalog;
}

class ChatPlanner final : public PlannerPolicy {
public:
    ChatPlanner(Endpoint ep, std::string system_prompt) : ep_(std::move(ep)), system_(std::move(system_prompt)) {}

    std::string respond(const PlannerInput& in) override {
        std::vector<ChatMessage> msgs{{"system", system_}};
        for (const auto& [u, a] : history_) {
            msgs.push_back({"user", u});
            msgs.push_back({"assistant", a});
        }
        std::string user = in.prompt;
        if (in.reprompt) user += "\nYour previous reply could not be parsed (" + in.parse_error + "). Reply again.";
        msgs.push_back({"user", user});
        auto reply = chat_complete(ep_, msgs);
        history_.emplace_back(std::move(user), reply);
        return reply;
    }

private:
    Endpoint ep_;
    std::string system_;
    std::vector<std::pair<std::string, std::string>> history_;
};

class ChatResolver final : public ResolverPolicy {
public:
    explicit ChatResolver(Endpoint ep) : ep_(std::move(ep)) {}

    std::string respond(const ResolverPrompt& p) override { return chat_complete(ep_, {{"user", p.render()}}); }

private:
    Endpoint ep_;
};

}  // namespace toolground
