#include <gtest/gtest.h>

#include <thread>

#include "support/fixtures.hpp"
#include "toolground/chat_policy.hpp"

using namespace toolground;

namespace {

/// Local chat endpoint that echoes the number of messages it received.
class FakeChatServer {
public:
    FakeChatServer() {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const auto body = Value::parse(req.body);
            last_body = body;
            const std::string content = R"({"Thought":"t","Plan":"p","Actions":[]})";
            res.set_content(Value{{"choices", {{{"message", {{"role", "assistant"}, {"content", content}}}}}}}.dump(),
                            "application/json");
        });
        server_.Post("/broken", [](const httplib::Request&, httplib::Response& res) { res.status = 500; });
        server_.Post("/garbled", [](const httplib::Request&, httplib::Response& res) { res.set_content("{}", "application/json"); });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~FakeChatServer() {
        server_.stop();
        thread_.join();
    }
    std::string url(const std::string& path = "") const { return "http://127.0.0.1:" + std::to_string(port_) + path; }

    Value last_body;

private:
    httplib::Server server_;
    int port_ = 0;
    std::thread thread_;
};

}  // namespace

TEST(ChatEndpoint, ParsesUrls) {
    const auto e = parse_endpoint("http://localhost:8000", "m");
    EXPECT_EQ(e.base, "http://localhost:8000");
    EXPECT_EQ(e.path, "/v1/chat/completions");
    EXPECT_EQ(parse_endpoint("https://h/api/chat").path, "/api/chat");
    EXPECT_THROW(parse_endpoint("localhost:8000"), EndpointError);
}

TEST(ChatEndpoint, ResolverAndPlannerTalkToServer) {
    FakeChatServer server;
    ChatResolver resolver(parse_endpoint(server.url(), "tiny"));
    ResolverPrompt p;
    p.action = ActionRequest{"Find_X", "find x", Value::object(), std::nullopt};
    const auto reply = resolver.respond(p);
    EXPECT_TRUE(std::holds_alternative<PlannerMessage>(parse_planner_message(reply)));
    EXPECT_EQ(server.last_body["model"], "tiny");
    EXPECT_EQ(server.last_body["messages"].size(), 1u);

    ChatPlanner planner(parse_endpoint(server.url()), "system text");
    PlannerInput in;
    in.prompt = "round one";
    planner.respond(in);
    planner.respond(in);
    EXPECT_EQ(server.last_body["messages"].size(), 4u);
    EXPECT_EQ(server.last_body["messages"][0]["role"], "system");
}

TEST(ChatEndpoint, ErrorsBecomeEndpointErrors) {
    FakeChatServer server;
    EXPECT_THROW(chat_complete(parse_endpoint(server.url("/broken")), {{"user", "x"}}), EndpointError);
    EXPECT_THROW(chat_complete(parse_endpoint(server.url("/garbled")), {{"user", "x"}}), EndpointError);
    auto dead = parse_endpoint("http://127.0.0.1:1");
    dead.timeout_seconds = 1;
    EXPECT_THROW(chat_complete(dead, {{"user", "x"}}), EndpointError);
}

TEST(ChatEndpoint, CatalogListsOnlyVisibleAvailableTools) {
    const auto world = tgtest::load_named_world("silent_street");
    const auto cat = tool_catalog(tgtest::default_registry(), world.availability());
    EXPECT_NE(cat.find("- Video_Clip_QA "), std::string::npos);
    EXPECT_EQ(cat.find("- ASR "), std::string::npos);
    EXPECT_EQ(cat.find("- Tool_Search "), std::string::npos);
    EXPECT_NE(planner_system_prompt(cat).find("\"tool\""), std::string::npos);
}
