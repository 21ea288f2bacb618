// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <deque>
#include <fstream>
#include <sstream>
#include <thread>

#include "chronoalign/fixture.hpp"
#include "chronoalign/llm_bridge.hpp"
#include "chronoalign/rng.hpp"
#include "test_support.hpp"

using namespace chronoalign;

namespace {

const std::string kImage = "kubectl set image deployment/webapp-frontend new-container=nginx:1.23.4";
const std::string kRestart = "kubectl rollout restart statefulset/prometheus-db";
const std::string kScale = "kubectl scale statefulset/etcd-cluster --replicas=5";

class ScriptedClient final : public ChatClient {
 public:
  explicit ScriptedClient(std::vector<nlohmann::json> responses)
      : responses_(responses.begin(), responses.end()) {}
  nlohmann::json complete(const nlohmann::json& request) override {
    requests.push_back(request);
    REQUIRE_FALSE(responses_.empty());
    auto r = responses_.front();
    responses_.pop_front();
    return r;
  }
  std::vector<nlohmann::json> requests;

 private:
  std::deque<nlohmann::json> responses_;
};

bool is_invalid(const ParsedAction& a) { return std::holds_alternative<InvalidAction>(a); }

double sleep_value(const ParsedAction& a) {
  REQUIRE(std::holds_alternative<Sleep>(a));
  return std::get<Sleep>(a).duration_s;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

}  // namespace

TEST_CASE("grammar accepts the documented forms") {
  CHECK(std::holds_alternative<Check>(parse_action("check()")));
  CHECK(std::holds_alternative<Check>(parse_action("  check ( )\n")));
  CHECK(sleep_value(parse_action("import time; time.sleep(42.5)")) == 42.5);
  CHECK(sleep_value(parse_action("time.sleep(60)")) == 60.0);
  CHECK(sleep_value(parse_action("import time\ntime.sleep(108)")) == 108.0);
  CHECK(sleep_value(parse_action("import time\r\n  time.sleep( .5 )")) == 0.5);
  CHECK(sleep_value(parse_action("time.sleep(600)")) == 600.0);
}

TEST_CASE("grammar rejects everything else") {
  const auto r = parse_action("os.system('rm -rf /')");
  REQUIRE(is_invalid(r));
  CHECK(std::get<InvalidAction>(r).reason == "unrecognized action");
  for (const char* s :
       {"", "check", "check(1)", "Check()", "time.sleep()", "time.sleep(-5)", "time.sleep(0)",
        "time.sleep(0.0)", "time.sleep(601)", "time.sleep(1e3)", "time.sleep(1e-3)",
        "time.sleep(0x10)", "time.sleep(10); check()", "check(); check()",
        "import time; import os; time.sleep(1)", "import os; time.sleep(1)",
        "time.sleep(time.sleep(1))", "time.sleep(10) # comment", "`check()`", "check() && ls",
        "$(check())", "time.sleep(1);", "import time;; time.sleep(1)", "exec('check()')",
        "time.sleep(9999999999999999999999999999999999999999999)", "time.sleep(inf)",
        "time.sleep(nan)", "time.sleep(1,2)", "time . sleep\n(5)\n\ncheck()"})
    CHECK_MESSAGE(is_invalid(parse_action(s)), s);
  CHECK(is_invalid(parse_action("check()" + std::string(600, ' '))));
}

TEST_CASE("grammar honours the sleep cap") {
  CHECK(sleep_value(parse_action("time.sleep(900)", 1000.0)) == 900.0);
  const auto r = parse_action("time.sleep(900)", 600.0);
  REQUIRE(is_invalid(r));
  CHECK(std::get<InvalidAction>(r).reason.find("cap") != std::string::npos);
}

TEST_CASE("format_move round-trips through the grammar") {
  Rng rng(21);
  for (int i = 0; i < 20000; ++i) {
    const double d = std::exp(rng.uniform() * 13.0 - 6.0);
    if (d > kDefaultSleepCapS) continue;
    const Move m = make_sleep(d);
    REQUIRE(sleep_value(parse_action(format_move(m))) == d);
  }
  CHECK(std::holds_alternative<Check>(parse_action(format_move(Check{}))));
  CHECK(format_move(make_sleep(108.0)) == "import time; time.sleep(108)");
}

TEST_CASE("random byte strings never parse as a sleep above the cap") {
  Rng rng(8);
  const std::string alphabet = "checktimesp0123456789.()_;\n \t'\"$`|&<>{}[]\\xe-+";
  for (int i = 0; i < 20000; ++i) {
    std::string s(rng.below(40), ' ');
    for (auto& c : s) c = alphabet[rng.below(alphabet.size())];
    const auto r = parse_action(s);
    if (const auto* sl = std::get_if<Sleep>(&r)) {
      CHECK(sl->duration_s > 0.0);
      CHECK(sl->duration_s <= kDefaultSleepCapS);
    }
  }
}

TEST_CASE("seconds formatting for history lines") {
  CHECK(format_seconds(120.0) == "120");
  CHECK(format_seconds(97.2) == "97.2");
  CHECK(format_seconds(65.625) == "65.63");
  CHECK(format_seconds(0.0) == "0");
}

TEST_CASE("history rendering") {
  CHECK(render_history({}) == "(no prior episodes)");
  const auto line = render_history({{3, kImage, 120.0, 1, 120.0}});
  CHECK(line == "Episode 3: Command = '" + kImage + "', Your Executed Sleep Time = 120s, Check Count = 1");
  CHECK(line.find("Your Executed Sleep Time = 120s, Check Count = 1") != std::string::npos);
  CHECK(render_user_prompt(kScale, {}).find("(no prior episodes)") != std::string::npos);
}

TEST_CASE("prompt matches the golden transcription") {
  const std::vector<HistorySummary> history = {
      {1, kScale, 60.0, 1, 60.0}, {2, kRestart, 90.0, 1, 90.0}, {3, kImage, 120.0, 1, 120.0}};
  const auto golden = slurp(testsupport::data_dir() / "prompt_golden.txt");
  REQUIRE_FALSE(golden.empty());
  CHECK(render_user_prompt(kImage, history) == golden);

  const auto t = render_prompt(kImage, history);
  REQUIRE(t.messages.size() == 2);
  CHECK(t.messages[0].role == Role::System);
  CHECK(t.messages[0].content ==
        "You are a helpful AI agent. To solve the task, you must use the execute_python_code tool. "
        "Do not write code in your response directly.");
  CHECK(t.messages[1].content == golden);
}

TEST_CASE("request shape") {
  EndpointConfig ep;
  ep.model = "test-model";
  const auto req = build_request(ep, render_prompt(kScale, {}));
  CHECK(req["model"] == "test-model");
  CHECK(req["tool_choice"] == "auto");
  CHECK(req["messages"].size() == 2);
  CHECK(req["messages"][0]["role"] == "system");
  CHECK(req["tools"][0]["function"]["name"] == "execute_python_code");
  CHECK(req["tools"][0]["function"]["parameters"]["required"][0] == "code");
}

TEST_CASE("response parsing") {
  const auto turn = parse_response(tool_call_response("check()", 2));
  REQUIRE(turn.tool_call);
  CHECK(turn.tool_call->name == "execute_python_code");
  CHECK(std::holds_alternative<Check>(action_from_tool_call(*turn.tool_call, 600.0)));

  const auto legacy = parse_response(
      {{"choices", {{{"message", {{"role", "assistant"},
                                  {"function_call", {{"name", "execute_python_code"},
                                                     {"arguments", R"j({"code": "time.sleep(5)"})j"}}}}}}}}});
  REQUIRE(legacy.tool_call);
  CHECK(sleep_value(action_from_tool_call(*legacy.tool_call, 600.0)) == 5.0);

  CHECK_FALSE(parse_response(text_response("hello")).tool_call);
  CHECK_THROWS_AS(parse_response(nlohmann::json::object()), EndpointError);
  CHECK_THROWS_AS(parse_response({{"choices", nlohmann::json::array()}}), EndpointError);

  CHECK(is_invalid(action_from_tool_call({"c", "run_shell", R"j({"code":"check()"})j"}, 600.0)));
  CHECK(is_invalid(action_from_tool_call({"c", "execute_python_code", "not json"}, 600.0)));
  CHECK(is_invalid(action_from_tool_call({"c", "execute_python_code", R"j({"src":"check()"})j"}, 600.0)));
}

TEST_CASE("scripted episode: sleep then check") {
  ScriptedClient client({tool_call_response("import time; time.sleep(60)", 1),
                         tool_call_response("check()", 2)});
  auto e = testsupport::forced_episode(default_actions()[2], 55.0);
  const auto res = run_llm_episode(client, EndpointConfig{}, e, {});
  CHECK(res.record.n_check == 1);
  CHECK(res.record.t_confirm == doctest::Approx(60.0).epsilon(1e-3));
  CHECK(res.invalid_actions == 0);
  REQUIRE(client.requests.size() == 2);
  const auto& msgs = client.requests[1]["messages"];
  CHECK(msgs.size() == 4);
  CHECK(msgs[2]["role"] == "assistant");
  CHECK(msgs[3]["role"] == "tool");
  CHECK(msgs[3]["content"] == "Execution successful. Time has passed.");
  CHECK(res.transcript.messages.back().content == "Status: DONE...");
}

TEST_CASE("invalid actions are answered and retried") {
  ScriptedClient client({tool_call_response("rm -rf /", 1), text_response("I will wait.", 2),
                         tool_call_response("time.sleep(60)", 3), tool_call_response("check()", 4)});
  auto e = testsupport::forced_episode(default_actions()[2], 55.0);
  const auto res = run_llm_episode(client, EndpointConfig{}, e, {});
  CHECK(res.invalid_actions == 2);
  CHECK(res.record.n_check == 1);
  const auto& msgs = client.requests[2]["messages"];
  CHECK(msgs[3]["role"] == "tool");
  CHECK(msgs[3]["content"] == "Invalid action: unrecognized action");
  CHECK(msgs[5]["role"] == "user");
  CHECK(msgs[5]["content"] == "Invalid action: no tool call in response");
}

TEST_CASE("too many consecutive invalid actions abort the episode") {
  EndpointConfig ep;
  ep.max_retries = 2;
  ScriptedClient client(std::vector<nlohmann::json>(3, tool_call_response("nope")));
  auto e = testsupport::forced_episode(default_actions()[0], 30.0);
  CHECK_THROWS_AS(run_llm_episode(client, ep, e, {}), EndpointError);
  CHECK(e.status() == EpisodeStatus::Aborted);
}

TEST_CASE("model turn budget") {
  EndpointConfig ep;
  ep.max_moves = 6;
  std::vector<nlohmann::json> script;
  for (int i = 0; i < 6; ++i) script.push_back(tool_call_response(i % 2 ? "check()" : "time.sleep(1)"));
  ScriptedClient client(script);
  auto e = testsupport::forced_episode(default_actions()[0], 30.0);
  CHECK_THROWS_AS(run_llm_episode(client, ep, e, {}), BudgetExceededError);
  CHECK(e.status() == EpisodeStatus::Aborted);
  CHECK(e.aborted_summary().n_check == 3);
}

TEST_CASE("endpoint config parsing") {
  const auto ep = endpoint_from_json({{"base_url", "http://localhost:9/v1"}, {"max_retries", 1}});
  CHECK(ep.base_url == "http://localhost:9/v1");
  CHECK(ep.max_retries == 1);
  CHECK(ep.model == "gpt-4o-mini");
  CHECK_THROWS_AS(endpoint_from_json({{"max_in_flight", 0}}), ConfigError);
  CHECK_THROWS_AS(endpoint_from_json({{"timeout_s", "fast"}}), ConfigError);
}

TEST_CASE("http client retries server errors and sends the bearer token") {
  httplib::Server server;
  std::atomic<int> hits{0};
  std::string auth;
  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    if (hits++ == 0) {
      res.status = 503;
      return;
    }
    auth = req.get_header_value("Authorization");
    res.set_content(tool_call_response("check()").dump(), "application/json");
  });
  server.Post("/bad/chat/completions", [](const httplib::Request&, httplib::Response& res) {
    res.status = 400;
    res.set_content("bad request", "text/plain");
  });
  const int port = server.bind_to_any_port("127.0.0.1");
  std::thread t([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  ::setenv("CHRONOALIGN_TEST_TOKEN", "sekret", 1);
  EndpointConfig ep;
  ep.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1/";
  ep.token_env = "CHRONOALIGN_TEST_TOKEN";
  ep.max_retries = 2;
  HttpChatClient client(ep);
  const auto r = client.complete({{"model", "m"}});
  CHECK(hits == 2);
  CHECK(auth == "Bearer sekret");
  CHECK(parse_response(r).tool_call);

  ep.base_url = "http://127.0.0.1:" + std::to_string(port) + "/bad";
  HttpChatClient bad(ep);
  CHECK_THROWS_AS(bad.complete({{"model", "m"}}), EndpointError);

  server.stop();
  t.join();

  ep.max_retries = 0;
  ep.timeout_s = 1.0;
  HttpChatClient gone(ep);
  CHECK_THROWS_AS(gone.complete({{"model", "m"}}), EndpointError);
}
