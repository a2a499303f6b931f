#include <gtest/gtest.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <thread>

#include "normloop/llm_client.hpp"

using namespace normloop;

namespace {

ChatRequest hello(const std::string& text = "hello") { return {"test-model", {{ChatRole::User, text}}, 0.0, 64}; }

std::string temp_path(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("normloop_llm_" + std::to_string(::getpid()) + "_" + name);
  std::filesystem::remove(p);
  return p.string();
}

// Local chat endpoint answering from a list of (status, body) pairs in order.
class FakeEndpoint {
 public:
  explicit FakeEndpoint(std::vector<std::pair<int, std::string>> replies) : replies_(std::move(replies)) {
    server_.Post("/v1/chat", [this](const httplib::Request& req, httplib::Response& res) {
      last_auth_ = req.get_header_value("Authorization");
      last_body_ = req.body;
      const std::size_t i = std::min(calls_++, replies_.size() - 1);
      res.status = replies_[i].first;
      res.set_content(replies_[i].second, "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeEndpoint() {
    server_.stop();
    thread_.join();
  }

  BackendConfig config() const {
    BackendConfig c;
    c.kind = BackendKind::HttpChat;
    c.endpoint_url = "http://127.0.0.1:" + std::to_string(port_) + "/v1/chat";
    c.model_id = "test-model";
    c.credential_env_var = "NORMLOOP_TEST_KEY";
    c.timeout_ms = 5000;
    return c;
  }

  std::size_t calls() const { return calls_; }
  const std::string& last_auth() const { return last_auth_; }
  const std::string& last_body() const { return last_body_; }

 private:
  httplib::Server server_;
  std::vector<std::pair<int, std::string>> replies_;
  std::atomic<std::size_t> calls_{0};
  std::string last_auth_;
  std::string last_body_;
  int port_ = 0;
  std::thread thread_;
};

const std::string kOk = R"({"choices":[{"message":{"role":"assistant","content":"pong"}}],"usage":{"prompt_tokens":7,"completion_tokens":1}})";

struct RecordingSleeper {
  std::vector<long> delays;
  HttpChatBackend::Sleeper fn() {
    return [this](std::chrono::milliseconds d) { delays.push_back(static_cast<long>(d.count())); };
  }
};

class WithKey : public ::testing::Test {
 protected:
  void SetUp() override { ::setenv("NORMLOOP_TEST_KEY", "sk-test", 1); }
  void TearDown() override { ::unsetenv("NORMLOOP_TEST_KEY"); }
};

}  // namespace

TEST(Digest, KnownSha256AndBase64) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(base64_encode("hello"), "aGVsbG8=");
  for (std::string s : {"", "a", "ab", "abc", "line\nbreak \xff\x00 bytes"}) EXPECT_EQ(base64_decode(base64_encode(s)), s);
  EXPECT_THROW(base64_decode("abc"), InvalidArgument);
}

TEST(Digest, RequestDigestCoversEveryField) {
  const auto base = request_digest(hello());
  auto r = hello();
  r.temperature = 0.5;
  EXPECT_NE(request_digest(r), base);
  r = hello();
  r.model_id = "other";
  EXPECT_NE(request_digest(r), base);
  EXPECT_EQ(request_digest(hello()), base);
}

TEST(Retry, ExponentialBackoffWithCap) {
  RetryPolicy p{6, 500, 1500};
  EXPECT_EQ(p.delay_before(2).count(), 500);
  EXPECT_EQ(p.delay_before(3).count(), 1000);
  EXPECT_EQ(p.delay_before(4).count(), 1500);
  EXPECT_EQ(p.delay_before(6).count(), 1500);
}

TEST(Validation, RequestsAndConfigs) {
  ChatRequest r = hello();
  r.messages.back().role = ChatRole::Assistant;
  EXPECT_THROW(validate_request(r), InvalidArgument);
  EXPECT_THROW(validate_request(ChatRequest{}), InvalidArgument);
  BackendConfig c;
  c.kind = BackendKind::HttpChat;
  EXPECT_THROW(validate_config(c), InvalidArgument);
  c.kind = BackendKind::Scripted;
  EXPECT_THROW(validate_config(c), InvalidArgument);
}

TEST(Scripted, SequentialReplayAndExhaustion) {
  const std::string path = temp_path("seq.script");
  record(hello("a"), {"first", std::nullopt, 0}, path);
  record(hello("b"), {"", std::nullopt, 0}, path);
  ScriptedBackend s(path);
  EXPECT_FALSE(s.keyed());
  EXPECT_EQ(s.complete(hello("anything")).content, "first");
  EXPECT_EQ(s.complete(hello("else")).content, "");
  EXPECT_THROW(s.complete(hello()), ScriptExhausted);
  std::filesystem::remove(path);
}

TEST(Scripted, KeyedReplayMatchesByDigest) {
  const std::string path = temp_path("keyed.script");
  { std::ofstream(path) << "# mode: keyed\n"; }
  record(hello("a"), {"for a", std::nullopt, 0}, path);
  record(hello("b"), {"for b", std::nullopt, 0}, path);
  ScriptedBackend s(path);
  EXPECT_TRUE(s.keyed());
  EXPECT_EQ(s.complete(hello("b")).content, "for b");
  EXPECT_THROW(s.complete(hello("c")), ScriptMismatch);
  EXPECT_EQ(s.complete(hello("a")).content, "for a");
  EXPECT_THROW(s.complete(hello("a")), ScriptExhausted);
  std::filesystem::remove(path);
}

TEST(Scripted, MalformedScriptsAreRejected) {
  const std::string path = temp_path("bad.script");
  { std::ofstream(path) << "no-space-here\n"; }
  EXPECT_THROW(ScriptedBackend{path}, InvalidArgument);
  EXPECT_THROW(ScriptedBackend{temp_path("missing.script")}, InvalidArgument);
  std::filesystem::remove(path);
}

TEST(Http, MissingCredentialFailsBeforeAnyRequest) {
  ::unsetenv("NORMLOOP_TEST_KEY");
  FakeEndpoint endpoint({{200, kOk}});
  HttpChatBackend backend(endpoint.config());
  EXPECT_THROW(backend.complete(hello()), CredentialMissing);
  EXPECT_EQ(endpoint.calls(), 0u);
}

TEST_F(WithKey, HttpSuccessParsesReplyAndUsage) {
  FakeEndpoint endpoint({{200, kOk}});
  HttpChatBackend backend(endpoint.config());
  const auto r = backend.complete(hello("ping"));
  EXPECT_EQ(r.content, "pong");
  ASSERT_TRUE(r.usage.has_value());
  EXPECT_EQ(r.usage->prompt_tokens, 7);
  EXPECT_EQ(endpoint.last_auth(), "Bearer sk-test");
  const auto body = nlohmann::json::parse(endpoint.last_body());
  EXPECT_EQ(body["model"], "test-model");
  EXPECT_EQ(body["messages"][0]["content"], "ping");
  EXPECT_EQ(body["max_tokens"], 64);
}

TEST_F(WithKey, HttpRetriesTransientStatuses) {
  FakeEndpoint endpoint({{503, "{}"}, {429, "{}"}, {200, kOk}});
  RecordingSleeper sleeper;
  HttpChatBackend backend(endpoint.config(), sleeper.fn());
  EXPECT_EQ(backend.complete(hello()).content, "pong");
  EXPECT_EQ(endpoint.calls(), 3u);
  EXPECT_EQ(sleeper.delays, (std::vector<long>{500, 1000}));
}

TEST_F(WithKey, HttpGivesUpAfterMaxAttempts) {
  FakeEndpoint endpoint({{500, "{}"}});
  RecordingSleeper sleeper;
  HttpChatBackend backend(endpoint.config(), sleeper.fn());
  try {
    backend.complete(hello());
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 4);
    EXPECT_EQ(e.last_status(), 500);
  }
  EXPECT_EQ(endpoint.calls(), 4u);
  EXPECT_EQ(sleeper.delays.size(), 3u);
}

TEST_F(WithKey, HttpClientErrorsAreNotRetried) {
  FakeEndpoint endpoint({{401, "{}"}, {200, kOk}});
  HttpChatBackend backend(endpoint.config(), RecordingSleeper{}.fn());
  try {
    backend.complete(hello());
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.attempts(), 1);
    EXPECT_EQ(e.last_status(), 401);
  }
  EXPECT_EQ(endpoint.calls(), 1u);
}

TEST_F(WithKey, HttpMalformedBodyIsATransportError) {
  FakeEndpoint endpoint({{200, R"({"choices": []})"}});
  HttpChatBackend backend(endpoint.config(), RecordingSleeper{}.fn());
  EXPECT_THROW(backend.complete(hello()), TransportError);
}

TEST_F(WithKey, HttpConnectionFailureReportsStatusZero) {
  BackendConfig c;
  c.kind = BackendKind::HttpChat;
  c.endpoint_url = "http://127.0.0.1:1/v1/chat";
  c.credential_env_var = "NORMLOOP_TEST_KEY";
  c.retry.max_attempts = 2;
  c.timeout_ms = 1000;
  HttpChatBackend backend(c, RecordingSleeper{}.fn());
  try {
    backend.complete(hello());
    FAIL() << "expected TransportError";
  } catch (const TransportError& e) {
    EXPECT_EQ(e.last_status(), 0);
    EXPECT_EQ(e.attempts(), 2);
  }
}

TEST_F(WithKey, RecordingThenKeyedReplay) {
  const std::string path = temp_path("recorded.script");
  FakeEndpoint endpoint({{200, kOk}});
  auto config = endpoint.config();
  config.record_path = path;
  auto live = make_backend(config);
  EXPECT_EQ(live->complete(hello("x")).content, "pong");
  EXPECT_EQ(live->complete(hello("y")).content, "pong");

  ::unsetenv("NORMLOOP_TEST_KEY");
  BackendConfig replay;
  replay.script_path = path;
  replay.keyed = true;
  auto scripted = make_backend(replay);
  EXPECT_EQ(scripted->complete(hello("y")).content, "pong");
  EXPECT_EQ(scripted->complete(hello("x")).content, "pong");
  EXPECT_EQ(endpoint.calls(), 2u);
  std::filesystem::remove(path);
}
