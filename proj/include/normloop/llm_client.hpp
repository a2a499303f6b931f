#pragma once

// Provider-agnostic chat-completion client. HTTP_CHAT speaks the
// OpenAI-compatible chat-completions shape; SCRIPTED replays a recorded
// session with no network activity.
//
// Script files hold one exchange per line: "<sha256-hex of request> <base64 reply>".
// Lines starting with '#' are comments; "# mode: keyed" switches replay from
// file order to lookup by request digest.

#include <openssl/evp.h>

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "normloop/error.hpp"
#include "normloop/schema.hpp"

namespace normloop {

enum class ChatRole { System, User, Assistant };

inline std::string to_string(ChatRole r) {
  switch (r) {
    case ChatRole::System: return "system";
    case ChatRole::User: return "user";
    case ChatRole::Assistant: return "assistant";
  }
  return "user";
}

struct ChatMessage {
  ChatRole role = ChatRole::User;
  std::string content;
  bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
  std::string model_id;
  std::vector<ChatMessage> messages;
  double temperature = 0.0;
  int max_output_tokens = 2048;
};

struct TokenUsage {
  long prompt_tokens = 0;
  long completion_tokens = 0;
  bool operator==(const TokenUsage&) const = default;
};

struct ChatResponse {
  std::string content;
  std::optional<TokenUsage> usage;
  long latency_ms = 0;
};

enum class BackendKind { HttpChat, Scripted };

struct RetryPolicy {
  int max_attempts = 4;
  long base_backoff_ms = 500;
  long max_backoff_ms = 60'000;

  // Delay before attempt `attempt` (2-based); doubles each time, capped.
  std::chrono::milliseconds delay_before(int attempt) const {
    long d = base_backoff_ms;
    for (int i = 2; i < attempt && d < max_backoff_ms; ++i) d *= 2;
    return std::chrono::milliseconds(std::min(d, max_backoff_ms));
  }
};

struct BackendConfig {
  BackendKind kind = BackendKind::Scripted;
  std::string endpoint_url;
  std::string model_id;
  std::string credential_env_var;
  RetryPolicy retry;
  std::string script_path;
  bool keyed = false;
  double requests_per_minute = 0;  // 0: unlimited
  double temperature = 0.0;
  int max_output_tokens = 2048;
  long timeout_ms = 120'000;
  std::string record_path;  // HTTP_CHAT only: append every exchange here
};

inline void validate_config(const BackendConfig& c) {
  if (c.kind == BackendKind::HttpChat) {
    if (c.endpoint_url.empty()) throw InvalidArgument("HTTP_CHAT backend needs endpoint_url");
    if (c.credential_env_var.empty()) throw InvalidArgument("HTTP_CHAT backend needs credential_env_var");
  } else if (c.script_path.empty()) {
    throw InvalidArgument("SCRIPTED backend needs script_path");
  }
  if (c.retry.max_attempts < 1) throw InvalidArgument("retry max_attempts must be >= 1");
  if (c.retry.base_backoff_ms < 0) throw InvalidArgument("retry base_backoff_ms must be >= 0");
  if (c.temperature < 0) throw InvalidArgument("temperature must be >= 0");
  if (c.max_output_tokens <= 0) throw InvalidArgument("max_output_tokens must be > 0");
}

inline void validate_request(const ChatRequest& r) {
  if (r.messages.empty()) throw InvalidArgument("chat request needs at least one message");
  if (r.messages.back().role != ChatRole::User) throw InvalidArgument("the last chat message must come from the user");
  if (r.temperature < 0) throw InvalidArgument("temperature must be >= 0");
  if (r.max_output_tokens <= 0) throw InvalidArgument("max_output_tokens must be > 0");
}

// ---------------------------------------------------------------------------
// Digests and encoding
// ---------------------------------------------------------------------------

inline std::string sha256_hex(std::string_view data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xF];
  }
  return out;
}

inline std::string base64_encode(std::string_view data) {
  std::string out(4 * ((data.size() + 2) / 3), '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(data.data()), static_cast<int>(data.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

inline std::string base64_decode(std::string_view data) {
  if (data.size() % 4 != 0) throw InvalidArgument("malformed base64 payload");
  std::string out(3 * data.size() / 4, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(data.data()), static_cast<int>(data.size()));
  if (n < 0) throw InvalidArgument("malformed base64 payload");
  std::size_t len = static_cast<std::size_t>(n);
  if (!data.empty() && data.back() == '=') --len;
  if (data.size() > 1 && data[data.size() - 2] == '=') --len;
  out.resize(len);
  return out;
}

inline nlohmann::ordered_json request_body(const ChatRequest& r) {
  nlohmann::ordered_json j;
  j["model"] = r.model_id;
  j["messages"] = nlohmann::ordered_json::array();
  for (const auto& m : r.messages) j["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  j["temperature"] = r.temperature;
  j["max_tokens"] = r.max_output_tokens;
  return j;
}

inline std::string request_digest(const ChatRequest& r) { return sha256_hex(request_body(r).dump()); }

// ---------------------------------------------------------------------------
// Backends
// ---------------------------------------------------------------------------

class ChatBackend {
 public:
  virtual ~ChatBackend() = default;
  virtual ChatResponse complete(const ChatRequest& request) = 0;
};

// Appends one exchange to a script file.
inline void record(const ChatRequest& request, const ChatResponse& response, const std::string& script_path) {
  std::ofstream out(script_path, std::ios::app | std::ios::binary);
  if (!out) throw Error("cannot open script file " + script_path + " for writing");
  out << request_digest(request) << ' ' << base64_encode(response.content) << '\n';
  if (!out) throw Error("failed writing script file " + script_path);
}

class ScriptedBackend : public ChatBackend {
 public:
  struct Entry {
    std::string digest;
    std::string content;
  };

  explicit ScriptedBackend(const std::string& script_path, bool keyed = false) : keyed_(keyed) {
    std::ifstream in(script_path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read script file " + script_path);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.front() == '#') {
        if (line.find("mode: keyed") != std::string::npos) keyed_ = true;
        continue;
      }
      const auto sp = line.find(' ');
      if (sp == std::string::npos) throw InvalidArgument(script_path + ":" + std::to_string(lineno) + ": malformed record");
      entries_.push_back({line.substr(0, sp), base64_decode(line.substr(sp + 1))});
    }
    used_.assign(entries_.size(), false);
  }

  ScriptedBackend(std::vector<Entry> entries, bool keyed)
      : entries_(std::move(entries)), used_(entries_.size(), false), keyed_(keyed) {}

  ChatResponse complete(const ChatRequest& request) override {
    validate_request(request);
    std::lock_guard lock(mutex_);
    if (!keyed_) {
      if (next_ >= entries_.size())
        throw ScriptExhausted("scripted session exhausted after " + std::to_string(entries_.size()) + " replies");
      used_[next_] = true;
      return {entries_[next_++].content, std::nullopt, 0};
    }
    const std::string digest = request_digest(request);
    for (std::size_t i = 0; i < entries_.size(); ++i) {
      if (used_[i] || entries_[i].digest != digest) continue;
      used_[i] = true;
      ++next_;
      return {entries_[i].content, std::nullopt, 0};
    }
    if (next_ >= entries_.size())
      throw ScriptExhausted("scripted session exhausted after " + std::to_string(entries_.size()) + " replies");
    throw ScriptMismatch("no recorded reply for request digest " + digest);
  }

  bool keyed() const { return keyed_; }

  std::size_t remaining() const {
    std::lock_guard lock(mutex_);
    return entries_.size() - next_;
  }

 private:
  std::vector<Entry> entries_;
  std::vector<bool> used_;
  std::size_t next_ = 0;
  bool keyed_;
  mutable std::mutex mutex_;
};

// Token bucket refilled at requests_per_minute; capacity one minute's worth.
class RateLimiter {
 public:
  explicit RateLimiter(double requests_per_minute) : rate_per_ms_(requests_per_minute / 60'000.0) {
    capacity_ = std::max(1.0, requests_per_minute);
    tokens_ = capacity_;
  }

  void acquire() {
    if (rate_per_ms_ <= 0) return;
    std::unique_lock lock(mutex_);
    while (true) {
      refill();
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
      const auto wait = std::chrono::milliseconds(static_cast<long>((1.0 - tokens_) / rate_per_ms_) + 1);
      lock.unlock();
      std::this_thread::sleep_for(wait);
      lock.lock();
    }
  }

 private:
  void refill() {
    const auto now = std::chrono::steady_clock::now();
    const double elapsed = std::chrono::duration<double, std::milli>(now - last_).count();
    tokens_ = std::min(capacity_, tokens_ + elapsed * rate_per_ms_);
    last_ = now;
  }

  double rate_per_ms_;
  double capacity_ = 1;
  double tokens_ = 1;
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
  std::mutex mutex_;
};

class HttpChatBackend : public ChatBackend {
 public:
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit HttpChatBackend(BackendConfig config, Sleeper sleeper = default_sleeper())
      : config_(std::move(config)), limiter_(config_.requests_per_minute), sleep_(std::move(sleeper)) {
    if (config_.kind != BackendKind::HttpChat) throw InvalidArgument("HttpChatBackend needs an HTTP_CHAT config");
    validate_config(config_);
    split_url(config_.endpoint_url, base_, path_);
  }

  ChatResponse complete(const ChatRequest& request) override {
    validate_request(request);
    const char* key = std::getenv(config_.credential_env_var.c_str());
    if (key == nullptr || *key == '\0') throw CredentialMissing(config_.credential_env_var);

    const std::string body = request_body(request).dump();
    httplib::Headers headers{{"Authorization", std::string("Bearer ") + key}};
    int last_status = 0;
    std::string last_problem;
    for (int attempt = 1; attempt <= config_.retry.max_attempts; ++attempt) {
      if (attempt > 1) sleep_(config_.retry.delay_before(attempt));
      limiter_.acquire();
      httplib::Client client(base_);
      const auto timeout = std::chrono::milliseconds(config_.timeout_ms);
      client.set_connection_timeout(timeout);
      client.set_read_timeout(timeout);
      client.set_write_timeout(timeout);
      const auto started = std::chrono::steady_clock::now();
      auto res = client.Post(path_, headers, body, "application/json");
      const long latency = static_cast<long>(
          std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count());
      if (!res) {
        last_status = 0;
        last_problem = httplib::to_string(res.error());
        continue;
      }
      last_status = res->status;
      if (res->status == 429 || res->status >= 500) {
        last_problem = "HTTP " + std::to_string(res->status);
        continue;
      }
      if (res->status != 200)
        throw TransportError("chat endpoint returned HTTP " + std::to_string(res->status), attempt, res->status);
      return parse_response(res->body, latency, attempt);
    }
    throw TransportError("chat request failed after " + std::to_string(config_.retry.max_attempts) +
                             " attempts: " + last_problem,
                         config_.retry.max_attempts, last_status);
  }

  static Sleeper default_sleeper() {
    return [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
  }

 private:
  static void split_url(const std::string& url, std::string& base, std::string& path) {
    const auto scheme = url.find("://");
    const auto slash = url.find('/', scheme == std::string::npos ? 0 : scheme + 3);
    base = slash == std::string::npos ? url : url.substr(0, slash);
    path = slash == std::string::npos ? "/" : url.substr(slash);
  }

  static ChatResponse parse_response(const std::string& body, long latency, int attempt) {
    try {
      const auto j = nlohmann::json::parse(body);
      ChatResponse r;
      r.content = j.at("choices").at(0).at("message").at("content").get<std::string>();
      r.latency_ms = latency;
      if (j.contains("usage") && j["usage"].is_object())
        r.usage = TokenUsage{j["usage"].value("prompt_tokens", 0L), j["usage"].value("completion_tokens", 0L)};
      return r;
    } catch (const nlohmann::json::exception& e) {
      throw TransportError(std::string("malformed chat response: ") + e.what(), attempt, 200);
    }
  }

  BackendConfig config_;
  RateLimiter limiter_;
  Sleeper sleep_;
  std::string base_;
  std::string path_;
};

// Forwards to another backend and appends every exchange to a script file.
class RecordingBackend : public ChatBackend {
 public:
  RecordingBackend(std::shared_ptr<ChatBackend> inner, std::string script_path)
      : inner_(std::move(inner)), path_(std::move(script_path)) {}

  ChatResponse complete(const ChatRequest& request) override {
    auto response = inner_->complete(request);
    std::lock_guard lock(mutex_);
    record(request, response, path_);
    return response;
  }

 private:
  std::shared_ptr<ChatBackend> inner_;
  std::string path_;
  std::mutex mutex_;
};

inline std::shared_ptr<ChatBackend> make_backend(const BackendConfig& config) {
  validate_config(config);
  if (config.kind == BackendKind::Scripted) return std::make_shared<ScriptedBackend>(config.script_path, config.keyed);
  std::shared_ptr<ChatBackend> http = std::make_shared<HttpChatBackend>(config);
  if (!config.record_path.empty()) return std::make_shared<RecordingBackend>(http, config.record_path);
  return http;
}

// One-shot convenience: builds a backend for `config` and sends one request.
// Scripted replay state does not persist across calls; hold a backend from
// make_backend() for multi-turn sessions.
inline ChatResponse complete(const ChatRequest& request, const BackendConfig& config) {
  return make_backend(config)->complete(request);
}

}  // namespace normloop
