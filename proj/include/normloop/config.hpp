#pragma once

// Key-value config with TOML-style sections:
//
//   [generation]
//   kind = "http_chat"
//   endpoint_url = "https://api.openai.com/v1/chat/completions"
//   model_id = "gpt-4"
//   credential_env_var = "OPENAI_API_KEY"
//
//   [verification]
//   kind = "scripted"
//   script_path = "session.script"

#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "normloop/llm_client.hpp"

namespace normloop {

struct LlmConfig {
  std::optional<BackendConfig> generation;
  std::optional<BackendConfig> verification;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline std::string unquote(const std::string& v) {
  if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front())
    return v.substr(1, v.size() - 2);
  return v;
}

inline BackendConfig backend_from_keys(const std::string& section, const std::map<std::string, std::string>& kv) {
  BackendConfig c;
  auto where = [&](const std::string& key) { return "[" + section + "] " + key; };
  auto number = [&](const std::string& key, auto fallback) {
    auto it = kv.find(key);
    if (it == kv.end()) return fallback;
    try {
      std::size_t used = 0;
      const double v = std::stod(it->second, &used);
      if (used != it->second.size()) throw std::invalid_argument(key);
      return static_cast<decltype(fallback)>(v);
    } catch (const std::exception&) {
      throw InvalidArgument("config " + where(key) + " must be a number");
    }
  };
  auto text = [&](const std::string& key) {
    auto it = kv.find(key);
    return it == kv.end() ? std::string{} : it->second;
  };
  const std::string kind = to_lower(text("kind"));
  if (kind == "http_chat" || kind == "http") c.kind = BackendKind::HttpChat;
  else if (kind == "scripted" || kind.empty()) c.kind = BackendKind::Scripted;
  else throw InvalidArgument("config " + where("kind") + " must be http_chat or scripted");
  c.endpoint_url = text("endpoint_url");
  c.model_id = text("model_id");
  c.credential_env_var = text("credential_env_var");
  c.script_path = text("script_path");
  c.record_path = text("record_path");
  c.keyed = to_lower(text("keyed")) == "true";
  c.retry.max_attempts = number("max_attempts", c.retry.max_attempts);
  c.retry.base_backoff_ms = number("base_backoff_ms", c.retry.base_backoff_ms);
  c.requests_per_minute = number("requests_per_minute", c.requests_per_minute);
  c.temperature = number("temperature", c.temperature);
  c.max_output_tokens = number("max_output_tokens", c.max_output_tokens);
  c.timeout_ms = number("timeout_ms", c.timeout_ms);
  static const char* known[] = {"kind", "endpoint_url", "model_id", "credential_env_var", "script_path",
                                "record_path", "keyed", "max_attempts", "base_backoff_ms", "requests_per_minute",
                                "temperature", "max_output_tokens", "timeout_ms"};
  for (const auto& [k, v] : kv)
    if (std::find(std::begin(known), std::end(known), k) == std::end(known))
      throw InvalidArgument("config " + where(k) + " is not a recognized key");
  validate_config(c);
  return c;
}

}  // namespace detail

// Relative script/record paths resolve against `base_dir` when given.
inline LlmConfig parse_llm_config(std::string_view text, const std::string& base_dir = {}) {
  std::map<std::string, std::map<std::string, std::string>> sections;
  std::string current;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string t = detail::trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw InvalidArgument("config line " + std::to_string(lineno) + ": malformed section header");
      current = to_lower(detail::trim(t.substr(1, t.size() - 2)));
      if (current != "generation" && current != "verification")
        throw InvalidArgument("config line " + std::to_string(lineno) + ": unknown section [" + current + "]");
      sections[current];
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos || current.empty())
      throw InvalidArgument("config line " + std::to_string(lineno) + ": expected key = value inside a section");
    std::string value = detail::trim(t.substr(eq + 1));
    if (!value.empty() && value.front() != '"' && value.front() != '\'') {
      if (auto hash = value.find('#'); hash != std::string::npos) value = detail::trim(value.substr(0, hash));
    }
    sections[current][to_lower(detail::trim(t.substr(0, eq)))] = detail::unquote(value);
  }
  auto resolve = [&](std::string& p) {
    if (!p.empty() && p.front() != '/' && !base_dir.empty()) p = base_dir + "/" + p;
  };
  LlmConfig cfg;
  for (auto& [name, kv] : sections) {
    auto c = detail::backend_from_keys(name, kv);
    resolve(c.script_path);
    resolve(c.record_path);
    (name == "generation" ? cfg.generation : cfg.verification) = std::move(c);
  }
  return cfg;
}

inline LlmConfig load_llm_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot read config file " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  const auto slash = path.find_last_of('/');
  return parse_llm_config(ss.str(), slash == std::string::npos ? std::string{} : path.substr(0, slash));
}

}  // namespace normloop
