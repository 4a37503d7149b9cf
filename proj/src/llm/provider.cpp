#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <openssl/evp.h>

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "dfjss/llm.hpp"
#include "json.hpp"

namespace dfjss::llm {

using nlohmann::json;

std::string_view to_string(ProviderError::Kind k) {
  switch (k) {
    case ProviderError::Kind::Auth: return "auth";
    case ProviderError::Kind::Timeout: return "timeout";
    case ProviderError::Kind::Malformed: return "malformed reply";
    case ProviderError::Kind::Http: return "http";
    case ProviderError::Kind::MissingReply: return "missing reply";
  }
  return "?";
}

void validate(const ProviderConfig& c) {
  if (c.kind != "mock" && c.kind != "openai") throw std::invalid_argument("provider kind must be mock or openai");
  if (c.retry_budget < 0) throw std::invalid_argument("retry_budget must be non-negative");
  if (!(c.timeout_seconds > 0)) throw std::invalid_argument("timeout_seconds must be positive");
  if (c.max_tokens < 1) throw std::invalid_argument("max_tokens must be positive");
  if (!(c.temperature >= 0 && c.temperature <= 2)) throw std::invalid_argument("temperature must lie in [0, 2]");
  if (c.kind == "mock" && c.mock_dir.empty()) throw std::invalid_argument("mock provider needs mock_dir");
  if (c.kind == "openai" && c.credential_env.empty()) throw std::invalid_argument("credential_env is empty");
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

std::string request_body(const ProviderConfig& config, const std::string& prompt_text) {
  json body = {{"model", config.model},
               {"messages", json::array({{{"role", "user"}, {"content", prompt_text}}})},
               {"temperature", config.temperature},
               {"max_tokens", config.max_tokens}};
  return body.dump();
}

std::string reply_content(const std::string& response_body) {
  json j = json::parse(response_body, nullptr, false);
  if (j.is_discarded()) throw ProviderError(ProviderError::Kind::Malformed, "reply is not JSON");
  try {
    const json& content = j.at("choices").at(0).at("message").at("content");
    if (!content.is_string()) throw ProviderError(ProviderError::Kind::Malformed, "reply content is not a string");
    return content.get<std::string>();
  } catch (const json::exception&) {
    throw ProviderError(ProviderError::Kind::Malformed, "reply lacks choices[0].message.content");
  }
}

// ---------------------------------------------------------------------------

std::string HttpTransport::post(const ProviderConfig& config, const std::string& body, const std::string& api_key) {
  const std::string& url = config.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw ProviderError(ProviderError::Kind::Http, "endpoint needs a scheme: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  const std::string origin = url.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);

  ++attempts_;
  httplib::Client client(origin);
  const auto secs = std::chrono::duration<double>(config.timeout_seconds);
  const auto timeout = std::chrono::duration_cast<std::chrono::microseconds>(secs);
  client.set_connection_timeout(timeout);
  client.set_read_timeout(timeout);
  client.set_write_timeout(timeout);
  httplib::Headers headers = {{"Authorization", "Bearer " + api_key}};
  auto res = client.Post(path, headers, body, "application/json");
  if (!res) {
    const auto err = res.error();
    const auto kind = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read
                          ? ProviderError::Kind::Timeout
                          : ProviderError::Kind::Http;
    throw ProviderError(kind, "request failed: " + httplib::to_string(err));
  }
  if (res->status == 401 || res->status == 403)
    throw ProviderError(ProviderError::Kind::Auth, "provider rejected the credential (HTTP " + std::to_string(res->status) + ")");
  if (res->status == 408 || res->status == 504)
    throw ProviderError(ProviderError::Kind::Timeout, "provider timed out (HTTP " + std::to_string(res->status) + ")");
  if (res->status != 200) throw ProviderError(ProviderError::Kind::Http, "HTTP " + std::to_string(res->status));
  return res->body;
}

std::string MockTransport::post(const ProviderConfig&, const std::string& body, const std::string&) {
  json req = json::parse(body, nullptr, false);
  std::string prompt;
  try {
    prompt = req.at("messages").at(0).at("content").get<std::string>();
  } catch (const json::exception&) {
    throw ProviderError(ProviderError::Kind::Malformed, "mock got a request without a prompt");
  }
  const std::string path = dir_ + "/" + sha256_hex(prompt) + ".txt";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ProviderError(ProviderError::Kind::MissingReply, "no canned reply at " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  json reply = {{"object", "chat.completion"},
                {"model", "mock"},
                {"choices", json::array({{{"index", 0},
                                          {"message", {{"role", "assistant"}, {"content", ss.str()}}},
                                          {"finish_reason", "stop"}}})}};
  return reply.dump();
}

// ---------------------------------------------------------------------------

namespace {

std::mutex audit_mutex;

void audit(const ProviderConfig& config, const json& record) {
  if (config.audit_log.empty()) return;
  const std::string line = record.dump() + "\n";
  std::lock_guard lock(audit_mutex);
  const std::filesystem::path path(config.audit_log);
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::app | std::ios::binary);
  out << line;
}

std::string utc_now() {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

bool retryable(ProviderError::Kind k) { return k == ProviderError::Kind::Timeout || k == ProviderError::Kind::Http; }

}  // namespace

std::string query(const ProviderConfig& config, const PromptSpec& prompt, ChatTransport* transport) {
  validate(config);
  std::string api_key;
  if (config.kind != "mock") {
    const char* key = std::getenv(config.credential_env.c_str());
    if (!key || !*key)
      throw ProviderError(ProviderError::Kind::Auth, "credential variable " + config.credential_env + " is not set");
    api_key = key;
  }

  MockTransport mock(config.mock_dir);
  HttpTransport http;
  ChatTransport& t = transport ? *transport : config.kind == "mock" ? static_cast<ChatTransport&>(mock) : http;

  const std::string body = request_body(config, prompt.text);
  const std::string digest = prompt_digest(prompt);
  for (int attempt = 1;; ++attempt) {
    json record = {{"time", utc_now()},       {"attempt", attempt},   {"provider", config.kind},
                   {"model", config.model},   {"prompt_kind", prompt.kind}, {"prompt_sha256", digest},
                   {"request", body}};
    try {
      std::string content = reply_content(t.post(config, body, api_key));
      record["outcome"] = "ok";
      record["reply"] = content;
      audit(config, record);
      return content;
    } catch (const ProviderError& e) {
      record["outcome"] = std::string(to_string(e.kind()));
      record["error"] = e.what();
      audit(config, record);
      if (!retryable(e.kind()) || attempt > config.retry_budget) {
        if (attempt > 1) {
          throw ProviderError(e.kind(), std::string(e.what()) + " (after " + std::to_string(attempt) + " attempts)");
        }
        throw;
      }
    }
    if (config.retry_backoff_seconds > 0)
      std::this_thread::sleep_for(std::chrono::duration<double>(config.retry_backoff_seconds * attempt));
  }
}

}  // namespace dfjss::llm
