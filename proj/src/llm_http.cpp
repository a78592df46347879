#include <cstdlib>

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"
#include "json.hpp"

#include "kinder/baselines.hpp"

namespace kinder {

namespace {

std::string env_or(const char* name, const char* fallback) {
  const char* v = std::getenv(name);
  return v ? v : fallback;
}

}  // namespace

HttpTransport::HttpTransport()
    : url_(env_or("KINDER_LLM_URL", "https://api.openai.com/v1/chat/completions")),
      key_(env_or("KINDER_LLM_API_KEY", "")) {}

std::string HttpTransport::complete(const ChatRequest& req) {
  const std::string payload = req.to_json();
  // Split "scheme://host[:port]/path".
  const auto scheme_end = url_.find("://");
  if (scheme_end == std::string::npos) throw TransportError("bad KINDER_LLM_URL: " + url_, payload, "");
  const auto path_start = url_.find('/', scheme_end + 3);
  const std::string origin = url_.substr(0, path_start);
  const std::string path = path_start == std::string::npos ? "/" : url_.substr(path_start);

  httplib::Client cli(origin);
  cli.set_read_timeout(120, 0);
  httplib::Headers headers;
  if (!key_.empty()) headers.emplace("Authorization", "Bearer " + key_);
  auto res = cli.Post(path, headers, payload, "application/json");
  if (!res) throw TransportError("request failed: " + httplib::to_string(res.error()), payload, "");
  if (res->status != 200) {
    throw TransportError("HTTP " + std::to_string(res->status), payload, res->body);
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const std::exception& e) {
    throw TransportError(std::string("unexpected response body: ") + e.what(), payload, res->body);
  }
}

}  // namespace kinder
