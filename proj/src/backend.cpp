#include "referee/backend.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <thread>

#include "referee/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace referee {

namespace {

using nlohmann::json;

std::string criterion_key(CriterionId id) {
  return std::string(criterion(id).key);
}

// Splits "http://host:port/prefix" into client base and path prefix.
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  size_t scheme = endpoint.find("://");
  if (scheme == std::string::npos)
    fail(ErrCode::BadRequest, "endpoint must include a scheme: " + endpoint);
  size_t path = endpoint.find('/', scheme + 3);
  if (path == std::string::npos) return {endpoint, ""};
  std::string prefix = endpoint.substr(path);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();
  return {endpoint.substr(0, path), prefix};
}

}  // namespace

std::string HttpChatBackend::complete(const JudgeRequest& request,
                                      const ModelConfig& config) {
  if (config.endpoint.empty())
    fail(ErrCode::BadRequest, "no endpoint configured for HTTP backend");

  auto [base, prefix] = split_endpoint(config.endpoint);
  httplib::Client client(base);
  int timeout_s = std::max(1, static_cast<int>(std::ceil(config.timeout_seconds)));
  client.set_connection_timeout(timeout_s, 0);
  client.set_read_timeout(timeout_s, 0);
  client.set_write_timeout(timeout_s, 0);

  httplib::Headers headers;
  if (!config.api_key.empty())
    headers.emplace("Authorization", "Bearer " + config.api_key);

  json body{
      {"model", config.model_id},
      {"messages",
       json::array({{{"role", "system"}, {"content", request.system_text}},
                    {{"role", "user"}, {"content", request.user_text}}})},
      {"temperature", config.temperature},
      {"top_p", config.top_p},
      {"max_tokens", config.max_new_tokens},
  };
  if (config.send_top_k) body["top_k"] = config.top_k;
  std::string payload = body.dump();

  constexpr int kRateLimitRetries = 5;
  std::string path = prefix + "/chat/completions";
  for (int attempt = 0;; ++attempt) {
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      fail(ErrCode::Backend, "request to " + config.endpoint +
                                 " failed: " + httplib::to_string(res.error()));
    }
    if (res->status == 429 || res->status == 503) {
      if (attempt >= kRateLimitRetries)
        fail(ErrCode::Backend, "rate limited after " +
                                   std::to_string(attempt + 1) + " attempts");
      auto delay = std::chrono::milliseconds(250 * (1 << attempt));
      std::this_thread::sleep_for(delay);
      continue;
    }
    if (res->status != 200) {
      fail(ErrCode::Backend, "HTTP " + std::to_string(res->status) + " from " +
                                 config.endpoint + ": " + res->body);
    }
    json reply = json::parse(res->body, nullptr, false);
    if (reply.is_discarded())
      fail(ErrCode::Backend, "malformed JSON reply from " + config.endpoint);
    if (!reply.contains("choices") || !reply["choices"].is_array() ||
        reply["choices"].empty())
      fail(ErrCode::Backend, "reply carries no choices");
    const json& message = reply["choices"][0].value("message", json::object());
    if (!message.contains("content") || !message["content"].is_string())
      fail(ErrCode::Backend, "reply carries no message content");
    return message["content"].get<std::string>();
  }
}

StubBackend StubBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrCode::Io, "cannot open stub file: " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  return from_json_text(text);
}

StubBackend StubBackend::from_json_text(const std::string& text) {
  json doc = json::parse(text, nullptr, false);
  if (doc.is_discarded())
    fail(ErrCode::BadFixture, "stub file is not valid JSON");
  if (!doc.contains("verdicts") || !doc["verdicts"].is_object())
    fail(ErrCode::BadFixture, "stub file needs a \"verdicts\" object");
  std::map<std::string, std::string> verdicts;
  for (auto& [key, value] : doc["verdicts"].items()) {
    if (!value.is_string())
      fail(ErrCode::BadFixture, "stub verdict for " + key + " must be a string");
    verdicts[key] = value.get<std::string>();
  }
  return StubBackend(std::move(verdicts));
}

std::string StubBackend::complete(const JudgeRequest& request,
                                  const ModelConfig& config) {
  (void)config;
  std::string suffix =
      std::to_string(request.segment_index) + ":" + criterion_key(request.criterion);
  if (!request.sample_id.empty()) {
    auto it = verdicts_.find(request.sample_id + ":" + suffix);
    if (it != verdicts_.end()) return it->second;
  }
  auto it = verdicts_.find(suffix);
  if (it != verdicts_.end()) return it->second;
  fail(ErrCode::BadFixture, "stub has no verdict for key \"" + suffix + "\"" +
                                (request.sample_id.empty()
                                     ? ""
                                     : " (sample " + request.sample_id + ")"));
}

}  // namespace referee
