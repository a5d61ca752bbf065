#pragma once

#include <filesystem>
#include <map>
#include <string>

#include "referee/judge.hpp"

namespace referee {

struct JudgeRequest {
  std::string system_text;
  std::string user_text;
  size_t segment_index = 0;
  CriterionId criterion = CriterionId::C1_Name;
  std::string sample_id;
};

class ModelBackend {
 public:
  virtual ~ModelBackend() = default;
  // Returns the raw model reply for one request. Throws Error(Backend) on
  // transport failure; never fabricates a verdict.
  virtual std::string complete(const JudgeRequest& request, const ModelConfig& config) = 0;
};

// POST {endpoint}/chat/completions with the common chat-completions JSON
// body; bearer auth from config.api_key (typically env REFEREE_API_KEY).
// Retries rate-limit responses with exponential backoff.
class HttpChatBackend : public ModelBackend {
 public:
  std::string complete(const JudgeRequest& request, const ModelConfig& config) override;
};

// Scripted replay backend. Keys: "<segment_index>:<criterion>" and, when a
// sample id is present, "<sample_id>:<segment_index>:<criterion>" takes
// precedence. Missing keys throw Error(BadFixture).
class StubBackend : public ModelBackend {
 public:
  explicit StubBackend(std::map<std::string, std::string> verdicts)
      : verdicts_(std::move(verdicts)) {}
  static StubBackend from_file(const std::filesystem::path& path);
  static StubBackend from_json_text(const std::string& text);

  std::string complete(const JudgeRequest& request, const ModelConfig& config) override;

 private:
  std::map<std::string, std::string> verdicts_;
};

}  // namespace referee
