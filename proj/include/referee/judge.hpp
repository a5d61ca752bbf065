#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "referee/segment.hpp"

namespace referee {

enum class CriterionId { C1_Name, C2_Type, C3_Functionality, C4_ContextIrrelevant };

struct Criterion {
  CriterionId id;
  std::string_view key;        // "C1".."C4"
  std::string_view title;      // display name
  std::string_view definition; // verbatim criterion text
};

const std::array<Criterion, 4>& criteria();
const Criterion& criterion(CriterionId id);
std::optional<CriterionId> criterion_from_key(std::string_view key) noexcept;

struct ModelConfig {
  std::string endpoint;
  std::string model_id;
  double temperature = 0.1;
  double top_p = 0.9;
  int top_k = 50;
  int max_new_tokens = 4;
  int max_retries = 3;
  double timeout_seconds = 30.0;
  int max_in_flight = 4;
  // The common chat-completions wire format has no top_k field; it is sent
  // only when the caller opts in for an endpoint that accepts it.
  bool send_top_k = false;
  std::string api_key;
};

// The two prompt slots the context occupies. related_information empty means
// the no-related-information template variant is used.
struct JudgeContext {
  std::string related_information;
  std::string input_code;
  std::string sample_id; // optional routing key for replay backends
};

struct PromptPair {
  std::string system_text;
  std::string user_text;
};

PromptPair render_prompt(const Criterion& criterion, const JudgeContext& context,
                         const Segment& segment);

// Accepts a response iff, after trimming whitespace and leading
// punctuation/markdown and an optional "score" prefix, it starts with a bare
// binary token. Returns nullopt otherwise.
std::optional<int> parse_verdict_token(std::string_view raw);

struct Verdict {
  size_t segment_index = 0;
  CriterionId criterion = CriterionId::C1_Name;
  int pass_flag = 1;       // 0 = inconsistency detected
  std::string raw_response;
  int attempts = 0;
};

struct VerdictMatrix {
  std::vector<std::array<Verdict, 4>> rows; // criterion order C1..C4
  size_t n_segments() const { return rows.size(); }
};

class ModelBackend;

Verdict judge_segment(const Segment& segment, const JudgeContext& context,
                      const Criterion& criterion, ModelBackend& backend,
                      const ModelConfig& config);

VerdictMatrix judge_summary(const std::vector<Segment>& segments,
                            const JudgeContext& context, ModelBackend& backend,
                            const ModelConfig& config);

}  // namespace referee
