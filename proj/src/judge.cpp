#include "referee/judge.hpp"

#include <atomic>
#include <cctype>
#include <exception>
#include <thread>

#include "referee/backend.hpp"
#include "referee/error.hpp"
#include "referee/prompt_templates.hpp"

namespace referee {

namespace {

constexpr std::string_view kC1Def =
    "The name of a function, class, or variable in the summary does not match "
    "the actual identifier in the input code or mistakenly refers to a "
    "different entity with the same name in the project.";
constexpr std::string_view kC2Def =
    "The described function’s return type or variable type in the summary "
    "is inconsistent with the actual type in the input code or in directly "
    "dependent functions.";
constexpr std::string_view kC3Def =
    "The functionality or purpose described in the summary does not accurately "
    "reflect what the input code or its dependent functions actually "
    "implement. This often arises when dependency relationships are ignored or "
    "misinterpreted, leading to an incorrect description of behavior.";
constexpr std::string_view kC4Def =
    "The summary contains content that is unnecessary or irrelevant to the "
    "input code or relevant information, such as descriptions of unrelated "
    "entities or overly generalized dependency context that does not "
    "contribute to understanding the function.";

const std::array<Criterion, 4> kCriteria = {{
    {CriterionId::C1_Name, "C1", "Name Inconsistency", kC1Def},
    {CriterionId::C2_Type, "C2", "Type Inconsistency", kC2Def},
    {CriterionId::C3_Functionality, "C3", "Functionality Inconsistency", kC3Def},
    {CriterionId::C4_ContextIrrelevant, "C4", "Context Irrelevant", kC4Def},
}};

void replace_all(std::string& text, std::string_view slot, std::string_view value) {
  size_t pos = 0;
  while ((pos = text.find(slot, pos)) != std::string::npos) {
    text.replace(pos, slot.size(), value);
    pos += value.size();
  }
}

}  // namespace

const std::array<Criterion, 4>& criteria() { return kCriteria; }

const Criterion& criterion(CriterionId id) {
  return kCriteria[static_cast<size_t>(id)];
}

std::optional<CriterionId> criterion_from_key(std::string_view key) noexcept {
  for (const auto& c : kCriteria) {
    if (c.key == key) return c.id;
  }
  return std::nullopt;
}

PromptPair render_prompt(const Criterion& criterion, const JudgeContext& context,
                         const Segment& segment) {
  PromptPair out;
  out.system_text = prompts::kSystemTemplate;
  replace_all(out.system_text, "{criterion}", criterion.title);
  replace_all(out.system_text, "{explanation}", criterion.definition);

  out.user_text = context.related_information.empty()
                      ? prompts::kUserTemplateNoInfo
                      : prompts::kUserTemplateWithInfo;
  replace_all(out.user_text, "{related_information}", context.related_information);
  replace_all(out.user_text, "{input_code}", context.input_code);
  replace_all(out.user_text, "{segment}", segment.text);
  return out;
}

std::optional<int> parse_verdict_token(std::string_view raw) {
  size_t i = 0, n = raw.size();
  auto skip_ws = [&] {
    while (i < n && std::isspace(static_cast<unsigned char>(raw[i]))) ++i;
  };
  auto skip_decoration = [&] {
    static constexpr std::string_view kDecor = "*_`#>\"'([-";
    while (i < n && kDecor.find(raw[i]) != std::string_view::npos) ++i;
  };
  skip_ws();
  skip_decoration();
  skip_ws();
  // Optional "score" / "SCORE:" prefix.
  if (n - i >= 5) {
    std::string_view head = raw.substr(i, 5);
    bool is_score = true;
    constexpr std::string_view kWord = "score";
    for (size_t k = 0; k < 5; ++k) {
      if (std::tolower(static_cast<unsigned char>(head[k])) != kWord[k]) {
        is_score = false;
        break;
      }
    }
    if (is_score) {
      i += 5;
      skip_ws();
      while (i < n && (raw[i] == ':' || raw[i] == '=')) ++i;
      skip_ws();
      skip_decoration();
      skip_ws();
    }
  }
  if (i >= n || (raw[i] != '0' && raw[i] != '1')) return std::nullopt;
  int value = raw[i] - '0';
  ++i;
  if (i < n) {
    if (std::isdigit(static_cast<unsigned char>(raw[i]))) return std::nullopt;
    if (raw[i] == '.' && i + 1 < n &&
        std::isdigit(static_cast<unsigned char>(raw[i + 1])))
      return std::nullopt;
  }
  return value;
}

Verdict judge_segment(const Segment& segment, const JudgeContext& context,
                      const Criterion& crit, ModelBackend& backend,
                      const ModelConfig& config) {
  PromptPair prompt = render_prompt(crit, context, segment);
  JudgeRequest request{prompt.system_text, prompt.user_text, segment.index,
                       crit.id, context.sample_id};
  int max_attempts = config.max_retries > 0 ? config.max_retries : 1;
  std::string last_raw;
  std::string last_backend_error;
  bool backend_failed = false;
  for (int attempt = 1; attempt <= max_attempts; ++attempt) {
    std::string raw;
    try {
      raw = backend.complete(request, config);
    } catch (const Error& e) {
      if (e.code() != ErrCode::Backend) throw;
      backend_failed = true;
      last_backend_error = e.what();
      continue;
    }
    backend_failed = false;
    last_raw = raw;
    if (auto value = parse_verdict_token(raw)) {
      Verdict v;
      v.segment_index = segment.index;
      v.criterion = crit.id;
      v.pass_flag = *value;
      v.raw_response = std::move(raw);
      v.attempts = attempt;
      return v;
    }
  }
  if (backend_failed) {
    fail(ErrCode::Backend,
         "backend failed after " + std::to_string(max_attempts) +
             " attempts (segment " + std::to_string(segment.index) + ", " +
             std::string(crit.key) + "): " + last_backend_error);
  }
  fail(ErrCode::BadResponse,
       "no binary verdict after " + std::to_string(max_attempts) +
           " attempts (segment " + std::to_string(segment.index) + ", " +
           std::string(crit.key) + "); last response: \"" + last_raw + "\"");
}

VerdictMatrix judge_summary(const std::vector<Segment>& segments,
                            const JudgeContext& context, ModelBackend& backend,
                            const ModelConfig& config) {
  if (segments.empty()) fail(ErrCode::BadRequest, "empty summary: no segments");

  size_t total = segments.size() * 4;
  std::vector<Verdict> slots(total);
  std::vector<std::exception_ptr> errors(total);

  auto run_one = [&](size_t flat) {
    size_t seg = flat / 4, crit = flat % 4;
    try {
      slots[flat] = judge_segment(segments[seg], context,
                                  kCriteria[crit], backend, config);
    } catch (...) {
      errors[flat] = std::current_exception();
    }
  };

  int workers = std::min<int>(std::max(config.max_in_flight, 1),
                              static_cast<int>(total));
  if (workers <= 1) {
    for (size_t flat = 0; flat < total; ++flat) run_one(flat);
  } else {
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (size_t flat = next.fetch_add(1); flat < total;
             flat = next.fetch_add(1)) {
          run_one(flat);
        }
      });
    }
    for (auto& t : pool) t.join();
  }

  // First failure in segment-major, criterion order wins; no partial output.
  for (size_t flat = 0; flat < total; ++flat) {
    if (errors[flat]) std::rethrow_exception(errors[flat]);
  }

  VerdictMatrix matrix;
  matrix.rows.resize(segments.size());
  for (size_t flat = 0; flat < total; ++flat) {
    matrix.rows[flat / 4][flat % 4] = std::move(slots[flat]);
  }
  return matrix;
}

}  // namespace referee
