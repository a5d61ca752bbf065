#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "referee/backend.hpp"
#include "referee/scoring.hpp"
#include "referee/stats.hpp"

#include <nlohmann/json.hpp>

namespace referee {

struct SegmentLabels {
  std::string text;
  std::array<int, 4> labels{1, 1, 1, 1}; // C1..C4, 1 = consistent
};

struct BenchmarkSample {
  std::string id;
  Language language = Language::Python;
  std::optional<std::string> repo_ref;
  std::string input_code;
  std::optional<std::string> related_info;
  std::string summary;
  int summary_label = 5; // 1..5
  std::vector<SegmentLabels> segments;
};

struct DatasetRejection {
  size_t line_no = 0;
  std::string reason;
};

struct Dataset {
  std::vector<BenchmarkSample> samples;
  std::vector<DatasetRejection> rejections;
};

Dataset load_dataset(const std::filesystem::path& path);

// Replays the sample's own gold labels: the oracle-perfect judge.
class GoldStubBackend : public ModelBackend {
 public:
  explicit GoldStubBackend(const Dataset& dataset);
  std::string complete(const JudgeRequest& request, const ModelConfig& config) override;

 private:
  std::map<std::string, std::string> verdicts_;
};

// Gold labels with a deterministic per-call flip. The flip decision hashes
// (seed, sample, segment, criterion) so results do not depend on call order.
class NoisyStubBackend : public ModelBackend {
 public:
  NoisyStubBackend(const Dataset& dataset, double flip_rate, uint64_t seed);
  std::string complete(const JudgeRequest& request, const ModelConfig& config) override;

 private:
  GoldStubBackend gold_;
  double flip_rate_;
  uint64_t seed_;
};

struct CorrelationResult {
  double pearson_r = 0.0;
  double spearman_r = 0.0;
  double kendall_tau = 0.0;
  double average = 0.0;
  size_t n = 0;
  std::optional<double> pearson_p;
  std::optional<double> spearman_p;
  std::optional<double> kendall_p;
  std::optional<std::string> note; // set when coefficients are undefined
};

struct SamplePrediction {
  std::string id;
  std::string language;
  double score = 0.0;
  double human = 0.0; // normalize_label(summary_label)
  std::vector<std::array<int, 4>> verdicts;
};

struct SampleFailure {
  std::string id;
  std::string error_code;
  std::string message;
};

struct LanguageMetrics {
  std::string language; // "python" | "java" | "all"
  CorrelationResult correlation;
  std::array<stats::CriterionConfusion, 4> confusion;
  size_t segments = 0;
};

struct BenchReport {
  std::vector<SamplePrediction> predictions;
  std::vector<SampleFailure> failures;
  std::vector<LanguageMetrics> metrics; // python, java, all (present groups only)
  size_t dataset_rejections = 0;
  std::string tool_version;
  nlohmann::json config_echo;
  std::optional<double> wall_seconds; // set only when timing is requested

  nlohmann::json to_json() const;
  std::string to_table() const;
};

struct BenchConfig {
  Weights weights;
  ModelConfig model;
  bool with_timing = false;
};

BenchReport run_benchmark(const Dataset& dataset, const BenchConfig& config,
                          ModelBackend& backend);

// Recompute metrics from previously saved predictions against gold labels.
BenchReport compute_stats(const std::vector<SamplePrediction>& predictions,
                          const Dataset& gold);

}  // namespace referee
