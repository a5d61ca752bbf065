#pragma once

#include <array>
#include <string>
#include <vector>

#include "referee/judge.hpp"
#include "referee/select.hpp"

#include <nlohmann/json.hpp>

namespace referee {

struct Weights {
  std::array<double, 4> w{1.0, 1.0, 1.0, 1.0}; // keyed C1..C4

  static Weights unit() { return {}; }
  double sum() const { return w[0] + w[1] + w[2] + w[3]; }
};

// (Σ_S Σ_C w_C·f(S,C)) / (|D|·Σ_C w_C); the unweighted mean when all weights
// are equal.
double aggregate(const VerdictMatrix& matrix, const Weights& weights = {});

// 5-point summary label → (0,1].
double normalize_label(int raw);

struct SegmentReport {
  size_t index = 0;
  std::string text;
  std::vector<CriterionId> failed_criteria; // pass_flag == 0, order C1..C4
  double row_score = 0.0;                   // weighted row mean
};

struct ReportConfig {
  int hops = 1;
  Weights weights;
  std::string model_id;
  std::string backend; // "http" | "stub"
  std::string language;
};

struct ConsistencyReport {
  double overall_score = 0.0;
  std::vector<SegmentReport> per_segment;
  std::vector<RelatedInfo> context_items;
  VerdictMatrix matrix;
  ReportConfig config;
  std::string tool_version;

  nlohmann::json to_json() const;
  static ConsistencyReport from_json(const nlohmann::json& j);
  std::string to_text() const;
};

ConsistencyReport build_report(const VerdictMatrix& matrix,
                               const std::vector<Segment>& segments,
                               const std::vector<RelatedInfo>& related,
                               double score, const ReportConfig& config);

}  // namespace referee
