#include "referee/scoring.hpp"

#include <cmath>
#include <sstream>

#include "referee/error.hpp"
#include "referee/version.hpp"

namespace referee {

namespace {

using nlohmann::json;

void check_weights(const Weights& weights) {
  for (double w : weights.w) {
    if (!(w >= 0.0)) fail(ErrCode::BadRequest, "weights must be non-negative");
  }
  if (!(weights.sum() > 0.0)) fail(ErrCode::BadRequest, "weights must not all be zero");
}

double row_mean(const std::array<Verdict, 4>& row, const Weights& weights) {
  double acc = 0.0;
  for (size_t c = 0; c < 4; ++c) acc += weights.w[c] * row[c].pass_flag;
  return acc / weights.sum();
}

}  // namespace

double aggregate(const VerdictMatrix& matrix, const Weights& weights) {
  if (matrix.rows.empty()) fail(ErrCode::BadRequest, "empty verdict matrix");
  check_weights(weights);
  double acc = 0.0;
  for (const auto& row : matrix.rows) {
    for (size_t c = 0; c < 4; ++c) {
      int flag = row[c].pass_flag;
      if (flag != 0 && flag != 1)
        fail(ErrCode::Internal, "verdict flag outside {0,1}");
      acc += weights.w[c] * flag;
    }
  }
  return acc / (static_cast<double>(matrix.rows.size()) * weights.sum());
}

double normalize_label(int raw) {
  if (raw < 1 || raw > 5)
    fail(ErrCode::BadRequest, "label out of range 1..5: " + std::to_string(raw));
  return raw / 5.0;
}

ConsistencyReport build_report(const VerdictMatrix& matrix,
                               const std::vector<Segment>& segments,
                               const std::vector<RelatedInfo>& related,
                               double score, const ReportConfig& config) {
  if (matrix.rows.size() != segments.size())
    fail(ErrCode::BadRequest, "length mismatch: " +
                                  std::to_string(matrix.rows.size()) +
                                  " verdict rows for " +
                                  std::to_string(segments.size()) + " segments");
  double recomputed = aggregate(matrix, config.weights);
  if (std::fabs(recomputed - score) > 1e-9)
    fail(ErrCode::BadRequest, "score does not match the verdict matrix");

  ConsistencyReport report;
  report.overall_score = recomputed;
  report.matrix = matrix;
  report.context_items = related;
  report.config = config;
  report.tool_version = kVersion;
  report.per_segment.reserve(segments.size());
  for (size_t i = 0; i < segments.size(); ++i) {
    SegmentReport seg;
    seg.index = segments[i].index;
    seg.text = segments[i].text;
    for (size_t c = 0; c < 4; ++c) {
      if (matrix.rows[i][c].pass_flag == 0)
        seg.failed_criteria.push_back(matrix.rows[i][c].criterion);
    }
    seg.row_score = row_mean(matrix.rows[i], config.weights);
    report.per_segment.push_back(std::move(seg));
  }
  return report;
}

json ConsistencyReport::to_json() const {
  json segments = json::array();
  for (size_t i = 0; i < per_segment.size(); ++i) {
    const auto& seg = per_segment[i];
    json failed = json::array();
    for (auto id : seg.failed_criteria) failed.push_back(criterion(id).key);
    json verdicts = json::array();
    for (const auto& v : matrix.rows[i]) {
      verdicts.push_back({{"criterion", criterion(v.criterion).key},
                          {"pass", v.pass_flag},
                          {"attempts", v.attempts},
                          {"raw", v.raw_response}});
    }
    segments.push_back({{"index", seg.index},
                        {"text", seg.text},
                        {"failed_criteria", failed},
                        {"row_score", seg.row_score},
                        {"verdicts", verdicts}});
  }
  json context = json::array();
  for (const auto& item : context_items) {
    context.push_back({{"entity_name", item.entity_name},
                       {"content", item.content},
                       {"class", dependency_class_name(item.dep_class)},
                       {"source", item.source},
                       {"anchor_entity", item.anchor_entity}});
  }
  return json{{"version", tool_version},
              {"overall_score", overall_score},
              {"config",
               {{"hops", config.hops},
                {"weights", config.weights.w},
                {"model", config.model_id},
                {"backend", config.backend},
                {"language", config.language}}},
              {"segments", segments},
              {"context_items", context}};
}

ConsistencyReport ConsistencyReport::from_json(const json& j) {
  ConsistencyReport report;
  try {
    report.tool_version = j.at("version").get<std::string>();
    report.overall_score = j.at("overall_score").get<double>();
    const json& cfg = j.at("config");
    report.config.hops = cfg.at("hops").get<int>();
    auto weights = cfg.at("weights").get<std::vector<double>>();
    if (weights.size() != 4)
      fail(ErrCode::BadFixture, "config.weights must have 4 entries");
    std::copy(weights.begin(), weights.end(), report.config.weights.w.begin());
    report.config.model_id = cfg.at("model").get<std::string>();
    report.config.backend = cfg.at("backend").get<std::string>();
    report.config.language = cfg.at("language").get<std::string>();
    for (const json& js : j.at("segments")) {
      SegmentReport seg;
      seg.index = js.at("index").get<size_t>();
      seg.text = js.at("text").get<std::string>();
      seg.row_score = js.at("row_score").get<double>();
      for (const json& f : js.at("failed_criteria")) {
        auto id = criterion_from_key(f.get<std::string>());
        if (!id) fail(ErrCode::BadFixture, "unknown criterion key in report");
        seg.failed_criteria.push_back(*id);
      }
      std::array<Verdict, 4> row;
      const json& verdicts = js.at("verdicts");
      if (verdicts.size() != 4)
        fail(ErrCode::BadFixture, "each segment needs 4 verdicts");
      for (size_t c = 0; c < 4; ++c) {
        const json& jv = verdicts[c];
        auto id = criterion_from_key(jv.at("criterion").get<std::string>());
        if (!id) fail(ErrCode::BadFixture, "unknown criterion key in verdict");
        row[c].criterion = *id;
        row[c].segment_index = seg.index;
        row[c].pass_flag = jv.at("pass").get<int>();
        row[c].attempts = jv.at("attempts").get<int>();
        row[c].raw_response = jv.at("raw").get<std::string>();
      }
      report.matrix.rows.push_back(std::move(row));
      report.per_segment.push_back(std::move(seg));
    }
    for (const json& jc : j.value("context_items", json::array())) {
      RelatedInfo item;
      item.entity_name = jc.at("entity_name").get<std::string>();
      item.content = jc.at("content").get<std::string>();
      std::string cls = jc.at("class").get<std::string>();
      if (cls == "internal") item.dep_class = DependencyClass::Internal;
      else if (cls == "cross_file") item.dep_class = DependencyClass::CrossFile;
      else if (cls == "external") item.dep_class = DependencyClass::External;
      else fail(ErrCode::BadFixture, "unknown dependency class: " + cls);
      item.source = jc.at("source").get<std::string>();
      item.anchor_entity = jc.at("anchor_entity").get<std::string>();
      report.context_items.push_back(std::move(item));
    }
  } catch (const json::exception& e) {
    fail(ErrCode::BadFixture, std::string("malformed report JSON: ") + e.what());
  }
  return report;
}

std::string ConsistencyReport::to_text() const {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << "score: " << overall_score << "\n";
  for (const auto& seg : per_segment) {
    out << "segment " << (seg.index + 1) << ": ";
    if (seg.failed_criteria.empty()) {
      out << "ok";
    } else {
      for (size_t i = 0; i < seg.failed_criteria.size(); ++i) {
        if (i) out << ", ";
        out << criterion(seg.failed_criteria[i]).key;
      }
    }
    out << "  (" << seg.row_score << ")  " << seg.text << "\n";
  }
  if (!context_items.empty()) {
    out << "context items:\n";
    for (const auto& item : context_items) {
      out << "  [" << dependency_class_name(item.dep_class) << "] "
          << item.entity_name << " <- " << item.source << "\n";
    }
  }
  return out.str();
}

}  // namespace referee
