#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "referee/bench.hpp"
#include "referee/segment.hpp"
#include "referee/version.hpp"

namespace referee {

namespace {

const char* kCriterionKeys[4] = {"C1", "C2", "C3", "C4"};

std::string verdict_key(const std::string& sample_id, size_t segment_index,
                        CriterionId criterion) {
  return sample_id + ":" + std::to_string(segment_index) + ":" +
         kCriterionKeys[static_cast<int>(criterion)];
}

std::string normalize_ws(const std::string& text) {
  std::string out;
  bool in_space = true;
  for (char c : text) {
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
      if (!in_space) out += ' ';
      in_space = true;
    } else {
      out += c;
      in_space = false;
    }
  }
  while (!out.empty() && out.back() == ' ') out.pop_back();
  return out;
}

struct LineError {
  std::string reason;
};

BenchmarkSample parse_sample(const nlohmann::json& j) {
  if (!j.is_object()) throw LineError{"not a JSON object"};
  BenchmarkSample sample;

  auto require_string = [&](const char* field) -> std::string {
    if (!j.contains(field) || !j[field].is_string() ||
        j[field].get<std::string>().empty())
      throw LineError{std::string("missing or empty field: ") + field};
    return j[field].get<std::string>();
  };

  sample.id = require_string("id");
  std::string lang = require_string("language");
  if (lang == "python") sample.language = Language::Python;
  else if (lang == "java") sample.language = Language::Java;
  else throw LineError{"unknown language: " + lang};

  sample.input_code = require_string("input_code");
  sample.summary = require_string("summary");

  if (j.contains("repo_ref")) {
    if (!j["repo_ref"].is_string()) throw LineError{"repo_ref must be a string"};
    sample.repo_ref = j["repo_ref"].get<std::string>();
  }
  if (j.contains("related_info")) {
    if (!j["related_info"].is_string())
      throw LineError{"related_info must be a string"};
    sample.related_info = j["related_info"].get<std::string>();
  }

  if (!j.contains("summary_label") || !j["summary_label"].is_number_integer())
    throw LineError{"missing or non-integer summary_label"};
  sample.summary_label = j["summary_label"].get<int>();
  if (sample.summary_label < 1 || sample.summary_label > 5)
    throw LineError{"label out of range"};

  if (!j.contains("segments") || !j["segments"].is_array() || j["segments"].empty())
    throw LineError{"missing or empty segments"};
  std::string summary_norm = normalize_ws(sample.summary);
  for (const auto& seg : j["segments"]) {
    if (!seg.is_object() || !seg.contains("text") || !seg["text"].is_string())
      throw LineError{"segment missing text"};
    SegmentLabels labels;
    labels.text = seg["text"].get<std::string>();
    if (labels.text.empty()) throw LineError{"segment text empty"};
    if (summary_norm.find(normalize_ws(labels.text)) == std::string::npos)
      throw LineError{"segment text not found in summary"};
    if (!seg.contains("labels") || !seg["labels"].is_object())
      throw LineError{"segment missing labels"};
    for (int c = 0; c < 4; ++c) {
      const auto& l = seg["labels"];
      if (!l.contains(kCriterionKeys[c]) ||
          !l[kCriterionKeys[c]].is_number_integer())
        throw LineError{std::string("segment label missing: ") + kCriterionKeys[c]};
      int v = l[kCriterionKeys[c]].get<int>();
      if (v != 0 && v != 1) throw LineError{"segment label not binary"};
      labels.labels[c] = v;
    }
    sample.segments.push_back(std::move(labels));
  }
  return sample;
}

// splitmix64 finalizer over an FNV-1a accumulation: stable across platforms.
uint64_t mix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t fnv1a64(const std::string& text, uint64_t h) {
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

CorrelationResult correlate(const std::vector<double>& predicted,
                            const std::vector<double>& human) {
  CorrelationResult out;
  out.n = predicted.size();
  if (predicted.size() < 2) {
    out.note = "fewer than 2 samples: correlations undefined";
    return out;
  }
  try {
    stats::Corr p = stats::pearson(predicted, human);
    stats::Corr s = stats::spearman(predicted, human);
    stats::Corr k = stats::kendall_tau(predicted, human);
    out.pearson_r = p.r;
    out.spearman_r = s.r;
    out.kendall_tau = k.r;
    out.average = (p.r + s.r + k.r) / 3.0;
    if (!std::isnan(p.p)) out.pearson_p = p.p;
    if (!std::isnan(s.p)) out.spearman_p = s.p;
    if (!std::isnan(k.p)) out.kendall_p = k.p;
  } catch (const Error& err) {
    if (err.code() != ErrCode::ZeroVariance) throw;
    out = CorrelationResult{};
    out.n = predicted.size();
    out.note = err.what();
  }
  return out;
}

struct Group {
  std::vector<double> predicted;
  std::vector<double> human;
  std::array<stats::CriterionConfusion, 4> confusion{};
  size_t segments = 0;

  void absorb(const SamplePrediction& pred,
              const std::vector<std::array<int, 4>>& gold) {
    predicted.push_back(pred.score);
    human.push_back(pred.human);
    auto sample_conf = stats::segment_confusion(pred.verdicts, gold);
    for (int c = 0; c < 4; ++c) {
      confusion[c].tp += sample_conf[c].tp;
      confusion[c].fp += sample_conf[c].fp;
      confusion[c].fn += sample_conf[c].fn;
      confusion[c].tn += sample_conf[c].tn;
    }
    segments += pred.verdicts.size();
  }

  LanguageMetrics metrics(const std::string& language) const {
    LanguageMetrics m;
    m.language = language;
    m.correlation = correlate(predicted, human);
    m.confusion = confusion;
    m.segments = segments;
    return m;
  }
};

std::vector<LanguageMetrics> group_metrics(
    const std::vector<SamplePrediction>& predictions,
    const std::map<std::string, std::vector<std::array<int, 4>>>& gold_by_id) {
  Group python, java, all;
  bool has_python = false, has_java = false;
  for (const SamplePrediction& pred : predictions) {
    auto gold = gold_by_id.find(pred.id);
    if (gold == gold_by_id.end()) continue;
    if (pred.language == "python") {
      python.absorb(pred, gold->second);
      has_python = true;
    } else if (pred.language == "java") {
      java.absorb(pred, gold->second);
      has_java = true;
    }
    all.absorb(pred, gold->second);
  }
  std::vector<LanguageMetrics> out;
  if (has_python) out.push_back(python.metrics("python"));
  if (has_java) out.push_back(java.metrics("java"));
  if (!all.predicted.empty()) out.push_back(all.metrics("all"));
  return out;
}

nlohmann::json correlation_json(const CorrelationResult& corr) {
  nlohmann::json j;
  j["n"] = corr.n;
  if (corr.note) {
    j["pearson_r"] = nullptr;
    j["spearman_r"] = nullptr;
    j["kendall_tau"] = nullptr;
    j["average"] = nullptr;
    j["note"] = *corr.note;
  } else {
    j["pearson_r"] = corr.pearson_r;
    j["spearman_r"] = corr.spearman_r;
    j["kendall_tau"] = corr.kendall_tau;
    j["average"] = corr.average;
    j["pearson_p"] = corr.pearson_p ? nlohmann::json(*corr.pearson_p)
                                    : nlohmann::json(nullptr);
    j["spearman_p"] = corr.spearman_p ? nlohmann::json(*corr.spearman_p)
                                      : nlohmann::json(nullptr);
    j["kendall_p"] = corr.kendall_p ? nlohmann::json(*corr.kendall_p)
                                    : nlohmann::json(nullptr);
  }
  return j;
}

std::string format_coeff(const std::optional<std::string>& note, double value) {
  if (note) return "     n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%8.3f", value);
  return buf;
}

}  // namespace

Dataset load_dataset(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrCode::Io, "cannot open dataset: " + path.string());

  Dataset out;
  std::set<std::string> ids;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& ex) {
      out.rejections.push_back({line_no, std::string("invalid json: ") + ex.what()});
      continue;
    }
    try {
      BenchmarkSample sample = parse_sample(j);
      if (!ids.insert(sample.id).second) {
        out.rejections.push_back({line_no, "duplicate id: " + sample.id});
        continue;
      }
      out.samples.push_back(std::move(sample));
    } catch (const LineError& err) {
      out.rejections.push_back({line_no, err.reason});
    }
  }
  if (out.samples.empty())
    fail(ErrCode::BadFixture, "empty dataset: no valid samples in " + path.string());
  return out;
}

GoldStubBackend::GoldStubBackend(const Dataset& dataset) {
  for (const BenchmarkSample& sample : dataset.samples) {
    for (size_t i = 0; i < sample.segments.size(); ++i) {
      for (int c = 0; c < 4; ++c) {
        verdicts_[verdict_key(sample.id, i, static_cast<CriterionId>(c))] =
            std::to_string(sample.segments[i].labels[c]);
      }
    }
  }
}

std::string GoldStubBackend::complete(const JudgeRequest& request,
                                      const ModelConfig&) {
  auto hit = verdicts_.find(
      verdict_key(request.sample_id, request.segment_index, request.criterion));
  if (hit == verdicts_.end())
    fail(ErrCode::BadFixture,
         "no gold verdict for sample '" + request.sample_id + "' segment " +
             std::to_string(request.segment_index) + " criterion " +
             kCriterionKeys[static_cast<int>(request.criterion)]);
  return hit->second;
}

NoisyStubBackend::NoisyStubBackend(const Dataset& dataset, double flip_rate,
                                   uint64_t seed)
    : gold_(dataset), flip_rate_(flip_rate), seed_(seed) {
  if (flip_rate < 0.0 || flip_rate > 1.0)
    fail(ErrCode::BadRequest, "flip rate must be within [0,1]");
}

std::string NoisyStubBackend::complete(const JudgeRequest& request,
                                       const ModelConfig& config) {
  std::string verdict = gold_.complete(request, config);
  uint64_t h = fnv1a64(
      verdict_key(request.sample_id, request.segment_index, request.criterion),
      0xcbf29ce484222325ULL ^ seed_);
  double u = double(mix64(h) >> 11) * 0x1.0p-53;
  if (u < flip_rate_) verdict = verdict == "0" ? "1" : "0";
  return verdict;
}

BenchReport run_benchmark(const Dataset& dataset, const BenchConfig& config,
                          ModelBackend& backend) {
  if (dataset.samples.empty()) fail(ErrCode::BadRequest, "empty dataset");
  auto start = std::chrono::steady_clock::now();

  BenchReport report;
  report.tool_version = kVersion;
  report.dataset_rejections = dataset.rejections.size();
  report.config_echo = {
      {"weights", config.weights.w},
      {"model",
       {{"model_id", config.model.model_id},
        {"temperature", config.model.temperature},
        {"top_p", config.model.top_p},
        {"top_k", config.model.top_k},
        {"max_new_tokens", config.model.max_new_tokens},
        {"max_retries", config.model.max_retries}}},
  };

  std::map<std::string, std::vector<std::array<int, 4>>> gold_by_id;
  for (const BenchmarkSample& sample : dataset.samples) {
    std::vector<std::array<int, 4>> gold;
    for (const SegmentLabels& seg : sample.segments) gold.push_back(seg.labels);
    gold_by_id[sample.id] = std::move(gold);
  }

  for (const BenchmarkSample& sample : dataset.samples) {
    std::vector<Segment> segments = segment(sample.summary);
    if (segments.size() != sample.segments.size()) {
      report.failures.push_back(
          {sample.id, "E_BAD_FIXTURE",
           "segment count mismatch: summary splits into " +
               std::to_string(segments.size()) + " segments, gold has " +
               std::to_string(sample.segments.size())});
      continue;
    }
    JudgeContext context;
    context.related_information = sample.related_info.value_or("");
    context.input_code = sample.input_code;
    context.sample_id = sample.id;
    try {
      VerdictMatrix matrix = judge_summary(segments, context, backend, config.model);
      SamplePrediction pred;
      pred.id = sample.id;
      pred.language = language_name(sample.language);
      pred.score = aggregate(matrix, config.weights);
      pred.human = normalize_label(sample.summary_label);
      for (const auto& row : matrix.rows) {
        std::array<int, 4> flags{};
        for (int c = 0; c < 4; ++c) flags[c] = row[c].pass_flag;
        pred.verdicts.push_back(flags);
      }
      report.predictions.push_back(std::move(pred));
    } catch (const Error& err) {
      report.failures.push_back({sample.id, err.code_name(), err.what()});
    }
  }

  report.metrics = group_metrics(report.predictions, gold_by_id);
  if (config.with_timing) {
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
  }
  return report;
}

BenchReport compute_stats(const std::vector<SamplePrediction>& predictions,
                          const Dataset& gold) {
  BenchReport report;
  report.tool_version = kVersion;
  report.dataset_rejections = gold.rejections.size();
  report.config_echo = {{"mode", "stats"}};

  std::map<std::string, const BenchmarkSample*> by_id;
  for (const BenchmarkSample& sample : gold.samples) by_id[sample.id] = &sample;

  std::map<std::string, std::vector<std::array<int, 4>>> gold_by_id;
  for (const SamplePrediction& pred : predictions) {
    auto hit = by_id.find(pred.id);
    if (hit == by_id.end()) {
      report.failures.push_back(
          {pred.id, "E_BAD_FIXTURE", "prediction id not present in gold dataset"});
      continue;
    }
    const BenchmarkSample& sample = *hit->second;
    if (pred.verdicts.size() != sample.segments.size()) {
      report.failures.push_back(
          {pred.id, "E_BAD_FIXTURE",
           "verdict rows (" + std::to_string(pred.verdicts.size()) +
               ") do not match gold segments (" +
               std::to_string(sample.segments.size()) + ")"});
      continue;
    }
    std::vector<std::array<int, 4>> gold_rows;
    for (const SegmentLabels& seg : sample.segments) gold_rows.push_back(seg.labels);
    gold_by_id[pred.id] = std::move(gold_rows);
    report.predictions.push_back(pred);
  }
  report.metrics = group_metrics(report.predictions, gold_by_id);
  return report;
}

nlohmann::json BenchReport::to_json() const {
  nlohmann::json j;
  j["tool_version"] = tool_version;
  j["config"] = config_echo;
  j["dataset_rejections"] = dataset_rejections;

  j["predictions"] = nlohmann::json::array();
  for (const SamplePrediction& pred : predictions) {
    j["predictions"].push_back({{"id", pred.id},
                                {"language", pred.language},
                                {"score", pred.score},
                                {"human", pred.human},
                                {"verdicts", pred.verdicts}});
  }
  j["failures"] = nlohmann::json::array();
  for (const SampleFailure& failure : failures) {
    j["failures"].push_back({{"id", failure.id},
                             {"error_code", failure.error_code},
                             {"message", failure.message}});
  }
  j["metrics"] = nlohmann::json::array();
  for (const LanguageMetrics& m : metrics) {
    nlohmann::json entry = correlation_json(m.correlation);
    entry["language"] = m.language;
    entry["segments"] = m.segments;
    nlohmann::json confusion;
    for (int c = 0; c < 4; ++c) {
      confusion[kCriterionKeys[c]] = {{"tp", m.confusion[c].tp},
                                      {"fp", m.confusion[c].fp},
                                      {"fn", m.confusion[c].fn},
                                      {"tn", m.confusion[c].tn},
                                      {"accuracy", m.confusion[c].accuracy()}};
    }
    entry["confusion"] = std::move(confusion);
    j["metrics"].push_back(std::move(entry));
  }
  if (wall_seconds) j["wall_seconds"] = *wall_seconds;
  return j;
}

std::string BenchReport::to_table() const {
  std::string out;
  out += "referee bench report (v" + tool_version + ")\n";
  out += "samples: " + std::to_string(predictions.size()) + " ok, " +
         std::to_string(failures.size()) + " failed, " +
         std::to_string(dataset_rejections) + " rejected\n\n";

  out += "language     n      r_p      r_s      tau  average\n";
  for (const LanguageMetrics& m : metrics) {
    char head[64];
    std::snprintf(head, sizeof(head), "%-8s %5zu ", m.language.c_str(),
                  m.correlation.n);
    out += head;
    out += format_coeff(m.correlation.note, m.correlation.pearson_r);
    out += " " + format_coeff(m.correlation.note, m.correlation.spearman_r);
    out += " " + format_coeff(m.correlation.note, m.correlation.kendall_tau);
    out += " " + format_coeff(m.correlation.note, m.correlation.average);
    out += "\n";
    if (m.correlation.note) out += "         note: " + *m.correlation.note + "\n";
  }

  out += "\nsegment verdicts vs gold\n";
  for (const LanguageMetrics& m : metrics) {
    char head[64];
    std::snprintf(head, sizeof(head), "%-8s %5zu segs ", m.language.c_str(),
                  m.segments);
    out += head;
    for (int c = 0; c < 4; ++c) {
      char cell[64];
      std::snprintf(cell, sizeof(cell), " %s acc=%.3f fp=%zu fn=%zu",
                    kCriterionKeys[c], m.confusion[c].accuracy(),
                    m.confusion[c].fp, m.confusion[c].fn);
      out += cell;
    }
    out += "\n";
  }

  if (!failures.empty()) {
    out += "\nfailures\n";
    for (const SampleFailure& failure : failures) {
      out += "  " + failure.id + " [" + failure.error_code + "] " +
             failure.message + "\n";
    }
  }
  if (wall_seconds) {
    char line[64];
    std::snprintf(line, sizeof(line), "\nwall time: %.3f s\n", *wall_seconds);
    out += line;
  }
  return out;
}

}  // namespace referee
