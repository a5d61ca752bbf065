#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "referee/backend.hpp"
#include "referee/bench.hpp"
#include "referee/graph.hpp"
#include "referee/scoring.hpp"
#include "referee/segment.hpp"
#include "referee/select.hpp"
#include "referee/version.hpp"

namespace {

using referee::ErrCode;
using referee::fail;

std::string read_text_file(const std::string& path) {
  if (path == "-") {
    std::ostringstream buffer;
    buffer << std::cin.rdbuf();
    return buffer.str();
  }
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrCode::Io, "cannot open file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrCode::Io, "cannot write file: " + path);
  out << content;
}

// flags > referee.json > environment
struct FileConfig {
  nlohmann::json doc = nlohmann::json::object();

  static FileConfig load(const std::optional<std::string>& explicit_path) {
    FileConfig config;
    std::string path = explicit_path.value_or("referee.json");
    std::ifstream in(path, std::ios::binary);
    if (!in) {
      if (explicit_path) fail(ErrCode::Io, "cannot open config file: " + path);
      return config;
    }
    try {
      in >> config.doc;
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrCode::Parse, "invalid config json in " + path + ": " + ex.what());
    }
    if (!config.doc.is_object())
      fail(ErrCode::Parse, "config file must hold a JSON object: " + path);
    return config;
  }

  template <typename T>
  std::optional<T> get(const char* key) const {
    if (!doc.contains(key)) return std::nullopt;
    try {
      return doc[key].get<T>();
    } catch (const nlohmann::json::exception&) {
      fail(ErrCode::Parse, std::string("config field has wrong type: ") + key);
    }
  }
};

// flag value if set, else config-file value, else the default
template <typename T, typename F>
T pick(const std::optional<T>& flag, F&& from_config, T fallback) {
  if (flag) return *flag;
  if (std::optional<T> value = from_config()) return *value;
  return fallback;
}

referee::ByteSpan parse_span(const std::string& text) {
  size_t colon = text.find(':');
  if (colon == std::string::npos)
    fail(ErrCode::BadRequest, "span must be start:end, got: " + text);
  try {
    unsigned long start = std::stoul(text.substr(0, colon));
    unsigned long end = std::stoul(text.substr(colon + 1));
    if (end < start) fail(ErrCode::BadRequest, "span end before start: " + text);
    return {static_cast<uint32_t>(start), static_cast<uint32_t>(end)};
  } catch (const referee::Error&) {
    throw;
  } catch (const std::exception&) {
    fail(ErrCode::BadRequest, "span must be start:end, got: " + text);
  }
}

referee::Weights parse_weights(const std::string& text) {
  referee::Weights weights;
  std::vector<double> values;
  std::stringstream stream(text);
  std::string piece;
  while (std::getline(stream, piece, ',')) {
    try {
      values.push_back(std::stod(piece));
    } catch (const std::exception&) {
      fail(ErrCode::BadRequest, "weights must be four comma-separated numbers");
    }
  }
  if (values.size() != 4)
    fail(ErrCode::BadRequest, "weights must be four comma-separated numbers");
  for (int i = 0; i < 4; ++i) weights.w[i] = values[i];
  return weights;
}

// Shared backend/model flag group for evaluate and bench run.
struct BackendFlags {
  std::optional<std::string> stub_path;
  std::optional<std::string> endpoint;
  std::optional<std::string> model_id;
  std::optional<std::string> api_key;
  std::optional<double> temperature;
  std::optional<double> top_p;
  std::optional<int> top_k;
  std::optional<int> max_new_tokens;
  std::optional<int> max_retries;
  std::optional<double> timeout_seconds;
  std::optional<int> max_in_flight;
  bool send_top_k = false;

  void attach(CLI::App* cmd, bool with_stub) {
    if (with_stub)
      cmd->add_option("--stub", stub_path, "scripted replay backend (JSON file)");
    cmd->add_option("--endpoint", endpoint, "chat-completions endpoint base URL");
    cmd->add_option("--model", model_id, "model identifier for the endpoint");
    cmd->add_option("--api-key", api_key,
                    "bearer token (default: env REFEREE_API_KEY)");
    cmd->add_option("--temperature", temperature, "sampling temperature");
    cmd->add_option("--top-p", top_p, "nucleus sampling mass");
    cmd->add_option("--top-k", top_k, "top-k cutoff (sent only with --send-top-k)");
    cmd->add_option("--max-new-tokens", max_new_tokens, "completion token cap");
    cmd->add_option("--max-retries", max_retries, "attempts per verdict");
    cmd->add_option("--timeout", timeout_seconds, "request timeout in seconds");
    cmd->add_option("--max-in-flight", max_in_flight, "concurrent judge requests");
    cmd->add_flag("--send-top-k", send_top_k,
                  "include top_k in the request body (non-standard field)");
  }

  referee::ModelConfig model_config(const FileConfig& file) const {
    referee::ModelConfig config;
    config.endpoint = pick<std::string>(
        endpoint, [&] { return file.get<std::string>("endpoint"); }, "");
    config.model_id = pick<std::string>(
        model_id, [&] { return file.get<std::string>("model"); }, "");
    const char* env_key = std::getenv("REFEREE_API_KEY");
    config.api_key = pick<std::string>(
        api_key, [&] { return file.get<std::string>("api_key"); },
        env_key ? env_key : "");
    config.temperature = pick<double>(
        temperature, [&] { return file.get<double>("temperature"); },
        config.temperature);
    config.top_p = pick<double>(
        top_p, [&] { return file.get<double>("top_p"); }, config.top_p);
    config.top_k = pick<int>(
        top_k, [&] { return file.get<int>("top_k"); }, config.top_k);
    config.max_new_tokens = pick<int>(
        max_new_tokens, [&] { return file.get<int>("max_new_tokens"); },
        config.max_new_tokens);
    config.max_retries = pick<int>(
        max_retries, [&] { return file.get<int>("max_retries"); },
        config.max_retries);
    config.timeout_seconds = pick<double>(
        timeout_seconds, [&] { return file.get<double>("timeout_seconds"); },
        config.timeout_seconds);
    config.max_in_flight = pick<int>(
        max_in_flight, [&] { return file.get<int>("max_in_flight"); },
        config.max_in_flight);
    config.send_top_k =
        send_top_k || file.get<bool>("send_top_k").value_or(false);
    return config;
  }
};

referee::Language parse_language(const std::string& name) {
  return referee::language_from_name(name);
}

// ---- graph build ------------------------------------------------------------

struct GraphArgs {
  std::string repo;
  std::string lang = "python";
  std::optional<std::string> dump;
};

int cmd_graph_build(const GraphArgs& args) {
  referee::ProjectContextGraph graph =
      referee::build_graph(args.repo, parse_language(args.lang));
  for (const referee::ParseWarning& warning : graph.warnings())
    std::cerr << "warning: " << warning.file << ": " << warning.message << "\n";
  std::string out = graph.dump_json().dump(2);
  out += "\n";
  if (args.dump) write_text_file(*args.dump, out);
  else std::cout << out;
  return 0;
}

// ---- context ----------------------------------------------------------------

struct ContextArgs {
  std::string repo;
  std::string lang = "python";
  std::string file;
  std::optional<std::string> span;
  std::optional<std::string> function;
  int hops = 1;
  std::optional<std::string> api_docs;
  std::optional<std::string> json_out;
};

referee::ByteSpan target_span(const referee::ProjectContextGraph& graph,
                              const std::string& file,
                              const std::optional<std::string>& span,
                              const std::optional<std::string>& function) {
  if (span && function)
    fail(ErrCode::BadRequest, "use either --span or --function, not both");
  if (span) return parse_span(*span);
  if (!function)
    fail(ErrCode::BadRequest, "a target is required: --span start:end or --function name");
  auto files = graph.file_index().find(file);
  if (files == graph.file_index().end())
    fail(ErrCode::Io, "file not in graph: " + file);
  const referee::EntityNode* best = nullptr;
  for (const std::string& id : files->second) {
    const referee::EntityNode* node = graph.find(id);
    if (!node || node->kind != referee::NodeKind::Function) continue;
    if (node->name != *function && node->qualified_name != *function) continue;
    if (!best || node->span.start < best->span.start) best = node;
  }
  if (!best) fail(ErrCode::BadRequest, "function not found in " + file + ": " + *function);
  return best->span;
}

std::string slice_file(const std::string& repo, const std::string& rel,
                       referee::ByteSpan span) {
  std::string bytes = read_text_file((std::filesystem::path(repo) / rel).string());
  if (span.end > bytes.size())
    fail(ErrCode::BadRequest,
         "span " + std::to_string(span.start) + ":" + std::to_string(span.end) +
             " exceeds file size " + std::to_string(bytes.size()));
  return bytes.substr(span.start, span.end - span.start);
}

nlohmann::json related_json(const std::vector<referee::RelatedInfo>& items) {
  nlohmann::json arr = nlohmann::json::array();
  for (const referee::RelatedInfo& item : items) {
    arr.push_back({{"entity_name", item.entity_name},
                   {"content", item.content},
                   {"class", referee::dependency_class_name(item.dep_class)},
                   {"source", item.source},
                   {"anchor_entity", item.anchor_entity}});
  }
  return arr;
}

int cmd_context(const ContextArgs& args) {
  referee::Language lang = parse_language(args.lang);
  referee::ProjectContextGraph graph = referee::build_graph(args.repo, lang);
  referee::ByteSpan span = target_span(graph, args.file, args.span, args.function);
  std::string input_code = slice_file(args.repo, args.file, span);

  referee::ApiDocs docs;
  if (args.api_docs) docs = referee::ApiDocs::load(*args.api_docs);
  referee::SearchConfig search;
  search.hop_limit = args.hops;
  auto seeds = referee::entities_in(graph, args.file, span);
  referee::SearchResult result =
      referee::search_related(graph, seeds, search, docs, args.repo);

  for (const referee::LookupMiss& miss : result.misses) {
    std::cerr << "miss: " << miss.name
              << (miss.module.empty() ? "" : " (module " + miss.module + ")")
              << ": " << miss.reason << "\n";
  }
  std::cout << referee::format_context(result.items, input_code) << "\n";
  if (args.json_out)
    write_text_file(*args.json_out, related_json(result.items).dump(2) + "\n");
  return 0;
}

// ---- segment ----------------------------------------------------------------

struct SegmentArgs {
  std::string text_path;
  bool as_json = false;
};

int cmd_segment(const SegmentArgs& args) {
  std::string summary = read_text_file(args.text_path);
  std::vector<referee::Segment> segments = referee::segment(summary);
  if (args.as_json) {
    nlohmann::json arr = nlohmann::json::array();
    for (const referee::Segment& seg : segments) {
      arr.push_back({{"index", seg.index},
                     {"text", seg.text},
                     {"char_range", {seg.char_range.first, seg.char_range.second}}});
    }
    std::cout << arr.dump(2) << "\n";
  } else {
    for (const referee::Segment& seg : segments) std::cout << seg.text << "\n";
  }
  return 0;
}

// ---- evaluate ---------------------------------------------------------------

struct EvaluateArgs {
  std::string repo;
  std::string lang = "python";
  std::string file;
  std::optional<std::string> span;
  std::optional<std::string> function;
  std::string summary_path;
  std::optional<int> hops;
  std::optional<std::string> weights;
  std::optional<std::string> api_docs;
  std::optional<std::string> json_out;
  std::string format = "text";
  BackendFlags backend;
  std::optional<std::string> config_path;
};

int cmd_evaluate(const EvaluateArgs& args) {
  FileConfig file_config = FileConfig::load(args.config_path);
  referee::ModelConfig model = args.backend.model_config(file_config);

  bool has_stub = args.backend.stub_path.has_value();
  bool has_endpoint = !model.endpoint.empty();
  if (has_stub == has_endpoint)
    fail(ErrCode::BadRequest, "select exactly one backend: --stub or --endpoint");

  int hops =
      pick<int>(args.hops, [&] { return file_config.get<int>("hops"); }, 1);
  if (hops < 0 || hops > 2) fail(ErrCode::BadRequest, "hops must be 0, 1, or 2");
  referee::Weights weights;
  if (args.weights) weights = parse_weights(*args.weights);
  else if (auto from_file = file_config.get<std::vector<double>>("weights")) {
    if (from_file->size() != 4)
      fail(ErrCode::Parse, "config weights must hold four numbers");
    for (int i = 0; i < 4; ++i) weights.w[i] = (*from_file)[i];
  }

  referee::Language lang = parse_language(args.lang);
  referee::ProjectContextGraph graph = referee::build_graph(args.repo, lang);
  referee::ByteSpan span = target_span(graph, args.file, args.span, args.function);
  std::string input_code = slice_file(args.repo, args.file, span);
  std::string summary = read_text_file(args.summary_path);

  referee::ApiDocs docs;
  std::optional<std::string> docs_path = args.api_docs;
  if (!docs_path) docs_path = file_config.get<std::string>("api_docs");
  if (docs_path) docs = referee::ApiDocs::load(*docs_path);

  referee::SearchConfig search;
  search.hop_limit = hops;
  auto seeds = referee::entities_in(graph, args.file, span);
  referee::SearchResult related =
      referee::search_related(graph, seeds, search, docs, args.repo);

  referee::JudgeContext context;
  context.related_information = referee::format_related(related.items);
  context.input_code = input_code;

  std::vector<referee::Segment> segments = referee::segment(summary);

  std::unique_ptr<referee::ModelBackend> backend;
  if (has_stub) backend = std::make_unique<referee::StubBackend>(
                    referee::StubBackend::from_file(*args.backend.stub_path));
  else backend = std::make_unique<referee::HttpChatBackend>();

  referee::VerdictMatrix matrix =
      referee::judge_summary(segments, context, *backend, model);
  double score = referee::aggregate(matrix, weights);

  referee::ReportConfig report_config;
  report_config.hops = hops;
  report_config.weights = weights;
  report_config.model_id = model.model_id;
  report_config.backend = has_stub ? "stub" : "http";
  report_config.language = referee::language_name(lang);
  referee::ConsistencyReport report = referee::build_report(
      matrix, segments, related.items, score, report_config);

  if (args.format == "json") std::cout << report.to_json().dump(2) << "\n";
  else std::cout << report.to_text();
  if (args.json_out) write_text_file(*args.json_out, report.to_json().dump(2) + "\n");
  return 0;
}

// ---- bench ------------------------------------------------------------------

struct BenchRunArgs {
  std::string dataset;
  bool gold_stub = false;
  std::optional<double> noise;
  uint64_t seed = 0;
  std::optional<std::string> weights;
  bool timing = false;
  std::optional<std::string> json_out;
  std::optional<std::string> predictions_out;
  std::string format = "text";
  BackendFlags backend;
  std::optional<std::string> config_path;
};

int cmd_bench_run(const BenchRunArgs& args) {
  FileConfig file_config = FileConfig::load(args.config_path);
  referee::ModelConfig model = args.backend.model_config(file_config);

  referee::Dataset dataset = referee::load_dataset(args.dataset);

  const std::optional<std::string>& stub_path = args.backend.stub_path;
  int backend_choices = int(stub_path.has_value()) + int(args.gold_stub) +
                        int(!model.endpoint.empty());
  if (args.noise && (stub_path || !model.endpoint.empty())) {
    fail(ErrCode::BadRequest, "--noise applies to the gold stub only");
  } else if (!args.noise && backend_choices != 1) {
    fail(ErrCode::BadRequest,
         "select exactly one backend: --stub, --gold-stub, or --endpoint");
  }

  std::unique_ptr<referee::ModelBackend> backend;
  std::string backend_name;
  if (stub_path) {
    backend = std::make_unique<referee::StubBackend>(
        referee::StubBackend::from_file(*stub_path));
    backend_name = "stub";
  } else if (args.noise) {
    backend = std::make_unique<referee::NoisyStubBackend>(dataset, *args.noise,
                                                          args.seed);
    backend_name = "noisy-stub";
  } else if (args.gold_stub) {
    backend = std::make_unique<referee::GoldStubBackend>(dataset);
    backend_name = "gold-stub";
  } else {
    backend = std::make_unique<referee::HttpChatBackend>();
    backend_name = "http";
  }

  referee::BenchConfig config;
  if (args.weights) config.weights = parse_weights(*args.weights);
  config.model = model;
  config.with_timing = args.timing;

  referee::BenchReport report = referee::run_benchmark(dataset, config, *backend);
  report.config_echo["backend"] = backend_name;
  if (args.noise) {
    report.config_echo["noise"] = *args.noise;
    report.config_echo["seed"] = args.seed;
  }

  if (args.format == "json") std::cout << report.to_json().dump(2) << "\n";
  else std::cout << report.to_table();
  if (args.json_out) write_text_file(*args.json_out, report.to_json().dump(2) + "\n");
  if (args.predictions_out) {
    nlohmann::json preds = report.to_json()["predictions"];
    write_text_file(*args.predictions_out,
                    nlohmann::json{{"predictions", preds}}.dump(2) + "\n");
  }
  return 0;
}

struct BenchStatsArgs {
  std::string predictions;
  std::string gold;
  std::optional<std::string> json_out;
  std::string format = "text";
};

int cmd_bench_stats(const BenchStatsArgs& args) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(read_text_file(args.predictions));
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrCode::Parse, "invalid predictions json: " + std::string(ex.what()));
  }
  if (doc.is_object() && doc.contains("predictions")) doc = doc["predictions"];
  if (!doc.is_array())
    fail(ErrCode::BadFixture, "predictions file must hold an array");

  std::vector<referee::SamplePrediction> predictions;
  try {
    for (const auto& entry : doc) {
      referee::SamplePrediction pred;
      pred.id = entry.at("id").get<std::string>();
      pred.language = entry.at("language").get<std::string>();
      pred.score = entry.at("score").get<double>();
      pred.human = entry.at("human").get<double>();
      for (const auto& row : entry.at("verdicts")) {
        std::array<int, 4> flags{};
        for (int c = 0; c < 4; ++c) flags[c] = row.at(c).get<int>();
        pred.verdicts.push_back(flags);
      }
      predictions.push_back(std::move(pred));
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrCode::BadFixture,
         "malformed prediction record: " + std::string(ex.what()));
  }

  referee::Dataset gold = referee::load_dataset(args.gold);
  referee::BenchReport report = referee::compute_stats(predictions, gold);
  if (args.format == "json") std::cout << report.to_json().dump(2) << "\n";
  else std::cout << report.to_table();
  if (args.json_out) write_text_file(*args.json_out, report.to_json().dump(2) + "\n");
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"referee: fine-grained factual-consistency evaluation for code summaries"};
  app.set_version_flag("--version", std::string("referee ") + referee::kVersion);
  app.require_subcommand(1);

  // graph
  auto* graph_cmd = app.add_subcommand("graph", "project context graph operations");
  graph_cmd->require_subcommand(1);
  GraphArgs graph_args;
  auto* graph_build = graph_cmd->add_subcommand("build", "build and dump the graph");
  graph_build->add_option("--repo", graph_args.repo, "repository root")->required();
  graph_build->add_option("--lang", graph_args.lang, "python or java");
  graph_build->add_option("--dump", graph_args.dump, "write JSON here instead of stdout");

  // context
  ContextArgs context_args;
  auto* context_cmd =
      app.add_subcommand("context", "select dependency context for a code span");
  context_cmd->add_option("--repo", context_args.repo, "repository root")->required();
  context_cmd->add_option("--lang", context_args.lang, "python or java");
  context_cmd->add_option("--file", context_args.file, "file path relative to repo")
      ->required();
  context_cmd->add_option("--span", context_args.span, "byte range start:end");
  context_cmd->add_option("--function", context_args.function,
                          "target function by (qualified) name");
  context_cmd->add_option("--hops", context_args.hops, "dependency hops (0, 1, 2)")
      ->check(CLI::Range(0, 2));
  context_cmd->add_option("--api-docs", context_args.api_docs,
                          "external API docs JSON");
  context_cmd->add_option("--json", context_args.json_out,
                          "write RelatedInfo records here");

  // segment
  SegmentArgs segment_args;
  auto* segment_cmd = app.add_subcommand("segment", "split a summary into sentences");
  segment_cmd->add_option("--text", segment_args.text_path, "summary file or - for stdin")
      ->required();
  segment_cmd->add_flag("--json", segment_args.as_json, "emit JSON records");

  // evaluate
  EvaluateArgs eval_args;
  auto* eval_cmd = app.add_subcommand("evaluate", "score one summary against a repo");
  eval_cmd->add_option("--repo", eval_args.repo, "repository root")->required();
  eval_cmd->add_option("--lang", eval_args.lang, "python or java");
  eval_cmd->add_option("--file", eval_args.file, "file path relative to repo")
      ->required();
  eval_cmd->add_option("--span", eval_args.span, "byte range start:end");
  eval_cmd->add_option("--function", eval_args.function,
                       "target function by (qualified) name");
  eval_cmd->add_option("--summary", eval_args.summary_path,
                       "summary text file or - for stdin")
      ->required();
  eval_cmd->add_option("--hops", eval_args.hops, "dependency hops (0, 1, 2)");
  eval_cmd->add_option("--weights", eval_args.weights,
                       "criterion weights w1,w2,w3,w4");
  eval_cmd->add_option("--api-docs", eval_args.api_docs, "external API docs JSON");
  eval_cmd->add_option("--json", eval_args.json_out, "write the JSON report here");
  eval_cmd->add_option("--format", eval_args.format, "stdout format: text or json")
      ->check(CLI::IsMember({"text", "json"}));
  eval_cmd->add_option("--config", eval_args.config_path,
                       "config file (default ./referee.json when present)");
  eval_args.backend.attach(eval_cmd, /*with_stub=*/true);

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "benchmark harness");
  bench_cmd->require_subcommand(1);

  BenchRunArgs bench_args;
  auto* bench_run = bench_cmd->add_subcommand("run", "evaluate a labeled dataset");
  bench_run->add_option("--dataset", bench_args.dataset, "JSONL dataset")->required();
  bench_run->add_flag("--gold-stub", bench_args.gold_stub,
                      "replay the dataset's own labels (oracle judge)");
  bench_run->add_option("--noise", bench_args.noise,
                        "gold stub with this deterministic flip rate");
  bench_run->add_option("--seed", bench_args.seed, "seed for --noise flips");
  bench_run->add_option("--weights", bench_args.weights,
                        "criterion weights w1,w2,w3,w4");
  bench_run->add_flag("--timing", bench_args.timing, "include wall time in report");
  bench_run->add_option("--json", bench_args.json_out, "write the JSON report here");
  bench_run->add_option("--predictions", bench_args.predictions_out,
                        "write predictions for later bench stats");
  bench_run->add_option("--format", bench_args.format, "stdout format: text or json")
      ->check(CLI::IsMember({"text", "json"}));
  bench_run->add_option("--config", bench_args.config_path,
                        "config file (default ./referee.json when present)");
  bench_args.backend.attach(bench_run, /*with_stub=*/true);

  BenchStatsArgs stats_args;
  auto* bench_stats =
      bench_cmd->add_subcommand("stats", "recompute metrics from saved predictions");
  bench_stats->add_option("--predictions", stats_args.predictions,
                          "predictions JSON from bench run")
      ->required();
  bench_stats->add_option("--gold", stats_args.gold, "gold JSONL dataset")->required();
  bench_stats->add_option("--json", stats_args.json_out, "write the JSON report here");
  bench_stats->add_option("--format", stats_args.format,
                          "stdout format: text or json")
      ->check(CLI::IsMember({"text", "json"}));

  int exit_code = 0;
  graph_build->callback([&] { exit_code = cmd_graph_build(graph_args); });
  context_cmd->callback([&] { exit_code = cmd_context(context_args); });
  segment_cmd->callback([&] { exit_code = cmd_segment(segment_args); });
  eval_cmd->callback([&] { exit_code = cmd_evaluate(eval_args); });
  bench_run->callback([&] { exit_code = cmd_bench_run(bench_args); });
  bench_stats->callback([&] { exit_code = cmd_bench_stats(stats_args); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    nlohmann::json err{{"error", {{"code", "E_BAD_REQUEST"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 1;
  } catch (const referee::Error& e) {
    nlohmann::json err{{"error", {{"code", e.code_name()}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return referee::exit_code_for(e.code());
  } catch (const std::exception& e) {
    nlohmann::json err{{"error", {{"code", "E_INTERNAL"}, {"message", e.what()}}}};
    std::cerr << err.dump() << "\n";
    return 2;
  }
  return exit_code;
}
