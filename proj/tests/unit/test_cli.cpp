#include <doctest.h>

#include <sys/wait.h>

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "referee/segment.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kBinary = std::string(REFEREE_BINARY_DIR) + "/referee";
const std::string kSource = REFEREE_SOURCE_DIR;
const std::string kFixtureDir = kSource + "/tests/fixtures";

struct RunResult {
  int exit_code = -1;
  std::string out;
  std::string err;
  json error_json() const {
    REQUIRE(!err.empty());
    return json::parse(err);
  }
};

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

void spit(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path dir = fs::temp_directory_path() / ("referee_cli_" + tag);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

// Runs the binary through /bin/sh in a scratch cwd so an ambient referee.json
// can never leak into a test. `env_prefix` is e.g. "REFEREE_API_KEY=k".
RunResult run_in(const fs::path& cwd, const std::string& args,
                 const std::string& env_prefix = "") {
  static std::atomic<int> counter{0};
  int id = ++counter;
  fs::path out = fs::temp_directory_path() / ("referee_out_" + std::to_string(id));
  fs::path err = fs::temp_directory_path() / ("referee_err_" + std::to_string(id));
  std::string cmd = "cd " + cwd.string() + " && " + env_prefix +
                    (env_prefix.empty() ? "" : " ") + kBinary + " " + args + " >" +
                    out.string() + " 2>" + err.string();
  int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  result.out = slurp(out);
  result.err = slurp(err);
  fs::remove(out);
  fs::remove(err);
  return result;
}

RunResult run(const std::string& args, const std::string& env_prefix = "") {
  static fs::path scratch = fresh_dir("scratch");
  return run_in(scratch, args, env_prefix);
}

// Minimal chat-completions endpoint for end-to-end http tests.
class LocalServer {
 public:
  explicit LocalServer(std::string content, int status = 200)
      : content_(std::move(content)), status_(status) {
    server_.Post("/chat/completions", [this](const httplib::Request& req,
                                             httplib::Response& res) {
      {
        std::lock_guard<std::mutex> lock(mutex_);
        auth_.push_back(req.get_header_value("Authorization"));
      }
      ++calls_;
      res.status = status_;
      if (status_ == 200) {
        json body{{"choices", {{{"message", {{"content", content_}}}}}}};
        res.set_content(body.dump(), "application/json");
      } else {
        res.set_content("backend unavailable", "text/plain");
      }
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  ~LocalServer() {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string endpoint() const {
    return "http://127.0.0.1:" + std::to_string(port_);
  }
  int calls() const { return calls_.load(); }
  std::vector<std::string> auth_headers() {
    std::lock_guard<std::mutex> lock(mutex_);
    return auth_;
  }

 private:
  httplib::Server server_;
  std::thread thread_;
  std::string content_;
  int status_ = 200;
  int port_ = 0;
  std::atomic<int> calls_{0};
  std::mutex mutex_;
  std::vector<std::string> auth_;
};

}  // namespace

TEST_CASE("--version prints the tool name and semantic version") {
  RunResult r = run("--version");
  CHECK(r.exit_code == 0);
  CHECK(r.out == "referee 0.1.0\n");
  CHECK(r.err.empty());
}

TEST_CASE("bare or unknown invocations are bad requests with JSON diagnostics") {
  RunResult bare = run("");
  CHECK(bare.exit_code == 1);
  CHECK(bare.error_json()["error"]["code"] == "E_BAD_REQUEST");

  RunResult unknown = run("frobnicate --fast");
  CHECK(unknown.exit_code == 1);
  CHECK(unknown.error_json()["error"]["code"] == "E_BAD_REQUEST");
  CHECK(unknown.out.empty());
}

TEST_CASE("segment splits a summary file and mirrors the library output") {
  std::string summary_path = kFixtureDir + "/idn/summary.txt";
  RunResult plain = run("segment --text " + summary_path);
  REQUIRE(plain.exit_code == 0);

  auto segments = referee::segment(slurp(summary_path));
  REQUIRE(segments.size() == 5);
  std::string expected;
  for (const auto& seg : segments) expected += seg.text + "\n";
  CHECK(plain.out == expected);

  RunResult as_json = run("segment --json --text " + summary_path);
  REQUIRE(as_json.exit_code == 0);
  json arr = json::parse(as_json.out);
  REQUIRE(arr.size() == 5);
  CHECK(arr[0]["index"] == 0);
  CHECK(arr[4]["text"] == segments[4].text);
  CHECK(arr[2]["char_range"].size() == 2);

  RunResult missing = run("segment --text /definitely/not/here.txt");
  CHECK(missing.exit_code == 1);
  CHECK(missing.error_json()["error"]["code"] == "E_INPUT");
}

TEST_CASE("graph build dumps nodes to stdout or a file and warns on bad files") {
  RunResult dump = run("graph build --repo " + kFixtureDir + "/py_small");
  REQUIRE(dump.exit_code == 0);
  json graph = json::parse(dump.out);
  CHECK(graph["nodes"].size() == 7);
  CHECK(graph["edges"].size() == 1);

  fs::path dir = fresh_dir("graphdump");
  fs::path target = dir / "graph.json";
  RunResult to_file = run("graph build --repo " + kFixtureDir +
                          "/py_small --dump " + target.string());
  CHECK(to_file.exit_code == 0);
  CHECK(to_file.out.empty());
  CHECK(json::parse(slurp(target)) == graph);

  RunResult broken = run("graph build --repo " + kFixtureDir + "/broken");
  CHECK(broken.exit_code == 0);
  CHECK(broken.err.find("warning: bad.py: parse error, file skipped") !=
        std::string::npos);

  RunResult missing = run("graph build --repo " + kFixtureDir + "/absent");
  CHECK(missing.exit_code == 1);
  CHECK(missing.error_json()["error"]["code"] == "E_INPUT");
}

TEST_CASE("context prints dependency blocks above the sliced input code") {
  std::string base = "context --repo " + kFixtureDir + "/py_small --file main.py";
  RunResult one = run(base + " --function build_key --hops 1");
  REQUIRE(one.exit_code == 0);
  CHECK(one.out.find("# utils.collection_utils.key_prefix # key_prefix = \"cache:\"") == 0);
  CHECK(one.out.find("\n\ndef build_key(") != std::string::npos);

  RunResult zero = run(base + " --function build_key --hops 0");
  REQUIRE(zero.exit_code == 0);
  CHECK(zero.out.find("key_prefix = \"cache:\"") == std::string::npos);
  CHECK(zero.out.find("def build_key(") == 0);

  // hop-2 output keeps every hop-1 block
  RunResult two = run(base + " --function build_key --hops 2");
  REQUIRE(two.exit_code == 0);
  CHECK(two.out == one.out);

  fs::path dir = fresh_dir("ctxjson");
  fs::path target = dir / "related.json";
  RunResult with_json =
      run(base + " --function build_key --hops 1 --json " + target.string());
  REQUIRE(with_json.exit_code == 0);
  json related = json::parse(slurp(target));
  REQUIRE(related.size() == 1);
  CHECK(related[0]["class"] == "cross_file");
  CHECK(related[0]["entity_name"] == "utils.collection_utils.key_prefix");
}

TEST_CASE("context target selection is span xor function") {
  std::string base = "context --repo " + kFixtureDir + "/py_small --file main.py";
  RunResult both = run(base + " --span 0:10 --function build_key");
  CHECK(both.exit_code == 1);
  CHECK(both.error_json()["error"]["message"] ==
        "use either --span or --function, not both");

  RunResult neither = run(base);
  CHECK(neither.exit_code == 1);
  CHECK(neither.error_json()["error"]["code"] == "E_BAD_REQUEST");

  RunResult oversize = run(base + " --span 0:999999");
  CHECK(oversize.exit_code == 1);
  CHECK(oversize.error_json()["error"]["message"].get<std::string>().find(
            "exceeds file size") != std::string::npos);

  RunResult no_fn = run(base + " --function not_there");
  CHECK(no_fn.exit_code == 1);
  CHECK(no_fn.error_json()["error"]["code"] == "E_BAD_REQUEST");

  RunResult bad_span = run(base + " --span banana");
  CHECK(bad_span.exit_code == 1);
  CHECK(bad_span.error_json()["error"]["code"] == "E_BAD_REQUEST");
}

TEST_CASE("evaluate scores the idn fixture through the scripted stub") {
  std::string base = "evaluate --repo " + kFixtureDir + "/idn/repo" +
                     " --file idn.py --function convert_to_idn --summary " +
                     kFixtureDir + "/idn/summary.txt --api-docs " + kFixtureDir +
                     "/idn/api_docs.json";
  RunResult r =
      run(base + " --stub " + kFixtureDir + "/idn/stub_verdicts.json --format json");
  REQUIRE(r.exit_code == 0);
  json report = json::parse(r.out);
  CHECK(report["overall_score"] == 0.55);
  CHECK(report["config"]["backend"] == "stub");
  CHECK(report["config"]["hops"] == 1);
  REQUIRE(report["segments"].size() == 5);
  CHECK(report["segments"][1]["failed_criteria"] ==
        json::array({"C1", "C2", "C3", "C4"}));
  CHECK(report["segments"][4]["failed_criteria"] == json::array({"C4"}));
  bool has_external = false;
  for (const auto& item : report["context_items"])
    has_external = has_external || item["class"] == "external";
  CHECK(has_external);

  // default text format mentions the score; --json writes the same report
  fs::path dir = fresh_dir("evaljson");
  fs::path target = dir / "report.json";
  RunResult text = run(base + " --stub " + kFixtureDir +
                       "/idn/stub_verdicts.json --json " + target.string());
  REQUIRE(text.exit_code == 0);
  CHECK(text.out.find("0.55") != std::string::npos);
  CHECK(json::parse(slurp(target)) == report);
}

TEST_CASE("evaluate honors custom weights") {
  std::string base = "evaluate --repo " + kFixtureDir + "/idn/repo" +
                     " --file idn.py --function convert_to_idn --summary " +
                     kFixtureDir + "/idn/summary.txt --stub " + kFixtureDir +
                     "/idn/stub_verdicts.json --format json";
  RunResult weighted = run(base + " --weights 2,1,1,4");
  REQUIRE(weighted.exit_code == 0);
  CHECK(json::parse(weighted.out)["overall_score"] == 0.5);
  CHECK(json::parse(weighted.out)["config"]["weights"] ==
        json::array({2.0, 1.0, 1.0, 4.0}));

  RunResult bad = run(base + " --weights 1,2,3");
  CHECK(bad.exit_code == 1);
  CHECK(bad.error_json()["error"]["message"] ==
        "weights must be four comma-separated numbers");
}

TEST_CASE("evaluate requires exactly one backend") {
  std::string base = "evaluate --repo " + kFixtureDir + "/idn/repo" +
                     " --file idn.py --function convert_to_idn --summary " +
                     kFixtureDir + "/idn/summary.txt";
  RunResult none = run(base);
  CHECK(none.exit_code == 1);
  CHECK(none.error_json()["error"]["message"] ==
        "select exactly one backend: --stub or --endpoint");

  RunResult both = run(base + " --stub " + kFixtureDir +
                       "/idn/stub_verdicts.json --endpoint http://127.0.0.1:1");
  CHECK(both.exit_code == 1);
  CHECK(both.error_json()["error"]["code"] == "E_BAD_REQUEST");
}

TEST_CASE("evaluate reports missing stub verdicts as fixture errors") {
  fs::path dir = fresh_dir("stubmiss");
  spit(dir / "stub.json", R"({"verdicts": {"0:C1": "1"}})");
  spit(dir / "summary.txt", "The function converts URLs.");
  RunResult r = run_in(
      dir, "evaluate --repo " + kFixtureDir + "/idn/repo --file idn.py" +
               " --function convert_to_idn --summary summary.txt --stub stub.json");
  CHECK(r.exit_code == 1);
  json err = r.error_json();
  CHECK(err["error"]["code"] == "E_BAD_FIXTURE");
  CHECK(err["error"]["message"].get<std::string>().find("0:C2") !=
        std::string::npos);
}

TEST_CASE("evaluate talks to a chat-completions endpoint") {
  LocalServer server("1");
  fs::path dir = fresh_dir("http_eval");
  spit(dir / "summary.txt", "The function converts URLs.");
  std::string base = "evaluate --repo " + kFixtureDir + "/idn/repo" +
                     " --file idn.py --function convert_to_idn" +
                     " --summary summary.txt --format json --endpoint " +
                     server.endpoint();

  RunResult r = run_in(dir, base + " --model test-model", "REFEREE_API_KEY=envkey");
  REQUIRE(r.exit_code == 0);
  json report = json::parse(r.out);
  CHECK(report["overall_score"] == 1.0);
  CHECK(report["config"]["backend"] == "http");
  CHECK(report["config"]["model"] == "test-model");
  CHECK(server.calls() == 4);  // one summary segment, four criteria
  for (const std::string& auth : server.auth_headers())
    CHECK(auth == "Bearer envkey");
}

TEST_CASE("api keys prefer flags over config file over environment") {
  LocalServer server("1");
  fs::path dir = fresh_dir("http_keys");
  spit(dir / "summary.txt", "The function converts URLs.");
  spit(dir / "referee.json",
       json{{"api_key", "confkey"}, {"endpoint", server.endpoint()}}.dump());
  std::string base = "evaluate --repo " + kFixtureDir + "/idn/repo" +
                     " --file idn.py --function convert_to_idn --summary summary.txt";

  RunResult from_config = run_in(dir, base, "REFEREE_API_KEY=envkey");
  REQUIRE(from_config.exit_code == 0);
  auto headers = server.auth_headers();
  REQUIRE(headers.size() == 4);
  for (const std::string& auth : headers) CHECK(auth == "Bearer confkey");

  RunResult from_flag = run_in(dir, base + " --api-key flagkey", "REFEREE_API_KEY=envkey");
  REQUIRE(from_flag.exit_code == 0);
  headers = server.auth_headers();
  REQUIRE(headers.size() == 8);
  for (size_t i = 4; i < 8; ++i) CHECK(headers[i] == "Bearer flagkey");
}

TEST_CASE("config file values apply and flags override them") {
  fs::path dir = fresh_dir("confprec");
  spit(dir / "referee.json", R"({"hops": 7})");
  std::string base = "evaluate --repo " + kFixtureDir + "/idn/repo" +
                     " --file idn.py --function convert_to_idn --summary " +
                     kFixtureDir + "/idn/summary.txt --stub " + kFixtureDir +
                     "/idn/stub_verdicts.json";

  RunResult bad_hops = run_in(dir, base);
  CHECK(bad_hops.exit_code == 1);
  CHECK(bad_hops.error_json()["error"]["message"] == "hops must be 0, 1, or 2");

  RunResult overridden = run_in(dir, base + " --hops 1 --format json");
  REQUIRE(overridden.exit_code == 0);
  CHECK(json::parse(overridden.out)["config"]["hops"] == 1);

  RunResult missing_config = run_in(dir, base + " --config nope.json");
  CHECK(missing_config.exit_code == 1);
  CHECK(missing_config.error_json()["error"]["code"] == "E_INPUT");

  spit(dir / "broken.json", "{nope");
  RunResult bad_config = run_in(dir, base + " --config broken.json");
  CHECK(bad_config.exit_code == 1);
  CHECK(bad_config.error_json()["error"]["code"] == "E_PARSE");
}

TEST_CASE("backend failures exit 2 with their error class") {
  fs::path dir = fresh_dir("http_fail");
  spit(dir / "summary.txt", "The function converts URLs.");
  std::string base = "evaluate --repo " + kFixtureDir + "/idn/repo" +
                     " --file idn.py --function convert_to_idn --summary summary.txt" +
                     " --max-retries 2 --endpoint ";

  {
    LocalServer garbage("perhaps");
    RunResult r = run_in(dir, base + garbage.endpoint());
    CHECK(r.exit_code == 2);
    CHECK(r.error_json()["error"]["code"] == "E_BAD_RESPONSE");
  }
  {
    LocalServer broken("", 500);
    RunResult r = run_in(dir, base + broken.endpoint());
    CHECK(r.exit_code == 2);
    CHECK(r.error_json()["error"]["code"] == "E_BACKEND");
  }
  RunResult unreachable = run_in(dir, base + "http://127.0.0.1:9");
  CHECK(unreachable.exit_code == 2);
  CHECK(unreachable.error_json()["error"]["code"] == "E_BACKEND");
}

TEST_CASE("bench run replays gold labels and recomputes identical stats") {
  std::string dataset = kFixtureDir + "/bench/dataset_aligned.jsonl";
  fs::path dir = fresh_dir("benchrun");
  std::string base = "bench run --dataset " + dataset + " --gold-stub";

  RunResult text = run_in(dir, base);
  REQUIRE(text.exit_code == 0);
  CHECK(text.out.find("language     n      r_p      r_s      tau  average") !=
        std::string::npos);
  CHECK(text.out.find("   1.000") != std::string::npos);

  RunResult a = run_in(dir, base + " --format json");
  RunResult b = run_in(dir, base + " --format json");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);  // byte-identical reruns
  json report = json::parse(a.out);
  CHECK(report["config"]["backend"] == "gold-stub");
  REQUIRE(report["metrics"].size() == 3);
  for (const auto& group : report["metrics"]) {
    CHECK(group["pearson_r"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(group["kendall_tau"].get<double>() == doctest::Approx(1.0).epsilon(1e-12));
  }
  CHECK(!report.contains("wall_seconds"));

  RunResult timed = run_in(dir, base + " --format json --timing");
  CHECK(json::parse(timed.out).contains("wall_seconds"));

  RunResult saved = run_in(dir, base + " --json report.json --predictions preds.json");
  REQUIRE(saved.exit_code == 0);
  CHECK(json::parse(slurp(dir / "report.json"))["metrics"] == report["metrics"]);

  RunResult stats = run_in(dir, "bench stats --predictions preds.json --gold " +
                                    dataset + " --format json");
  REQUIRE(stats.exit_code == 0);
  CHECK(json::parse(stats.out)["metrics"] == report["metrics"]);
}

TEST_CASE("bench noise is reproducible for a seed and echoed in the config") {
  std::string dataset = kFixtureDir + "/bench/dataset.jsonl";
  std::string base = "bench run --dataset " + dataset + " --noise 0.2 --format json";
  RunResult a = run(base + " --seed 7");
  RunResult b = run(base + " --seed 7");
  RunResult c = run(base + " --seed 8");
  REQUIRE(a.exit_code == 0);
  CHECK(a.out == b.out);
  CHECK(a.out != c.out);
  json report = json::parse(a.out);
  CHECK(report["config"]["backend"] == "noisy-stub");
  CHECK(report["config"]["noise"] == 0.2);
  CHECK(report["config"]["seed"] == 7);
}

TEST_CASE("bench backend selection must be unambiguous") {
  std::string dataset = kFixtureDir + "/bench/dataset.jsonl";
  RunResult none = run("bench run --dataset " + dataset);
  CHECK(none.exit_code == 1);
  CHECK(none.error_json()["error"]["message"] ==
        "select exactly one backend: --stub, --gold-stub, or --endpoint");

  RunResult two = run("bench run --dataset " + dataset + " --gold-stub --stub " +
                      kFixtureDir + "/idn/stub_verdicts.json");
  CHECK(two.exit_code == 1);

  RunResult noisy_stub = run("bench run --dataset " + dataset + " --noise 0.1 --stub " +
                             kFixtureDir + "/idn/stub_verdicts.json");
  CHECK(noisy_stub.exit_code == 1);
  CHECK(noisy_stub.error_json()["error"]["message"] ==
        "--noise applies to the gold stub only");
}

TEST_CASE("bench rejects unusable datasets and prediction files") {
  fs::path dir = fresh_dir("benchbad");
  spit(dir / "empty.jsonl", "\n");
  RunResult empty = run_in(dir, "bench run --dataset empty.jsonl --gold-stub");
  CHECK(empty.exit_code == 1);
  CHECK(empty.error_json()["error"]["code"] == "E_BAD_FIXTURE");

  spit(dir / "preds.json", R"({"predictions": 5})");
  RunResult preds = run_in(dir, "bench stats --predictions preds.json --gold " +
                                    kFixtureDir + "/bench/dataset.jsonl");
  CHECK(preds.exit_code == 1);
  CHECK(preds.error_json()["error"]["code"] == "E_BAD_FIXTURE");

  spit(dir / "preds2.json", "not json");
  RunResult bad = run_in(dir, "bench stats --predictions preds2.json --gold " +
                                  kFixtureDir + "/bench/dataset.jsonl");
  CHECK(bad.exit_code == 1);
  CHECK(bad.error_json()["error"]["code"] == "E_PARSE");
}
