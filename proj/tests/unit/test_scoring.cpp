#include <doctest.h>

#include <array>
#include <random>
#include <string>
#include <vector>

#include "referee/error.hpp"
#include "referee/scoring.hpp"
#include "referee/segment.hpp"

using namespace referee;

namespace {

VerdictMatrix make_matrix(const std::vector<std::array<int, 4>>& flags) {
  VerdictMatrix m;
  for (size_t s = 0; s < flags.size(); ++s) {
    std::array<Verdict, 4> row;
    for (size_t c = 0; c < 4; ++c) {
      row[c].segment_index = s;
      row[c].criterion = static_cast<CriterionId>(c);
      row[c].pass_flag = flags[s][c];
      row[c].raw_response = flags[s][c] ? "1" : "0";
      row[c].attempts = 1;
    }
    m.rows.push_back(row);
  }
  return m;
}

// Independent double-loop summation oracle.
double aggregate_oracle(const std::vector<std::array<int, 4>>& flags,
                        const std::array<double, 4>& w) {
  double num = 0.0, wsum = 0.0;
  for (double v : w) wsum += v;
  for (const auto& row : flags)
    for (size_t c = 0; c < 4; ++c) num += w[c] * row[c];
  return num / (double(flags.size()) * wsum);
}

const Weights kTunedWeights{{0.6, 1.2, 1.2, 1.0}};

}  // namespace

TEST_CASE("uniform matrices hit the endpoints") {
  CHECK(aggregate(make_matrix({{1, 1, 1, 1}, {1, 1, 1, 1}})) == doctest::Approx(1.0));
  CHECK(aggregate(make_matrix({{0, 0, 0, 0}, {0, 0, 0, 0}})) == doctest::Approx(0.0));
}

TEST_CASE("five-segment pattern with 11 of 20 passes scores 0.55") {
  auto m = make_matrix({{1, 1, 1, 1},
                        {0, 0, 0, 0},
                        {1, 1, 1, 1},
                        {0, 0, 0, 0},
                        {1, 1, 1, 0}});
  CHECK(aggregate(m) == doctest::Approx(0.55).epsilon(1e-15));
}

TEST_CASE("the abridged flag pattern scores 0.75") {
  // Rows summing 4,2,4,2,3: the display-flag subset of the same example.
  auto m = make_matrix({{1, 1, 1, 1},
                        {0, 1, 0, 1},
                        {1, 1, 1, 1},
                        {1, 0, 0, 1},
                        {1, 1, 1, 0}});
  CHECK(aggregate(m) == doctest::Approx(0.75).epsilon(1e-15));
}

TEST_CASE("random matrices match the double-loop oracle") {
  std::mt19937 rng(99101);
  std::uniform_int_distribution<int> seg_dist(1, 40);
  for (int trial = 0; trial < 1000; ++trial) {
    size_t n = static_cast<size_t>(seg_dist(rng));
    std::vector<std::array<int, 4>> flags(n);
    for (auto& row : flags)
      for (auto& f : row) f = int(rng() % 2);
    auto m = make_matrix(flags);
    CAPTURE(trial);
    CHECK(aggregate(m) ==
          doctest::Approx(aggregate_oracle(flags, {1, 1, 1, 1})).epsilon(1e-12));
    CHECK(aggregate(m, kTunedWeights) ==
          doctest::Approx(aggregate_oracle(flags, kTunedWeights.w)).epsilon(1e-12));
  }
}

TEST_CASE("weights are scale invariant and reduce to the mean when equal") {
  auto m = make_matrix({{1, 0, 1, 1}, {0, 1, 1, 0}, {1, 1, 0, 1}});
  Weights w{{0.6, 1.2, 1.2, 1.0}};
  Weights w3{{1.8, 3.6, 3.6, 3.0}};
  CHECK(aggregate(m, w) == doctest::Approx(aggregate(m, w3)).epsilon(1e-15));
  Weights equal{{2.5, 2.5, 2.5, 2.5}};
  CHECK(aggregate(m, equal) == doctest::Approx(aggregate(m)).epsilon(1e-15));
}

TEST_CASE("flipping a failing verdict strictly raises the score") {
  std::mt19937 rng(5150);
  for (int trial = 0; trial < 50; ++trial) {
    size_t n = 1 + rng() % 6;
    std::vector<std::array<int, 4>> flags(n);
    for (auto& row : flags)
      for (auto& f : row) f = int(rng() % 2);
    flags[rng() % n][rng() % 4] = 0; // guarantee at least one failure
    auto m = make_matrix(flags);
    double before_unit = aggregate(m);
    double before_w = aggregate(m, kTunedWeights);
    // Flip the first failing cell.
    for (size_t s = 0; s < n; ++s)
      for (size_t c = 0; c < 4; ++c)
        if (flags[s][c] == 0) {
          flags[s][c] = 1;
          goto flipped;
        }
  flipped:
    auto m2 = make_matrix(flags);
    CHECK(aggregate(m2) > before_unit);
    CHECK(aggregate(m2, kTunedWeights) > before_w);
  }
}

TEST_CASE("aggregate rejects empty and malformed input") {
  VerdictMatrix empty;
  CHECK_THROWS_AS((void)aggregate(empty), Error);
  auto m = make_matrix({{1, 1, 1, 1}});
  Weights zero{{0, 0, 0, 0}};
  CHECK_THROWS_AS((void)aggregate(m, zero), Error);
}

TEST_CASE("labels normalize onto (0,1] by dividing by five") {
  CHECK(normalize_label(1) == doctest::Approx(0.2));
  CHECK(normalize_label(2) == doctest::Approx(0.4));
  CHECK(normalize_label(3) == doctest::Approx(0.6));
  CHECK(normalize_label(5) == doctest::Approx(1.0));
  CHECK_THROWS_AS((void)normalize_label(0), Error);
  CHECK_THROWS_AS((void)normalize_label(6), Error);
}

TEST_CASE("report flags exactly the failing criteria per segment") {
  auto segs = segment(
      "The function opens the file. It parses each row. It returns a count.");
  REQUIRE(segs.size() == 3);
  auto m = make_matrix({{1, 1, 1, 1}, {0, 1, 0, 1}, {1, 1, 1, 0}});
  ReportConfig cfg;
  cfg.hops = 1;
  cfg.backend = "stub";
  cfg.language = "python";
  auto report = build_report(m, segs, {}, aggregate(m), cfg);
  REQUIRE(report.per_segment.size() == 3);
  CHECK(report.per_segment[0].failed_criteria.empty());
  CHECK(report.per_segment[1].failed_criteria ==
        std::vector<CriterionId>{CriterionId::C1_Name, CriterionId::C3_Functionality});
  CHECK(report.per_segment[2].failed_criteria ==
        std::vector<CriterionId>{CriterionId::C4_ContextIrrelevant});
  CHECK(report.per_segment[0].row_score == doctest::Approx(1.0));
  CHECK(report.per_segment[1].row_score == doctest::Approx(0.5));
  CHECK(report.per_segment[2].row_score == doctest::Approx(0.75));
  CHECK(report.overall_score == doctest::Approx(aggregate(m)));
}

TEST_CASE("report round-trips through json") {
  auto segs = segment("It builds a graph. It scores each sentence.");
  REQUIRE(segs.size() == 2);
  auto m = make_matrix({{1, 0, 1, 1}, {1, 1, 1, 0}});
  RelatedInfo info;
  info.entity_name = "utils.key_prefix";
  info.content = "key_prefix = \"cache:\"";
  info.dep_class = DependencyClass::CrossFile;
  info.source = "utils.py";
  info.anchor_entity = "0123456789abcdef";
  ReportConfig cfg;
  cfg.hops = 2;
  cfg.weights = Weights{{0.6, 1.2, 1.2, 1.0}};
  cfg.model_id = "demo";
  cfg.backend = "stub";
  cfg.language = "python";
  auto report = build_report(m, segs, {info}, aggregate(m, cfg.weights), cfg);

  auto round = ConsistencyReport::from_json(report.to_json());
  CHECK(round.overall_score == doctest::Approx(report.overall_score));
  REQUIRE(round.per_segment.size() == report.per_segment.size());
  for (size_t i = 0; i < round.per_segment.size(); ++i) {
    CHECK(round.per_segment[i].text == report.per_segment[i].text);
    CHECK(round.per_segment[i].failed_criteria ==
          report.per_segment[i].failed_criteria);
    CHECK(round.per_segment[i].row_score ==
          doctest::Approx(report.per_segment[i].row_score));
  }
  REQUIRE(round.context_items.size() == 1);
  CHECK(round.context_items[0].entity_name == info.entity_name);
  CHECK(round.context_items[0].dep_class == info.dep_class);
  CHECK(round.config.hops == 2);
  CHECK(round.config.model_id == "demo");
  CHECK(round.config.weights.w == cfg.weights.w);
  REQUIRE(round.matrix.rows.size() == 2);
  for (size_t s = 0; s < 2; ++s)
    for (size_t c = 0; c < 4; ++c)
      CHECK(round.matrix.rows[s][c].pass_flag == m.rows[s][c].pass_flag);
}

TEST_CASE("report construction rejects mismatched lengths") {
  auto segs = segment("Only one sentence here.");
  auto m = make_matrix({{1, 1, 1, 1}, {1, 1, 1, 1}});
  CHECK_THROWS_AS((void)build_report(m, segs, {}, aggregate(m), ReportConfig{}), Error);
}

TEST_CASE("text report names score and flags") {
  auto segs = segment("It reads input. It mislabels types.");
  auto m = make_matrix({{1, 1, 1, 1}, {1, 0, 1, 1}});
  auto report = build_report(m, segs, {}, aggregate(m), ReportConfig{});
  std::string text = report.to_text();
  CHECK(text.find("score") != std::string::npos);
  CHECK(text.find("C2") != std::string::npos);
}
