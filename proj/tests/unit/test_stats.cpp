#include <doctest.h>

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <random>
#include <vector>

#include "referee/error.hpp"
#include "referee/stats.hpp"

using namespace referee::stats;
using referee::Error;
using referee::ErrCode;

namespace {

// Definitional Pearson: direct covariance / sqrt(variance product).
double pearson_def(const std::vector<double>& x, const std::vector<double>& y) {
  size_t n = x.size();
  double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) { mx += x[i]; my += y[i]; }
  mx /= double(n); my /= double(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

// Definitional average ranks: 1 + |{j : v_j < v_i}| + (ties - 1)/2, no sorting.
std::vector<double> ranks_def(const std::vector<double>& v) {
  std::vector<double> out(v.size());
  for (size_t i = 0; i < v.size(); ++i) {
    size_t below = 0, equal = 0;
    for (size_t j = 0; j < v.size(); ++j) {
      if (v[j] < v[i]) ++below;
      else if (v[j] == v[i]) ++equal;
    }
    out[i] = 1.0 + double(below) + (double(equal) - 1.0) / 2.0;
  }
  return out;
}

// Exhaustive tau-b: concordant/discordant/tied counted pair by pair.
double kendall_def(const std::vector<double>& x, const std::vector<double>& y) {
  long long c = 0, d = 0, tx = 0, ty = 0;
  size_t n = x.size();
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (x[i] == x[j]) ++tx;
      if (y[i] == y[j]) ++ty;
      double prod = (x[i] - x[j]) * (y[i] - y[j]);
      if (prod > 0) ++c;
      else if (prod < 0) ++d;
    }
  }
  long long n0 = static_cast<long long>(n) * (n - 1) / 2;
  return double(c - d) /
         (std::sqrt(double(n0 - tx)) * std::sqrt(double(n0 - ty)));
}

std::optional<double> miss() { return std::nullopt; }

}  // namespace

TEST_CASE("pearson on a frozen fixture") {
  std::vector<double> x{1, 2, 3, 4, 5, 6.5, 7, 8.2, 9, 10};
  std::vector<double> y{2.1, 1.9, 3.5, 3.4, 5.9, 6.0, 6.1, 8.8, 8.7, 10.2};
  auto c = pearson(x, y);
  CHECK(c.r == doctest::Approx(0.975545408557566).epsilon(1e-12));
  CHECK(c.p == doctest::Approx(1.51920950741475e-06).epsilon(1e-9));
}

TEST_CASE("spearman and kendall on the frozen fixture") {
  std::vector<double> x{1, 2, 3, 4, 5, 6.5, 7, 8.2, 9, 10};
  std::vector<double> y{2.1, 1.9, 3.5, 3.4, 5.9, 6.0, 6.1, 8.8, 8.7, 10.2};
  auto s = spearman(x, y);
  CHECK(s.r == doctest::Approx(0.963636363636364).epsilon(1e-12));
  CHECK(s.p == doctest::Approx(7.32097480952992e-06).epsilon(1e-9));
  auto k = kendall_tau(x, y);
  CHECK(k.r == doctest::Approx(0.866666666666667).epsilon(1e-12));
  CHECK(k.p == doctest::Approx(0.000486164074979269).epsilon(1e-9));
}

TEST_CASE("tied fixture matches frozen reference values") {
  std::vector<double> x{1, 2, 2, 3, 4, 4, 4, 5};
  std::vector<double> y{3, 3, 4, 5, 5, 6, 7, 7};
  auto pr = pearson(x, y);
  CHECK(pr.r == doctest::Approx(0.919640659620007).epsilon(1e-12));
  CHECK(pr.p == doctest::Approx(0.0012203933839561).epsilon(1e-9));
  auto sp = spearman(x, y);
  CHECK(sp.r == doctest::Approx(0.918821785756253).epsilon(1e-12));
  CHECK(sp.p == doctest::Approx(0.00125728800040883).epsilon(1e-9));
  auto kd = kendall_tau(x, y);
  CHECK(kd.r == doctest::Approx(0.857321409974112).epsilon(1e-12));
  CHECK(kd.p == doctest::Approx(0.00586609352185397).epsilon(1e-9));
}

TEST_CASE("perfect and reversed orderings") {
  std::vector<double> x{1, 2, 3, 4, 5};
  std::vector<double> up{10, 20, 30, 40, 50};
  std::vector<double> down{50, 40, 30, 20, 10};
  CHECK(pearson(x, up).r == doctest::Approx(1.0));
  CHECK(spearman(x, up).r == doctest::Approx(1.0));
  CHECK(kendall_tau(x, up).r == doctest::Approx(1.0));
  CHECK(kendall_tau(x, down).r == doctest::Approx(-1.0));
  CHECK(spearman(x, down).r == doctest::Approx(-1.0));
}

TEST_CASE("spearman handles shared ranks") {
  std::vector<double> x{1, 2, 2, 3};
  std::vector<double> y{10, 20, 20, 30};
  CHECK(spearman(x, y).r == doctest::Approx(1.0));
}

TEST_CASE("average ranks assign tied values the mean rank") {
  std::vector<double> v{3, 1, 4, 1, 5};
  auto r = average_ranks(v);
  CHECK(r == std::vector<double>{3.0, 1.5, 4.0, 1.5, 5.0});
}

TEST_CASE("constant input raises zero variance") {
  std::vector<double> flat{2, 2, 2, 2};
  std::vector<double> live{1, 2, 3, 4};
  CHECK_THROWS_AS((void)pearson(flat, live), Error);
  CHECK_THROWS_AS((void)kendall_tau(flat, live), Error);
  try {
    (void)pearson(flat, live);
  } catch (const Error& e) {
    CHECK(e.code() == ErrCode::ZeroVariance);
  }
}

TEST_CASE("length mismatch and undersized input are rejected") {
  std::vector<double> a{1, 2, 3};
  std::vector<double> b{1, 2};
  CHECK_THROWS_AS((void)pearson(a, b), Error);
  std::vector<double> one{1};
  CHECK_THROWS_AS((void)pearson(one, one), Error);
}

TEST_CASE("random pairs with ties match definitional oracles") {
  std::mt19937 rng(424242);
  std::uniform_int_distribution<int> len_dist(2, 50);
  std::uniform_int_distribution<int> val_dist(0, 9);
  int done = 0;
  while (done < 200) {
    size_t n = static_cast<size_t>(len_dist(rng));
    std::vector<double> x(n), y(n);
    for (size_t i = 0; i < n; ++i) {
      x[i] = val_dist(rng);
      y[i] = val_dist(rng);
    }
    bool xconst = true, yconst = true;
    for (size_t i = 1; i < n; ++i) {
      xconst = xconst && x[i] == x[0];
      yconst = yconst && y[i] == y[0];
    }
    if (xconst || yconst) continue;
    ++done;
    CAPTURE(done);
    CAPTURE(n);
    CHECK(pearson(x, y).r == doctest::Approx(pearson_def(x, y)).epsilon(1e-9));
    CHECK(average_ranks(x) == ranks_def(x));
    double sp_oracle = pearson_def(ranks_def(x), ranks_def(y));
    CHECK(spearman(x, y).r == doctest::Approx(sp_oracle).epsilon(1e-9));
    CHECK(kendall_tau(x, y).r == kendall_def(x, y));
  }
}

TEST_CASE("krippendorff perfect agreement") {
  std::vector<std::vector<std::optional<double>>> ratings{
      {1, 2, 3, 4, 5},
      {1, 2, 3, 4, 5},
      {1, 2, 3, 4, 5},
  };
  auto nominal = krippendorff_alpha(ratings, AlphaLevel::Nominal);
  CHECK(nominal.alpha == doctest::Approx(1.0));
  CHECK(nominal.raters == 3);
  CHECK(nominal.items == 5);
  auto ordinal = krippendorff_alpha(ratings, AlphaLevel::Ordinal);
  CHECK(ordinal.alpha == doctest::Approx(1.0));
  CHECK(ordinal.level == AlphaLevel::Ordinal);
}

TEST_CASE("krippendorff hand-worked 3x4 fixture") {
  // Coincidence matrix worked by hand (exact fractions): nominal 9/19,
  // ordinal 1429/2079.
  std::vector<std::vector<std::optional<double>>> ratings{
      {1, 2, 3, 1},
      {1, 2, 2, 1},
      {2, 2, 3, miss()},
  };
  auto nominal = krippendorff_alpha(ratings, AlphaLevel::Nominal);
  CHECK(nominal.alpha == doctest::Approx(9.0 / 19.0).epsilon(1e-9));
  auto ordinal = krippendorff_alpha(ratings, AlphaLevel::Ordinal);
  CHECK(ordinal.alpha == doctest::Approx(1429.0 / 2079.0).epsilon(1e-9));
}

TEST_CASE("krippendorff systematic disagreement is negative") {
  std::vector<std::vector<std::optional<double>>> ratings{
      {0, 1},
      {1, 0},
  };
  auto res = krippendorff_alpha(ratings, AlphaLevel::Nominal);
  CHECK(res.alpha == doctest::Approx(-0.5).epsilon(1e-12));
}

TEST_CASE("krippendorff rejects degenerate inputs") {
  std::vector<std::vector<std::optional<double>>> one_rater{{1, 2, 3}};
  CHECK_THROWS_AS((void)krippendorff_alpha(one_rater, AlphaLevel::Nominal), Error);

  // Two raters but no item carries two ratings.
  std::vector<std::vector<std::optional<double>>> disjoint{
      {1, miss(), 2},
      {miss(), 1, miss()},
  };
  try {
    (void)krippendorff_alpha(disjoint, AlphaLevel::Nominal);
    FAIL("expected insufficient-data error");
  } catch (const Error& e) {
    CHECK(e.code() == ErrCode::BadRequest);
    CHECK(std::string(e.what()).find("insufficient") != std::string::npos);
  }
}

TEST_CASE("vote picks the majority value") {
  CHECK(vote_candidate_label({4, 4, 2}, VoteLevel::Summary) == 4);
  CHECK(vote_candidate_label({5, 1, 5}, VoteLevel::Summary) == 5);
  CHECK(vote_candidate_label({1, 1, 0}, VoteLevel::Segment) == 1);
  CHECK(vote_candidate_label({0, 1, 0}, VoteLevel::Segment) == 0);
}

TEST_CASE("vote falls back to the label closest to the mean") {
  CHECK(vote_candidate_label({2, 3, 5}, VoteLevel::Summary) == 3);
  CHECK(vote_candidate_label({1, 2, 3}, VoteLevel::Summary) == 2);
  CHECK(vote_candidate_label({1, 4, 5}, VoteLevel::Summary) == 4);
  CHECK(vote_candidate_label({1, 2, 5}, VoteLevel::Summary) == 2);
}

TEST_CASE("vote rejects out-of-range labels") {
  CHECK_THROWS_AS((void)vote_candidate_label({0, 3, 4}, VoteLevel::Summary), Error);
  CHECK_THROWS_AS((void)vote_candidate_label({1, 6, 2}, VoteLevel::Summary), Error);
  CHECK_THROWS_AS((void)vote_candidate_label({0, 1, 2}, VoteLevel::Segment), Error);
}

TEST_CASE("segment confusion on identical and complementary matrices") {
  std::vector<std::array<int, 4>> gold{{1, 0, 1, 1}, {0, 1, 1, 0}};
  auto same = segment_confusion(gold, gold);
  for (const auto& c : same) {
    CHECK(c.accuracy() == doctest::Approx(1.0));
    CHECK(c.fp == 0);
    CHECK(c.fn == 0);
  }
  std::vector<std::array<int, 4>> flipped{{0, 1, 0, 0}, {1, 0, 0, 1}};
  auto inverted = segment_confusion(flipped, gold);
  for (const auto& c : inverted) CHECK(c.accuracy() == doctest::Approx(0.0));
}

TEST_CASE("segment confusion matches a counting oracle on a mixed fixture") {
  std::mt19937 rng(777);
  std::vector<std::array<int, 4>> pred(10), gold(10);
  for (size_t i = 0; i < 10; ++i) {
    for (size_t c = 0; c < 4; ++c) {
      pred[i][c] = int(rng() % 2);
      gold[i][c] = int(rng() % 2);
    }
  }
  auto result = segment_confusion(pred, gold);
  for (size_t c = 0; c < 4; ++c) {
    size_t tp = 0, fp = 0, fn = 0, tn = 0;
    for (size_t i = 0; i < 10; ++i) {
      if (pred[i][c] == 1 && gold[i][c] == 1) ++tp;
      if (pred[i][c] == 0 && gold[i][c] == 1) ++fp; // flagged a consistent cell
      if (pred[i][c] == 1 && gold[i][c] == 0) ++fn; // missed an inconsistency
      if (pred[i][c] == 0 && gold[i][c] == 0) ++tn;
    }
    CHECK(result[c].tp == tp);
    CHECK(result[c].fp == fp);
    CHECK(result[c].fn == fn);
    CHECK(result[c].tn == tn);
    CHECK(result[c].accuracy() == doctest::Approx(double(tp + tn) / 40.0 * 4.0));
  }
}

TEST_CASE("confusion shape mismatch is rejected") {
  std::vector<std::array<int, 4>> two(2, {1, 1, 1, 1});
  std::vector<std::array<int, 4>> three(3, {1, 1, 1, 1});
  CHECK_THROWS_AS((void)segment_confusion(two, three), Error);
}
