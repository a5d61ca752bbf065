#include "referee/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "referee/error.hpp"

namespace referee::stats {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_pair(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size())
    fail(ErrCode::BadRequest, "length mismatch: " + std::to_string(x.size()) +
                                  " vs " + std::to_string(y.size()));
  if (x.size() < 2) fail(ErrCode::BadRequest, "need at least 2 observations");
}

// Regularized incomplete beta I_x(a,b) via the standard continued-fraction
// expansion (modified Lentz), good to ~1e-15 over the needed domain.
double betacf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;
  double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0, d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

double betai(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  double ln = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
              a * std::log(x) + b * std::log(1.0 - x);
  double front = std::exp(ln);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * betacf(a, b, x) / a;
  return 1.0 - front * betacf(b, a, 1.0 - x) / b;
}

// Two-sided p for a t statistic with df degrees of freedom.
double t_sf_two_sided(double t, double df) {
  if (!std::isfinite(t)) return 0.0;
  return betai(df / 2.0, 0.5, df / (df + t * t));
}

double normal_sf_two_sided(double z) {
  return std::erfc(std::fabs(z) / std::sqrt(2.0));
}

}  // namespace

Corr pearson(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  size_t n = x.size();
  long double mx = 0, my = 0;
  for (size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  long double sxx = 0, syy = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    long double dx = x[i] - mx, dy = y[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0 || syy == 0)
    fail(ErrCode::ZeroVariance, "zero variance input to pearson");
  double r = static_cast<double>(sxy / std::sqrt(sxx * syy));
  r = std::clamp(r, -1.0, 1.0);
  Corr out{r, kNaN};
  if (n >= 3) {
    double df = static_cast<double>(n - 2);
    if (std::fabs(r) >= 1.0) {
      out.p = 0.0;
    } else {
      double t = r * std::sqrt(df / (1.0 - r * r));
      out.p = t_sf_two_sided(t, df);
    }
  }
  return out;
}

std::vector<double> average_ranks(std::span<const double> values) {
  size_t n = values.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](size_t a, size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(n, 0.0);
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j + 1 < n && values[order[j + 1]] == values[order[i]]) ++j;
    double mean_rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
    i = j + 1;
  }
  return ranks;
}

Corr spearman(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  auto rx = average_ranks(x);
  auto ry = average_ranks(y);
  return pearson(rx, ry);
}

Corr kendall_tau(std::span<const double> x, std::span<const double> y) {
  check_pair(x, y);
  size_t n = x.size();
  long long concordant = 0, discordant = 0;
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      double dx = x[i] - x[j], dy = y[i] - y[j];
      double prod = dx * dy;
      if (prod > 0) ++concordant;
      else if (prod < 0) ++discordant;
    }
  }
  auto tie_counts = [](std::span<const double> v) {
    std::map<double, long long> groups;
    for (double t : v) ++groups[t];
    return groups;
  };
  long long nn = static_cast<long long>(n);
  long long n0 = nn * (nn - 1) / 2;
  long long n1 = 0, n2 = 0;
  long long vt = 0, vu = 0;
  long long t1sum = 0, u1sum = 0;  // sum t(t-1)
  long long t2sum = 0, u2sum = 0;  // sum t(t-1)(t-2)
  for (auto& [v, t] : tie_counts(x)) {
    n1 += t * (t - 1) / 2;
    vt += t * (t - 1) * (2 * t + 5);
    t1sum += t * (t - 1);
    t2sum += t * (t - 1) * (t - 2);
  }
  for (auto& [v, u] : tie_counts(y)) {
    n2 += u * (u - 1) / 2;
    vu += u * (u - 1) * (2 * u + 5);
    u1sum += u * (u - 1);
    u2sum += u * (u - 1) * (u - 2);
  }
  if (n0 == n1 || n0 == n2)
    fail(ErrCode::ZeroVariance, "all values tied in kendall_tau");
  long long s = concordant - discordant;
  double denom = std::sqrt(static_cast<double>(n0 - n1)) *
                 std::sqrt(static_cast<double>(n0 - n2));
  double tau = std::clamp(static_cast<double>(s) / denom, -1.0, 1.0);
  Corr out{tau, kNaN};
  if (n >= 3) {
    double v0 = static_cast<double>(nn) * (nn - 1) * (2.0 * nn + 5);
    double var = (v0 - vt - vu) / 18.0 +
                 static_cast<double>(t1sum) * u1sum / (2.0 * nn * (nn - 1)) +
                 static_cast<double>(t2sum) * u2sum /
                     (9.0 * nn * (nn - 1) * (nn - 2));
    if (var > 0) {
      double z = static_cast<double>(s) / std::sqrt(var);
      out.p = normal_sf_two_sided(z);
    }
  }
  return out;
}

AgreementResult krippendorff_alpha(
    const std::vector<std::vector<std::optional<double>>>& ratings, AlphaLevel level) {
  if (ratings.size() < 2)
    fail(ErrCode::BadRequest, "insufficient data: need at least 2 raters");
  size_t n_items = ratings.front().size();
  for (auto& row : ratings) {
    if (row.size() != n_items)
      fail(ErrCode::BadRequest, "ragged ratings matrix");
  }

  // Pairable units: items with >= 2 ratings.
  std::vector<std::vector<double>> units;
  for (size_t item = 0; item < n_items; ++item) {
    std::vector<double> vals;
    for (auto& row : ratings) {
      if (row[item]) vals.push_back(*row[item]);
    }
    if (vals.size() >= 2) units.push_back(std::move(vals));
  }
  if (units.empty())
    fail(ErrCode::BadRequest, "insufficient data: no item has 2 ratings");

  std::map<double, size_t> cat_index;
  for (auto& vals : units)
    for (double v : vals) cat_index.emplace(v, 0);
  size_t k = 0;
  for (auto& [v, idx] : cat_index) idx = k++;
  std::vector<double> cats;
  cats.reserve(k);
  for (auto& [v, idx] : cat_index) cats.push_back(v);

  // Coincidence matrix.
  std::vector<std::vector<double>> o(k, std::vector<double>(k, 0.0));
  for (auto& vals : units) {
    double m = static_cast<double>(vals.size());
    for (size_t i = 0; i < vals.size(); ++i) {
      for (size_t j = 0; j < vals.size(); ++j) {
        if (i == j) continue;
        o[cat_index[vals[i]]][cat_index[vals[j]]] += 1.0 / (m - 1.0);
      }
    }
  }
  std::vector<double> nc(k, 0.0);
  double total = 0.0;
  for (size_t c = 0; c < k; ++c) {
    for (size_t d = 0; d < k; ++d) nc[c] += o[c][d];
    total += nc[c];
  }

  auto delta2 = [&](size_t c, size_t d) -> double {
    if (level == AlphaLevel::Nominal) return c == d ? 0.0 : 1.0;
    size_t lo = std::min(c, d), hi = std::max(c, d);
    double s = 0.0;
    for (size_t g = lo; g <= hi; ++g) s += nc[g];
    s -= (nc[c] + nc[d]) / 2.0;
    return s * s;
  };

  double d_o = 0.0, d_e = 0.0;
  for (size_t c = 0; c < k; ++c) {
    for (size_t d = 0; d < k; ++d) {
      if (c == d) continue;
      d_o += o[c][d] * delta2(c, d);
      d_e += nc[c] * nc[d] * delta2(c, d);
    }
  }
  d_e /= (total - 1.0);

  AgreementResult result;
  result.level = level;
  result.raters = ratings.size();
  result.items = units.size();
  result.alpha = (d_o == 0.0) ? 1.0 : 1.0 - d_o / d_e;
  return result;
}

int vote_candidate_label(const std::array<int, 3>& labels, VoteLevel level) {
  for (int v : labels) {
    if (level == VoteLevel::Summary && (v < 1 || v > 5))
      fail(ErrCode::BadRequest, "summary label out of range: " + std::to_string(v));
    if (level == VoteLevel::Segment && v != 0 && v != 1)
      fail(ErrCode::BadRequest, "segment label must be binary: " + std::to_string(v));
  }
  for (int v : labels) {
    int count = 0;
    for (int w : labels)
      if (w == v) ++count;
    if (count >= 2) return v;
  }
  // All distinct (summary level only): closest to mean, ties toward lower.
  double mean = (labels[0] + labels[1] + labels[2]) / 3.0;
  int best = labels[0];
  double best_dist = std::fabs(labels[0] - mean);
  for (int v : labels) {
    double dist = std::fabs(v - mean);
    if (dist < best_dist - 1e-12 ||
        (std::fabs(dist - best_dist) <= 1e-12 && v < best)) {
      best = v;
      best_dist = dist;
    }
  }
  return best;
}

std::array<CriterionConfusion, 4> segment_confusion(
    const std::vector<std::array<int, 4>>& predicted,
    const std::vector<std::array<int, 4>>& gold) {
  if (predicted.size() != gold.size())
    fail(ErrCode::BadRequest, "shape mismatch between predictions and gold");
  std::array<CriterionConfusion, 4> out{};
  for (size_t i = 0; i < predicted.size(); ++i) {
    for (size_t c = 0; c < 4; ++c) {
      int p = predicted[i][c], g = gold[i][c];
      if ((p != 0 && p != 1) || (g != 0 && g != 1))
        fail(ErrCode::BadRequest, "verdict flags must be binary");
      if (p == 1 && g == 1) ++out[c].tp;
      else if (p == 0 && g == 1) ++out[c].fp;
      else if (p == 1 && g == 0) ++out[c].fn;
      else ++out[c].tn;
    }
  }
  return out;
}

}  // namespace referee::stats
