#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace referee::stats {

struct Corr {
  double r = 0.0;
  double p = 1.0;
};

// Pearson product-moment correlation; two-sided p via the t distribution.
Corr pearson(std::span<const double> x, std::span<const double> y);

// Ties share the mean rank (1-based average ranks).
std::vector<double> average_ranks(std::span<const double> values);

// Pearson over average-ranked data.
Corr spearman(std::span<const double> x, std::span<const double> y);

// Kendall tau-b with tie correction; p via the tie-adjusted normal
// approximation. O(n^2) pair enumeration.
Corr kendall_tau(std::span<const double> x, std::span<const double> y);

enum class AlphaLevel { Nominal, Ordinal };

struct AgreementResult {
  double alpha = 0.0;
  AlphaLevel level = AlphaLevel::Nominal;
  size_t raters = 0;
  size_t items = 0;
};

// ratings[rater][item]; missing entries excluded pairwise. Requires >= 2
// raters and >= 1 item with >= 2 ratings, else Error(BadRequest)
// "insufficient data".
AgreementResult krippendorff_alpha(
    const std::vector<std::vector<std::optional<double>>>& ratings, AlphaLevel level);

enum class VoteLevel { Summary, Segment };

// Majority when a value repeats; otherwise (summary level) the label closest
// to the mean, ties toward the lower label.
int vote_candidate_label(const std::array<int, 3>& labels, VoteLevel level);

struct CriterionConfusion {
  size_t tp = 0; // predicted 1, gold 1
  size_t fp = 0; // predicted 0 (inconsistent), gold 1 (consistent)
  size_t fn = 0; // predicted 1, gold 0
  size_t tn = 0; // predicted 0, gold 0
  double accuracy() const {
    size_t total = tp + fp + fn + tn;
    return total == 0 ? 0.0 : double(tp + tn) / double(total);
  }
};

// Per-criterion confusion over flattened (segment, criterion) pairs.
// predicted/gold: per segment, 4 binary flags in criterion order.
std::array<CriterionConfusion, 4> segment_confusion(
    const std::vector<std::array<int, 4>>& predicted,
    const std::vector<std::array<int, 4>>& gold);

}  // namespace referee::stats
