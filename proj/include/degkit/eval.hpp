// Scoring and data-quality computations.
#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "degkit/types.hpp"

namespace degkit {

struct ScoreReport {
  double mcrmse = 0.0;
  std::map<DataType, double> per_column_rmse;
  long n_nucleotides = 0;  // scored positions per column
  /// Pooled RMSE over all scored cells (positions x columns) of one construct.
  std::map<std::string, double> per_construct_rmse;
};

std::vector<DataType> default_score_columns();

/// Mean column RMSE. For every column the squared residuals of all scored
/// nucleotides are pooled across constructs before the square root.
ScoreReport mcrmse(const PredictionSet& preds, const Dataset& truth,
                   const std::vector<DataType>& columns = default_score_columns());

std::string score_report_json(const ScoreReport& r);

/// Mean over data types of the mean value/error ratio over scored positions.
/// Positions whose error is not positive are skipped.
double sn_ratio(const Construct& c, const std::vector<DataType>& columns);

struct SnThresholds {
  /// Every value of every listed condition must exceed this. Real released
  /// data needs -0.5 here; 0.5 rejects most constructs.
  double min_value = 0.5;
  double max_value = 20.0;
  double min_sn = 1.0;
  std::vector<DataType> value_columns{kAllDataTypes.begin(), kAllDataTypes.end()};
  std::vector<DataType> sn_columns{DataType::kReactivity};
};

struct FilterResult {
  Dataset kept;
  Dataset rejected;
};

/// Partitions constructs by the quality thresholds and sets sn_pass and
/// signal_to_noise on every output construct.
FilterResult sn_filter(const Dataset& data, const SnThresholds& thresholds = {});

/// Average ranks (1-based), ties share the mean of their ranks.
template <typename Scalar>
std::vector<double> average_ranks(std::span<const Scalar> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    const double r = 0.5 * static_cast<double>(i + j) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = r;
    i = j + 1;
  }
  return ranks;
}

template <typename Scalar>
double pearson(std::span<const Scalar> x, std::span<const Scalar> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("pearson: need equal lengths >= 2");
  const auto n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = x[i] - mx, dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx <= 0 || syy <= 0) throw Error("correlation undefined: zero variance");
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

/// Spearman rank correlation with tie-averaged ranks.
template <typename Scalar>
double spearman(std::span<const Scalar> x, std::span<const Scalar> y) {
  if (x.size() != y.size() || x.size() < 2) throw Error("spearman: need equal lengths >= 2");
  const auto rx = average_ranks(x);
  const auto ry = average_ranks(y);
  return pearson<double>(rx, ry);
}

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return spearman<double>(std::span<const double>(x), std::span<const double>(y));
}

struct MotifStat {
  double mean = 0.0;
  long count = 0;
};

/// Groups values by loop label; labels with no positions are omitted.
std::map<char, MotifStat> motif_aggregate(std::span<const double> values, std::string_view loops);

/// Accumulates motif_aggregate over the scored windows of a dataset, using
/// either measured profiles (preds == nullptr) or predictions.
std::map<char, MotifStat> motif_aggregate(const Dataset& data, DataType column,
                                          const PredictionSet* preds = nullptr);

}  // namespace degkit
