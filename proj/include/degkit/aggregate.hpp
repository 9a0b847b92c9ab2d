// Whole-molecule degradation: per-linkage rates summed over a probed window,
// half-lives, and rank agreement with measured overall rates.
#pragma once

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <string>
#include <vector>

#include "degkit/types.hpp"

namespace degkit {

/// Half-open window [start, end) of probed positions.
struct Window {
  Eigen::Index start = 0;
  Eigen::Index end = 0;
};

struct MrnaRecord {
  std::string id;
  std::string sequence;
  std::filesystem::path structure_file;
  std::filesystem::path bpp_file;
  Window window;
  double measured_rate = 0.0;
  double rate_stderr = 0.0;
};

/// Reads "id,sequence,structure_file,bpp_file,window_start,window_end,
/// measured_rate,rate_stderr". Relative file paths resolve against the CSV's
/// directory.
std::vector<MrnaRecord> read_mrna_csv(const std::filesystem::path& path);

/// Sum of per-nucleotide rates inside the window. The values must come from a
/// full-length prediction so that context outside the window is accounted for.
template <typename Derived>
typename Derived::Scalar sum_rates(const Eigen::MatrixBase<Derived>& per_nt, Window w) {
  if (w.start < 0 || w.end < w.start || w.end > per_nt.size())
    throw Error("sum_rates: window [" + std::to_string(w.start) + ", " + std::to_string(w.end) +
                ") out of bounds for length " + std::to_string(per_nt.size()));
  return per_nt.segment(w.start, w.end - w.start).sum();
}

/// ln 2 / k.
template <typename Scalar>
Scalar half_life(Scalar k) {
  if (!(k > Scalar(0))) throw Error("half-life undefined for non-positive rate");
  return std::numbers::ln2_v<Scalar> / k;
}

struct RankRow {
  std::string id;
  double predicted_rate = 0.0;
  double measured_rate = 0.0;
  double rate_stderr = 0.0;
};

struct RankEvalResult {
  double spearman = 0.0;
  std::string p_description;
  /// Mean Spearman between measured rates resampled from their errors and
  /// the measured means.
  double noise_ceiling = 0.0;
  std::vector<RankRow> rows;
};

inline constexpr int kDefaultBootstrapResamples = 1000;

/// `preds` must hold a full-length array for every record's id in `column`.
RankEvalResult rank_eval(const PredictionSet& preds, const std::vector<MrnaRecord>& mrnas, DataType column,
                         int resamples = kDefaultBootstrapResamples, std::uint64_t seed = 0);

/// Bootstrap noise ceiling on its own.
double bootstrap_noise_ceiling(const std::vector<double>& rates, const std::vector<double>& stderrs, int resamples,
                               std::uint64_t seed);

}  // namespace degkit
