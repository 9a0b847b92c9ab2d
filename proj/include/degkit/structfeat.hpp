// Structure-derived features: pair tables, loop labels, graph distances and
// BPP summaries.
#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "degkit/types.hpp"

namespace degkit {

/// Thrown for pseudoknot brackets and other non dot-bracket characters.
class UnsupportedNotationError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Nested pairing of one structure; partner[i] == kUnpaired when i is free.
struct PairTable {
  static constexpr int kUnpaired = -1;
  std::vector<int> partner;

  int size() const { return static_cast<int>(partner.size()); }
  bool paired(int i) const { return partner[i] != kUnpaired; }
  std::vector<std::pair<int, int>> pairs() const;  // (i, j) with i < j
};

/// Loop alphabet in the order used for one-hot encodings.
inline constexpr std::string_view kLoopAlphabet = "SHBIMEX";
inline constexpr std::string_view kBaseAlphabet = "ACGU";

/// Stack-matches '(' and ')'; throws ValidationError("structure") when
/// unbalanced and UnsupportedNotationError for anything besides "().".
PairTable pair_table(std::string_view structure);
std::string to_dot_bracket(const PairTable& pt);

/// Labels every position with S (stem), H (hairpin), B (bulge), I (internal
/// loop), M (multiloop), E (unpaired run touching a molecule end) or X
/// (unpaired run between top-level stems). E/X follow the released data files,
/// which differ from the bpRNA legend.
std::string annotate_loops(const PairTable& pt);

/// Exact shortest-path lengths on the graph with backbone edges (i, i+1) and
/// pair edges. Distances above `cap` (when given) are clamped to it.
Eigen::MatrixXi graph_distances(const PairTable& pt, std::optional<int> cap = {});

/// Per position, distance along the sequence to the nearest paired and nearest
/// unpaired position (0 for itself). Sentinel n when no such position exists.
struct NearestDistances {
  std::vector<int> to_paired;
  std::vector<int> to_unpaired;
};
NearestDistances nearest_pair_distances(const PairTable& pt);

/// Row sums and the fraction of off-diagonal near-zero entries per row.
struct BppSummary {
  Eigen::VectorXd rowsum;
  Eigen::VectorXd zeros;
};
inline constexpr double kBppZeroEps = 1e-12;
BppSummary bpp_summary(const BppMatrix& bpp);

/// inv[i][j] = 1 / |i - j| off the diagonal, 0 on it.
template <typename Scalar = double>
Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> inverse_distance_matrix(Eigen::Index n) {
  Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> inv(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      inv(i, j) = i == j ? Scalar(0) : Scalar(1) / Scalar(i > j ? i - j : j - i);
  return inv;
}

/// A degenerate ensemble holding every pair of the structure with
/// probability `confidence`. Used when no folding-engine BPP is available.
BppMatrix structure_bpp(const PairTable& pt, double confidence = 1.0);

/// All per-nucleotide structure features for one construct.
struct FeatureBundle {
  std::string loop_string;
  std::vector<int> dist_to_paired;
  std::vector<int> dist_to_unpaired;
  Eigen::MatrixXi graph_dist;
  Eigen::MatrixXd inv_dist;
  Eigen::VectorXd bpp_rowsum;
  Eigen::VectorXd bpp_zeros;
};
/// Requires c.bpp to be attached.
FeatureBundle compute_features(const Construct& c, std::optional<int> graph_cap = {});

/// Reverses sequence, structure (with brackets swapped), profiles, BPP and the
/// scored window together, and appends "_rev" to the id. Applying it twice
/// restores everything except the id.
Construct reverse_augment(const Construct& c);

}  // namespace degkit
