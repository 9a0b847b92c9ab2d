// Blind-split curation: sequence distances, agglomerative clustering with a
// dendrogram cut, and quarantine of small clusters into the private test set.
#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "degkit/types.hpp"

namespace degkit {

/// Mismatches / length. Throws for unequal lengths.
double sequence_distance(std::string_view a, std::string_view b);

/// Upper triangle of a symmetric distance matrix, row-major, as produced by
/// scipy's pdist: entry (i, j), i < j, at n*i - i*(i+1)/2 + (j - i - 1).
class CondensedDistances {
 public:
  CondensedDistances() = default;
  explicit CondensedDistances(std::size_t n) : n_(n), d_(n < 2 ? 0 : n * (n - 1) / 2, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return i == j ? 0.0 : d_[index(i, j)]; }
  void set(std::size_t i, std::size_t j, double v) { d_[index(i, j)] = v; }
  const std::vector<double>& data() const { return d_; }

 private:
  std::size_t index(std::size_t i, std::size_t j) const {
    if (i > j) std::swap(i, j);
    return n_ * i - i * (i + 1) / 2 + (j - i - 1);
  }
  std::size_t n_ = 0;
  std::vector<double> d_;
};

/// Normalized Hamming distances between equal-length sequences.
CondensedDistances hamming_distances(const std::vector<std::string>& sequences);
/// Euclidean distances between one-hot encodings (vector entry point).
CondensedDistances onehot_distances(const std::vector<std::string>& sequences);
CondensedDistances euclidean_distances(const Eigen::MatrixXd& points);  // rows are points

enum class Linkage { kWard, kAverage };
Linkage parse_linkage(std::string_view name);

/// One merge of the dendrogram, scipy linkage-matrix style: clusters `a` < `b`
/// are ids (items are 0..n-1, merge k creates id n+k).
struct Merge {
  std::size_t a = 0;
  std::size_t b = 0;
  double height = 0.0;
  std::size_t size = 0;
};

/// Agglomerative clustering by the Lance-Williams recurrence. Equal merge
/// heights resolve to the pair whose smallest member indices come first.
std::vector<Merge> agglomerate(const CondensedDistances& d, Linkage linkage = Linkage::kWard);

/// Flat clusters joining every merge with height <= threshold. Cluster ids are
/// 0..k-1 in order of each cluster's lowest item index.
std::vector<int> cut_tree(const std::vector<Merge>& merges, std::size_t n, double threshold);

std::vector<int> cluster_and_cut(const CondensedDistances& d, double threshold,
                                 Linkage linkage = Linkage::kWard);

enum class Split { kTrain, kPublicTest, kPrivateTest };
std::string_view to_string(Split s);

struct SplitTargets {
  std::size_t train = 0;
  std::size_t public_test = 0;
  std::size_t private_test = 0;
};

struct SplitAssignment {
  std::vector<int> cluster_id;
  std::vector<Split> split;

  std::size_t count(Split s) const;
};

/// Clusters of this size or smaller go entirely to the private test set.
inline constexpr std::size_t kQuarantineMaxSize = 3;

/// Quarantines small clusters, tops up the private set with the lowest-index
/// member of randomly chosen larger clusters, then divides the rest between
/// public test and train at cluster granularity. Train absorbs any remainder.
SplitAssignment assign_splits(const std::vector<int>& clusters, const SplitTargets& targets,
                              std::uint64_t seed);

}  // namespace degkit
