#include "degkit/curation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "degkit/random.hpp"

namespace degkit {

double sequence_distance(std::string_view a, std::string_view b) {
  if (a.size() != b.size())
    throw Error("sequence_distance: lengths differ (" + std::to_string(a.size()) + " vs " +
                std::to_string(b.size()) + "); cross-round clustering is unsupported");
  if (a.empty()) return 0.0;
  std::size_t mismatches = 0;
  for (std::size_t i = 0; i < a.size(); ++i) mismatches += a[i] != b[i];
  return static_cast<double>(mismatches) / static_cast<double>(a.size());
}

CondensedDistances hamming_distances(const std::vector<std::string>& sequences) {
  CondensedDistances d(sequences.size());
  for (std::size_t i = 0; i < sequences.size(); ++i)
    for (std::size_t j = i + 1; j < sequences.size(); ++j) d.set(i, j, sequence_distance(sequences[i], sequences[j]));
  return d;
}

CondensedDistances euclidean_distances(const Eigen::MatrixXd& points) {
  const auto n = static_cast<std::size_t>(points.rows());
  CondensedDistances d(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      d.set(i, j, (points.row(static_cast<Eigen::Index>(i)) - points.row(static_cast<Eigen::Index>(j))).norm());
  return d;
}

CondensedDistances onehot_distances(const std::vector<std::string>& sequences) {
  if (sequences.empty()) return CondensedDistances(0);
  const std::size_t len = sequences.front().size();
  Eigen::MatrixXd x = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(sequences.size()),
                                            static_cast<Eigen::Index>(4 * len));
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    if (sequences[i].size() != len) throw Error("onehot_distances: sequences differ in length");
    for (std::size_t k = 0; k < len; ++k) {
      const auto slot = std::string_view("ACGU").find(sequences[i][k]);
      if (slot != std::string_view::npos)
        x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(4 * k + slot)) = 1.0;
    }
  }
  return euclidean_distances(x);
}

Linkage parse_linkage(std::string_view name) {
  if (name == "ward") return Linkage::kWard;
  if (name == "average") return Linkage::kAverage;
  throw ValidationError("linkage", "expected 'ward' or 'average'");
}

std::vector<Merge> agglomerate(const CondensedDistances& cd, Linkage linkage) {
  const std::size_t n = cd.size();
  std::vector<Merge> merges;
  if (n < 2) return merges;
  merges.reserve(n - 1);

  // Slot s holds the cluster whose smallest item is s.
  Eigen::MatrixXd d(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) d(i, j) = cd(i, j);
  std::vector<std::size_t> size(n, 1), cluster_id(n);
  std::iota(cluster_id.begin(), cluster_id.end(), std::size_t{0});
  std::vector<char> active(n, 1);

  // nn[i]: nearest active slot j > i (smallest j on ties).
  constexpr double kInf = std::numeric_limits<double>::infinity();
  std::vector<std::size_t> nn(n, n);
  std::vector<double> nnd(n, kInf);
  auto rescan = [&](std::size_t i) {
    nn[i] = n;
    nnd[i] = kInf;
    for (std::size_t j = i + 1; j < n; ++j)
      if (active[j] && d(i, j) < nnd[i]) {
        nnd[i] = d(i, j);
        nn[i] = j;
      }
  };
  for (std::size_t i = 0; i < n; ++i) rescan(i);

  for (std::size_t step = 0; step + 1 < n; ++step) {
    std::size_t lo = n;
    for (std::size_t i = 0; i < n; ++i)
      if (active[i] && nn[i] < n && (lo == n || nnd[i] < nnd[lo])) lo = i;
    const std::size_t hi = nn[lo];
    const double h = nnd[lo];

    Merge m;
    m.a = std::min(cluster_id[lo], cluster_id[hi]);
    m.b = std::max(cluster_id[lo], cluster_id[hi]);
    m.height = h;
    m.size = size[lo] + size[hi];
    merges.push_back(m);

    const double si = static_cast<double>(size[lo]), sj = static_cast<double>(size[hi]);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == lo || k == hi) continue;
      const double sk = static_cast<double>(size[k]);
      double v;
      if (linkage == Linkage::kWard) {
        const double num = (si + sk) * d(k, lo) * d(k, lo) + (sj + sk) * d(k, hi) * d(k, hi) - sk * h * h;
        v = std::sqrt(std::max(num, 0.0) / (si + sj + sk));
      } else {
        v = (si * d(k, lo) + sj * d(k, hi)) / (si + sj);
      }
      d(k, lo) = v;
      d(lo, k) = v;
    }
    active[hi] = 0;
    size[lo] += size[hi];
    cluster_id[lo] = n + step;

    rescan(lo);
    for (std::size_t k = 0; k < n; ++k) {
      if (!active[k] || k == lo) continue;
      if (nn[k] == lo || nn[k] == hi) {
        rescan(k);
      } else if (k < lo && (d(k, lo) < nnd[k] || (d(k, lo) == nnd[k] && lo < nn[k]))) {
        nn[k] = lo;
        nnd[k] = d(k, lo);
      }
    }
  }
  return merges;
}

namespace {
std::size_t find_root(std::vector<std::size_t>& parent, std::size_t x) {
  while (parent[x] != x) {
    parent[x] = parent[parent[x]];
    x = parent[x];
  }
  return x;
}
}  // namespace

std::vector<int> cut_tree(const std::vector<Merge>& merges, std::size_t n, double threshold) {
  // Union-find over items; node ids >= n map to a representative item.
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  std::vector<std::size_t> rep(n + merges.size());
  std::iota(rep.begin(), rep.begin() + static_cast<std::ptrdiff_t>(n), std::size_t{0});
  for (std::size_t k = 0; k < merges.size(); ++k) {
    const std::size_t ra = rep[merges[k].a], rb = rep[merges[k].b];
    rep[n + k] = ra;
    if (merges[k].height <= threshold) parent[find_root(parent, rb)] = find_root(parent, ra);
  }
  std::vector<int> label(n, -1), root_label(n, -1);
  int next = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t r = find_root(parent, i);
    if (root_label[r] < 0) root_label[r] = next++;
    label[i] = root_label[r];
  }
  return label;
}

std::vector<int> cluster_and_cut(const CondensedDistances& d, double threshold, Linkage linkage) {
  if (!(threshold > 0.0)) throw Error("cluster_and_cut: threshold must be positive");
  return cut_tree(agglomerate(d, linkage), d.size(), threshold);
}

std::string_view to_string(Split s) {
  switch (s) {
    case Split::kTrain: return "train";
    case Split::kPublicTest: return "public_test";
    case Split::kPrivateTest: return "private_test";
  }
  return "?";
}

std::size_t SplitAssignment::count(Split s) const { return static_cast<std::size_t>(std::count(split.begin(), split.end(), s)); }

SplitAssignment assign_splits(const std::vector<int>& clusters, const SplitTargets& targets, std::uint64_t seed) {
  const std::size_t n = clusters.size();
  if (targets.train + targets.public_test + targets.private_test > n)
    throw Error("split targets sum to more than the " + std::to_string(n) + " available items");

  int n_clusters = 0;
  for (int c : clusters) {
    if (c < 0) throw Error("assign_splits: negative cluster id");
    n_clusters = std::max(n_clusters, c + 1);
  }
  std::vector<std::vector<std::size_t>> members(static_cast<std::size_t>(n_clusters));
  for (std::size_t i = 0; i < n; ++i) members[static_cast<std::size_t>(clusters[i])].push_back(i);

  SplitAssignment out{clusters, std::vector<Split>(n, Split::kTrain)};
  std::size_t quarantined = 0;
  std::vector<int> large;
  for (int c = 0; c < n_clusters; ++c) {
    const auto& m = members[static_cast<std::size_t>(c)];
    if (m.empty()) continue;
    if (m.size() <= kQuarantineMaxSize) {
      for (std::size_t i : m) out.split[i] = Split::kPrivateTest;
      quarantined += m.size();
    } else {
      large.push_back(c);
    }
  }
  const std::size_t max_private = quarantined + large.size();
  if (targets.private_test < quarantined || targets.private_test > max_private)
    throw Error("infeasible private test size " + std::to_string(targets.private_test) + ": feasible range is " +
                std::to_string(quarantined) + ".." + std::to_string(max_private) +
                " (maximum feasible private size " + std::to_string(max_private) + ")");

  Rng rng(seed);
  shuffle(large, rng);
  const std::size_t donors = targets.private_test - quarantined;
  // Units eligible for public/train: remaining members of each large cluster.
  std::vector<std::vector<std::size_t>> units;
  for (std::size_t u = 0; u < large.size(); ++u) {
    auto m = members[static_cast<std::size_t>(large[u])];
    if (u < donors) {
      out.split[m.front()] = Split::kPrivateTest;  // lowest-index member
      m.erase(m.begin());
    }
    units.push_back(std::move(m));
  }
  shuffle(units, rng);

  // 0/1 subset sum for the public size; first[s] is the unit that first made
  // s reachable, which makes backtracking valid.
  const std::size_t target = targets.public_test;
  std::vector<long> first(target + 1, -1);
  std::vector<char> reachable(target + 1, 0);
  reachable[0] = 1;
  for (std::size_t u = 0; u < units.size(); ++u) {
    const std::size_t w = units[u].size();
    for (std::size_t s = target; s >= w && w > 0; --s) {
      if (!reachable[s] && reachable[s - w]) {
        reachable[s] = 1;
        first[s] = static_cast<long>(u);
      }
      if (s == w) break;
    }
  }
  std::size_t s = target;
  while (!reachable[s]) --s;
  while (s > 0) {
    const auto u = static_cast<std::size_t>(first[s]);
    for (std::size_t i : units[u]) out.split[i] = Split::kPublicTest;
    s -= units[u].size();
  }
  return out;
}

}  // namespace degkit
