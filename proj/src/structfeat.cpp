#include "degkit/structfeat.hpp"

#include <algorithm>
#include <deque>

namespace degkit {

std::vector<std::pair<int, int>> PairTable::pairs() const {
  std::vector<std::pair<int, int>> out;
  for (int i = 0; i < size(); ++i)
    if (partner[i] > i) out.emplace_back(i, partner[i]);
  return out;
}

PairTable pair_table(std::string_view structure) {
  PairTable pt;
  pt.partner.assign(structure.size(), PairTable::kUnpaired);
  std::vector<int> stack;
  for (int i = 0; i < static_cast<int>(structure.size()); ++i) {
    switch (structure[i]) {
      case '.':
        break;
      case '(':
        stack.push_back(i);
        break;
      case ')': {
        if (stack.empty())
          throw ValidationError("structure", "unbalanced ')' at position " + std::to_string(i));
        int j = stack.back();
        stack.pop_back();
        pt.partner[i] = j;
        pt.partner[j] = i;
        break;
      }
      default:
        throw UnsupportedNotationError(
            "structure", std::string("unsupported character '") + structure[i] + "' at position " +
                             std::to_string(i) + " (pseudoknots are not supported)");
    }
  }
  if (!stack.empty())
    throw ValidationError("structure", "unbalanced '(' at position " + std::to_string(stack.back()));
  return pt;
}

std::string to_dot_bracket(const PairTable& pt) {
  std::string s(pt.size(), '.');
  for (auto [i, j] : pt.pairs()) {
    s[i] = '(';
    s[j] = ')';
  }
  return s;
}

std::string annotate_loops(const PairTable& pt) {
  const int n = pt.size();
  std::string loops(n, 'S');

  // enclosing[i]: 5' end of the innermost pair strictly enclosing i, or -1.
  std::vector<int> enclosing(n, -1);
  // children[i]: number of helices directly nested in the pair opened at i;
  // the top level is tracked separately.
  std::vector<int> children(n, 0);
  std::vector<int> open;
  for (int i = 0; i < n; ++i) {
    int j = pt.partner[i];
    if (j != PairTable::kUnpaired && j < i) {
      open.pop_back();
      continue;
    }
    enclosing[i] = open.empty() ? -1 : open.back();
    if (j != PairTable::kUnpaired) {
      if (!open.empty()) ++children[open.back()];
      open.push_back(i);
    }
  }

  int run_start = 0;
  while (run_start < n) {
    if (pt.paired(run_start)) {
      ++run_start;
      continue;
    }
    int run_end = run_start;
    while (run_end + 1 < n && !pt.paired(run_end + 1)) ++run_end;

    char label;
    const int outer = enclosing[run_start];
    if (outer < 0) {
      label = (run_start == 0 || run_end == n - 1) ? 'E' : 'X';
    } else if (children[outer] == 0) {
      label = 'H';
    } else if (children[outer] == 1) {
      // One inner helix (a, b): the loop sides are (outer, a) and (b, close).
      const int close = pt.partner[outer];
      int a = outer + 1;
      while (!pt.paired(a)) ++a;
      const int b = pt.partner[a];
      const bool left = a > outer + 1;
      const bool right = close > b + 1;
      label = (left && right) ? 'I' : 'B';
    } else {
      label = 'M';
    }
    std::fill(loops.begin() + run_start, loops.begin() + run_end + 1, label);
    run_start = run_end + 1;
  }
  return loops;
}

Eigen::MatrixXi graph_distances(const PairTable& pt, std::optional<int> cap) {
  const int n = pt.size();
  Eigen::MatrixXi dist = Eigen::MatrixXi::Constant(n, n, -1);
  std::vector<int> queue(n);
  for (int src = 0; src < n; ++src) {
    int head = 0, tail = 0;
    queue[tail++] = src;
    dist(src, src) = 0;
    while (head < tail) {
      const int u = queue[head++];
      const int du = dist(src, u);
      const int nbrs[3] = {u - 1, u + 1, pt.partner[u]};
      for (int v : nbrs) {
        if (v < 0 || v >= n || dist(src, v) >= 0) continue;
        dist(src, v) = du + 1;
        queue[tail++] = v;
      }
    }
  }
  if (cap) dist = dist.cwiseMin(*cap);
  return dist;
}

NearestDistances nearest_pair_distances(const PairTable& pt) {
  const int n = pt.size();
  NearestDistances out{std::vector<int>(n, n), std::vector<int>(n, n)};
  // Two sweeps per class: nearest to the left, then to the right.
  auto sweep = [&](std::vector<int>& d, bool want_paired) {
    int last = -1;
    for (int i = 0; i < n; ++i) {
      if (pt.paired(i) == want_paired) last = i;
      if (last >= 0) d[i] = std::min(d[i], i - last);
    }
    last = -1;
    for (int i = n - 1; i >= 0; --i) {
      if (pt.paired(i) == want_paired) last = i;
      if (last >= 0) d[i] = std::min(d[i], last - i);
    }
  };
  sweep(out.to_paired, true);
  sweep(out.to_unpaired, false);
  return out;
}

BppSummary bpp_summary(const BppMatrix& bpp) {
  const Eigen::Index n = bpp.size();
  BppSummary s{bpp.p.rowwise().sum(), Eigen::VectorXd::Zero(n)};
  if (n < 2) return s;
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::Index zeros = 0;
    for (Eigen::Index j = 0; j < n; ++j)
      if (j != i && bpp.p(i, j) < kBppZeroEps) ++zeros;
    s.zeros[i] = static_cast<double>(zeros) / static_cast<double>(n - 1);
  }
  return s;
}

BppMatrix structure_bpp(const PairTable& pt, double confidence) {
  BppMatrix bpp{Eigen::MatrixXd::Zero(pt.size(), pt.size())};
  for (auto [i, j] : pt.pairs()) {
    bpp.p(i, j) = confidence;
    bpp.p(j, i) = confidence;
  }
  return bpp;
}

FeatureBundle compute_features(const Construct& c, std::optional<int> graph_cap) {
  if (!c.bpp) throw ValidationError("bpp", "construct " + c.id + " has no base-pair probability matrix");
  const PairTable pt = pair_table(c.structure);
  FeatureBundle f;
  f.loop_string = c.loop_string.size() == c.sequence.size() ? c.loop_string : annotate_loops(pt);
  auto nearest = nearest_pair_distances(pt);
  f.dist_to_paired = std::move(nearest.to_paired);
  f.dist_to_unpaired = std::move(nearest.to_unpaired);
  f.graph_dist = graph_distances(pt, graph_cap);
  f.inv_dist = inverse_distance_matrix(pt.size());
  auto summary = bpp_summary(*c.bpp);
  f.bpp_rowsum = std::move(summary.rowsum);
  f.bpp_zeros = std::move(summary.zeros);
  return f;
}

Construct reverse_augment(const Construct& c) {
  Construct r = c;
  r.id = c.id + "_rev";
  std::reverse(r.sequence.begin(), r.sequence.end());
  std::reverse(r.loop_string.begin(), r.loop_string.end());
  r.structure.assign(c.structure.rbegin(), c.structure.rend());
  for (char& ch : r.structure) {
    if (ch == '(') ch = ')';
    else if (ch == ')') ch = '(';
  }
  r.scored_offset = c.seq_length - c.scored_offset - c.seq_scored;
  for (auto& [t, prof] : r.profiles) {
    prof.values.reverseInPlace();
    prof.errors.reverseInPlace();
  }
  if (r.bpp) r.bpp->p = c.bpp->p.reverse().eval();
  return r;
}

}  // namespace degkit
