// Synthetic data shared by the unit and acceptance tests.
#pragma once

#include <string>
#include <vector>

#include "degkit/random.hpp"
#include "degkit/structfeat.hpp"
#include "degkit/types.hpp"

namespace degkit::fixture {

/// Random balanced, nested dot-bracket string of length n.
inline std::string random_structure(int n, Rng& rng, double open_p = 0.3, double close_p = 0.3) {
  std::string s;
  int depth = 0;
  for (int i = 0; i < n; ++i) {
    const int remaining = n - i;
    if (depth == remaining) {
      s += ')';
      --depth;
      continue;
    }
    const double u = uniform01(rng);
    if (u < open_p && depth + 1 <= remaining - 1) {
      s += '(';
      ++depth;
    } else if (u < open_p + close_p && depth > 0) {
      s += ')';
      --depth;
    } else {
      s += '.';
    }
  }
  return s;
}

/// Stem-rich structure: several hairpins of stem length >= 3 with spacers.
inline std::string random_hairpins(int n, Rng& rng) {
  std::string s;
  while (static_cast<int>(s.size()) < n) {
    const int left = n - static_cast<int>(s.size());
    const int stem = 3 + static_cast<int>(uniform_index(rng, 4));
    const int loop = 3 + static_cast<int>(uniform_index(rng, 4));
    const int spacer = static_cast<int>(uniform_index(rng, 4));
    if (2 * stem + loop + spacer > left) {
      s += std::string(left, '.');
      break;
    }
    s += std::string(spacer, '.') + std::string(stem, '(') + std::string(loop, '.') + std::string(stem, ')');
  }
  return s;
}

inline std::string random_sequence(int n, Rng& rng) {
  std::string s(n, 'A');
  for (char& ch : s) ch = kBaseAlphabet[uniform_index(rng, 4)];
  return s;
}

/// Construct with loops annotated and a structure-derived BPP attached.
inline Construct make_construct(const std::string& id, const std::string& sequence, const std::string& structure,
                                int seq_scored = -1) {
  Construct c;
  c.id = id;
  c.sequence = sequence;
  c.structure = structure;
  c.seq_length = static_cast<int>(sequence.size());
  c.seq_scored = seq_scored < 0 ? c.seq_length : seq_scored;
  const PairTable pt = pair_table(structure);
  c.loop_string = annotate_loops(pt);
  c.bpp = structure_bpp(pt, 0.9);
  return c;
}

/// Target value by loop context: hairpins and other unpaired motifs high,
/// stems low.
inline double loop_target(char label) {
  switch (label) {
    case 'S': return 0.1;
    case 'H': return 1.2;
    case 'B': return 0.9;
    case 'I': return 0.8;
    case 'M': return 0.7;
    case 'E': return 0.6;
    case 'X': return 0.5;
    default: return 0.0;
  }
}

/// Dataset whose five profiles are a known function of the loop label plus a
/// small per-type offset and Gaussian noise.
inline Dataset loop_dataset(int count, int length, int scored, std::uint64_t seed, double noise = 0.05) {
  Rng rng(seed);
  Dataset out;
  for (int i = 0; i < count; ++i) {
    Construct c = make_construct("syn" + std::to_string(i), random_sequence(length, rng),
                                 random_hairpins(length, rng), scored);
    for (DataType t : kAllDataTypes) {
      Profile p;
      p.values.resize(scored);
      p.errors = Eigen::VectorXd::Constant(scored, 0.1);
      for (int k = 0; k < scored; ++k)
        p.values[k] = loop_target(c.loop_string[k]) * (1.0 + 0.1 * index_of(t)) + noise * standard_normal(rng);
      c.profiles[t] = std::move(p);
    }
    c.signal_to_noise = 5.0;
    c.sn_pass = true;
    out.push_back(std::move(c));
  }
  return out;
}

}  // namespace degkit::fixture
