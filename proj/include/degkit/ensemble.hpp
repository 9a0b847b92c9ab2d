// Weighted blending of prediction sets and a genetic search over blend
// subsets and weights.
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "degkit/eval.hpp"
#include "degkit/types.hpp"

namespace degkit {

struct EnsembleMember {
  std::string model_name;
  double weight = 0.0;
};

/// Weights are nonnegative and sum to one.
struct EnsembleSpec {
  std::vector<EnsembleMember> members;
};

inline constexpr double kWeightSumTol = 1e-9;

/// Throws unless 1 <= |members| <= max_members and the weights form a
/// probability vector.
void check_spec(const EnsembleSpec& spec, std::size_t max_members = 10);

/// Positionwise weighted average. Members must cover identical
/// (construct, column, length) sets.
PredictionSet blend(const EnsembleSpec& spec, const std::map<std::string, PredictionSet>& preds);

struct GaConfig {
  std::size_t max_members = 10;
  std::size_t pool_limit = 100;
  std::size_t population = 64;
  std::size_t generations = 200;
  double mutation_sigma = 0.05;
  double crossover_rate = 0.7;
  double add_drop_rate = 0.1;
  std::size_t tournament = 3;
  std::uint64_t seed = 7;
  std::vector<DataType> columns = default_score_columns();
};

struct GaResult {
  EnsembleSpec spec;
  double public_mcrmse = 0.0;
  std::optional<double> private_mcrmse;
  double best_singleton_mcrmse = 0.0;
  std::vector<double> history;  // best public MCRMSE after each generation
};

/// Minimizes public MCRMSE over (subset, weights) genomes. The initial
/// population contains every singleton, and the best genome is always carried
/// over, so the result never scores worse than the best single candidate.
/// The winner's weights are finally polished by a pairwise weight-transfer
/// search, which is accepted only when it improves the score.
GaResult ga_optimize(const std::map<std::string, PredictionSet>& candidates, const Dataset& truth_public,
                     const GaConfig& config = {}, const Dataset* truth_private = nullptr);

std::string ensemble_spec_json(const GaResult& r);
std::string ensemble_spec_json(const EnsembleSpec& spec);
EnsembleSpec ensemble_spec_from_json(const std::string& text);

}  // namespace degkit
