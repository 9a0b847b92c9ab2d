#include "degkit/ensemble.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <json.hpp>

#include "degkit/random.hpp"

namespace degkit {

void check_spec(const EnsembleSpec& spec, std::size_t max_members) {
  if (spec.members.empty() || spec.members.size() > max_members)
    throw ValidationError("members", "need between 1 and " + std::to_string(max_members) + " members");
  double sum = 0.0;
  for (const auto& m : spec.members) {
    if (!(m.weight >= 0.0)) throw ValidationError("weight", "negative weight for " + m.model_name);
    sum += m.weight;
  }
  if (std::fabs(sum - 1.0) > kWeightSumTol) throw ValidationError("weight", "weights do not sum to 1");
}

PredictionSet blend(const EnsembleSpec& spec, const std::map<std::string, PredictionSet>& preds) {
  check_spec(spec, std::numeric_limits<std::size_t>::max());
  std::vector<const PredictionSet*> sets;
  for (const auto& m : spec.members) {
    auto it = preds.find(m.model_name);
    if (it == preds.end()) throw Error("blend: no predictions for member " + m.model_name);
    sets.push_back(&it->second);
  }
  const PredictionSet& ref = *sets.front();
  for (const PredictionSet* s : sets) {
    bool same = s->entries.size() == ref.entries.size();
    for (auto a = s->entries.begin(), b = ref.entries.begin(); same && a != s->entries.end(); ++a, ++b) {
      same = a->first == b->first && a->second.size() == b->second.size();
      for (auto x = a->second.begin(), y = b->second.begin(); same && x != a->second.end(); ++x, ++y)
        same = x->first == y->first && x->second.size() == y->second.size();
    }
    if (!same) throw Error("blend: coverage mismatch between " + ref.model_name + " and " + s->model_name);
  }
  PredictionSet out;
  out.model_name = "ensemble";
  for (const auto& [id, by_type] : ref.entries)
    for (const auto& [t, v] : by_type) out.entries[id][t] = Eigen::VectorXd::Zero(v.size());
  for (std::size_t m = 0; m < sets.size(); ++m)
    for (const auto& [id, by_type] : sets[m]->entries)
      for (const auto& [t, v] : by_type) out.entries[id][t] += spec.members[m].weight * v;
  return out;
}

namespace {

struct Genome {
  std::vector<char> mask;
  Eigen::VectorXd weight;
  double fitness = std::numeric_limits<double>::infinity();

  std::vector<std::size_t> support() const {
    std::vector<std::size_t> s;
    for (std::size_t i = 0; i < mask.size(); ++i)
      if (mask[i]) s.push_back(i);
    return s;
  }
  std::size_t support_size() const { return static_cast<std::size_t>(std::count(mask.begin(), mask.end(), 1)); }
};

bool better(const Genome& a, const Genome& b) {
  if (a.fitness != b.fitness) return a.fitness < b.fitness;
  return a.support() < b.support();
}

/// Public MCRMSE of a blend from per-column residual Gram matrices:
/// |sum_m w_m r_m|^2 = w^T G w when the weights sum to one.
class Objective {
 public:
  Objective(const std::vector<const PredictionSet*>& pool, const Dataset& truth, const std::vector<DataType>& columns) {
    long cells = 0;
    for (const Construct& c : truth) cells += c.seq_scored;
    if (cells == 0) throw Error("ga_optimize: public truth has no scored nucleotides");
    n_ = static_cast<double>(cells);
    const auto p = static_cast<Eigen::Index>(pool.size());
    for (DataType t : columns) {
      Eigen::MatrixXd r(cells, p);
      for (Eigen::Index m = 0; m < p; ++m) {
        Eigen::Index row = 0;
        for (const Construct& c : truth) {
          const Eigen::VectorXd& yhat = pool[static_cast<std::size_t>(m)]->at(c.id, t);
          if (yhat.size() < c.scored_offset + c.seq_scored)
            throw Error("ga_optimize: short prediction for " + c.id + " in " + pool[static_cast<std::size_t>(m)]->model_name);
          r.col(m).segment(row, c.seq_scored) = yhat.segment(c.scored_offset, c.seq_scored) - c.profile(t).values;
          row += c.seq_scored;
        }
      }
      Eigen::MatrixXd g = Eigen::MatrixXd::Zero(p, p);
      g.selfadjointView<Eigen::Lower>().rankUpdate(r.transpose());
      grams_.push_back(g.selfadjointView<Eigen::Lower>());
    }
  }

  double operator()(const Eigen::VectorXd& w) const {
    double total = 0.0;
    for (const Eigen::MatrixXd& g : grams_) total += std::sqrt(std::max(w.dot(g * w), 0.0) / n_);
    return total / static_cast<double>(grams_.size());
  }

 private:
  double n_ = 1.0;
  std::vector<Eigen::MatrixXd> grams_;
};

void normalize(Genome& g, Rng& rng) {
  if (g.support_size() == 0) g.mask[uniform_index(rng, g.mask.size())] = 1;
  double sum = 0.0;
  for (std::size_t i = 0; i < g.mask.size(); ++i) {
    if (!g.mask[i]) g.weight[static_cast<Eigen::Index>(i)] = 0.0;
    sum += g.weight[static_cast<Eigen::Index>(i)];
  }
  if (sum <= 0.0) {
    const double u = 1.0 / static_cast<double>(g.support_size());
    for (std::size_t i = 0; i < g.mask.size(); ++i) g.weight[static_cast<Eigen::Index>(i)] = g.mask[i] ? u : 0.0;
  } else {
    g.weight /= sum;
  }
}

void cap_support(Genome& g, std::size_t cap, Rng& rng) {
  auto s = g.support();
  while (s.size() > cap) {
    const auto k = uniform_index(rng, s.size());
    g.mask[s[k]] = 0;
    s.erase(s.begin() + static_cast<std::ptrdiff_t>(k));
  }
}

/// Moves weight between pairs of supported members while that lowers the
/// objective, halving the step until it is negligible.
Genome polish(Genome g, const Objective& f) {
  const auto s = g.support();
  if (s.size() < 2) return g;
  for (double step = 0.25; step > 1e-13; step *= 0.5) {
    bool improved = true;
    for (int sweep = 0; improved && sweep < 200; ++sweep) {
      improved = false;
      for (std::size_t a : s)
        for (std::size_t b : s) {
          if (a == b) continue;
          const auto ia = static_cast<Eigen::Index>(a), ib = static_cast<Eigen::Index>(b);
          const double delta = std::min(step, g.weight[ia]);
          if (delta <= 0.0) continue;
          Eigen::VectorXd w = g.weight;
          w[ia] -= delta;
          w[ib] += delta;
          const double fw = f(w);
          if (fw < g.fitness) {
            g.weight = w;
            g.fitness = fw;
            improved = true;
          }
        }
    }
  }
  return g;
}

EnsembleSpec to_spec(const Genome& g, const std::vector<std::string>& names) {
  EnsembleSpec spec;
  double sum = 0.0;
  for (std::size_t i : g.support())
    if (g.weight[static_cast<Eigen::Index>(i)] > 0.0) sum += g.weight[static_cast<Eigen::Index>(i)];
  for (std::size_t i : g.support()) {
    const double w = g.weight[static_cast<Eigen::Index>(i)];
    if (w > 0.0) spec.members.push_back({names[i], w / sum});
  }
  return spec;
}

}  // namespace

GaResult ga_optimize(const std::map<std::string, PredictionSet>& candidates, const Dataset& truth_public,
                     const GaConfig& cfg, const Dataset* truth_private) {
  if (candidates.empty()) throw Error("ga_optimize: empty candidate set");
  if (cfg.max_members == 0 || cfg.pool_limit == 0) throw Error("ga_optimize: max_members and pool_limit must be >= 1");

  // Rank every candidate by its own public score and keep the pool_limit best.
  std::vector<std::pair<double, std::string>> ranked;
  for (const auto& [name, preds] : candidates) ranked.emplace_back(mcrmse(preds, truth_public, cfg.columns).mcrmse, name);
  std::sort(ranked.begin(), ranked.end());
  if (ranked.size() > cfg.pool_limit) ranked.resize(cfg.pool_limit);
  std::vector<std::string> names;
  for (const auto& r : ranked) names.push_back(r.second);
  std::sort(names.begin(), names.end());
  std::vector<const PredictionSet*> pool;
  for (const auto& n : names) pool.push_back(&candidates.at(n));

  const std::size_t p = pool.size();
  const std::size_t cap = std::min(cfg.max_members, p);
  const Objective f(pool, truth_public, cfg.columns);
  Rng rng(cfg.seed);

  auto evaluate = [&](Genome& g) { g.fitness = f(g.weight); };
  auto blank = [&] { return Genome{std::vector<char>(p, 0), Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p))}; };

  std::vector<Genome> population;
  for (std::size_t i = 0; i < p; ++i) {
    Genome g = blank();
    g.mask[i] = 1;
    g.weight[static_cast<Eigen::Index>(i)] = 1.0;
    population.push_back(std::move(g));
  }
  const std::size_t pop_size = std::max(cfg.population, p);
  while (population.size() < pop_size) {
    Genome g = blank();
    const std::size_t k = 1 + uniform_index(rng, cap);
    std::vector<std::size_t> idx(p);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    shuffle(idx, rng);
    for (std::size_t j = 0; j < k; ++j) {
      g.mask[idx[j]] = 1;
      g.weight[static_cast<Eigen::Index>(idx[j])] = uniform01(rng) + 1e-3;
    }
    normalize(g, rng);
    population.push_back(std::move(g));
  }
  for (Genome& g : population) evaluate(g);

  GaResult result;
  auto best_of = [&](const std::vector<Genome>& pop) {
    return *std::min_element(pop.begin(), pop.end(), better);
  };
  auto tournament = [&]() -> const Genome& {
    const Genome* pick = &population[uniform_index(rng, population.size())];
    for (std::size_t t = 1; t < std::max<std::size_t>(cfg.tournament, 1); ++t) {
      const Genome& other = population[uniform_index(rng, population.size())];
      if (better(other, *pick)) pick = &other;
    }
    return *pick;
  };

  Genome best = best_of(population);
  for (std::size_t gen = 0; gen < cfg.generations && p > 1; ++gen) {
    std::vector<Genome> next;
    next.reserve(pop_size);
    next.push_back(best);
    while (next.size() < pop_size) {
      const Genome& a = tournament();
      const Genome& b = tournament();
      Genome child = a;
      if (uniform01(rng) < cfg.crossover_rate) {
        for (std::size_t i = 0; i < p; ++i)
          if (uniform01(rng) < 0.5) {
            child.mask[i] = b.mask[i];
            child.weight[static_cast<Eigen::Index>(i)] = b.weight[static_cast<Eigen::Index>(i)];
          }
      }
      for (std::size_t i = 0; i < p; ++i) {
        if (!child.mask[i]) continue;
        double& w = child.weight[static_cast<Eigen::Index>(i)];
        w = std::max(0.0, w + cfg.mutation_sigma * standard_normal(rng));
      }
      if (uniform01(rng) < cfg.add_drop_rate) {
        const std::size_t i = uniform_index(rng, p);
        if (!child.mask[i]) {
          child.mask[i] = 1;
          child.weight[static_cast<Eigen::Index>(i)] = uniform01(rng) / static_cast<double>(child.support_size());
        }
      }
      if (uniform01(rng) < cfg.add_drop_rate && child.support_size() > 1) {
        const auto s = child.support();
        child.mask[s[uniform_index(rng, s.size())]] = 0;
      }
      cap_support(child, cap, rng);
      normalize(child, rng);
      evaluate(child);
      next.push_back(std::move(child));
    }
    population = std::move(next);
    best = best_of(population);
    result.history.push_back(best.fitness);
  }

  Genome polished = polish(best, f);
  if (better(polished, best)) best = polished;

  // Final scores come from the exact metric, not the Gram shortcut.
  result.spec = to_spec(best, names);
  result.public_mcrmse = mcrmse(blend(result.spec, candidates), truth_public, cfg.columns).mcrmse;
  result.best_singleton_mcrmse = ranked.front().first;
  if (result.public_mcrmse > result.best_singleton_mcrmse) {
    result.spec = EnsembleSpec{{{ranked.front().second, 1.0}}};
    result.public_mcrmse = result.best_singleton_mcrmse;
  }
  if (truth_private) result.private_mcrmse = mcrmse(blend(result.spec, candidates), *truth_private, cfg.columns).mcrmse;
  return result;
}

std::string ensemble_spec_json(const EnsembleSpec& spec) {
  nlohmann::ordered_json j;
  j["members"] = nlohmann::ordered_json::array();
  for (const auto& m : spec.members) j["members"].push_back({{"model", m.model_name}, {"weight", m.weight}});
  return j.dump(2);
}

std::string ensemble_spec_json(const GaResult& r) {
  auto j = nlohmann::ordered_json::parse(ensemble_spec_json(r.spec));
  j["public_mcrmse"] = r.public_mcrmse;
  j["best_singleton_mcrmse"] = r.best_singleton_mcrmse;
  if (r.private_mcrmse) j["private_mcrmse"] = *r.private_mcrmse;
  return j.dump(2);
}

EnsembleSpec ensemble_spec_from_json(const std::string& text) {
  try {
    auto j = nlohmann::json::parse(text);
    EnsembleSpec spec;
    for (const auto& m : j.at("members")) spec.members.push_back({m.at("model").get<std::string>(), m.at("weight").get<double>()});
    check_spec(spec, std::numeric_limits<std::size_t>::max());
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("ensemble spec: ") + e.what(), 0);
  }
}

}  // namespace degkit
