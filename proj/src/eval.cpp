#include "degkit/eval.hpp"

#include <json.hpp>

namespace degkit {

std::vector<DataType> default_score_columns() { return {kScoredDataTypes.begin(), kScoredDataTypes.end()}; }

ScoreReport mcrmse(const PredictionSet& preds, const Dataset& truth, const std::vector<DataType>& columns) {
  if (columns.empty()) throw Error("mcrmse: no columns");
  ScoreReport r;
  std::map<DataType, double> sse;
  for (DataType t : columns) sse[t] = 0.0;
  for (const Construct& c : truth) {
    double construct_sse = 0.0;
    for (DataType t : columns) {
      const Eigen::VectorXd& y = c.profile(t).values;
      auto id_it = preds.entries.find(c.id);
      if (id_it == preds.entries.end() || !id_it->second.count(t))
        throw Error("missing prediction for (" + c.id + ", " + std::to_string(c.scored_offset) + ", " +
                    std::string(to_string(t)) + ")");
      const Eigen::VectorXd& yhat = id_it->second.at(t);
      if (yhat.size() < c.scored_offset + c.seq_scored)
        throw Error("missing prediction for (" + c.id + ", " + std::to_string(yhat.size()) + ", " +
                    std::string(to_string(t)) + ")");
      const double s = (yhat.segment(c.scored_offset, c.seq_scored) - y).squaredNorm();
      sse[t] += s;
      construct_sse += s;
    }
    r.n_nucleotides += c.seq_scored;
    r.per_construct_rmse[c.id] =
        std::sqrt(construct_sse / static_cast<double>(c.seq_scored * static_cast<long>(columns.size())));
  }
  if (r.n_nucleotides == 0) throw Error("mcrmse: no scored nucleotides");
  double total = 0.0;
  for (DataType t : columns) {
    const double rmse = std::sqrt(sse[t] / static_cast<double>(r.n_nucleotides));
    r.per_column_rmse[t] = rmse;
    total += rmse;
  }
  r.mcrmse = total / static_cast<double>(columns.size());
  return r;
}

std::string score_report_json(const ScoreReport& r) {
  nlohmann::ordered_json j;
  j["mcrmse"] = r.mcrmse;
  j["per_column_rmse"] = nlohmann::ordered_json::object();
  for (const auto& [t, v] : r.per_column_rmse) j["per_column_rmse"][std::string(to_string(t))] = v;
  j["n_nucleotides"] = r.n_nucleotides;
  j["per_construct_rmse"] = nlohmann::ordered_json::object();
  for (const auto& [id, v] : r.per_construct_rmse) j["per_construct_rmse"][id] = v;
  return j.dump(2);
}

double sn_ratio(const Construct& c, const std::vector<DataType>& columns) {
  if (columns.empty()) throw Error("sn_ratio: no columns");
  double outer = 0.0;
  for (DataType t : columns) {
    const Profile& prof = c.profile(t);
    if (prof.errors.size() != prof.values.size())
      throw Error("sn_ratio: construct " + c.id + " has no " + std::string(to_string(t)) + " errors");
    double inner = 0.0;
    long used = 0;
    for (Eigen::Index j = 0; j < prof.values.size(); ++j) {
      if (prof.errors[j] <= 0.0) continue;
      inner += prof.values[j] / prof.errors[j];
      ++used;
    }
    if (used == 0)
      throw Error("sn_ratio undefined for " + c.id + ": no position of " + std::string(to_string(t)) +
                  " has a positive error");
    outer += inner / static_cast<double>(used);
  }
  return outer / static_cast<double>(columns.size());
}

FilterResult sn_filter(const Dataset& data, const SnThresholds& th) {
  FilterResult out;
  for (const Construct& src : data) {
    Construct c = src;
    bool pass = true;
    for (DataType t : th.value_columns) {
      if (!c.has_profile(t)) {
        pass = false;
        break;
      }
      const Eigen::VectorXd& v = c.profile(t).values;
      if (v.size() == 0 || !(v.minCoeff() > th.min_value) || !(v.maxCoeff() < th.max_value)) {
        pass = false;
        break;
      }
    }
    try {
      c.signal_to_noise = sn_ratio(c, th.sn_columns);
      if (!(c.signal_to_noise > th.min_sn)) pass = false;
    } catch (const Error&) {
      pass = false;
    }
    c.sn_pass = pass;
    (pass ? out.kept : out.rejected).push_back(std::move(c));
  }
  return out;
}

std::map<char, MotifStat> motif_aggregate(std::span<const double> values, std::string_view loops) {
  if (values.size() != loops.size()) throw Error("motif_aggregate: values and loop labels differ in length");
  std::map<char, MotifStat> out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    MotifStat& s = out[loops[i]];
    s.mean += values[i];
    ++s.count;
  }
  for (auto& [label, s] : out) s.mean /= static_cast<double>(s.count);
  return out;
}

std::map<char, MotifStat> motif_aggregate(const Dataset& data, DataType column, const PredictionSet* preds) {
  std::vector<double> values;
  std::string loops;
  for (const Construct& c : data) {
    if (preds) {
      const Eigen::VectorXd& p = preds->at(c.id, column);
      if (p.size() < c.scored_offset + c.seq_scored) throw Error("motif_aggregate: short prediction for " + c.id);
      for (int j = 0; j < c.seq_scored; ++j) values.push_back(p[c.scored_offset + j]);
    } else {
      const Eigen::VectorXd& v = c.profile(column).values;
      values.insert(values.end(), v.data(), v.data() + v.size());
    }
    loops += c.loop_string.substr(c.scored_offset, c.seq_scored);
  }
  return motif_aggregate(values, loops);
}

}  // namespace degkit
