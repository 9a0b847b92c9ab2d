#include "degkit/aggregate.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "degkit/eval.hpp"
#include "degkit/random.hpp"

namespace degkit {

std::vector<MrnaRecord> read_mrna_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw MissingFileError("cannot open " + path.string());
  const std::filesystem::path base = path.parent_path();
  std::string text;
  std::size_t line = 0;
  std::vector<MrnaRecord> out;
  while (std::getline(in, text)) {
    ++line;
    if (!text.empty() && text.back() == '\r') text.pop_back();
    if (text.empty()) continue;
    std::vector<std::string> cells;
    std::istringstream row(text);
    std::string cell;
    while (std::getline(row, cell, ',')) cells.push_back(cell);
    if (line == 1 && !cells.empty() && cells[0] == "id") {
      if (text != "id,sequence,structure_file,bpp_file,window_start,window_end,measured_rate,rate_stderr")
        throw ParseError("unexpected mRNA CSV header", line);
      continue;
    }
    if (cells.size() != 8) throw ParseError("expected 8 columns", line);
    MrnaRecord r;
    r.id = cells[0];
    r.sequence = cells[1];
    auto resolve = [&](const std::string& p) {
      std::filesystem::path f(p);
      return f.is_relative() ? base / f : f;
    };
    r.structure_file = resolve(cells[2]);
    r.bpp_file = cells[3].empty() ? std::filesystem::path{} : resolve(cells[3]);
    try {
      r.window.start = std::stol(cells[4]);
      r.window.end = std::stol(cells[5]);
      r.measured_rate = std::stod(cells[6]);
      r.rate_stderr = std::stod(cells[7]);
    } catch (const std::exception&) {
      throw ParseError("bad numeric field", line);
    }
    const auto len = static_cast<Eigen::Index>(r.sequence.size());
    if (r.window.start < 0 || r.window.start >= r.window.end || r.window.end > len)
      throw ValidationError("window", "need 0 <= start < end <= length for " + r.id);
    if (!(r.rate_stderr >= 0.0)) throw ValidationError("rate_stderr", "must be nonnegative for " + r.id);
    out.push_back(std::move(r));
  }
  return out;
}

double bootstrap_noise_ceiling(const std::vector<double>& rates, const std::vector<double>& stderrs, int resamples,
                               std::uint64_t seed) {
  if (rates.size() != stderrs.size()) throw Error("bootstrap: rates and errors differ in length");
  if (resamples < 1) throw Error("bootstrap: need at least one resample");
  Rng rng(seed);
  std::vector<double> draw(rates.size());
  double total = 0.0;
  for (int r = 0; r < resamples; ++r) {
    for (std::size_t i = 0; i < rates.size(); ++i) draw[i] = rates[i] + stderrs[i] * standard_normal(rng);
    total += spearman(draw, rates);
  }
  return total / resamples;
}

RankEvalResult rank_eval(const PredictionSet& preds, const std::vector<MrnaRecord>& mrnas, DataType column,
                         int resamples, std::uint64_t seed) {
  RankEvalResult out;
  std::vector<double> predicted, measured, stderrs;
  for (const MrnaRecord& m : mrnas) {
    const Eigen::VectorXd& v = preds.at(m.id, column);
    if (v.size() != static_cast<Eigen::Index>(m.sequence.size()))
      throw Error("rank_eval: prediction for " + m.id + " is not full length");
    RankRow row{m.id, sum_rates(v, m.window), m.measured_rate, m.rate_stderr};
    predicted.push_back(row.predicted_rate);
    measured.push_back(row.measured_rate);
    stderrs.push_back(row.rate_stderr);
    out.rows.push_back(std::move(row));
  }
  out.spearman = spearman(predicted, measured);
  // Large-sample normal approximation of the two-sided p-value.
  const double n = static_cast<double>(predicted.size());
  const double z = out.spearman * std::sqrt(std::max(n - 1.0, 0.0));
  const double p = std::erfc(std::fabs(z) / std::numbers::sqrt2);
  char buf[128];
  std::snprintf(buf, sizeof buf, "rho=%.4f, n=%zu, two-sided p~%.3g (normal approximation)", out.spearman,
                predicted.size(), p);
  out.p_description = buf;
  out.noise_ceiling = bootstrap_noise_ceiling(measured, stderrs, resamples, seed);
  return out;
}

}  // namespace degkit
