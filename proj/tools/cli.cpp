#include "degkit/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <set>
#include <sstream>

#include "degkit/aggregate.hpp"
#include "degkit/curation.hpp"
#include "degkit/degscore.hpp"
#include "degkit/ensemble.hpp"
#include "degkit/eval.hpp"
#include "degkit/io.hpp"
#include "degkit/neural.hpp"
#include "degkit/parallel.hpp"
#include "degkit/structfeat.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace degkit {

namespace {

constexpr const char* kScoredColumns = "reactivity,deg_Mg_pH10,deg_Mg_50C";
constexpr const char* kAllColumns = "reactivity,deg_Mg_pH10,deg_pH10,deg_Mg_50C,deg_50C";

struct Context {
  std::ostream& out;
  std::ostream& err;
  void log(const std::string& msg) const { err << "degkit: " << msg << '\n'; }
};

std::string g6(double v) { return format_g6(v); }

void ensure_parent(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
}

// Attaches a BPP to every construct that lacks one. Without a folding-engine
// matrix the structure's own pairs stand in, with probability 1.
void fill_missing_bpp(Dataset& data, const Context& ctx, const std::string& what) {
  std::size_t filled = 0;
  for (Construct& c : data)
    if (!c.bpp) {
      c.bpp = structure_bpp(pair_table(c.structure), 1.0);
      ++filled;
    }
  if (filled)
    ctx.log("warning: no BPP directory for " + what + "; using structure-derived pair probabilities for " +
            std::to_string(filled) + " constructs");
}

Dataset load(const std::string& path, const std::string& bpp_dir) {
  return parse_dataset(path, bpp_dir.empty() ? std::nullopt : std::optional<fs::path>(bpp_dir));
}

// ---------------------------------------------------------------------------
// Subcommand options

struct IngestOpts {
  std::string data, bpp_dir, out;
};

struct FeaturizeOpts {
  std::string data, bpp_dir, out;
  int graph_cap = 0;
};

struct FilterOpts {
  std::string data, out, rejected;
  double min_value = 0.5, max_value = 20.0, min_sn = 1.0;
  std::string value_columns = kAllColumns, sn_columns = "reactivity";
};

struct SplitOpts {
  std::string data, out, linkage = "ward", distance = "hamming", sizes;
  double threshold = 0.5;
  std::uint64_t seed = 7;
};

struct TrainLinearOpts {
  std::string data, out, targets = kScoredColumns;
  int window = kDefaultWindow;
  double lambda = kDefaultRidgeLambda;
};

struct TrainNeuralOpts {
  std::string data, bpp_dir, validation, validation_bpp_dir, out, history;
  std::string columns = kAllColumns;
  std::string pseudo_label, pseudo_bpp_dir;
  int hidden = 32, depth = 2, recurrent = 1, epochs = 50, batch = 8, pseudo_epochs = -1;
  double lr = 1e-3, clip = 1.0, sn_weight_cap = 0.0;
  bool reverse_augment = false;
  std::uint64_t seed = 0;
};

struct PredictOpts {
  std::string model, data, bpp_dir, out, columns = kScoredColumns;
};

struct ScoreOpts {
  std::string preds, data, out, columns = kScoredColumns;
};

struct EnsembleOpts {
  std::string candidates, truth, priv, out, blend_out, columns = kScoredColumns;
  std::size_t max_members = 10, pool_limit = 100, population = 64, generations = 200;
  double sigma = 0.05;
  std::uint64_t seed = 7;
};

struct AggregateOpts {
  std::string model, preds, mrnas, out, column = "deg_Mg_pH10";
  int resamples = kDefaultBootstrapResamples;
  std::uint64_t seed = 0;
};

struct ReportOpts {
  std::string data, ranks, out, column = "reactivity", columns = kScoredColumns;
  std::vector<std::string> preds;
};

// ---------------------------------------------------------------------------
// Model files

bool is_neural_file(const std::string& text) {
  try {
    const json j = json::parse(text);
    return j.is_object() && j.contains("format");
  } catch (const json::parse_error&) {
    return false;
  }
}

// Predictions of either model kind for every construct, full length.
PredictionSet predict_any(const std::string& model_path, Dataset& data, const Context& ctx) {
  const std::string text = read_file(model_path);
  const std::string name = fs::path(model_path).stem().string();
  if (is_neural_file(text)) {
    const NeuralModel m = neural_model_from_json(text);
    fill_missing_bpp(data, ctx, "prediction");
    return predict_neural(m, data, name);
  }
  const std::vector<LinearModel> models = load_linear_models(model_path);
  PredictionSet p;
  p.model_name = name;
  std::vector<std::map<DataType, Eigen::VectorXd>> rows(data.size());
  parallel_for(data.size(), [&](std::size_t i) {
    for (const LinearModel& m : models) rows[i][m.target] = predict_linear(m, data[i]);
  });
  for (std::size_t i = 0; i < data.size(); ++i) p.entries[data[i].id] = std::move(rows[i]);
  return p;
}

// ---------------------------------------------------------------------------
// Commands

int cmd_ingest(const IngestOpts& o, const Context& ctx) {
  Dataset data = load(o.data, o.bpp_dir);
  std::map<int, long> rounds;
  long with_bpp = 0, sn_pass = 0;
  for (const Construct& c : data) {
    ++rounds[c.round];
    with_bpp += c.bpp.has_value();
    sn_pass += c.sn_pass;
  }
  if (!o.out.empty()) {
    ensure_parent(o.out);
    write_dataset(data, o.out);
  }
  json j;
  j["constructs"] = data.size();
  j["with_bpp"] = with_bpp;
  j["sn_filter_pass"] = sn_pass;
  json r = json::object();
  for (const auto& [round, n] : rounds) r[std::to_string(round)] = n;
  j["rounds"] = r;
  ctx.out << j.dump(2) << '\n';
  return 0;
}

int cmd_featurize(const FeaturizeOpts& o, const Context& ctx) {
  Dataset data = load(o.data, o.bpp_dir);
  fill_missing_bpp(data, ctx, "featurize");
  fs::create_directories(o.out);
  const std::optional<int> cap = o.graph_cap > 0 ? std::optional<int>(o.graph_cap) : std::nullopt;
  parallel_for(data.size(), [&](std::size_t i) {
    const Construct& c = data[i];
    const FeatureBundle f = compute_features(c, cap);
    const fs::path dir(o.out);
    write_file_atomic(dir / (c.id + ".loops"), f.loop_string + "\n");
    std::string csv = "dist_to_paired,dist_to_unpaired,bpp_rowsum,bpp_zeros\n";
    for (int k = 0; k < c.seq_length; ++k)
      csv += std::to_string(f.dist_to_paired[k]) + ',' + std::to_string(f.dist_to_unpaired[k]) + ',' +
             g6(f.bpp_rowsum[k]) + ',' + g6(f.bpp_zeros[k]) + '\n';
    write_file_atomic(dir / (c.id + ".feat.csv"), csv);
    std::string gd;
    for (Eigen::Index r = 0; r < f.graph_dist.rows(); ++r) {
      for (Eigen::Index s = 0; s < f.graph_dist.cols(); ++s) {
        if (s) gd += ' ';
        gd += std::to_string(f.graph_dist(r, s));
      }
      gd += '\n';
    }
    write_file_atomic(dir / (c.id + ".gdist"), gd);
  });
  ctx.log("featurized " + std::to_string(data.size()) + " constructs into " + o.out);
  return 0;
}

int cmd_filter(const FilterOpts& o, const Context& ctx) {
  const Dataset data = load(o.data, "");
  SnThresholds th;
  th.min_value = o.min_value;
  th.max_value = o.max_value;
  th.min_sn = o.min_sn;
  th.value_columns = parse_data_type_list(o.value_columns);
  th.sn_columns = parse_data_type_list(o.sn_columns);
  if (th.min_value > 0.0)
    ctx.log("note: min-value " + g6(th.min_value) + " rejects most real constructs; released data uses -0.5");
  const FilterResult r = sn_filter(data, th);
  ensure_parent(o.out);
  write_dataset(r.kept, o.out);
  if (!o.rejected.empty()) {
    ensure_parent(o.rejected);
    write_dataset(r.rejected, o.rejected);
  }
  json j;
  j["input"] = data.size();
  j["kept"] = r.kept.size();
  j["rejected"] = r.rejected.size();
  ctx.out << j.dump(2) << '\n';
  return 0;
}

SplitTargets parse_sizes(const std::string& text) {
  std::vector<std::size_t> v;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ',');) {
    try {
      std::size_t used = 0;
      const long long x = std::stoll(part, &used);
      if (used != part.size() || x < 0) throw std::invalid_argument(part);
      v.push_back(static_cast<std::size_t>(x));
    } catch (const std::logic_error&) {
      throw ValidationError("sizes", "expected three nonnegative integers train,public,private; got '" + text + "'");
    }
  }
  if (v.size() != 3) throw ValidationError("sizes", "expected train,public,private; got '" + text + "'");
  return {v[0], v[1], v[2]};
}

int cmd_split(const SplitOpts& o, const Context& ctx) {
  const Dataset data = load(o.data, "");
  std::vector<std::string> seqs;
  for (const Construct& c : data) seqs.push_back(c.sequence);
  CondensedDistances d;
  if (o.distance == "hamming") {
    d = hamming_distances(seqs);
  } else if (o.distance == "onehot") {
    d = onehot_distances(seqs);
  } else {
    throw ValidationError("distance", "expected hamming or onehot; got '" + o.distance + "'");
  }
  const std::vector<int> clusters = cluster_and_cut(d, o.threshold, parse_linkage(o.linkage));
  SplitTargets targets;
  if (o.sizes.empty()) {
    // 60/20/20 by default
    targets.public_test = data.size() / 5;
    targets.private_test = data.size() / 5;
    targets.train = data.size() - targets.public_test - targets.private_test;
  } else {
    targets = parse_sizes(o.sizes);
  }
  const SplitAssignment a = assign_splits(clusters, targets, o.seed);
  std::string csv = "id,cluster_id,split\n";
  for (std::size_t i = 0; i < data.size(); ++i)
    csv += data[i].id + ',' + std::to_string(a.cluster_id[i]) + ',' + std::string(to_string(a.split[i])) + '\n';
  ensure_parent(o.out);
  write_file_atomic(o.out, csv);
  json j;
  j["clusters"] = clusters.empty() ? 0 : *std::max_element(clusters.begin(), clusters.end()) + 1;
  j["train"] = a.count(Split::kTrain);
  j["public_test"] = a.count(Split::kPublicTest);
  j["private_test"] = a.count(Split::kPrivateTest);
  ctx.out << j.dump(2) << '\n';
  return 0;
}

int cmd_train_linear(const TrainLinearOpts& o, const Context& ctx) {
  const Dataset data = load(o.data, "");
  const std::vector<DataType> targets = parse_data_type_list(o.targets);
  std::vector<LinearModel> models(targets.size());
  parallel_for(targets.size(), [&](std::size_t i) { models[i] = train_ridge(data, targets[i], o.window, o.lambda); });
  for (const LinearModel& m : models) {
    double sq = 0;
    long count = 0;
    for (const Construct& c : data) {
      const Eigen::VectorXd y = predict_linear(m, c);
      const Eigen::VectorXd& t = c.profile(m.target).values;
      sq += (y.segment(c.scored_offset, c.seq_scored) - t).squaredNorm();
      count += c.seq_scored;
    }
    ctx.log("train RMSE " + std::string(to_string(m.target)) + " = " +
            g6(std::sqrt(sq / static_cast<double>(std::max(count, 1L)))));
  }
  ensure_parent(o.out);
  save_linear_models(models, o.out);
  return 0;
}

int cmd_train_neural(const TrainNeuralOpts& o, const Context& ctx) {
  Dataset train_set = load(o.data, o.bpp_dir);
  fill_missing_bpp(train_set, ctx, "training data");
  Dataset validation;
  if (!o.validation.empty()) {
    validation = load(o.validation, o.validation_bpp_dir.empty() ? o.bpp_dir : o.validation_bpp_dir);
    fill_missing_bpp(validation, ctx, "validation data");
  }
  NeuralHyperparams hp;
  hp.hidden = o.hidden;
  hp.depth = o.depth;
  hp.recurrent_layers = o.recurrent;
  hp.seed = o.seed;
  NeuralModel m = init_model(hp);

  TrainConfig cfg;
  cfg.epochs = o.epochs;
  cfg.learning_rate = o.lr;
  cfg.batch_size = o.batch;
  cfg.clip_norm = o.clip;
  cfg.reverse_augment = o.reverse_augment;
  cfg.sn_weight_cap = o.sn_weight_cap;
  cfg.shuffle_seed = o.seed;
  cfg.columns = parse_data_type_list(o.columns);

  std::string history = "phase,epoch,train_loss,validation_loss\n";
  auto record = [&](const std::string& phase, const TrainHistory& h) {
    for (std::size_t e = 0; e < h.train_loss.size(); ++e) {
      history += phase + ',' + std::to_string(e + 1) + ',' + g6(h.train_loss[e]) + ',' +
                 (e < h.validation_loss.size() ? g6(h.validation_loss[e]) : std::string()) + '\n';
    }
    if (!h.train_loss.empty())
      ctx.log(phase + ": final train loss " + g6(h.train_loss.back()) +
              (h.validation_loss.empty() ? std::string() : ", validation loss " + g6(h.validation_loss.back())));
  };
  record("train", train(m, train_set, validation, cfg));

  if (!o.pseudo_label.empty()) {
    Dataset unlabeled = load(o.pseudo_label, o.pseudo_bpp_dir);
    fill_missing_bpp(unlabeled, ctx, "pseudo-label data");
    Dataset augmented = train_set;
    for (Construct& c : pseudo_label_augment(m, unlabeled)) augmented.push_back(std::move(c));
    TrainConfig pcfg = cfg;
    if (o.pseudo_epochs >= 0) pcfg.epochs = o.pseudo_epochs;
    pcfg.shuffle_seed = o.seed + 1;
    ctx.log("pseudo-labeled " + std::to_string(unlabeled.size()) + " constructs");
    record("pseudo", train(m, augmented, validation, pcfg));
  }
  ensure_parent(o.out);
  save_neural_model(m, o.out);
  if (!o.history.empty()) {
    ensure_parent(o.history);
    write_file_atomic(o.history, history);
  }
  return 0;
}

int cmd_predict(const PredictOpts& o, const Context& ctx) {
  Dataset data = load(o.data, o.bpp_dir);
  const PredictionSet p = predict_any(o.model, data, ctx);
  ensure_parent(o.out);
  write_predictions(p, o.out, parse_data_type_list(o.columns));
  ctx.log("wrote predictions for " + std::to_string(p.entries.size()) + " constructs to " + o.out);
  return 0;
}

int cmd_score(const ScoreOpts& o, const Context& ctx) {
  const Dataset truth = load(o.data, "");
  const PredictionSet p = read_predictions(o.preds);
  const ScoreReport r = mcrmse(p, truth, parse_data_type_list(o.columns));
  const std::string text = score_report_json(r);
  ctx.out << text << '\n';
  if (!o.out.empty()) {
    ensure_parent(o.out);
    write_file_atomic(o.out, text + "\n");
  }
  return 0;
}

int cmd_ensemble(const EnsembleOpts& o, const Context& ctx) {
  std::vector<fs::path> files;
  if (!fs::is_directory(o.candidates)) throw MissingFileError("candidate directory not found: " + o.candidates);
  for (const auto& entry : fs::directory_iterator(o.candidates))
    if (entry.is_regular_file() && entry.path().extension() == ".csv") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ValidationError("candidates", "no .csv prediction files in " + o.candidates);
  std::map<std::string, PredictionSet> pool;
  for (const fs::path& f : files) pool[f.stem().string()] = read_predictions(f, f.stem().string());
  ctx.log("loaded " + std::to_string(pool.size()) + " candidate prediction sets");

  const Dataset truth = load(o.truth, "");
  Dataset priv;
  if (!o.priv.empty()) priv = load(o.priv, "");
  GaConfig cfg;
  cfg.max_members = o.max_members;
  cfg.pool_limit = o.pool_limit;
  cfg.population = o.population;
  cfg.generations = o.generations;
  cfg.mutation_sigma = o.sigma;
  cfg.seed = o.seed;
  cfg.columns = parse_data_type_list(o.columns);
  const GaResult r = ga_optimize(pool, truth, cfg, o.priv.empty() ? nullptr : &priv);
  ctx.log("public MCRMSE " + g6(r.public_mcrmse) + " (best single model " + g6(r.best_singleton_mcrmse) + ")");
  if (r.private_mcrmse) ctx.log("private MCRMSE " + g6(*r.private_mcrmse));
  ensure_parent(o.out);
  write_file_atomic(o.out, ensemble_spec_json(r) + "\n");
  if (!o.blend_out.empty()) {
    ensure_parent(o.blend_out);
    write_predictions(blend(r.spec, pool), o.blend_out, cfg.columns);
  }
  return 0;
}

// Dot-bracket line of a structure file: plain, or a .dbn with header and
// sequence lines.
std::string read_structure_file(const fs::path& path, std::size_t length) {
  const std::string text = read_file(path);
  std::stringstream ss(text);
  for (std::string line; std::getline(ss, line);) {
    while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
    if (line.size() == length && line.find_first_not_of("()[]{}<>.") == std::string::npos) return line;
  }
  throw ValidationError("structure_file", path.string() + " has no dot-bracket line of length " +
                                             std::to_string(length));
}

int cmd_aggregate(const AggregateOpts& o, const Context& ctx) {
  if (o.model.empty() == o.preds.empty()) throw ValidationError("model", "give exactly one of --model or --preds");
  const std::vector<MrnaRecord> mrnas = read_mrna_csv(o.mrnas);
  const DataType column = parse_data_type(o.column);
  PredictionSet preds;
  if (!o.preds.empty()) {
    preds = read_predictions(o.preds);
  } else {
    Dataset data;
    for (const MrnaRecord& r : mrnas) {
      Construct c;
      c.id = r.id;
      c.sequence = r.sequence;
      c.seq_length = static_cast<int>(r.sequence.size());
      c.structure = read_structure_file(r.structure_file, r.sequence.size());
      c.loop_string = annotate_loops(pair_table(c.structure));
      if (!r.bpp_file.empty()) c.bpp = load_bpp(r.bpp_file, c.seq_length);
      data.push_back(std::move(c));
    }
    preds = predict_any(o.model, data, ctx);
  }
  const RankEvalResult r = rank_eval(preds, mrnas, column, o.resamples, o.seed);
  std::string csv = "id,predicted_rate,measured_rate,rate_stderr\n";
  for (const RankRow& row : r.rows)
    csv += row.id + ',' + g6(row.predicted_rate) + ',' + g6(row.measured_rate) + ',' + g6(row.rate_stderr) + '\n';
  ensure_parent(o.out);
  write_file_atomic(o.out, csv);
  json j;
  j["n"] = r.rows.size();
  j["spearman"] = r.spearman;
  j["p"] = r.p_description;
  j["noise_ceiling"] = r.noise_ceiling;
  ctx.out << j.dump(2) << '\n';
  return 0;
}

int cmd_report(const ReportOpts& o, const Context& ctx) {
  if (o.data.empty() && o.ranks.empty()) throw ValidationError("data", "give --data and/or --ranks");
  const fs::path dir(o.out);
  fs::create_directories(dir);
  int written = 0;

  if (!o.data.empty()) {
    const Dataset truth = load(o.data, "");
    const DataType column = parse_data_type(o.column);
    std::vector<std::pair<std::string, PredictionSet>> models;
    for (const std::string& path : o.preds) {
      const std::string name = fs::path(path).stem().string();
      models.emplace_back(name, read_predictions(path, name));
    }

    // Motif means: measured first, then each model.
    std::vector<std::map<char, MotifStat>> stats{motif_aggregate(truth, column)};
    for (const auto& [name, p] : models) stats.push_back(motif_aggregate(truth, column, &p));
    std::vector<std::string> labels;
    for (char l : kLoopAlphabet)
      if (stats[0].count(l)) labels.emplace_back(1, l);
    std::vector<svg::Series> series;
    std::string csv = "loop,source,mean,count\n";
    for (std::size_t s = 0; s < stats.size(); ++s) {
      svg::Series ser{s == 0 ? std::string("measured") : models[s - 1].first, {}};
      for (const std::string& l : labels) {
        const auto it = stats[s].find(l[0]);
        const MotifStat m = it == stats[s].end() ? MotifStat{std::nan(""), 0} : it->second;
        ser.values.push_back(m.mean);
        csv += l + ',' + ser.name + ',' + g6(m.mean) + ',' + std::to_string(m.count) + '\n';
      }
      series.push_back(std::move(ser));
    }
    write_file_atomic(dir / "motifs.csv", csv);
    write_file_atomic(dir / "motifs.svg",
                      svg::bar_chart("Mean " + std::string(to_string(column)) + " by loop type", labels, series,
                                     std::string(to_string(column))));
    written += 2;

    if (!models.empty()) {
      const std::vector<DataType> columns = parse_data_type_list(o.columns);
      std::string scsv = "model,mcrmse";
      for (DataType t : columns) scsv += ',' + std::string(to_string(t));
      scsv += '\n';
      std::vector<std::string> names;
      svg::Series scores{"MCRMSE", {}};
      for (const auto& [name, p] : models) {
        const ScoreReport r = mcrmse(p, truth, columns);
        scsv += name + ',' + g6(r.mcrmse);
        for (DataType t : columns) scsv += ',' + g6(r.per_column_rmse.at(t));
        scsv += '\n';
        names.push_back(name);
        scores.values.push_back(r.mcrmse);
      }
      write_file_atomic(dir / "scores.csv", scsv);
      write_file_atomic(dir / "scores.svg", svg::bar_chart("Test MCRMSE by model", names, {scores}, "MCRMSE"));
      written += 2;
    }
  }

  if (!o.ranks.empty()) {
    std::ifstream in(o.ranks);
    if (!in) throw MissingFileError("cannot open ranks file " + o.ranks);
    std::string line;
    std::getline(in, line);
    if (line.rfind("id,predicted_rate,measured_rate", 0) != 0)
      throw ParseError("expected ranks header id,predicted_rate,measured_rate,...", 1);
    std::vector<double> predicted, measured;
    for (std::size_t n = 2; std::getline(in, line); ++n) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string id, p, m;
      std::getline(ss, id, ',');
      std::getline(ss, p, ',');
      std::getline(ss, m, ',');
      try {
        predicted.push_back(std::stod(p));
        measured.push_back(std::stod(m));
      } catch (const std::logic_error&) {
        throw ParseError("non-numeric rate in " + o.ranks, n);
      }
    }
    const double rho = predicted.size() >= 2 ? spearman(predicted, measured) : std::nan("");
    char title[96];
    std::snprintf(title, sizeof title, "Predicted vs measured degradation (Spearman %.3f, n=%zu)", rho,
                  predicted.size());
    write_file_atomic(dir / "ranks.svg", svg::scatter(title, predicted, measured, "summed predicted rate",
                                                      "measured rate"));
    ++written;
  }
  ctx.log("wrote " + std::to_string(written) + " report files to " + o.out);
  return 0;
}

// ---------------------------------------------------------------------------
// key = value configuration files

// Expands the subcommand's --config file into option tokens placed ahead of
// the command-line ones. Keys already given on the command line are skipped,
// so explicit flags override the file.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  auto sub = std::find_if(args.begin(), args.end(), [](const std::string& a) { return !a.empty() && a[0] != '-'; });
  if (sub == args.end()) return args;
  std::optional<std::string> file;
  std::vector<std::string> rest;
  std::set<std::string> given;
  for (auto it = sub + 1; it != args.end(); ++it) {
    if (*it == "--config" && it + 1 != args.end()) {
      file = *++it;
      continue;
    }
    if (it->rfind("--config=", 0) == 0) {
      file = it->substr(9);
      continue;
    }
    if (it->rfind("--", 0) == 0) given.insert(it->substr(2, it->find('=') - 2));
    rest.push_back(*it);
  }
  if (!file) return args;

  std::ifstream in(*file);
  if (!in) throw MissingFileError("cannot open config file " + *file);
  std::vector<std::string> injected;
  std::string line;
  for (std::size_t n = 1; std::getline(in, line); ++n) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError("expected key = value in " + *file, n);
    auto trim = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r\"");
      const auto b = s.find_last_not_of(" \t\r\"");
      return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
    };
    std::string key = trim(line.substr(0, eq));
    key.erase(0, key.find_first_not_of('-'));
    std::replace(key.begin(), key.end(), '_', '-');
    if (key.empty()) throw ParseError("empty key in " + *file, n);
    if (given.count(key)) continue;
    injected.push_back("--" + key + "=" + trim(line.substr(eq + 1)));
  }
  std::vector<std::string> out(args.begin(), sub + 1);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin(), rest.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  CLI::App app{"degkit: RNA degradation modeling toolkit"};
  app.name("degkit");
  app.require_subcommand(1);
  app.fallthrough();
  unsigned threads = 0;
  app.add_option("--threads", threads, "worker threads (0 = available cores)")->capture_default_str();

  const Context ctx{out, err};
  std::function<int()> action;
  auto config_opt = [](CLI::App* sub) {
    // Consumed before parsing; registered so it shows in --help.
    sub->add_option("--config", "key = value file of defaults for this command");
  };
  auto seed_opt = [](CLI::App* sub, std::uint64_t& seed) {
    sub->add_option("--seed", seed, "random seed")->envname("DEGKIT_SEED")->capture_default_str();
  };

  IngestOpts ingest;
  auto* s_ingest = app.add_subcommand("ingest", "validate a JSONL dataset, optionally attach BPP files");
  s_ingest->add_option("--data", ingest.data)->required();
  s_ingest->add_option("--bpp-dir", ingest.bpp_dir);
  s_ingest->add_option("--out", ingest.out, "write the normalized dataset here");
  config_opt(s_ingest);
  s_ingest->callback([&] { action = [&] { return cmd_ingest(ingest, ctx); }; });

  FeaturizeOpts feat;
  auto* s_feat = app.add_subcommand("featurize", "write per-construct loop, feature and distance files");
  s_feat->add_option("--data", feat.data)->required();
  s_feat->add_option("--bpp-dir", feat.bpp_dir);
  s_feat->add_option("--out", feat.out)->required();
  s_feat->add_option("--graph-cap", feat.graph_cap, "clamp graph distances (0 = exact)")->capture_default_str();
  config_opt(s_feat);
  s_feat->callback([&] { action = [&] { return cmd_featurize(feat, ctx); }; });

  FilterOpts filt;
  auto* s_filt = app.add_subcommand("filter", "signal-to-noise and value-range quality filter");
  s_filt->add_option("--data", filt.data)->required();
  s_filt->add_option("--out", filt.out)->required();
  s_filt->add_option("--rejected", filt.rejected);
  s_filt->add_option("--min-value", filt.min_value)->capture_default_str();
  s_filt->add_option("--max-value", filt.max_value)->capture_default_str();
  s_filt->add_option("--min-sn", filt.min_sn)->capture_default_str();
  s_filt->add_option("--value-columns", filt.value_columns)->capture_default_str();
  s_filt->add_option("--sn-columns", filt.sn_columns)->capture_default_str();
  config_opt(s_filt);
  s_filt->callback([&] { action = [&] { return cmd_filter(filt, ctx); }; });

  SplitOpts split;
  auto* s_split = app.add_subcommand("split", "cluster sequences and assign train/public/private splits");
  s_split->add_option("--data", split.data)->required();
  s_split->add_option("--out", split.out)->required();
  s_split->add_option("--threshold", split.threshold)->capture_default_str();
  s_split->add_option("--linkage", split.linkage)->capture_default_str();
  s_split->add_option("--distance", split.distance, "hamming or onehot")->capture_default_str();
  s_split->add_option("--sizes", split.sizes, "train,public,private (default 60/20/20)");
  seed_opt(s_split, split.seed);
  config_opt(s_split);
  s_split->callback([&] { action = [&] { return cmd_split(split, ctx); }; });

  TrainLinearOpts tl;
  auto* s_tl = app.add_subcommand("train-linear", "fit windowed ridge models");
  s_tl->add_option("--data", tl.data)->required();
  s_tl->add_option("--out", tl.out)->required();
  s_tl->add_option("--targets", tl.targets)->capture_default_str();
  s_tl->add_option("--window", tl.window)->capture_default_str();
  s_tl->add_option("--lambda", tl.lambda)->capture_default_str();
  config_opt(s_tl);
  s_tl->callback([&] { action = [&] { return cmd_train_linear(tl, ctx); }; });

  TrainNeuralOpts tn;
  auto* s_tn = app.add_subcommand("train-neural", "train the message-passing + GRU regressor");
  s_tn->add_option("--data", tn.data)->required();
  s_tn->add_option("--bpp-dir", tn.bpp_dir);
  s_tn->add_option("--validation", tn.validation);
  s_tn->add_option("--validation-bpp-dir", tn.validation_bpp_dir);
  s_tn->add_option("--out", tn.out)->required();
  s_tn->add_option("--history", tn.history, "per-epoch loss CSV");
  s_tn->add_option("--columns", tn.columns)->capture_default_str();
  s_tn->add_option("--hidden", tn.hidden)->capture_default_str();
  s_tn->add_option("--depth", tn.depth)->capture_default_str();
  s_tn->add_option("--recurrent", tn.recurrent)->capture_default_str();
  s_tn->add_option("--epochs", tn.epochs)->capture_default_str();
  s_tn->add_option("--batch", tn.batch)->capture_default_str();
  s_tn->add_option("--lr", tn.lr)->capture_default_str();
  s_tn->add_option("--clip", tn.clip)->capture_default_str();
  s_tn->add_option("--sn-weight-cap", tn.sn_weight_cap)->capture_default_str();
  s_tn->add_flag("--reverse-augment", tn.reverse_augment);
  s_tn->add_option("--pseudo-label", tn.pseudo_label, "unlabeled JSONL for a second pseudo-labeled phase");
  s_tn->add_option("--pseudo-bpp-dir", tn.pseudo_bpp_dir);
  s_tn->add_option("--pseudo-epochs", tn.pseudo_epochs, "(default: --epochs)");
  seed_opt(s_tn, tn.seed);
  config_opt(s_tn);
  s_tn->callback([&] { action = [&] { return cmd_train_neural(tn, ctx); }; });

  PredictOpts pr;
  auto* s_pr = app.add_subcommand("predict", "full-length predictions from a linear or neural model");
  s_pr->add_option("--model", pr.model)->required();
  s_pr->add_option("--data", pr.data)->required();
  s_pr->add_option("--bpp-dir", pr.bpp_dir);
  s_pr->add_option("--out", pr.out)->required();
  s_pr->add_option("--columns", pr.columns)->capture_default_str();
  config_opt(s_pr);
  s_pr->callback([&] { action = [&] { return cmd_predict(pr, ctx); }; });

  ScoreOpts sc;
  auto* s_sc = app.add_subcommand("score", "MCRMSE of a prediction CSV against measured data");
  s_sc->add_option("--preds", sc.preds)->required();
  s_sc->add_option("--data", sc.data)->required();
  s_sc->add_option("--columns", sc.columns)->capture_default_str();
  s_sc->add_option("--out", sc.out, "also write the JSON report here");
  config_opt(s_sc);
  s_sc->callback([&] { action = [&] { return cmd_score(sc, ctx); }; });

  EnsembleOpts en;
  auto* s_en = app.add_subcommand("ensemble", "genetic search for a weighted blend of candidate predictions");
  s_en->add_option("--candidates", en.candidates, "directory of prediction CSVs")->required();
  s_en->add_option("--truth", en.truth, "public test JSONL")->required();
  s_en->add_option("--private", en.priv, "private test JSONL, reported only");
  s_en->add_option("--out", en.out)->required();
  s_en->add_option("--blend-out", en.blend_out, "write the blended predictions here");
  s_en->add_option("--columns", en.columns)->capture_default_str();
  s_en->add_option("--max-members", en.max_members)->capture_default_str();
  s_en->add_option("--pool-limit", en.pool_limit)->capture_default_str();
  s_en->add_option("--population", en.population)->capture_default_str();
  s_en->add_option("--generations", en.generations)->capture_default_str();
  s_en->add_option("--sigma", en.sigma, "weight mutation scale")->capture_default_str();
  seed_opt(s_en, en.seed);
  config_opt(s_en);
  s_en->callback([&] { action = [&] { return cmd_ensemble(en, ctx); }; });

  AggregateOpts ag;
  auto* s_ag = app.add_subcommand("aggregate", "whole-molecule rates and rank agreement for mRNAs");
  s_ag->add_option("--model", ag.model);
  s_ag->add_option("--preds", ag.preds, "precomputed full-length predictions instead of --model");
  s_ag->add_option("--mrnas", ag.mrnas)->required();
  s_ag->add_option("--column", ag.column)->capture_default_str();
  s_ag->add_option("--out", ag.out)->required();
  s_ag->add_option("--resamples", ag.resamples, "bootstrap resamples for the noise ceiling")->capture_default_str();
  seed_opt(s_ag, ag.seed);
  config_opt(s_ag);
  s_ag->callback([&] { action = [&] { return cmd_aggregate(ag, ctx); }; });

  ReportOpts rp;
  auto* s_rp = app.add_subcommand("report", "CSV tables and SVG plots of scores, motifs and rank agreement");
  s_rp->add_option("--data", rp.data, "measured JSONL");
  s_rp->add_option("--preds", rp.preds, "prediction CSVs (repeatable)");
  s_rp->add_option("--ranks", rp.ranks, "ranks.csv from aggregate");
  s_rp->add_option("--column", rp.column, "column for the motif plot")->capture_default_str();
  s_rp->add_option("--columns", rp.columns, "columns for scoring")->capture_default_str();
  s_rp->add_option("--out", rp.out)->required();
  config_opt(s_rp);
  s_rp->callback([&] { action = [&] { return cmd_report(rp, ctx); }; });

  std::vector<std::string> args;
  try {
    args = expand_config(raw_args);
  } catch (const Error& e) {
    err << "degkit: error: " << e.what() << '\n';
    return 1;
  }
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      for (auto* sub : app.get_subcommands()) out << sub->help();
      return 0;
    }
    err << "degkit: " << e.what() << '\n' << app.help();
    return 2;
  }

  set_thread_count(threads);
  err << "# resolved configuration\nthreads=" << thread_count() << '\n';
  for (const CLI::App* sub : app.get_subcommands())
    err << '[' << sub->get_name() << "]\n" << sub->config_to_str(true, false);
  try {
    return action();
  } catch (const Error& e) {
    err << "degkit: error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "degkit: error: " << e.what() << '\n';
    return 1;
  }
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace degkit
