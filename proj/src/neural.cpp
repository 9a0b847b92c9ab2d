#include "degkit/neural.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "degkit/io.hpp"
#include "degkit/parallel.hpp"
#include "degkit/random.hpp"
#include "degkit/structfeat.hpp"

namespace degkit {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;

// ---------------------------------------------------------------------------
// Features

FeatureTensor build_features(const Construct& c) {
  if (!c.bpp) throw ValidationError("bpp", "construct " + c.id + " has no base-pair probability matrix");
  const PairTable pt = pair_table(c.structure);
  const int n = pt.size();
  const std::string loops = c.loop_string.size() == c.sequence.size() ? c.loop_string : annotate_loops(pt);
  const auto nearest = nearest_pair_distances(pt);
  const auto summary = bpp_summary(*c.bpp);

  FeatureTensor f;
  f.x = MatrixXd::Zero(n, kInputFeatures);
  for (int i = 0; i < n; ++i) {
    if (auto b = kBaseAlphabet.find(c.sequence[i]); b != std::string_view::npos) f.x(i, static_cast<Eigen::Index>(b)) = 1.0;
    if (auto l = kLoopAlphabet.find(loops[i]); l != std::string_view::npos) f.x(i, 4 + static_cast<Eigen::Index>(l)) = 1.0;
    f.x(i, 11) = pt.paired(i) ? 1.0 : 0.0;
    f.x(i, 12) = static_cast<double>(nearest.to_paired[i]) / n;
    f.x(i, 13) = static_cast<double>(nearest.to_unpaired[i]) / n;
    f.x(i, 14) = summary.rowsum[i];
    f.x(i, 15) = summary.zeros[i];
  }
  f.adj = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    if (i > 0) f.adj(i, i - 1) = 1.0;
    if (i + 1 < n) f.adj(i, i + 1) = 1.0;
    if (pt.paired(i)) f.adj(i, pt.partner[i]) = 1.0;
    const double deg = f.adj.row(i).sum();
    if (deg > 0.0) f.adj.row(i) /= deg;
    else f.adj(i, i) = 1.0;  // lone nucleotide
  }
  f.bpp = c.bpp->p;
  return f;
}

// ---------------------------------------------------------------------------
// Parameter containers

namespace {

std::vector<MatrixXd*> tensors(NeuralParams& p) {
  std::vector<MatrixXd*> out;
  p.visit([&](const std::string&, MatrixXd& t) { out.push_back(&t); });
  return out;
}

std::vector<const MatrixXd*> tensors(const NeuralParams& p) {
  std::vector<const MatrixXd*> out;
  p.visit([&](const std::string&, const MatrixXd& t) { out.push_back(&t); });
  return out;
}

}  // namespace

NeuralParams NeuralParams::zeros_like() const {
  NeuralParams z = *this;
  z.visit([](const std::string&, MatrixXd& t) { t.setZero(); });
  return z;
}

Eigen::Index NeuralParams::parameter_count() const {
  Eigen::Index n = 0;
  visit([&](const std::string&, const MatrixXd& t) { n += t.size(); });
  return n;
}

bool NeuralParams::all_finite() const {
  bool ok = true;
  visit([&](const std::string&, const MatrixXd& t) { ok = ok && t.allFinite(); });
  return ok;
}

double NeuralParams::squared_norm() const {
  double s = 0.0;
  visit([&](const std::string&, const MatrixXd& t) { s += t.squaredNorm(); });
  return s;
}

NeuralParams& NeuralParams::operator+=(const NeuralParams& other) {
  auto mine = tensors(*this);
  auto theirs = tensors(other);
  for (std::size_t i = 0; i < mine.size(); ++i) *mine[i] += *theirs[i];
  return *this;
}

NeuralParams& NeuralParams::operator*=(double s) {
  visit([&](const std::string&, MatrixXd& t) { t *= s; });
  return *this;
}

NeuralModel init_model(const NeuralHyperparams& hp) {
  if (hp.hidden < 1 || hp.depth < 0 || hp.recurrent_layers < 1)
    throw ValidationError("hyperparams", "need hidden >= 1, depth >= 0, recurrent_layers >= 1");
  Rng rng(hp.seed);
  auto draw = [&](Eigen::Index rows, Eigen::Index cols, Eigen::Index fan_in) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
    MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uniform(rng, -bound, bound);
    return m;
  };
  const Eigen::Index h = hp.hidden;
  NeuralModel m;
  m.hyper = hp;
  NeuralParams& p = m.params;
  p.embed_w = draw(kInputFeatures, h, kInputFeatures);
  p.embed_b = draw(1, h, kInputFeatures);
  for (int l = 0; l < hp.depth; ++l) {
    MessageLayer layer;
    layer.w_self = draw(h, h, h);
    layer.w_adj = draw(h, h, h);
    layer.w_bpp = draw(h, h, h);
    layer.bias = draw(1, h, h);
    p.message.push_back(std::move(layer));
  }
  for (int r = 0; r < hp.recurrent_layers; ++r) {
    const Eigen::Index in = r == 0 ? h : 2 * h;
    GruLayer layer;
    for (GruCell* g : {&layer.forward, &layer.backward}) {
      g->wz = draw(in, h, in);
      g->wr = draw(in, h, in);
      g->wc = draw(in, h, in);
      g->uz = draw(h, h, h);
      g->ur = draw(h, h, h);
      g->uc = draw(h, h, h);
      g->bz = draw(1, h, h);
      g->br = draw(1, h, h);
      g->bc = draw(1, h, h);
    }
    p.recurrent.push_back(std::move(layer));
  }
  p.head_w = draw(2 * h, kOutputs, 2 * h);
  p.head_b = draw(1, kOutputs, 2 * h);
  m.adam_m = p.zeros_like();
  m.adam_v = p.zeros_like();
  return m;
}

// ---------------------------------------------------------------------------
// Forward / backward

namespace {

MatrixXd sigmoid(const MatrixXd& a) { return (1.0 / (1.0 + (-a.array()).exp())).matrix(); }

/// Per-position activations of one GRU direction, stored by position.
struct GruCache {
  MatrixXd z, r, c, hprev, out;
};

void gru_forward(const GruCell& g, const MatrixXd& x, bool reverse, GruCache& cache) {
  const Eigen::Index n = x.rows(), h = g.uz.rows();
  MatrixXd xz = x * g.wz, xr = x * g.wr, xc = x * g.wc;
  xz.rowwise() += g.bz.row(0);
  xr.rowwise() += g.br.row(0);
  xc.rowwise() += g.bc.row(0);
  cache.z.resize(n, h);
  cache.r.resize(n, h);
  cache.c.resize(n, h);
  cache.hprev.resize(n, h);
  cache.out.resize(n, h);
  RowVectorXd hp = RowVectorXd::Zero(h);
  for (Eigen::Index s = 0; s < n; ++s) {
    const Eigen::Index t = reverse ? n - 1 - s : s;
    cache.hprev.row(t) = hp;
    const RowVectorXd z = sigmoid(xz.row(t) + hp * g.uz);
    const RowVectorXd r = sigmoid(xr.row(t) + hp * g.ur);
    const RowVectorXd c = (xc.row(t) + r.cwiseProduct(hp) * g.uc).array().tanh().matrix();
    hp = (1.0 - z.array()).matrix().cwiseProduct(hp) + z.cwiseProduct(c);
    cache.z.row(t) = z;
    cache.r.row(t) = r;
    cache.c.row(t) = c;
    cache.out.row(t) = hp;
  }
}

/// Accumulates parameter gradients into `grad` and input gradients into `dx`.
void gru_backward(const GruCell& g, const MatrixXd& x, bool reverse, const GruCache& cache, const MatrixXd& dout,
                  GruCell& grad, MatrixXd& dx) {
  const Eigen::Index n = x.rows(), h = g.uz.rows();
  MatrixXd daz(n, h), dar(n, h), dac(n, h);
  RowVectorXd dh_next = RowVectorXd::Zero(h);
  for (Eigen::Index s = n - 1; s >= 0; --s) {
    const Eigen::Index t = reverse ? n - 1 - s : s;
    const RowVectorXd dh = dout.row(t) + dh_next;
    const auto z = cache.z.row(t).array();
    const auto r = cache.r.row(t).array();
    const auto c = cache.c.row(t).array();
    const RowVectorXd hp = cache.hprev.row(t);

    const RowVectorXd dz = (dh.array() * (c - hp.array())).matrix();
    const RowVectorXd dc = (dh.array() * z).matrix();
    RowVectorXd dhp = (dh.array() * (1.0 - z)).matrix();

    const RowVectorXd ac = (dc.array() * (1.0 - c * c)).matrix();
    const RowVectorXd drh = ac * g.uc.transpose();
    const RowVectorXd dr = (drh.array() * hp.array()).matrix();
    dhp += (drh.array() * r).matrix();
    grad.uc.noalias() += (r * hp.array()).matrix().transpose() * ac;

    const RowVectorXd az = (dz.array() * z * (1.0 - z)).matrix();
    const RowVectorXd ar = (dr.array() * r * (1.0 - r)).matrix();
    grad.uz.noalias() += hp.transpose() * az;
    grad.ur.noalias() += hp.transpose() * ar;
    dhp.noalias() += az * g.uz.transpose() + ar * g.ur.transpose();

    daz.row(t) = az;
    dar.row(t) = ar;
    dac.row(t) = ac;
    dh_next = dhp;
  }
  grad.wz.noalias() += x.transpose() * daz;
  grad.wr.noalias() += x.transpose() * dar;
  grad.wc.noalias() += x.transpose() * dac;
  grad.bz += daz.colwise().sum();
  grad.br += dar.colwise().sum();
  grad.bc += dac.colwise().sum();
  dx.noalias() += daz * g.wz.transpose() + dar * g.wr.transpose() + dac * g.wc.transpose();
}

struct ForwardCache {
  std::vector<MatrixXd> message_in, message_pre, adj_h, bpp_h;
  std::vector<MatrixXd> recurrent_in;
  std::vector<GruCache> fwd, bwd;
  MatrixXd top;  // input to the head, n x 2h
  MatrixXd y;
};

void check_shapes(const NeuralModel& m, const FeatureTensor& f) {
  const Eigen::Index n = f.x.rows();
  if (f.x.cols() != kInputFeatures || f.adj.rows() != n || f.adj.cols() != n || f.bpp.rows() != n ||
      f.bpp.cols() != n)
    throw Error("forward: feature tensor shapes are inconsistent");
  if (m.params.embed_w.rows() != kInputFeatures || m.params.embed_w.cols() != m.hyper.hidden)
    throw Error("forward: model shapes are inconsistent with its hyperparameters");
}

void run_forward(const NeuralModel& m, const FeatureTensor& f, ForwardCache& cache) {
  check_shapes(m, f);
  const NeuralParams& p = m.params;
  MatrixXd h = f.x * p.embed_w;
  h.rowwise() += p.embed_b.row(0);
  for (const MessageLayer& layer : p.message) {
    MatrixXd ah = f.adj * h;
    MatrixXd bh = f.bpp * h;
    MatrixXd pre = h * layer.w_self + ah * layer.w_adj + bh * layer.w_bpp;
    pre.rowwise() += layer.bias.row(0);
    cache.message_in.push_back(std::move(h));
    cache.adj_h.push_back(std::move(ah));
    cache.bpp_h.push_back(std::move(bh));
    h = pre.cwiseMax(0.0);
    cache.message_pre.push_back(std::move(pre));
  }
  for (const GruLayer& layer : p.recurrent) {
    GruCache fw, bw;
    gru_forward(layer.forward, h, false, fw);
    gru_forward(layer.backward, h, true, bw);
    cache.recurrent_in.push_back(std::move(h));
    h.resize(fw.out.rows(), fw.out.cols() + bw.out.cols());
    h << fw.out, bw.out;
    cache.fwd.push_back(std::move(fw));
    cache.bwd.push_back(std::move(bw));
  }
  cache.top = std::move(h);
  cache.y = cache.top * p.head_w;
  cache.y.rowwise() += p.head_b.row(0);
}

/// d loss / d pred for loss_masked.
MatrixXd loss_gradient(const MatrixXd& pred, const Construct& c, const std::vector<DataType>& columns) {
  MatrixXd d = MatrixXd::Zero(pred.rows(), pred.cols());
  const double scale = 2.0 / (static_cast<double>(columns.size()) * c.seq_scored);
  for (DataType t : columns) {
    const auto col = index_of(t);
    d.col(col).segment(c.scored_offset, c.seq_scored) =
        scale * (pred.col(col).segment(c.scored_offset, c.seq_scored) - c.profile(t).values);
  }
  return d;
}

}  // namespace

Eigen::MatrixXd forward(const NeuralModel& m, const FeatureTensor& f) {
  ForwardCache cache;
  run_forward(m, f, cache);
  return std::move(cache.y);
}

double loss_masked(const Eigen::MatrixXd& pred, const Construct& c, const std::vector<DataType>& columns) {
  if (columns.empty()) throw Error("loss_masked: no columns");
  if (pred.cols() != kOutputs || pred.rows() < c.scored_offset + c.seq_scored)
    throw Error("loss_masked: prediction shape does not cover the scored window");
  double total = 0.0;
  for (DataType t : columns) {
    const auto diff = pred.col(index_of(t)).segment(c.scored_offset, c.seq_scored) - c.profile(t).values;
    total += diff.squaredNorm() / c.seq_scored;
  }
  return total / static_cast<double>(columns.size());
}

GradientResult gradients(const NeuralModel& m, const FeatureTensor& f, const Construct& c,
                         const std::vector<DataType>& columns) {
  ForwardCache cache;
  run_forward(m, f, cache);
  const NeuralParams& p = m.params;
  GradientResult out{loss_masked(cache.y, c, columns), p.zeros_like()};
  NeuralParams& g = out.grad;

  const MatrixXd dy = loss_gradient(cache.y, c, columns);
  g.head_w.noalias() = cache.top.transpose() * dy;
  g.head_b = dy.colwise().sum();
  MatrixXd dh = dy * p.head_w.transpose();

  const Eigen::Index h = m.hyper.hidden;
  for (std::size_t r = p.recurrent.size(); r-- > 0;) {
    const MatrixXd& in = cache.recurrent_in[r];
    MatrixXd din = MatrixXd::Zero(in.rows(), in.cols());
    gru_backward(p.recurrent[r].forward, in, false, cache.fwd[r], dh.leftCols(h), g.recurrent[r].forward, din);
    gru_backward(p.recurrent[r].backward, in, true, cache.bwd[r], dh.rightCols(h), g.recurrent[r].backward, din);
    dh = std::move(din);
  }
  for (std::size_t l = p.message.size(); l-- > 0;) {
    const MessageLayer& layer = p.message[l];
    const MatrixXd dpre = (cache.message_pre[l].array() > 0.0).select(dh.array(), 0.0).matrix();
    g.message[l].w_self.noalias() = cache.message_in[l].transpose() * dpre;
    g.message[l].w_adj.noalias() = cache.adj_h[l].transpose() * dpre;
    g.message[l].w_bpp.noalias() = cache.bpp_h[l].transpose() * dpre;
    g.message[l].bias = dpre.colwise().sum();
    dh = dpre * layer.w_self.transpose() + f.adj.transpose() * (dpre * layer.w_adj.transpose()) +
         f.bpp.transpose() * (dpre * layer.w_bpp.transpose());
  }
  g.embed_w.noalias() = f.x.transpose() * dh;
  g.embed_b = dh.colwise().sum();
  return out;
}

// ---------------------------------------------------------------------------
// Training

namespace {

std::vector<DataType> available_columns(const Construct& c, const std::vector<DataType>& wanted) {
  std::vector<DataType> out;
  for (DataType t : wanted)
    if (c.has_profile(t)) out.push_back(t);
  return out;
}

void adam_step(NeuralModel& m, const NeuralParams& grad, const TrainConfig& cfg) {
  ++m.step;
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(m.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(m.step));
  auto p = tensors(m.params);
  auto mo = tensors(m.adam_m);
  auto ve = tensors(m.adam_v);
  auto g = tensors(grad);
  for (std::size_t i = 0; i < p.size(); ++i) {
    *mo[i] = cfg.beta1 * *mo[i] + (1.0 - cfg.beta1) * *g[i];
    *ve[i] = cfg.beta2 * *ve[i] + (1.0 - cfg.beta2) * g[i]->cwiseAbs2();
    p[i]->array() -= cfg.learning_rate * (mo[i]->array() / c1) / ((ve[i]->array() / c2).sqrt() + cfg.adam_eps);
  }
}

}  // namespace

double mean_loss(const NeuralModel& m, const Dataset& data, const std::vector<DataType>& columns) {
  std::vector<double> losses(data.size(), 0.0);
  std::vector<char> used(data.size(), 0);
  parallel_for(data.size(), [&](std::size_t i) {
    const auto cols = available_columns(data[i], columns);
    if (cols.empty()) return;
    losses[i] = loss_masked(forward(m, build_features(data[i])), data[i], cols);
    used[i] = 1;
  });
  double total = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (used[i]) {
      total += losses[i];
      ++count;
    }
  if (count == 0) throw Error("mean_loss: no construct carries any requested column");
  return total / static_cast<double>(count);
}

TrainHistory train(NeuralModel& m, const Dataset& train_set, const Dataset& validation_set, const TrainConfig& cfg) {
  if (train_set.empty()) throw Error("train: empty training set");
  if (cfg.batch_size < 1 || cfg.epochs < 0) throw Error("train: batch_size must be >= 1 and epochs >= 0");
  Dataset pool = train_set;
  if (cfg.reverse_augment)
    for (const Construct& c : train_set) pool.push_back(reverse_augment(c));

  std::vector<double> weight(pool.size(), 1.0);
  std::vector<std::vector<DataType>> cols(pool.size());
  for (std::size_t i = 0; i < pool.size(); ++i) {
    cols[i] = available_columns(pool[i], cfg.columns);
    if (cols[i].empty()) weight[i] = 0.0;
    else if (cfg.sn_weight_cap > 0.0)
      weight[i] = std::clamp(pool[i].signal_to_noise, 0.0, cfg.sn_weight_cap) / cfg.sn_weight_cap;
  }

  TrainHistory history;
  Rng rng(cfg.shuffle_seed);
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(cfg.batch_size);
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    shuffle(order, rng);
    for (std::size_t start = 0; start < order.size(); start += batch) {
      const std::size_t count = std::min(batch, order.size() - start);
      std::vector<GradientResult> results(count);
      parallel_for(count, [&](std::size_t b) {
        const std::size_t i = order[start + b];
        if (weight[i] > 0.0) results[b] = gradients(m, build_features(pool[i]), pool[i], cols[i]);
      });
      NeuralParams total = m.params.zeros_like();
      double total_weight = 0.0;
      for (std::size_t b = 0; b < count; ++b) {
        const std::size_t i = order[start + b];
        if (weight[i] <= 0.0) continue;
        if (!std::isfinite(results[b].loss))
          throw TrainingDivergedError("non-finite loss at epoch " + std::to_string(epoch) + " on construct " +
                                      pool[i].id);
        results[b].grad *= weight[i];
        total += results[b].grad;
        total_weight += weight[i];
      }
      if (total_weight <= 0.0) continue;
      total *= 1.0 / total_weight;
      const double norm = std::sqrt(total.squared_norm());
      if (!std::isfinite(norm)) throw TrainingDivergedError("non-finite gradient at epoch " + std::to_string(epoch));
      if (norm > cfg.clip_norm) total *= cfg.clip_norm / norm;
      adam_step(m, total, cfg);
      if (!m.params.all_finite())
        throw TrainingDivergedError("non-finite parameters after step " + std::to_string(m.step));
    }
    history.train_loss.push_back(mean_loss(m, train_set, cfg.columns));
    if (!std::isfinite(history.train_loss.back()))
      throw TrainingDivergedError("non-finite training loss after epoch " + std::to_string(epoch));
    if (!validation_set.empty()) history.validation_loss.push_back(mean_loss(m, validation_set, cfg.columns));
  }
  return history;
}

PredictionSet predict_neural(const NeuralModel& m, const Dataset& data, const std::string& model_name) {
  std::vector<MatrixXd> outputs(data.size());
  parallel_for(data.size(), [&](std::size_t i) { outputs[i] = forward(m, build_features(data[i])); });
  PredictionSet preds;
  preds.model_name = model_name;
  for (std::size_t i = 0; i < data.size(); ++i)
    for (DataType t : kAllDataTypes) preds.entries[data[i].id][t] = outputs[i].col(index_of(t));
  return preds;
}

Dataset pseudo_label_augment(const NeuralModel& m, const Dataset& unlabeled) {
  Dataset out;
  out.reserve(unlabeled.size());
  for (const Construct& src : unlabeled) {
    if (src.structure.size() != src.sequence.size())
      throw ValidationError("structure", "construct " + src.id + " has no structure for pseudo-labeling");
    const MatrixXd y = forward(m, build_features(src));
    Construct c = src;
    c.seq_scored = c.seq_length;
    c.scored_offset = 0;
    c.synthetic = true;
    c.profiles.clear();
    for (DataType t : kAllDataTypes) c.profiles[t] = Profile{y.col(index_of(t)), Eigen::VectorXd()};
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<std::string> random_sequences(std::size_t count, std::size_t length, std::uint64_t seed) {
  if (length < 1) throw Error("random_sequences: length must be >= 1");
  Rng rng(seed);
  std::vector<std::string> out(count, std::string(length, 'A'));
  for (auto& s : out)
    for (char& ch : s) ch = kBaseAlphabet[uniform_index(rng, 4)];
  return out;
}

std::string to_fasta(const std::vector<std::string>& sequences, const std::string& prefix) {
  std::string out;
  for (std::size_t i = 0; i < sequences.size(); ++i) {
    out += '>' + prefix + '_' + std::to_string(i) + '\n';
    for (std::size_t k = 0; k < sequences[i].size(); k += 80) out += sequences[i].substr(k, 80) + '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

namespace {

nlohmann::json tensors_to_json(const NeuralParams& p) {
  nlohmann::json j = nlohmann::json::object();
  p.visit([&](const std::string& name, const MatrixXd& t) {
    std::vector<double> data;
    data.reserve(static_cast<std::size_t>(t.size()));
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) data.push_back(t(r, c));
    j[name] = {{"shape", {t.rows(), t.cols()}}, {"data", std::move(data)}};
  });
  return j;
}

void tensors_from_json(const nlohmann::json& j, NeuralParams& p) {
  p.visit([&](const std::string& name, MatrixXd& t) {
    if (!j.contains(name)) throw ValidationError(name, "missing tensor in checkpoint");
    const auto& e = j.at(name);
    const auto shape = e.at("shape").get<std::vector<Eigen::Index>>();
    const auto data = e.at("data").get<std::vector<double>>();
    if (shape.size() != 2 || shape[0] != t.rows() || shape[1] != t.cols() ||
        data.size() != static_cast<std::size_t>(t.size()))
      throw ValidationError(name, "tensor shape does not match hyperparameters");
    std::size_t k = 0;
    for (Eigen::Index r = 0; r < t.rows(); ++r)
      for (Eigen::Index c = 0; c < t.cols(); ++c) t(r, c) = data[k++];
  });
}

}  // namespace

std::string neural_model_to_json(const NeuralModel& m) {
  nlohmann::json j;
  j["format"] = "degkit-neural-1";
  j["hyperparams"] = {{"hidden", m.hyper.hidden},
                      {"depth", m.hyper.depth},
                      {"recurrent_layers", m.hyper.recurrent_layers},
                      {"seed", m.hyper.seed}};
  j["step"] = m.step;
  j["params"] = tensors_to_json(m.params);
  j["adam_m"] = tensors_to_json(m.adam_m);
  j["adam_v"] = tensors_to_json(m.adam_v);
  return j.dump();
}

NeuralModel neural_model_from_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "degkit-neural-1") throw ValidationError("format", "unknown checkpoint format");
    NeuralHyperparams hp;
    const auto& h = j.at("hyperparams");
    hp.hidden = h.at("hidden").get<int>();
    hp.depth = h.at("depth").get<int>();
    hp.recurrent_layers = h.at("recurrent_layers").get<int>();
    hp.seed = h.at("seed").get<std::uint64_t>();
    NeuralModel m = init_model(hp);
    m.step = j.at("step").get<long>();
    tensors_from_json(j.at("params"), m.params);
    if (j.contains("adam_m")) tensors_from_json(j.at("adam_m"), m.adam_m);
    if (j.contains("adam_v")) tensors_from_json(j.at("adam_v"), m.adam_v);
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("neural checkpoint: ") + e.what(), 0);
  }
}

void save_neural_model(const NeuralModel& m, const std::filesystem::path& path) {
  write_file_atomic(path, neural_model_to_json(m) + "\n");
}

NeuralModel load_neural_model(const std::filesystem::path& path) { return neural_model_from_json(read_file(path)); }

}  // namespace degkit
