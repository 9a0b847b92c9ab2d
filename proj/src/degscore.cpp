#include "degkit/degscore.hpp"

#include <json.hpp>

#include "degkit/io.hpp"

namespace degkit {

namespace {

int base_slot(char base) {
  switch (base) {
    case 'A': return 0;
    case 'C': return 1;
    case 'G': return 2;
    case 'U': return 3;
    default: return -1;
  }
}

int loop_slot(char label) {
  switch (label) {
    case 'H': return 4;
    case 'E':
    case 'X': return 5;
    case 'I': return 6;
    case 'M': return 7;
    case 'B': return 8;
    case 'S': return 9;
    default: return -1;
  }
}

/// Active (value 1) feature indices for position k, intercept included.
template <typename Fn>
void for_each_active(const Construct& c, int k, int w, Fn&& fn) {
  for (int off = -w; off <= w; ++off) {
    const int pos = k + off;
    if (pos < 0 || pos >= c.seq_length) continue;
    const int base = (off + w) * kIndicatorsPerOffset;
    if (int s = base_slot(c.sequence[pos]); s >= 0) fn(base + s);
    if (int s = loop_slot(c.loop_string[pos]); s >= 0) fn(base + s);
  }
  fn(static_cast<int>(linear_feature_count(w)) - 1);
}

}  // namespace

Eigen::VectorXd featurize_window(const Construct& c, int k, int w) {
  if (k < 0 || k >= c.seq_length) throw Error("position " + std::to_string(k) + " out of range");
  if (w < 0) throw Error("window half-width must be nonnegative");
  Eigen::VectorXd x = Eigen::VectorXd::Zero(linear_feature_count(w));
  for_each_active(c, k, w, [&](int idx) { x[idx] = 1.0; });
  return x;
}

LinearModel train_ridge(const Dataset& data, DataType target, int w, double lambda) {
  if (data.empty()) throw Error("train_ridge: empty training set");
  if (w < 0) throw Error("window half-width must be nonnegative");
  const Eigen::Index p = linear_feature_count(w);
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(p);
  std::vector<int> active;
  active.reserve(2 * (2 * w + 1) + 1);
  for (const Construct& c : data) {
    const Profile& prof = c.profile(target);
    for (int j = 0; j < c.seq_scored; ++j) {
      const double y = prof.values[j];
      active.clear();
      for_each_active(c, c.scored_offset + j, w, [&](int idx) { active.push_back(idx); });
      for (int a : active) {
        xty[a] += y;
        for (int b : active) gram(a, b) += 1.0;
      }
    }
  }
  LinearModel m;
  m.w = w;
  m.target = target;
  m.beta = ridge_solve_normal<double>(std::move(gram), xty, lambda, p - 1);
  return m;
}

Eigen::VectorXd predict_linear(const LinearModel& m, const Construct& c) {
  if (m.beta.size() != linear_feature_count(m.w)) throw Error("linear model has inconsistent coefficient count");
  Eigen::VectorXd y(c.seq_length);
  for (int k = 0; k < c.seq_length; ++k) {
    double acc = 0.0;
    for_each_active(c, k, m.w, [&](int idx) { acc += m.beta[idx]; });
    y[k] = acc;
  }
  return y;
}

std::string linear_model_to_json(const LinearModel& m) {
  nlohmann::json j;
  j["w"] = m.w;
  j["target"] = std::string(to_string(m.target));
  j["label_order"] = std::string(kLinearLabelOrder);
  j["beta"] = std::vector<double>(m.beta.data(), m.beta.data() + m.beta.size());
  return j.dump(1);
}

LinearModel linear_model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("linear model: ") + e.what(), 0);
  }
  try {
    LinearModel m;
    m.w = j.at("w").get<int>();
    m.target = parse_data_type(j.at("target").get<std::string>());
    if (j.at("label_order").get<std::string>() != kLinearLabelOrder)
      throw ValidationError("label_order", "unsupported indicator ordering");
    auto beta = j.at("beta").get<std::vector<double>>();
    m.beta = Eigen::Map<Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    if (m.w < 0 || m.beta.size() != linear_feature_count(m.w))
      throw ValidationError("beta", "expected " + std::to_string(linear_feature_count(m.w)) + " coefficients");
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("linear model", e.what());
  }
}

void save_linear_model(const LinearModel& m, const std::filesystem::path& path) {
  write_file_atomic(path, linear_model_to_json(m) + "\n");
}

LinearModel load_linear_model(const std::filesystem::path& path) { return linear_model_from_json(read_file(path)); }

void save_linear_models(const std::vector<LinearModel>& models, const std::filesystem::path& path) {
  if (models.empty()) throw Error("no linear models to save");
  if (models.size() == 1) return save_linear_model(models.front(), path);
  std::string text = "[\n";
  for (std::size_t i = 0; i < models.size(); ++i) text += linear_model_to_json(models[i]) + (i + 1 < models.size() ? ",\n" : "\n");
  write_file_atomic(path, text + "]\n");
}

std::vector<LinearModel> load_linear_models(const std::filesystem::path& path) {
  const std::string text = read_file(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("linear model: ") + e.what(), 0);
  }
  if (!j.is_array()) return {linear_model_from_json(text)};
  std::vector<LinearModel> out;
  for (const auto& item : j) out.push_back(linear_model_from_json(item.dump()));
  return out;
}

}  // namespace degkit
