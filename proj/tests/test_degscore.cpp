#include <doctest.h>

#include <cmath>

#include "degkit/degscore.hpp"
#include "degkit/io.hpp"
#include "fixtures.hpp"
#include "test_support.hpp"

using namespace degkit;

namespace {

// Index of indicator `label` at window offset `off` for half-width w.
Eigen::Index slot(int w, int off, char label) {
  return static_cast<Eigen::Index>(off + w) * kIndicatorsPerOffset +
         static_cast<Eigen::Index>(kLinearLabelOrder.find(label));
}

double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

}  // namespace

TEST_CASE("feature vector lengths") {
  Construct c = fixture::make_construct("a", "GGGAAACCC", "(((...)))");
  CHECK(featurize_window(c, 4, 12).size() == 251);
  CHECK(linear_feature_count(12) == 251);
  CHECK(featurize_window(c, 4, 1).size() == 31);
  CHECK_THROWS_AS(featurize_window(c, 9, 1), Error);
  CHECK_THROWS_AS(featurize_window(c, -1, 1), Error);
}

TEST_CASE("boundary offsets are zero padded") {
  Construct c = fixture::make_construct("a", "GGGAAACCC", "(((...)))");
  const Eigen::VectorXd f = featurize_window(c, 0, 1);
  CHECK(f.head(10).isZero());
  CHECK(f[slot(1, 0, 'G')] == 1.0);
  CHECK(f[slot(1, 0, 'S')] == 1.0);
  CHECK(f[slot(1, 1, 'G')] == 1.0);
  CHECK(f[30] == 1.0);
  CHECK(f.sum() == 5.0);
}

TEST_CASE("X shares the E indicator") {
  Construct c = fixture::make_construct("a", "GGAACCAAGGAACC", "((..))..((..))");
  REQUIRE(c.loop_string[6] == 'X');
  const Eigen::VectorXd f = featurize_window(c, 6, 0);
  CHECK(f[slot(0, 0, 'E')] == 1.0);
}

TEST_CASE("property: one sequence and one structure indicator per in-range offset") {
  Rng rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 1 + static_cast<int>(uniform_index(rng, 30));
    Construct c = fixture::make_construct("p", fixture::random_sequence(n, rng), fixture::random_structure(n, rng));
    const int w = static_cast<int>(uniform_index(rng, 6));
    for (int k = 0; k < n; ++k) {
      const Eigen::VectorXd f = featurize_window(c, k, w);
      CHECK(f[f.size() - 1] == 1.0);
      for (int off = -w; off <= w; ++off) {
        const auto block = f.segment(static_cast<Eigen::Index>(off + w) * kIndicatorsPerOffset, kIndicatorsPerOffset);
        const bool inside = k + off >= 0 && k + off < n;
        CHECK(block.head(4).sum() == (inside ? 1.0 : 0.0));
        CHECK(block.tail(6).sum() == (inside ? 1.0 : 0.0));
      }
    }
  }
}

TEST_CASE("property: features ignore nucleotides outside the window") {
  Rng rng(32);
  for (int trial = 0; trial < 50; ++trial) {
    const int w = 1 + static_cast<int>(uniform_index(rng, 4));
    const int n = w + 3 + static_cast<int>(uniform_index(rng, 20));
    Construct c = fixture::make_construct("p", fixture::random_sequence(n, rng), fixture::random_structure(n, rng));
    const int k = static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(n - w - 1)));
    Construct d = c;
    d.sequence[k + w + 1] = d.sequence[k + w + 1] == 'A' ? 'C' : 'A';
    CHECK(featurize_window(c, k, w) == featurize_window(d, k, w));
  }
}

TEST_CASE("ridge_solve recovers a planted coefficient vector at lambda 0") {
  Rng rng(33);
  Eigen::MatrixXd X(200, 31);
  for (auto& v : X.reshaped()) v = standard_normal(rng);
  X.col(30).setOnes();
  Eigen::VectorXd beta(31);
  for (auto& v : beta) v = standard_normal(rng);
  const Eigen::VectorXd y = X * beta;
  const Eigen::VectorXd got = ridge_solve(X, y, 0.0, 30);
  CHECK((got - beta).cwiseAbs().maxCoeff() < 1e-8);
  // float instantiation of the same solver
  const Eigen::VectorXf gotf = ridge_solve(X.cast<float>(), y.cast<float>(), 0.0f, 30);
  CHECK((gotf.cast<double>() - beta).cwiseAbs().maxCoeff() < 1e-2);
}

TEST_CASE("indicator design at lambda 0 is rank deficient") {
  Dataset d = fixture::loop_dataset(10, 30, 30, 34);
  CHECK_THROWS_AS(train_ridge(d, DataType::kReactivity, 2, 0.0), RankDeficientError);
  try {
    train_ridge(d, DataType::kReactivity, 2, 0.0);
  } catch (const RankDeficientError& e) {
    CHECK(std::string(e.what()).find("lambda > 0") != std::string::npos);
  }
}

TEST_CASE("huge lambda shrinks to the mean") {
  Dataset d = fixture::loop_dataset(10, 30, 20, 35);
  const LinearModel m = train_ridge(d, DataType::kDegMgPH10, 3, 1e12);
  double sum = 0;
  long count = 0;
  for (const Construct& c : d) {
    sum += c.profile(DataType::kDegMgPH10).values.sum();
    count += c.seq_scored;
  }
  const Eigen::Index p = m.beta.size();
  CHECK(m.beta.head(p - 1).cwiseAbs().maxCoeff() < 1e-6);
  CHECK(std::fabs(m.beta[p - 1] - sum / static_cast<double>(count)) < 1e-6);
}

TEST_CASE("training errors") {
  CHECK_THROWS_AS(train_ridge({}, DataType::kReactivity, 12, 0.1), Error);
  Dataset d = fixture::loop_dataset(2, 20, 20, 36);
  d[1].profiles.erase(DataType::kDeg50C);
  CHECK_THROWS_AS(train_ridge(d, DataType::kDeg50C, 2, 0.1), Error);
  CHECK_THROWS_AS(train_ridge(d, DataType::kReactivity, 2, -1.0), Error);
}

TEST_CASE("predict_linear examples") {
  const Construct c = fixture::make_construct("a", "GAC", "...", 3);

  SUBCASE("intercept only") {
    LinearModel m{2, DataType::kReactivity, Eigen::VectorXd::Zero(linear_feature_count(2))};
    m.beta[m.beta.size() - 1] = 0.7;
    CHECK(predict_linear(m, c).isApproxToConstant(0.7));
  }
  SUBCASE("hand-built w=1 model on a 3-nt construct") {
    // Three weighted indicators plus the intercept.
    LinearModel m{1, DataType::kReactivity, Eigen::VectorXd::Zero(31)};
    m.beta[slot(1, 0, 'G')] = 2.0;
    m.beta[slot(1, 1, 'A')] = -0.5;
    m.beta[slot(1, -1, 'E')] = 0.25;
    m.beta[30] = 0.1;
    const Eigen::VectorXd y = predict_linear(m, c);
    // k=0: G here, A at +1, offset -1 padded
    CHECK(y[0] == doctest::Approx(2.0 - 0.5 + 0.1));
    // k=1: A here, C at +1, E at -1
    CHECK(y[1] == doctest::Approx(0.25 + 0.1));
    // k=2: C here, +1 padded, E at -1
    CHECK(y[2] == doctest::Approx(0.25 + 0.1));
  }
  SUBCASE("profiles do not affect predictions") {
    Dataset d = fixture::loop_dataset(5, 30, 20, 37);
    const LinearModel m = train_ridge(d, DataType::kReactivity, 3, 0.1);
    Construct e = d[0];
    const Eigen::VectorXd before = predict_linear(m, e);
    e.profiles.clear();
    CHECK(predict_linear(m, e) == before);
  }
}

TEST_CASE("training RMSE is no worse than the mean predictor") {
  for (std::uint64_t seed : {40, 41, 42}) {
    Dataset d = fixture::loop_dataset(20, 40, 30, seed, 0.2);
    const LinearModel m = train_ridge(d, DataType::kDegMg50C, 4, 1e-6);
    Eigen::VectorXd y(600), yhat(600);
    Eigen::Index at = 0;
    for (const Construct& c : d) {
      const Eigen::VectorXd p = predict_linear(m, c);
      y.segment(at, 30) = c.profile(DataType::kDegMg50C).values;
      yhat.segment(at, 30) = p.head(30);
      at += 30;
    }
    const Eigen::VectorXd mean = Eigen::VectorXd::Constant(600, y.mean());
    CHECK(rmse(y, yhat) <= rmse(y, mean));
    // loop context explains most of the variance in this fixture
    CHECK(rmse(y, yhat) < 0.5 * rmse(y, mean));
  }
}

TEST_CASE("model file round trip") {
  Dataset d = fixture::loop_dataset(5, 30, 20, 38);
  const LinearModel m = train_ridge(d, DataType::kDegPH10, 12, 0.1);
  CHECK(m.beta.size() == 251);
  degkit::testing::TempDir dir;
  save_linear_model(m, dir / "m.json");
  const LinearModel back = load_linear_model(dir / "m.json");
  CHECK(back.w == 12);
  CHECK(back.target == DataType::kDegPH10);
  CHECK(back.beta == m.beta);
  const std::string text = read_file(dir / "m.json");
  CHECK(text.find("\"label_order\"") != std::string::npos);
  CHECK(text.find("ACGUHEIMBS") != std::string::npos);
  CHECK_THROWS_AS(linear_model_from_json("{\"w\": 1, \"target\": \"reactivity\", \"beta\": [1, 2]}"), Error);
}
