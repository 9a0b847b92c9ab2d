// Windowed linear degradation model: per-position prediction is a linear
// function of one-hot nucleotide and loop-type indicators at every offset in
// [-w, +w], plus an intercept.
#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "degkit/types.hpp"

namespace degkit {

/// Indicator order within one window offset: 4 bases, then 6 loop labels.
/// X shares the E indicator.
inline constexpr std::string_view kLinearLabelOrder = "ACGUHEIMBS";
inline constexpr int kIndicatorsPerOffset = 10;
inline constexpr int kDefaultWindow = 12;
inline constexpr double kDefaultRidgeLambda = 0.1;

inline constexpr Eigen::Index linear_feature_count(int w) {
  return static_cast<Eigen::Index>(2 * w + 1) * kIndicatorsPerOffset + 1;
}

struct LinearModel {
  int w = kDefaultWindow;
  DataType target = DataType::kDegMgPH10;
  Eigen::VectorXd beta;  // length linear_feature_count(w); intercept last
};

class RankDeficientError : public Error {
 public:
  using Error::Error;
};

/// Feature vector for position k: indicators for offsets -w..w in order, then
/// a trailing 1. Offsets outside the molecule are all zero.
Eigen::VectorXd featurize_window(const Construct& c, int k, int w);

/// Ridge solution from precomputed X^T X and X^T y. Rank is judged on the
/// unit-diagonal (Jacobi scaled) system so the test is independent of feature
/// scale and of lambda.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> ridge_solve_normal(
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> gram,
    const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& xty, Scalar lambda, Eigen::Index unpenalized = -1) {
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (lambda < Scalar(0)) throw Error("ridge lambda must be nonnegative");
  for (Eigen::Index i = 0; i < gram.rows(); ++i)
    if (i != unpenalized) gram(i, i) += lambda;
  const Vec diag = gram.diagonal();
  if (gram.rows() == 0 || diag.minCoeff() <= Scalar(0))
    throw RankDeficientError("normal equations are rank deficient (an unused feature); use a ridge lambda > 0");
  const Vec scale = diag.cwiseSqrt().cwiseInverse();
  gram = scale.asDiagonal() * gram * scale.asDiagonal();
  Eigen::LDLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> ldlt(gram);
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= Scalar(1e-11))
    throw RankDeficientError("normal equations are rank deficient; use a ridge lambda > 0");
  return scale.asDiagonal() * ldlt.solve((scale.asDiagonal() * xty).eval());
}

/// Ridge solution of min |y - X b|^2 + lambda |b|^2 with the column
/// `unpenalized` (the intercept) excluded from the penalty. Solved through
/// the normal equations with an LDLT factorization.
template <typename DerivedX, typename DerivedY>
Eigen::Matrix<typename DerivedX::Scalar, Eigen::Dynamic, 1> ridge_solve(
    const Eigen::MatrixBase<DerivedX>& X, const Eigen::MatrixBase<DerivedY>& y,
    typename DerivedX::Scalar lambda, Eigen::Index unpenalized = -1) {
  using Scalar = typename DerivedX::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Mat gram = Mat::Zero(X.cols(), X.cols());
  gram.template selfadjointView<Eigen::Lower>().rankUpdate(X.transpose());
  gram = gram.template selfadjointView<Eigen::Lower>();
  return ridge_solve_normal(gram, (X.transpose() * y).eval(), lambda, unpenalized);
}

/// Fits one model per data type on the scored positions of `data`.
LinearModel train_ridge(const Dataset& data, DataType target, int w = kDefaultWindow,
                        double lambda = kDefaultRidgeLambda);

/// Prediction for every position of the construct (length seq_length).
Eigen::VectorXd predict_linear(const LinearModel& m, const Construct& c);

/// JSON model file with "w", "target", "beta" and "label_order".
void save_linear_model(const LinearModel& m, const std::filesystem::path& path);
LinearModel load_linear_model(const std::filesystem::path& path);
std::string linear_model_to_json(const LinearModel& m);

/// One model per target in a single file: a lone model is written as a plain
/// model object, several as a JSON array of them. Loading accepts either.
void save_linear_models(const std::vector<LinearModel>& models, const std::filesystem::path& path);
std::vector<LinearModel> load_linear_models(const std::filesystem::path& path);
LinearModel linear_model_from_json(const std::string& text);

}  // namespace degkit
