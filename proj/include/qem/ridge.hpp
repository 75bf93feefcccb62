#pragma once

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <stdexcept>
#include <vector>

#include "qem/errors.hpp"

namespace qem {

// Closed-form ridge regression from descriptor vectors to labels. Features
// and labels are centered before solving so the intercept is unpenalized;
// as lambda grows the weights shrink to zero and predictions collapse to the
// train-label mean.
struct RidgeModel {
  std::vector<double> w;
  double b = 0.0;
};

inline RidgeModel ridge_fit(const std::vector<std::vector<double>>& X,
                            const std::vector<double>& y, double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ridge lambda must be positive");
  if (X.empty() || X.size() != y.size())
    throw std::invalid_argument("ridge needs matching, nonempty X and y");
  const int n = static_cast<int>(X.size());
  const int d = static_cast<int>(X[0].size());
  if (d == 0) throw std::invalid_argument("ridge needs at least one feature");

  Eigen::MatrixXd M(n, d);
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) {
    if (static_cast<int>(X[i].size()) != d)
      throw std::invalid_argument("ragged ridge design matrix");
    for (int j = 0; j < d; ++j) M(i, j) = X[i][j];
    v(i) = y[i];
  }
  if (!M.allFinite() || !v.allFinite())
    throw NumericError("non-finite value in ridge inputs");

  const Eigen::RowVectorXd xbar = M.colwise().mean();
  const double ybar = v.mean();
  M.rowwise() -= xbar;
  v.array() -= ybar;

  Eigen::MatrixXd G = M.transpose() * M;
  G.diagonal().array() += lambda;
  const Eigen::VectorXd w = G.ldlt().solve(M.transpose() * v);

  RidgeModel model;
  model.w.assign(w.data(), w.data() + d);
  model.b = ybar - xbar.dot(w);
  return model;
}

inline double ridge_predict(const RidgeModel& m, const std::vector<double>& x) {
  if (x.size() != m.w.size())
    throw std::invalid_argument("ridge feature length mismatch");
  double acc = m.b;
  for (size_t i = 0; i < x.size(); ++i) acc += m.w[i] * x[i];
  return acc;
}

}  // namespace qem
