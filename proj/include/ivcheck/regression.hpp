#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>
#include <vector>

#include "ivcheck/dataset.hpp"
#include "ivcheck/errors.hpp"

namespace ivcheck {

struct LinearFit {
  double intercept = 0.0;
  Vec coefficients;  // one per design column, intercept excluded
  std::vector<std::string> column_labels;
  Vec fitted;
  Vec residuals;
  double condition = 0.0;  // |R11/Rpp| from the pivoted QR, condition estimate
};

// Columns v^1 .. v^k. No constant column; fitters add the intercept themselves.
inline Mat poly_basis(const Vec& v, int degree) {
  if (degree < 1) throw ConfigError("poly_basis degree must be >= 1");
  Mat b(v.size(), degree);
  b.col(0) = v;
  for (int j = 1; j < degree; ++j) b.col(j) = b.col(j - 1).cwiseProduct(v);
  return b;
}

// Least squares of target on [1, design] via column-pivoted Householder QR.
// Polynomial bases get ill-conditioned quickly; the pivoted QR keeps the solve
// stable and exposes near-rank-deficiency through the R diagonal.
inline LinearFit ols_fit(const Mat& design, const Vec& target,
                         std::vector<std::string> labels = {}) {
  const Eigen::Index n = design.rows();
  const Eigen::Index p = design.cols();
  if (target.size() != n) throw ConfigError("ols_fit: design and target lengths differ");
  if (n <= p + 1) {
    throw StatError("ols_fit: needs more than " + std::to_string(p + 1) + " rows, got " +
                    std::to_string(n));
  }

  Mat a(n, p + 1);
  a.col(0).setOnes();
  if (p > 0) a.rightCols(p) = design;

  Eigen::ColPivHouseholderQR<Mat> qr(a);
  const Vec rdiag = qr.matrixR().diagonal().cwiseAbs();
  const double rmax = rdiag.maxCoeff();
  const double rmin = rdiag.minCoeff();
  const double cond = (rmin > 0.0) ? rmax / rmin : std::numeric_limits<double>::infinity();
  if (!(cond < 1e12)) {
    throw StatError("ols_fit: singular design (condition estimate " + std::to_string(cond) + ")");
  }

  const Vec beta = qr.solve(target);
  LinearFit fit;
  fit.intercept = beta[0];
  fit.coefficients = beta.tail(p);
  fit.column_labels = std::move(labels);
  fit.fitted = a * beta;
  fit.residuals = target - fit.fitted;
  fit.condition = cond;
  return fit;
}

inline Vec ols_predict(const LinearFit& fit, const Mat& design) {
  if (design.cols() != fit.coefficients.size()) {
    throw ConfigError("ols_predict: design width does not match fit");
  }
  return (design * fit.coefficients).array() + fit.intercept;
}

inline double sample_sd(const Vec& v) {
  const Eigen::Index n = v.size();
  if (n < 2) return 0.0;
  const double m = v.mean();
  return std::sqrt((v.array() - m).square().sum() / static_cast<double>(n - 1));
}

inline double correlation(const Vec& a, const Vec& b) {
  if (a.size() != b.size() || a.size() < 2) {
    throw ConfigError("correlation: inputs must share length >= 2");
  }
  const Vec da = a.array() - a.mean();
  const Vec db = b.array() - b.mean();
  const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (denom == 0.0) return 0.0;
  return da.dot(db) / denom;
}

}  // namespace ivcheck
