#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <string>

#include "ivcheck/dataset.hpp"
#include "ivcheck/errors.hpp"
#include "ivcheck/regression.hpp"

namespace ivcheck {

enum class EffectMethod { Tsls, ControlFunction };

struct EstimatorConfig {
  int instrument_basis_degree = 3;  // k: Z powers in stage 1
  int treatment_basis_degree = 2;   // d: X powers in stage 2
};

// The estimated structural effect h(x, w) = intercept + sum_j x_coefficients[j] * x^j
// + w . w_coefficients. The first-stage residual never enters h.
struct FittedEffect {
  EffectMethod method = EffectMethod::Tsls;
  int x_basis_degree = 1;           // d actually used
  int instrument_basis_degree = 1;  // k actually used
  double intercept = 0.0;
  Vec x_coefficients;  // length x_basis_degree
  Vec w_coefficients;  // length q
  // Diagnostics.
  double first_stage_strength = 0.0;  // F-like statistic from the partial correlation
  double partial_correlation = 0.0;
  double residual_variance = 0.0;   // variance of Y - h(X, W)
  double control_coefficient = 0.0; // ControlFunction only: stage-2 weight on e1
};

namespace detail {

inline bool is_binary(const Vec& v) {
  bool has_first = false, has_second = false;
  double v0 = 0.0, v1 = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double t = v[i];
    if (!has_first) {
      v0 = t;
      has_first = true;
    } else if (t != v0 && !has_second) {
      v1 = t;
      has_second = true;
    } else if (t != v0 && t != v1) {
      return false;
    }
  }
  return has_second;
}

// Relevance diagnostic: correlation between Z and X after both are purged of W
// by linear regression (plain correlation when there are no covariates).
inline double partial_correlation_zx(const Vec& x, const Vec& z, const Mat& w) {
  if (w.cols() == 0) return correlation(z, x);
  const LinearFit fx = ols_fit(w, x);
  const LinearFit fz = ols_fit(w, z);
  return correlation(fz.residuals, fx.residuals);
}

inline const Vec candidate_column(const Dataset& d, Eigen::Index z_index) {
  if (z_index < 0 || z_index >= d.z.cols()) {
    throw ConfigError("candidate index " + std::to_string(z_index) + " out of range");
  }
  return d.z.col(z_index);
}

constexpr double kWeakInstrumentThreshold = 0.02;

inline double check_relevance(const Vec& x, const Vec& z, const Mat& w) {
  const double pc = partial_correlation_zx(x, z, w);
  if (std::abs(pc) < kWeakInstrumentThreshold) {
    throw StatError("weak or irrelevant instrument: |partial corr(Z, X)| = " +
                    std::to_string(std::abs(pc)) + " < " +
                    std::to_string(kWeakInstrumentThreshold));
  }
  return pc;
}

}  // namespace detail

inline Vec predict_effect(const FittedEffect& h, const Vec& x, const Mat& w) {
  if (w.cols() != h.w_coefficients.size()) {
    throw ConfigError("predict_effect: covariate width does not match fit");
  }
  if (w.cols() > 0 && w.rows() != x.size()) {
    throw ConfigError("predict_effect: x and w row counts differ");
  }
  Vec out = Vec::Constant(x.size(), h.intercept);
  Vec pw = x;
  for (int j = 0; j < h.x_basis_degree; ++j) {
    out += h.x_coefficients[j] * pw;
    if (j + 1 < h.x_basis_degree) pw = pw.cwiseProduct(x);
  }
  if (w.cols() > 0) out += w * h.w_coefficients;
  return out;
}

// Two-stage least squares for the constant-effect branch. Stage 1 projects X on
// [Z, W]; stage 2 regresses Y on [X_hat, W]. With no covariates and one
// instrument the X coefficient reduces to cov(Z,Y)/cov(Z,X).
inline FittedEffect tsls_fit(const Dataset& d, Eigen::Index z_index) {
  const Vec z = detail::candidate_column(d, z_index);
  const Eigen::Index n = d.n();
  const Eigen::Index q = d.w.cols();
  if (n <= q + 3) throw StatError("tsls_fit: too few rows for " + std::to_string(q) + " covariates");

  FittedEffect fit;
  fit.method = EffectMethod::Tsls;
  fit.partial_correlation = detail::check_relevance(d.x, z, d.w);
  fit.first_stage_strength = fit.partial_correlation * fit.partial_correlation /
                             (1.0 - fit.partial_correlation * fit.partial_correlation) *
                             static_cast<double>(n - q - 2);

  Mat stage1(n, 1 + q);
  stage1.col(0) = z;
  if (q > 0) stage1.rightCols(q) = d.w;
  const LinearFit first = ols_fit(stage1, d.x);
  const Vec x_hat = first.fitted;

  Mat stage2(n, 1 + q);
  stage2.col(0) = x_hat;
  if (q > 0) stage2.rightCols(q) = d.w;
  const LinearFit second = ols_fit(stage2, d.y);

  fit.x_basis_degree = 1;
  fit.instrument_basis_degree = 1;
  fit.intercept = second.intercept;
  fit.x_coefficients = second.coefficients.head(1);
  fit.w_coefficients = second.coefficients.tail(q);
  const Vec aux = d.y - predict_effect(fit, d.x, d.w);
  fit.residual_variance = sample_sd(aux) * sample_sd(aux);
  return fit;
}

// Control-function estimator for non-constant effects. Stage 1 regresses X on
// [W, Z, Z^2, .., Z^k] and keeps the residual e1; stage 2 regresses Y on
// [X, .., X^d, W, e1]. e1 absorbs the endogenous part of X; its coefficient is
// a diagnostic and is excluded from h.
inline FittedEffect control_function_fit(const Dataset& d, Eigen::Index z_index,
                                         const EstimatorConfig& cfg) {
  if (cfg.treatment_basis_degree < 1 || cfg.instrument_basis_degree < cfg.treatment_basis_degree) {
    throw ConfigError("estimator config requires k >= d >= 1");
  }
  const Vec z = detail::candidate_column(d, z_index);
  const Eigen::Index n = d.n();
  const Eigen::Index q = d.w.cols();

  // Powers of a two-valued column are collinear, so binary inputs cap the degree.
  int k = detail::is_binary(z) ? 1 : cfg.instrument_basis_degree;
  int dd = detail::is_binary(d.x) ? 1 : cfg.treatment_basis_degree;
  dd = std::min(dd, k);
  if (n <= k + dd + q + 3) {
    throw StatError("control_function_fit: too few rows for the requested basis");
  }

  FittedEffect fit;
  fit.method = EffectMethod::ControlFunction;
  fit.partial_correlation = detail::check_relevance(d.x, z, d.w);
  fit.first_stage_strength = fit.partial_correlation * fit.partial_correlation /
                             (1.0 - fit.partial_correlation * fit.partial_correlation) *
                             static_cast<double>(n - q - 2);

  Mat stage1(n, q + k);
  if (q > 0) stage1.leftCols(q) = d.w;
  stage1.rightCols(k) = poly_basis(z, k);
  const LinearFit first = ols_fit(stage1, d.x);
  const Vec e1 = first.residuals;

  Mat stage2(n, dd + q + 1);
  stage2.leftCols(dd) = poly_basis(d.x, dd);
  if (q > 0) stage2.block(0, dd, n, q) = d.w;
  stage2.col(dd + q) = e1;
  const LinearFit second = ols_fit(stage2, d.y);

  fit.x_basis_degree = dd;
  fit.instrument_basis_degree = k;
  fit.intercept = second.intercept;
  fit.x_coefficients = second.coefficients.head(dd);
  fit.w_coefficients = second.coefficients.segment(dd, q);
  fit.control_coefficient = second.coefficients[dd + q];
  const Vec aux = d.y - predict_effect(fit, d.x, d.w);
  fit.residual_variance = sample_sd(aux) * sample_sd(aux);
  return fit;
}

}  // namespace ivcheck
