#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>

#include "ivcheck/dataset.hpp"
#include "ivcheck/errors.hpp"
#include "ivcheck/estimators.hpp"
#include "ivcheck/forest.hpp"
#include "ivcheck/hsic.hpp"
#include "ivcheck/random.hpp"

namespace ivcheck {

enum class EffectMode { ConstantEffect, NonConstantEffect };

// H0: the candidate column is a valid instrument. Rejection means the candidate
// is shown invalid; failing to reject does NOT certify validity (the condition
// tested is necessary, not sufficient).
enum class Decision { RejectH0, FailToReject };

struct ValidityConfig {
  EffectMode effect_mode = EffectMode::NonConstantEffect;
  EstimatorConfig estimator{};
  HsicConfig hsic{};
  std::optional<HsicMethod> method;  // empty = auto: Permutation below the
                                     // large-scale threshold, LargeScale at or above
  std::optional<double> alpha;       // empty = sample-size rule
  ForestParams forest{};
  std::uint64_t seed = 0;
};

struct ValidityResult {
  Decision decision = Decision::FailToReject;
  double p_value = 1.0;
  double alpha_used = 0.0;
  Vec auxiliary;   // A = Y - h(X, W)
  Vec residual_z;  // Z minus forest estimate of E[Z|W] (Z itself when W is empty)
  FittedEffect fitted;
  IndependenceResult independence;
};

// Significance level rule 10/n, clamped to [1e-4, 0.1].
inline double default_alpha(Eigen::Index n) {
  if (n < 25) throw StatError("default_alpha: needs n >= 25");
  return std::min(0.1, std::max(1e-4, 10.0 / static_cast<double>(n)));
}

inline Vec auxiliary_variable(const Dataset& d, const FittedEffect& h) {
  return d.y - predict_effect(h, d.x, d.w);
}

namespace detail {

inline Vec standardized(const Vec& v, const char* what) {
  const double sd = sample_sd(v);
  const double scale = 1.0 + std::abs(v.mean());
  if (!(sd > 1e-12 * scale)) {
    throw StatError(std::string("cannot test: ") + what + " is numerically constant");
  }
  return (v.array() - v.mean()) / sd;
}

}  // namespace detail

// Full pipeline for one candidate: estimate h, form A = Y - h(X, W), residualize
// Z on W, standardize both series, and run the independence test.
inline ValidityResult test_instrument(const Dataset& d, Eigen::Index z_index,
                                      const ValidityConfig& cfg) {
  validate(d);
  const Eigen::Index n = d.n();

  double alpha;
  if (cfg.alpha.has_value()) {
    alpha = *cfg.alpha;
    if (!(alpha > 0.0 && alpha <= 0.5)) throw ConfigError("alpha must lie in (0, 0.5]");
  } else {
    alpha = default_alpha(n);
  }

  ValidityResult res;
  res.fitted = (cfg.effect_mode == EffectMode::ConstantEffect)
                   ? tsls_fit(d, z_index)
                   : control_function_fit(d, z_index, cfg.estimator);
  res.auxiliary = auxiliary_variable(d, res.fitted);

  ForestParams forest = cfg.forest;
  forest.seed = mix_seed(cfg.seed, 0xF0);
  res.residual_z = residualize(d.z.col(z_index), d.w, forest);

  const Vec a_std = detail::standardized(res.auxiliary, "auxiliary variable");
  const Vec z_std = detail::standardized(res.residual_z, "instrument residual");

  HsicConfig hsic = cfg.hsic;
  hsic.seed = mix_seed(cfg.seed, 0x15);
  hsic.method = cfg.method.value_or(n < hsic.large_scale_threshold ? HsicMethod::Permutation
                                                                   : HsicMethod::LargeScale);
  res.independence = hsic_test(a_std, z_std, hsic);

  res.p_value = res.independence.p_value;
  res.alpha_used = alpha;
  res.decision = (res.p_value < alpha) ? Decision::RejectH0 : Decision::FailToReject;
  return res;
}

}  // namespace ivcheck
