#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ivcheck/dataset.hpp"
#include "ivcheck/errors.hpp"
#include "ivcheck/random.hpp"
#include "ivcheck/validity.hpp"

namespace ivcheck {

// ---------------------------------------------------------------------------
// Noise
// ---------------------------------------------------------------------------

enum class NoiseFamily { Gaussian, Uniform, StudentT, Beta, Gamma, LogNormal, Exponential, Mixed };

struct NoiseSpec {
  NoiseFamily family = NoiseFamily::Gaussian;
  double p1 = 1.0;  // Gaussian: sd; Uniform: lo; StudentT: df; Beta: alpha;
                    // Gamma: shape; LogNormal: mu; Exponential: rate
  double p2 = 0.0;  // Uniform: hi; Beta: beta; Gamma: scale; LogNormal: sigma

  static NoiseSpec gaussian(double sd = 1.0) { return {NoiseFamily::Gaussian, sd, 0.0}; }
  static NoiseSpec uniform(double lo = -2.0, double hi = 2.0) { return {NoiseFamily::Uniform, lo, hi}; }
  static NoiseSpec student_t(double df = 5.0) { return {NoiseFamily::StudentT, df, 0.0}; }
  static NoiseSpec beta(double a = 0.5, double b = 0.1) { return {NoiseFamily::Beta, a, b}; }
  static NoiseSpec gamma(double shape = 2.0, double scale = 1.0) { return {NoiseFamily::Gamma, shape, scale}; }
  static NoiseSpec log_normal(double mu = 0.0, double sigma = 1.0) { return {NoiseFamily::LogNormal, mu, sigma}; }
  static NoiseSpec exponential(double rate = 0.5) { return {NoiseFamily::Exponential, rate, 0.0}; }
  static NoiseSpec mixed() { return {NoiseFamily::Mixed, 0.0, 0.0}; }
};

inline std::string noise_name(const NoiseSpec& s) {
  switch (s.family) {
    case NoiseFamily::Gaussian: return "gaussian";
    case NoiseFamily::Uniform: return "uniform";
    case NoiseFamily::StudentT: return "t";
    case NoiseFamily::Beta: return "beta";
    case NoiseFamily::Gamma: return "gamma";
    case NoiseFamily::LogNormal: return "lognormal";
    case NoiseFamily::Exponential: return "exponential";
    case NoiseFamily::Mixed: return "mixed";
  }
  return "?";
}

inline void validate_noise(const NoiseSpec& s) {
  switch (s.family) {
    case NoiseFamily::Gaussian:
      if (!(s.p1 > 0.0)) throw ConfigError("gaussian noise: sd must be positive");
      break;
    case NoiseFamily::Uniform:
      if (!(s.p2 > s.p1)) throw ConfigError("uniform noise: needs hi > lo");
      break;
    case NoiseFamily::StudentT:
      if (!(s.p1 > 2.0)) throw ConfigError("t noise: df must exceed 2 (finite variance)");
      break;
    case NoiseFamily::Beta:
      if (!(s.p1 > 0.0 && s.p2 > 0.0)) throw ConfigError("beta noise: parameters must be positive");
      break;
    case NoiseFamily::Gamma:
      if (!(s.p1 > 0.0 && s.p2 > 0.0)) throw ConfigError("gamma noise: parameters must be positive");
      break;
    case NoiseFamily::LogNormal:
      if (!(s.p2 > 0.0)) throw ConfigError("lognormal noise: sigma must be positive");
      break;
    case NoiseFamily::Exponential:
      if (!(s.p1 > 0.0)) throw ConfigError("exponential noise: rate must be positive");
      break;
    case NoiseFamily::Mixed:
      break;
  }
}

// i.i.d. draws centered at the family's analytic mean. Generators assume
// zero-mean noise; centering also keeps threshold-type structural functions
// (sign, indicators) non-degenerate for positive-support families.
inline Vec sample_noise(const NoiseSpec& spec, Eigen::Index n, Rng& rng,
                        NoiseSpec* resolved = nullptr) {
  if (n < 1) throw ConfigError("sample_noise: n must be positive");
  if (spec.family == NoiseFamily::Mixed) {
    static const NoiseSpec pool[6] = {NoiseSpec::gaussian(),  NoiseSpec::uniform(),
                                      NoiseSpec::student_t(), NoiseSpec::beta(),
                                      NoiseSpec::gamma(),     NoiseSpec::log_normal()};
    std::uniform_int_distribution<int> pick(0, 5);
    return sample_noise(pool[pick(rng)], n, rng, resolved);
  }
  validate_noise(spec);
  if (resolved != nullptr) *resolved = spec;
  Vec out(n);
  switch (spec.family) {
    case NoiseFamily::Gaussian: {
      std::normal_distribution<double> d(0.0, spec.p1);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = d(rng);
      break;
    }
    case NoiseFamily::Uniform: {
      std::uniform_real_distribution<double> d(spec.p1, spec.p2);
      const double m = 0.5 * (spec.p1 + spec.p2);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = d(rng) - m;
      break;
    }
    case NoiseFamily::StudentT: {
      std::student_t_distribution<double> d(spec.p1);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = d(rng);
      break;
    }
    case NoiseFamily::Beta: {
      std::gamma_distribution<double> ga(spec.p1, 1.0), gb(spec.p2, 1.0);
      const double m = spec.p1 / (spec.p1 + spec.p2);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double u = ga(rng), v = gb(rng);
        out[i] = u / (u + v) - m;
      }
      break;
    }
    case NoiseFamily::Gamma: {
      std::gamma_distribution<double> d(spec.p1, spec.p2);
      const double m = spec.p1 * spec.p2;
      for (Eigen::Index i = 0; i < n; ++i) out[i] = d(rng) - m;
      break;
    }
    case NoiseFamily::LogNormal: {
      std::lognormal_distribution<double> d(spec.p1, spec.p2);
      const double m = std::exp(spec.p1 + 0.5 * spec.p2 * spec.p2);
      for (Eigen::Index i = 0; i < n; ++i) out[i] = d(rng) - m;
      break;
    }
    case NoiseFamily::Exponential: {
      std::exponential_distribution<double> d(spec.p1);
      const double m = 1.0 / spec.p1;
      for (Eigen::Index i = 0; i < n; ++i) out[i] = d(rng) - m;
      break;
    }
    case NoiseFamily::Mixed:
      break;  // handled above
  }
  return out;
}

// ---------------------------------------------------------------------------
// Structural functions
// ---------------------------------------------------------------------------

enum class FnVariant { Log, Quadratic, Cubic, LogQuadratic, ExpQuadratic };
enum class FnTable { NonlinearConfounder, NonlinearEffect, ExclusionConstant, ExclusionNonConstant };
enum class PoolFn { Cos, Sin, Square, Cube, Log1p, Exp };

// Logs are evaluated as log(max(|arg|, 1e-6)): several published formula
// variants admit non-positive arguments on the sampled support.
inline double clamped_log(double arg) { return std::log(std::max(std::abs(arg), 1e-6)); }

inline double eval_fn(FnTable table, FnVariant variant, double t) {
  switch (table) {
    case FnTable::NonlinearConfounder:
      switch (variant) {
        case FnVariant::Log: return clamped_log(0.2 * std::abs(t) - 1.0);
        case FnVariant::Quadratic: return t * t - 2.0 * t + 1.0;
        case FnVariant::Cubic: return t * t * t - 0.5 * t * t + 0.2 * t;
        case FnVariant::LogQuadratic: return clamped_log(0.5 * t * t + t);
        case FnVariant::ExpQuadratic: return std::exp(0.3 * t * t + t);
      }
      break;
    case FnTable::NonlinearEffect:
      switch (variant) {
        case FnVariant::Log: return clamped_log(0.5 * std::abs(t));
        case FnVariant::Quadratic: return t * t - 2.0 * t + 1.0;
        case FnVariant::Cubic: return 0.01 * t * t * t - 0.5 * t * t + 0.2 * t;
        case FnVariant::LogQuadratic: return 0.1 * clamped_log(0.5 * t * t - 1.0) - 2.0;
        case FnVariant::ExpQuadratic: return std::exp(0.3 * t * t + t);
      }
      break;
    case FnTable::ExclusionConstant:
      switch (variant) {
        case FnVariant::Log: return clamped_log(0.2 * std::abs(t)) - 2.0;
        case FnVariant::Quadratic: return 0.2 * t * t + 2.0 * t - 2.0;
        case FnVariant::Cubic: return 0.01 * t * t * t - t - 6.0;
        case FnVariant::LogQuadratic: return clamped_log(0.5 * t * t + t - 0.1);
        case FnVariant::ExpQuadratic: return std::exp(0.3 * t * t + t) - 0.1;
      }
      break;
    case FnTable::ExclusionNonConstant:
      switch (variant) {
        case FnVariant::Log: return clamped_log(0.2 * std::abs(t) - 2.0) - 1.0;
        case FnVariant::Quadratic: return 0.2 * t * t + 2.0 * t - 2.0;
        case FnVariant::Cubic: return 0.01 * t * t * t - t - 6.0;
        case FnVariant::LogQuadratic: return clamped_log(0.5 * t * t + t - 1.0);
        case FnVariant::ExpQuadratic: return std::exp(0.2 * t * t) - 3.0;
      }
      break;
  }
  throw ConfigError("eval_fn: unknown table/variant combination");
}

inline Vec eval_fn(FnTable table, FnVariant variant, const Vec& v) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = eval_fn(table, variant, v[i]);
  return out;
}

// Unit-coefficient pool for the discrete-treatment generator; forms are
// recorded in metadata. log uses log(1+|t|) so the form is total on {0,1}.
inline double eval_pool(PoolFn f, double t) {
  switch (f) {
    case PoolFn::Cos: return std::cos(t);
    case PoolFn::Sin: return std::sin(t);
    case PoolFn::Square: return t * t;
    case PoolFn::Cube: return t * t * t;
    case PoolFn::Log1p: return std::log(1.0 + std::abs(t));
    case PoolFn::Exp: return std::exp(t);
  }
  throw ConfigError("eval_pool: unknown function");
}

inline Vec eval_pool(PoolFn f, const Vec& v) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = eval_pool(f, v[i]);
  return out;
}

inline std::string fn_name(FnVariant v) {
  switch (v) {
    case FnVariant::Log: return "log";
    case FnVariant::Quadratic: return "quadratic";
    case FnVariant::Cubic: return "cubic";
    case FnVariant::LogQuadratic: return "logquadratic";
    case FnVariant::ExpQuadratic: return "expquadratic";
  }
  return "?";
}

inline std::string pool_name(PoolFn f) {
  switch (f) {
    case PoolFn::Cos: return "cos(t)";
    case PoolFn::Sin: return "sin(t)";
    case PoolFn::Square: return "t^2";
    case PoolFn::Cube: return "t^3";
    case PoolFn::Log1p: return "log(1+|t|)";
    case PoolFn::Exp: return "exp(t)";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Scenarios
// ---------------------------------------------------------------------------

enum class ScenarioFamily {
  LinearExogeneity,        // linear model, confounder feeds the invalid candidate
  NonlinearConfounder,     // confounder enters the invalid candidate nonlinearly
  NonlinearEffect,         // nonlinear outcome effect, linear exogeneity violation
  ExclusionConstant,       // invalid candidate enters Y directly, constant effect
  ExclusionNonConstant,    // invalid candidate enters Y directly, nonlinear effect
  CovariateBinary,         // observed covariates, binary instruments
  DiscreteTreatment,       // binary treatment, single candidate
  Motivating,              // fixed-coefficient illustrative models
};

enum class MotivatingKind { LinearGaussian, LinearPartialNonGaussian, PartialNonlinearGaussian };

enum class Validity { Valid, InvalidExogeneity, InvalidExclusion };

inline std::string validity_name(Validity v) {
  switch (v) {
    case Validity::Valid: return "valid";
    case Validity::InvalidExogeneity: return "invalid-exogeneity";
    case Validity::InvalidExclusion: return "invalid-exclusion";
  }
  return "?";
}

struct ScenarioSpec {
  ScenarioFamily family = ScenarioFamily::LinearExogeneity;
  NoiseSpec noise = NoiseSpec::gaussian();           // LinearExogeneity rows
  FnVariant fn = FnVariant::Quadratic;               // nonlinear rows
  int covariate_dim = 2;                             // CovariateBinary: 2, 3, or 5
  bool discrete_valid = false;                       // DiscreteTreatment variant
  MotivatingKind kind = MotivatingKind::LinearGaussian;
  double true_beta = 1.0;

  std::string name() const {
    switch (family) {
      case ScenarioFamily::LinearExogeneity: return "table2-" + noise_name(noise);
      case ScenarioFamily::NonlinearConfounder: return "table3-" + fn_name(fn);
      case ScenarioFamily::NonlinearEffect: return "table4-" + fn_name(fn);
      case ScenarioFamily::ExclusionConstant: return "table5-" + fn_name(fn);
      case ScenarioFamily::ExclusionNonConstant: return "table6-" + fn_name(fn);
      case ScenarioFamily::CovariateBinary: return "table7-q" + std::to_string(covariate_dim);
      case ScenarioFamily::DiscreteTreatment:
        return discrete_valid ? "table8-valid" : "table8-invalid";
      case ScenarioFamily::Motivating:
        switch (kind) {
          case MotivatingKind::LinearGaussian: return "motivating-linear-gaussian";
          case MotivatingKind::LinearPartialNonGaussian: return "motivating-partial-nongaussian";
          case MotivatingKind::PartialNonlinearGaussian: return "motivating-nonlinear-gaussian";
        }
    }
    return "?";
  }

  // Whether the generating outcome equation has a constant treatment effect;
  // the benchmark passes this to the estimator branch as prior knowledge.
  EffectMode effect_mode() const {
    return (family == ScenarioFamily::NonlinearEffect ||
            family == ScenarioFamily::ExclusionNonConstant)
               ? EffectMode::NonConstantEffect
               : EffectMode::ConstantEffect;
  }
};

struct LabeledDataset {
  Dataset data;
  std::vector<Validity> labels;  // one per candidate column
  Vec latent_u;                  // retained for oracle checks, never fed to the test
  ScenarioSpec spec;
  std::uint64_t seed = 0;
  std::vector<std::pair<std::string, std::string>> metadata;
};

namespace detail {

inline double sign_of(double t) { return t > 0.0 ? 1.0 : (t == 0.0 ? 0.0 : -1.0); }

inline Vec indicator_above_mean(const Vec& v) {
  const double m = v.mean();
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = v[i] > m ? 1.0 : 0.0;
  return out;
}

inline std::string fmt_coef(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace detail

inline void validate_spec(const ScenarioSpec& spec) {
  if (spec.family == ScenarioFamily::CovariateBinary) {
    if (spec.covariate_dim != 2 && spec.covariate_dim != 3 && spec.covariate_dim != 5) {
      throw ConfigError("covariate scenario supports dimension 2, 3, or 5");
    }
  }
  if (spec.family == ScenarioFamily::LinearExogeneity) validate_noise(spec.noise);
}

inline LabeledDataset generate(const ScenarioSpec& spec, Eigen::Index n, std::uint64_t seed) {
  if (n < 100) throw ConfigError("generate: needs n >= 100");
  validate_spec(spec);
  Rng rng = make_rng(seed);
  std::uniform_real_distribution<double> coef(0.5, 1.5);

  LabeledDataset out;
  out.spec = spec;
  out.seed = seed;
  auto& md = out.metadata;
  md.emplace_back("scenario", spec.name());
  md.emplace_back("n", std::to_string(n));
  md.emplace_back("seed", std::to_string(seed));

  Dataset& d = out.data;
  switch (spec.family) {
    case ScenarioFamily::LinearExogeneity: {
      // Z1 = g*U + e1 (invalid: confounded), Z2 = e2 (valid),
      // X = t1*Z1 + t2*Z2 + r*U + ex, Y = X + k*U + ey.
      const double g = coef(rng), t1 = coef(rng), t2 = coef(rng), r = coef(rng), k = coef(rng);
      NoiseSpec used[5];
      const Vec eu = sample_noise(spec.noise, n, rng, &used[0]);
      const Vec e1 = sample_noise(spec.noise, n, rng, &used[1]);
      const Vec e2 = sample_noise(spec.noise, n, rng, &used[2]);
      const Vec ex = sample_noise(spec.noise, n, rng, &used[3]);
      const Vec ey = sample_noise(spec.noise, n, rng, &used[4]);
      const Vec u = eu;
      const Vec z1 = g * u + e1;
      const Vec z2 = e2;
      d.x = t1 * z1 + t2 * z2 + r * u + ex;
      d.y = d.x + k * u + ey;
      d.z.resize(n, 2);
      d.z.col(0) = z1;
      d.z.col(1) = z2;
      d.w.resize(n, 0);
      d.z_names = {"Z1", "Z2"};
      out.labels = {Validity::InvalidExogeneity, Validity::Valid};
      out.latent_u = u;
      md.emplace_back("gamma", detail::fmt_coef(g));
      md.emplace_back("tau1", detail::fmt_coef(t1));
      md.emplace_back("tau2", detail::fmt_coef(t2));
      md.emplace_back("rho", detail::fmt_coef(r));
      md.emplace_back("kappa", detail::fmt_coef(k));
      const char* terms[5] = {"noise_u", "noise_z1", "noise_z2", "noise_x", "noise_y"};
      for (int i = 0; i < 5; ++i) md.emplace_back(terms[i], noise_name(used[i]));
      break;
    }
    case ScenarioFamily::NonlinearConfounder: {
      // Z1 = f(U) + e1, Z2 = e2, X = Z1 + Z2 + U + ex, Y = X + U + ey; all N(0,1).
      const NoiseSpec nz = NoiseSpec::gaussian();
      const Vec u = sample_noise(nz, n, rng);
      const Vec e1 = sample_noise(nz, n, rng);
      const Vec e2 = sample_noise(nz, n, rng);
      const Vec ex = sample_noise(nz, n, rng);
      const Vec ey = sample_noise(nz, n, rng);
      const Vec z1 = eval_fn(FnTable::NonlinearConfounder, spec.fn, u) + e1;
      const Vec z2 = e2;
      d.x = z1 + z2 + u + ex;
      d.y = d.x + u + ey;
      d.z.resize(n, 2);
      d.z.col(0) = z1;
      d.z.col(1) = z2;
      d.w.resize(n, 0);
      d.z_names = {"Z1", "Z2"};
      out.labels = {Validity::InvalidExogeneity, Validity::Valid};
      out.latent_u = u;
      md.emplace_back("fn", fn_name(spec.fn));
      break;
    }
    case ScenarioFamily::NonlinearEffect: {
      // Z1 = U + e1, Z2 = e2, X = Z1 + Z2 + U + ex, Y = f(X) + U + ey; Uniform(-2,2).
      const NoiseSpec nz = NoiseSpec::uniform();
      const Vec u = sample_noise(nz, n, rng);
      const Vec e1 = sample_noise(nz, n, rng);
      const Vec e2 = sample_noise(nz, n, rng);
      const Vec ex = sample_noise(nz, n, rng);
      const Vec ey = sample_noise(nz, n, rng);
      const Vec z1 = u + e1;
      const Vec z2 = e2;
      d.x = z1 + z2 + u + ex;
      d.y = eval_fn(FnTable::NonlinearEffect, spec.fn, d.x) + u + ey;
      d.z.resize(n, 2);
      d.z.col(0) = z1;
      d.z.col(1) = z2;
      d.w.resize(n, 0);
      d.z_names = {"Z1", "Z2"};
      out.labels = {Validity::InvalidExogeneity, Validity::Valid};
      out.latent_u = u;
      md.emplace_back("fn", fn_name(spec.fn));
      break;
    }
    case ScenarioFamily::ExclusionConstant: {
      // Z1 = e1 enters Y directly (invalid by exclusion), Z2 = e2 valid.
      // X = sign(Z1) + g(Z2) + r*U + ex, Y = X + g(Z1) + k*U + ey; Beta noise.
      const double r = coef(rng), k = coef(rng);
      const NoiseSpec nz = NoiseSpec::beta();
      const Vec u = sample_noise(nz, n, rng);
      const Vec e1 = sample_noise(nz, n, rng);
      const Vec e2 = sample_noise(nz, n, rng);
      const Vec ex = sample_noise(nz, n, rng);
      const Vec ey = sample_noise(nz, n, rng);
      const Vec z1 = e1;
      const Vec z2 = e2;
      const Vec sz1 = z1.unaryExpr(&detail::sign_of);
      d.x = sz1 + eval_fn(FnTable::ExclusionConstant, spec.fn, z2) + r * u + ex;
      d.y = d.x + eval_fn(FnTable::ExclusionConstant, spec.fn, z1) + k * u + ey;
      d.z.resize(n, 2);
      d.z.col(0) = z1;
      d.z.col(1) = z2;
      d.w.resize(n, 0);
      d.z_names = {"Z1", "Z2"};
      out.labels = {Validity::InvalidExclusion, Validity::Valid};
      out.latent_u = u;
      md.emplace_back("fn", fn_name(spec.fn));
      md.emplace_back("rho", detail::fmt_coef(r));
      md.emplace_back("kappa", detail::fmt_coef(k));
      break;
    }
    case ScenarioFamily::ExclusionNonConstant: {
      // X = sign(Z1) + g(Z2) + g(U) + ex, Y = f(X) + g(Z1) + g(U) + ey; Beta noise.
      const NoiseSpec nz = NoiseSpec::beta();
      const Vec u = sample_noise(nz, n, rng);
      const Vec e1 = sample_noise(nz, n, rng);
      const Vec e2 = sample_noise(nz, n, rng);
      const Vec ex = sample_noise(nz, n, rng);
      const Vec ey = sample_noise(nz, n, rng);
      const Vec z1 = e1;
      const Vec z2 = e2;
      const Vec sz1 = z1.unaryExpr(&detail::sign_of);
      const auto tb = FnTable::ExclusionNonConstant;
      d.x = sz1 + eval_fn(tb, spec.fn, z2) + eval_fn(tb, spec.fn, u) + ex;
      d.y = eval_fn(tb, spec.fn, d.x) + eval_fn(tb, spec.fn, z1) + eval_fn(tb, spec.fn, u) + ey;
      d.z.resize(n, 2);
      d.z.col(0) = z1;
      d.z.col(1) = z2;
      d.w.resize(n, 0);
      d.z_names = {"Z1", "Z2"};
      out.labels = {Validity::InvalidExclusion, Validity::Valid};
      out.latent_u = u;
      md.emplace_back("fn", fn_name(spec.fn));
      break;
    }
    case ScenarioFamily::CovariateBinary: {
      // q observed covariates; binary instruments via above-mean indicators.
      // Z1 thresholds U + sum(W) + Beta noise (invalid), Z2 thresholds
      // sum(W) + N(0,1) (valid). X = 0.5 Z1 + 0.5 Z2 + W.lambda + delta, Y = X + sum(W) + e.
      const int q = spec.covariate_dim;
      const Vec u = sample_noise(NoiseSpec::student_t(), n, rng);
      Mat w(n, q);
      for (int j = 0; j < q; ++j) w.col(j) = sample_noise(NoiseSpec::gaussian(), n, rng);
      const Vec ez1 = sample_noise(NoiseSpec::beta(), n, rng);
      const Vec ez2 = sample_noise(NoiseSpec::gaussian(), n, rng);
      Vec lambda(q);
      {
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (int j = 0; j < q; ++j) lambda[j] = gauss(rng);
        lambda /= lambda.norm();
      }
      const Vec delta = sample_noise(NoiseSpec::student_t(), n, rng);
      const Vec ey = sample_noise(NoiseSpec::student_t(), n, rng);
      const Vec wsum = w.rowwise().sum();
      const Vec z1 = detail::indicator_above_mean(u + wsum + ez1);
      const Vec z2 = detail::indicator_above_mean(wsum + ez2);
      d.x = 0.5 * z1 + 0.5 * z2 + w * lambda + delta;
      d.y = d.x + wsum + ey;
      d.z.resize(n, 2);
      d.z.col(0) = z1;
      d.z.col(1) = z2;
      d.w = w;
      d.z_names = {"Z1", "Z2"};
      d.w_names.clear();
      for (int j = 1; j <= q; ++j) d.w_names.push_back("W" + std::to_string(j));
      out.labels = {Validity::InvalidExogeneity, Validity::Valid};
      out.latent_u = u;
      md.emplace_back("covariate_dim", std::to_string(q));
      for (int j = 0; j < q; ++j) {
        md.emplace_back("lambda" + std::to_string(j + 1), detail::fmt_coef(lambda[j]));
      }
      break;
    }
    case ScenarioFamily::DiscreteTreatment: {
      // Binary Z and X via above-mean indicators; Y = X + gY(Z) + pY(U) + ey.
      // The valid variant switches off the U -> Z path and the direct Z -> Y path.
      std::uniform_int_distribution<int> pick(0, 5);
      const PoolFn pz = static_cast<PoolFn>(pick(rng));
      const PoolFn px = static_cast<PoolFn>(pick(rng));
      const PoolFn py = static_cast<PoolFn>(pick(rng));
      const PoolFn gx = static_cast<PoolFn>(pick(rng));
      const PoolFn gy = static_cast<PoolFn>(pick(rng));
      const NoiseSpec nz = NoiseSpec::gaussian();
      const Vec u = sample_noise(nz, n, rng);
      const Vec ez = sample_noise(nz, n, rng);
      const Vec ex = sample_noise(nz, n, rng);
      const Vec ey = sample_noise(nz, n, rng);
      const Vec zraw = spec.discrete_valid ? ez : Vec(eval_pool(pz, u) + ez);
      const Vec z = detail::indicator_above_mean(zraw);
      const Vec xraw = eval_pool(gx, z) + eval_pool(px, u) + ex;
      d.x = detail::indicator_above_mean(xraw);
      d.y = spec.true_beta * d.x + eval_pool(py, u) + ey;
      if (!spec.discrete_valid) d.y += eval_pool(gy, z);
      d.z.resize(n, 1);
      d.z.col(0) = z;
      d.w.resize(n, 0);
      d.z_names = {"Z"};
      out.labels = {spec.discrete_valid ? Validity::Valid : Validity::InvalidExogeneity};
      out.latent_u = u;
      md.emplace_back("variant", spec.discrete_valid ? "valid" : "invalid");
      md.emplace_back("beta", detail::fmt_coef(spec.true_beta));
      if (!spec.discrete_valid) md.emplace_back("fn_z_of_u", pool_name(pz));
      md.emplace_back("fn_x_of_u", pool_name(px));
      md.emplace_back("fn_y_of_u", pool_name(py));
      md.emplace_back("fn_x_of_z", pool_name(gx));
      if (!spec.discrete_valid) md.emplace_back("fn_y_of_z", pool_name(gy));
      break;
    }
    case ScenarioFamily::Motivating: {
      // Fixed coefficients: Z = 2U + ez (or exp(U) + ez), X = 1.5 Z + 0.8 U + ex,
      // Y = X + 3.5 U + ey.
      const NoiseSpec nu = (spec.kind == MotivatingKind::LinearPartialNonGaussian)
                               ? NoiseSpec::exponential()
                               : NoiseSpec::gaussian();
      const Vec u = sample_noise(nu, n, rng);
      const Vec ez = sample_noise(NoiseSpec::gaussian(), n, rng);
      const Vec ex = sample_noise(NoiseSpec::gaussian(), n, rng);
      const Vec ey = sample_noise(NoiseSpec::gaussian(), n, rng);
      const Vec z = (spec.kind == MotivatingKind::PartialNonlinearGaussian)
                        ? Vec(u.array().exp() + ez.array())
                        : Vec(2.0 * u + ez);
      d.x = 1.5 * z + 0.8 * u + ex;
      d.y = d.x + 3.5 * u + ey;
      d.z.resize(n, 1);
      d.z.col(0) = z;
      d.w.resize(n, 0);
      d.z_names = {"Z"};
      out.labels = {Validity::InvalidExogeneity};
      out.latent_u = u;
      md.emplace_back("kind", spec.name());
      break;
    }
  }
  d.x_name = "X";
  d.y_name = "Y";
  validate(d);
  for (std::size_t i = 0; i < out.labels.size(); ++i) {
    md.emplace_back("label_" + d.z_names[i], validity_name(out.labels[i]));
  }
  return out;
}

inline LabeledDataset motivating_example(MotivatingKind kind, Eigen::Index n, std::uint64_t seed) {
  ScenarioSpec spec;
  spec.family = ScenarioFamily::Motivating;
  spec.kind = kind;
  return generate(spec, n, seed);
}

// Every named scenario, in report order.
inline std::vector<ScenarioSpec> all_scenarios() {
  std::vector<ScenarioSpec> out;
  ScenarioSpec s;
  s.family = ScenarioFamily::LinearExogeneity;
  for (const NoiseSpec& nz :
       {NoiseSpec::gaussian(), NoiseSpec::uniform(), NoiseSpec::student_t(), NoiseSpec::beta(),
        NoiseSpec::gamma(), NoiseSpec::log_normal(), NoiseSpec::mixed()}) {
    s.noise = nz;
    out.push_back(s);
  }
  for (ScenarioFamily fam :
       {ScenarioFamily::NonlinearConfounder, ScenarioFamily::NonlinearEffect,
        ScenarioFamily::ExclusionConstant, ScenarioFamily::ExclusionNonConstant}) {
    ScenarioSpec f;
    f.family = fam;
    for (FnVariant v : {FnVariant::Log, FnVariant::Quadratic, FnVariant::Cubic,
                        FnVariant::LogQuadratic, FnVariant::ExpQuadratic}) {
      f.fn = v;
      out.push_back(f);
    }
  }
  for (int q : {2, 3, 5}) {
    ScenarioSpec c;
    c.family = ScenarioFamily::CovariateBinary;
    c.covariate_dim = q;
    out.push_back(c);
  }
  for (bool valid : {false, true}) {
    ScenarioSpec t;
    t.family = ScenarioFamily::DiscreteTreatment;
    t.discrete_valid = valid;
    out.push_back(t);
  }
  for (MotivatingKind k : {MotivatingKind::LinearGaussian, MotivatingKind::LinearPartialNonGaussian,
                           MotivatingKind::PartialNonlinearGaussian}) {
    ScenarioSpec m;
    m.family = ScenarioFamily::Motivating;
    m.kind = k;
    out.push_back(m);
  }
  return out;
}

inline ScenarioSpec scenario_from_name(const std::string& name) {
  for (const ScenarioSpec& s : all_scenarios()) {
    if (s.name() == name) return s;
  }
  std::string known;
  for (const ScenarioSpec& s : all_scenarios()) {
    if (!known.empty()) known += ", ";
    known += s.name();
  }
  throw ConfigError("unknown scenario '" + name + "' (known: " + known + ")");
}

// Plain key=value sidecar next to a simulated CSV.
inline void write_metadata(const std::string& path, const LabeledDataset& ld) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write file '" + path + "'");
  for (const auto& [k, v] : ld.metadata) out << k << '=' << v << '\n';
  if (!out) throw InputError("failed while writing '" + path + "'");
}

}  // namespace ivcheck
