#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "ivcheck/estimators.hpp"
#include "oracles.hpp"

using namespace ivcheck;

namespace {

// Endogenous linear system: Z relevant and clean, U confounds X and Y.
Dataset linear_iv_data(Eigen::Index n, std::uint64_t seed, double beta = 2.0, int covariates = 0) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset d;
  d.x.resize(n);
  d.y.resize(n);
  d.z.resize(n, 1);
  d.w.resize(n, covariates);
  d.z_names = {"Z"};
  for (int j = 0; j < covariates; ++j) d.w_names.push_back("W" + std::to_string(j + 1));
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = g(rng);
    const double z = g(rng);
    double wpart_x = 0.0, wpart_y = 0.0;
    for (int j = 0; j < covariates; ++j) {
      d.w(i, j) = g(rng);
      wpart_x += 0.5 * d.w(i, j);
      wpart_y += -0.75 * d.w(i, j);
    }
    d.z(i, 0) = z;
    d.x[i] = z + 0.8 * u + wpart_x + 0.5 * g(rng);
    d.y[i] = beta * d.x[i] + 1.3 * u + wpart_y + 0.5 * g(rng);
  }
  return d;
}

}  // namespace

TEST_CASE("no-covariate 2sls reduces to the covariance ratio", "[estimators]") {
  for (std::uint64_t seed = 1; seed <= 30; ++seed) {
    const Dataset d = linear_iv_data(150, seed);
    const FittedEffect fit = tsls_fit(d, 0);
    const double want = oracle::covariance(d.z.col(0), d.y) / oracle::covariance(d.z.col(0), d.x);
    CHECK(std::abs(fit.x_coefficients[0] - want) < 1e-10);
    // The defining moment condition: the auxiliary residual has exactly zero
    // sample covariance with the instrument.
    const Vec a = d.y - predict_effect(fit, d.x, d.w);
    CHECK(std::abs(oracle::covariance(d.z.col(0), a)) < 1e-10);
  }
}

TEST_CASE("2sls removes confounding bias that plain regression keeps", "[estimators]") {
  const Dataset d = linear_iv_data(20000, 77, 2.0);
  const FittedEffect fit = tsls_fit(d, 0);
  CHECK(fit.x_coefficients[0] == Catch::Approx(2.0).margin(0.05));
  // OLS of Y on X is biased upward here (positive confounding).
  const LinearFit naive = ols_fit(d.x, d.y);
  CHECK(naive.coefficients[0] > 2.2);
}

TEST_CASE("2sls with covariates keeps their coefficients in the effect", "[estimators]") {
  const Dataset d = linear_iv_data(20000, 5, 1.5, 2);
  const FittedEffect fit = tsls_fit(d, 0);
  REQUIRE(fit.w_coefficients.size() == 2);
  CHECK(fit.x_coefficients[0] == Catch::Approx(1.5).margin(0.05));
  CHECK(fit.w_coefficients[0] == Catch::Approx(-0.75).margin(0.05));
  CHECK(fit.w_coefficients[1] == Catch::Approx(-0.75).margin(0.05));
  // predict_effect must apply exactly those coefficients.
  const Vec pred = predict_effect(fit, d.x, d.w);
  const Vec manual = fit.intercept + fit.x_coefficients[0] * d.x.array() +
                     (d.w * fit.w_coefficients).array();
  CHECK((pred - manual).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("control function with first-degree bases reproduces 2sls exactly", "[estimators]") {
  EstimatorConfig cfg;
  cfg.instrument_basis_degree = 1;
  cfg.treatment_basis_degree = 1;
  SECTION("without covariates") {
    const Dataset d = linear_iv_data(2000, 11);
    const FittedEffect tsls = tsls_fit(d, 0);
    const FittedEffect cf = control_function_fit(d, 0, cfg);
    CHECK(std::abs(cf.x_coefficients[0] - tsls.x_coefficients[0]) < 1e-6);
    CHECK(std::abs(cf.intercept - tsls.intercept) < 1e-6);
  }
  SECTION("with covariates") {
    const Dataset d = linear_iv_data(2000, 12, 2.0, 2);
    const FittedEffect tsls = tsls_fit(d, 0);
    const FittedEffect cf = control_function_fit(d, 0, cfg);
    CHECK(std::abs(cf.x_coefficients[0] - tsls.x_coefficients[0]) < 1e-6);
    CHECK((cf.w_coefficients - tsls.w_coefficients).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("control function recovers a quadratic structural effect", "[estimators]") {
  // X = Z + U + e, Y = 1 + 2X - 0.7X^2 + 2U + e. Conditioning on the
  // first-stage residual absorbs U, so the X polynomial is identified.
  const Eigen::Index n = 20000;
  std::mt19937_64 rng(31);
  std::normal_distribution<double> g(0.0, 1.0);
  Dataset d;
  d.x.resize(n);
  d.y.resize(n);
  d.z.resize(n, 1);
  d.w.resize(n, 0);
  d.z_names = {"Z"};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = g(rng);
    const double z = g(rng);
    d.z(i, 0) = z;
    d.x[i] = z + u + 0.7 * g(rng);
    d.y[i] = 1.0 + 2.0 * d.x[i] - 0.7 * d.x[i] * d.x[i] + 2.0 * u + 0.5 * g(rng);
  }
  EstimatorConfig cfg;  // defaults: k = 3, d = 2
  const FittedEffect fit = control_function_fit(d, 0, cfg);
  CHECK(fit.method == EffectMethod::ControlFunction);
  CHECK(fit.x_basis_degree == 2);
  CHECK(fit.instrument_basis_degree == 3);
  CHECK(fit.x_coefficients[0] == Catch::Approx(2.0).margin(0.06));
  CHECK(fit.x_coefficients[1] == Catch::Approx(-0.7).margin(0.04));
  CHECK(fit.intercept == Catch::Approx(1.0).margin(0.08));
  // E[U | e1] = e1 * VarU / (VarU + Vare) = e1 / 1.49, scaled by the outcome
  // loading 2 -> the control coefficient estimates 2/1.49.
  CHECK(fit.control_coefficient == Catch::Approx(2.0 / 1.49).margin(0.08));
  // The control term never contaminates the reported effect.
  const Vec pred = predict_effect(fit, d.x, d.w);
  const Vec manual = fit.intercept + fit.x_coefficients[0] * d.x.array() +
                     fit.x_coefficients[1] * d.x.array().square();
  CHECK((pred - manual).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("binary inputs clamp the basis degrees", "[estimators]") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g(0.0, 1.0);
  const Eigen::Index n = 600;
  Dataset d;
  d.x.resize(n);
  d.y.resize(n);
  d.z.resize(n, 1);
  d.w.resize(n, 0);
  d.z_names = {"Z"};
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = g(rng);
    d.z(i, 0) = (g(rng) > 0.0) ? 1.0 : 0.0;
    d.x[i] = (d.z(i, 0) + 0.5 * u + 0.8 * g(rng) > 0.5) ? 1.0 : 0.0;
    d.y[i] = d.x[i] + u + 0.3 * g(rng);
  }
  const FittedEffect fit = control_function_fit(d, 0, EstimatorConfig{});
  CHECK(fit.instrument_basis_degree == 1);
  CHECK(fit.x_basis_degree == 1);
  REQUIRE(fit.x_coefficients.size() == 1);
}

TEST_CASE("weak instruments are refused with a diagnostic", "[estimators]") {
  Dataset d = linear_iv_data(5000, 13);
  d.z.col(0) = oracle::gaussian_vec(5000, 999);  // fresh noise, unrelated to X
  CHECK_THROWS_AS(tsls_fit(d, 0), StatError);
  CHECK_THROWS_WITH(tsls_fit(d, 0), Catch::Matchers::ContainsSubstring("weak or irrelevant"));
  CHECK_THROWS_AS(control_function_fit(d, 0, EstimatorConfig{}), StatError);
}

TEST_CASE("estimator configuration is validated", "[estimators]") {
  const Dataset d = linear_iv_data(200, 3);
  EstimatorConfig bad;
  bad.instrument_basis_degree = 1;
  bad.treatment_basis_degree = 2;  // k < d
  CHECK_THROWS_AS(control_function_fit(d, 0, bad), ConfigError);
  bad.treatment_basis_degree = 0;
  CHECK_THROWS_AS(control_function_fit(d, 0, bad), ConfigError);
  CHECK_THROWS_AS(tsls_fit(d, 2), ConfigError);  // candidate index out of range
  Mat wrong(200, 3);
  wrong.setZero();
  FittedEffect fit = tsls_fit(d, 0);
  CHECK_THROWS_AS(predict_effect(fit, d.x, wrong), ConfigError);
}

TEST_CASE("relevance diagnostics are populated and plausible", "[estimators]") {
  const Dataset d = linear_iv_data(3000, 8);
  const FittedEffect fit = tsls_fit(d, 0);
  CHECK(std::abs(fit.partial_correlation) <= 1.0);
  CHECK(std::abs(fit.partial_correlation) > 0.3);
  CHECK(fit.first_stage_strength > 100.0);  // strong by construction
  CHECK(fit.residual_variance > 0.0);
}
