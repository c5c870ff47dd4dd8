#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <set>

#include "ivcheck/forest.hpp"
#include "ivcheck/regression.hpp"
#include "oracles.hpp"

using namespace ivcheck;

namespace {

// Smooth two-feature response with additive noise, the shape the forest is
// asked to learn inside the pipeline.
struct Surface {
  Mat w;
  Vec signal;
  Vec target;
};

Surface make_surface(Eigen::Index n, std::uint64_t seed, double noise_sd) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Surface s;
  s.w.resize(n, 2);
  s.signal.resize(n);
  s.target.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    s.w(i, 0) = g(rng);
    s.w(i, 1) = g(rng);
    s.signal[i] = std::sin(2.0 * s.w(i, 0)) + 0.5 * s.w(i, 1) * s.w(i, 1);
    s.target[i] = s.signal[i] + noise_sd * g(rng);
  }
  return s;
}

}  // namespace

TEST_CASE("a single unpruned tree over the full sample memorizes training data", "[forest]") {
  // With bootstrap off, one tree, and singleton leaves, every training row ends
  // in its own leaf (features are distinct almost surely), so predictions must
  // reproduce the targets exactly.
  ForestParams p;
  p.num_trees = 1;
  p.min_leaf = 1;
  p.bootstrap = false;
  p.seed = 3;
  Mat w(64, 1);
  w.col(0) = oracle::gaussian_vec(64, 11);
  const Vec y = oracle::gaussian_vec(64, 12);
  const ForestModel model = forest_fit(w, y, p);
  CHECK((forest_predict(model, w) - y).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("forest fits are deterministic in the seed", "[forest]") {
  const Surface s = make_surface(300, 21, 0.3);
  ForestParams p;
  p.num_trees = 25;
  p.seed = 77;
  const Vec a = forest_predict(forest_fit(s.w, s.target, p), s.w);
  const Vec b = forest_predict(forest_fit(s.w, s.target, p), s.w);
  CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
  p.seed = 78;
  const Vec c = forest_predict(forest_fit(s.w, s.target, p), s.w);
  CHECK((a - c).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("out-of-bag predictions track the true conditional mean", "[forest]") {
  const Surface s = make_surface(1500, 5, 0.4);
  ForestParams p;
  p.num_trees = 120;
  p.seed = 9;
  const ForestModel model = forest_fit(s.w, s.target, p);
  const Vec oob = forest_oob_predict(model, s.w);
  CHECK(correlation(oob, s.signal) > 0.9);
  // OOB must differ from in-bag predictions: each row is scored only by trees
  // that did not train on it.
  const Vec full = forest_predict(model, s.w);
  CHECK((oob - full).cwiseAbs().maxCoeff() > 1e-6);
  // And OOB error should sit above the irreducible noise, not below it.
  const double mse = (oob - s.target).squaredNorm() / static_cast<double>(s.target.size());
  CHECK(mse > 0.4 * 0.4 * 0.8);
}

TEST_CASE("residualize strips the covariate-explained part of a variable", "[forest]") {
  const Surface s = make_surface(1500, 31, 0.5);
  ForestParams p;
  p.seed = 13;
  const Vec resid = residualize(s.target, s.w, p);
  // The learnable component is mostly gone...
  CHECK(std::abs(correlation(resid, s.signal)) < 0.15);
  // ...while the noise part survives.
  CHECK(sample_sd(resid) > 0.3);
}

TEST_CASE("residualize with no covariates is the identity", "[forest]") {
  const Vec z = oracle::gaussian_vec(50, 4);
  Mat w(50, 0);
  const Vec resid = residualize(z, w, ForestParams{});
  CHECK((resid - z).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("constant targets produce constant predictions", "[forest]") {
  Mat w(40, 2);
  w.col(0) = oracle::gaussian_vec(40, 15);
  w.col(1) = oracle::gaussian_vec(40, 16);
  const Vec y = Vec::Constant(40, 2.5);
  ForestParams p;
  p.num_trees = 10;
  p.seed = 1;
  const ForestModel model = forest_fit(w, y, p);
  CHECK((forest_predict(model, w).array() - 2.5).abs().maxCoeff() < 1e-12);
  CHECK((forest_oob_predict(model, w).array() - 2.5).abs().maxCoeff() < 1e-12);
}

TEST_CASE("forest rejects unusable configurations and inputs", "[forest]") {
  Mat w(20, 1);
  w.col(0) = oracle::gaussian_vec(20, 2);
  const Vec y = oracle::gaussian_vec(20, 3);

  ForestParams bad;
  bad.num_trees = 0;
  CHECK_THROWS_AS(forest_fit(w, y, bad), ConfigError);

  ForestParams leafy;
  leafy.min_leaf = 50;  // needs at least 100 rows
  CHECK_THROWS_AS(forest_fit(w, y, leafy), StatError);

  Mat empty(20, 0);
  CHECK_THROWS_AS(forest_fit(empty, y, ForestParams{}), ConfigError);

  const ForestModel model = forest_fit(w, y, ForestParams{.num_trees = 5, .min_leaf = 5});
  Mat wide(20, 2);
  wide.setZero();
  CHECK_THROWS_AS(forest_predict(model, wide), ConfigError);
  CHECK_THROWS_AS(forest_oob_predict(model, wide), ConfigError);

  Vec short_y(19);
  short_y.setZero();
  CHECK_THROWS_AS(forest_fit(w, short_y, ForestParams{}), ConfigError);
}

TEST_CASE("min_leaf is honored by every leaf", "[forest]") {
  // With min_leaf = m and bootstrap off, no prediction can average fewer than
  // m training targets, so predictions live in the convex hull of leaf means
  // strictly coarser than the raw targets.
  ForestParams p;
  p.num_trees = 1;
  p.min_leaf = 8;
  p.bootstrap = false;
  p.seed = 6;
  Mat w(64, 1);
  w.col(0) = oracle::gaussian_vec(64, 21);
  Vec y(64);
  for (Eigen::Index i = 0; i < 64; ++i) y[i] = (i % 2 == 0) ? 1.0 : -1.0;
  const ForestModel model = forest_fit(w, y, p);
  const Vec pred = forest_predict(model, w);
  // One tree over 64 rows with >= 8 rows per leaf has at most 8 leaves, so at
  // most 8 distinct prediction values can appear.
  std::set<double> distinct(pred.data(), pred.data() + pred.size());
  CHECK(distinct.size() <= 8);
  CHECK(pred.cwiseAbs().maxCoeff() <= 1.0 + 1e-12);
}
