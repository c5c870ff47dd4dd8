#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <vector>

#include "ivcheck/errors.hpp"
#include "ivcheck/random.hpp"
#include "ivcheck/regression.hpp"

namespace ivcheck {

enum class HsicMethod { Permutation, Gamma, LargeScale };

struct HsicConfig {
  HsicMethod method = HsicMethod::Permutation;
  int permutations = 500;
  int num_features = 100;       // random Fourier features for LargeScale
  int large_scale_threshold = 2000;  // n at or above which auto-selection picks LargeScale
  double bandwidth_a = 0.0;     // 0 = median heuristic
  double bandwidth_b = 0.0;
  std::uint64_t seed = 0;
};

struct IndependenceResult {
  double statistic = 0.0;
  double p_value = 1.0;
  HsicMethod method = HsicMethod::Permutation;
  double bandwidth_a = 0.0;
  double bandwidth_b = 0.0;
  Eigen::Index n = 0;
};

// Median of pairwise absolute differences over a deterministic subsample of at
// most 1000 points (stride over indices, so the choice is seed-independent).
inline double median_bandwidth(const Vec& v) {
  const Eigen::Index n = v.size();
  if (n < 2) throw ConfigError("median_bandwidth: needs at least 2 points");
  const Eigen::Index stride = (n + 999) / 1000;
  std::vector<double> pts;
  for (Eigen::Index i = 0; i < n && pts.size() < 1000; i += stride) pts.push_back(v[i]);
  const std::size_t m = pts.size();
  std::vector<double> diffs;
  diffs.reserve(m * (m - 1) / 2);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) diffs.push_back(std::abs(pts[i] - pts[j]));
  }
  auto mid = diffs.begin() + static_cast<std::ptrdiff_t>(diffs.size() / 2);
  std::nth_element(diffs.begin(), mid, diffs.end());
  double med = *mid;
  if (med <= 0.0) {
    // Heavily tied sample: fall back to the mean positive difference.
    double acc = 0.0;
    std::size_t cnt = 0;
    for (double d : diffs) {
      if (d > 0.0) {
        acc += d;
        ++cnt;
      }
    }
    if (cnt == 0) throw StatError("median_bandwidth: input is constant");
    med = acc / static_cast<double>(cnt);
  }
  return med;
}

namespace detail {

inline Mat gaussian_kernel(const Vec& v, double sigma) {
  const Eigen::Index n = v.size();
  const double inv = 1.0 / (2.0 * sigma * sigma);
  Mat k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = v[i] - v[j];
      const double val = std::exp(-d * d * inv);
      k(i, j) = val;
      k(j, i) = val;
    }
  }
  return k;
}

// Double centering: HKH with H = I - (1/n)11'.
inline Mat center_kernel(const Mat& k) {
  const Vec rm = k.rowwise().mean();
  const double gm = rm.mean();
  Mat c = k;
  c.colwise() -= rm;
  c.rowwise() -= rm.transpose();
  c.array() += gm;
  return c;
}

inline void check_pair(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw ConfigError("hsic: inputs must share length");
  if (a.size() < 5) throw ConfigError("hsic: needs at least 5 points");
}

inline double resolve_bandwidth(const Vec& v, double override_value) {
  if (override_value < 0.0) throw ConfigError("hsic: bandwidth must be positive");
  return override_value > 0.0 ? override_value : median_bandwidth(v);
}

}  // namespace detail

// Biased V-statistic (1/n^2) trace(K H L H) with Gaussian kernels.
inline double hsic_statistic(const Vec& a, const Vec& b, double sigma_a, double sigma_b) {
  detail::check_pair(a, b);
  if (!(sigma_a > 0.0) || !(sigma_b > 0.0)) throw ConfigError("hsic: bandwidths must be positive");
  const Eigen::Index n = a.size();
  const Mat kc = detail::center_kernel(detail::gaussian_kernel(a, sigma_a));
  const Mat l = detail::gaussian_kernel(b, sigma_b);
  return kc.cwiseProduct(l).sum() / static_cast<double>(n * n);
}

// Permutation null: b is re-indexed by seeded permutations; each permutation's
// RNG stream is derived from (seed, index) so results do not depend on order.
inline IndependenceResult hsic_test_permutation(const Vec& a, const Vec& b, const HsicConfig& cfg) {
  detail::check_pair(a, b);
  if (cfg.permutations < 100) throw ConfigError("hsic: needs at least 100 permutations");
  const Eigen::Index n = a.size();
  const double sa = detail::resolve_bandwidth(a, cfg.bandwidth_a);
  const double sb = detail::resolve_bandwidth(b, cfg.bandwidth_b);

  const Mat kc = detail::center_kernel(detail::gaussian_kernel(a, sa));
  const Mat l = detail::gaussian_kernel(b, sb);
  const double n2 = static_cast<double>(n * n);
  const double observed = kc.cwiseProduct(l).sum() / n2;

  std::vector<Eigen::Index> perm(static_cast<std::size_t>(n));
  int exceed = 0;
  for (int r = 0; r < cfg.permutations; ++r) {
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    Rng rng = make_rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(r)));
    std::shuffle(perm.begin(), perm.end(), rng);
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index pi = perm[static_cast<std::size_t>(i)];
      for (Eigen::Index j = 0; j < n; ++j) {
        acc += kc(i, j) * l(pi, perm[static_cast<std::size_t>(j)]);
      }
    }
    if (acc / n2 >= observed) ++exceed;
  }

  IndependenceResult res;
  res.statistic = observed;
  res.p_value = (1.0 + exceed) / (1.0 + cfg.permutations);
  res.method = HsicMethod::Permutation;
  res.bandwidth_a = sa;
  res.bandwidth_b = sb;
  res.n = n;
  return res;
}

// Gamma null moment-matched to the permutation-null mean and variance, both in
// closed form from the kernel matrices. n * HSIC_b is compared against
// Gamma(mean^2/var, var/mean).
inline IndependenceResult hsic_test_gamma(const Vec& a, const Vec& b, const HsicConfig& cfg) {
  detail::check_pair(a, b);
  const Eigen::Index n = a.size();
  if (n < 30) throw ConfigError("hsic gamma: needs at least 30 points");
  const double sa = detail::resolve_bandwidth(a, cfg.bandwidth_a);
  const double sb = detail::resolve_bandwidth(b, cfg.bandwidth_b);
  const double nn = static_cast<double>(n);

  const Mat k = detail::gaussian_kernel(a, sa);
  const Mat l = detail::gaussian_kernel(b, sb);
  const Mat kc = detail::center_kernel(k);
  const Mat lc = detail::center_kernel(l);

  const Mat prod = kc.cwiseProduct(lc);
  const double stat = prod.sum() / (nn * nn);  // HSIC_b

  const Mat b2 = (prod / 6.0).array().square();
  double var_hsic = (b2.sum() - b2.trace()) / (nn * (nn - 1.0));
  var_hsic *= 72.0 * (nn - 4.0) * (nn - 5.0) / (nn * (nn - 1.0) * (nn - 2.0) * (nn - 3.0));

  const double mu_x = (k.sum() - nn) / (nn * (nn - 1.0));
  const double mu_y = (l.sum() - nn) / (nn * (nn - 1.0));
  const double mean_hsic = (1.0 + mu_x * mu_y - mu_x - mu_y) / nn;
  if (!(var_hsic > 0.0) || !(mean_hsic > 0.0)) {
    throw StatError("hsic gamma: degenerate null (matched moments non-positive)");
  }

  const double shape = mean_hsic * mean_hsic / var_hsic;
  const double scale = var_hsic * nn / mean_hsic;
  const double t = nn * stat;

  IndependenceResult res;
  res.statistic = stat;
  res.p_value = std::clamp(boost::math::gamma_q(shape, std::max(t, 0.0) / scale), 0.0, 1.0);
  res.method = HsicMethod::Gamma;
  res.bandwidth_a = sa;
  res.bandwidth_b = sb;
  res.n = n;
  return res;
}

// Random-Fourier-feature approximation. With centered feature maps Phi, Psi the
// statistic ||Phi' Psi / n||_F^2 estimates HSIC at cost O(n * num_features^2);
// under independence n * stat converges to a weighted chi-square whose first
// two moments come from the feature covariances, matched here by a gamma law.
inline IndependenceResult hsic_test_large_scale(const Vec& a, const Vec& b, const HsicConfig& cfg) {
  detail::check_pair(a, b);
  const Eigen::Index n = a.size();
  if (n < 200) throw ConfigError("hsic large-scale: needs at least 200 points");
  if (cfg.num_features < 10) throw ConfigError("hsic large-scale: needs at least 10 features");
  const double sa = detail::resolve_bandwidth(a, cfg.bandwidth_a);
  const double sb = detail::resolve_bandwidth(b, cfg.bandwidth_b);
  const int d = cfg.num_features;
  const double nn = static_cast<double>(n);

  Rng rng = make_rng(cfg.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);

  auto features = [&](const Vec& v, double sigma) {
    Vec freq(d), shift(d);
    for (int j = 0; j < d; ++j) freq[j] = gauss(rng) / sigma;
    for (int j = 0; j < d; ++j) shift[j] = phase(rng);
    Mat f(n, d);
    const double scale = std::sqrt(2.0 / static_cast<double>(d));
    for (int j = 0; j < d; ++j) {
      f.col(j) = (v.array() * freq[j] + shift[j]).cos() * scale;
    }
    f.rowwise() -= f.colwise().mean();
    return f;
  };
  const Mat fa = features(a, sa);
  const Mat fb = features(b, sb);

  const Mat cross = fa.transpose() * fb / nn;
  const double stat = cross.squaredNorm();

  const Mat ca = fa.transpose() * fa / nn;
  const Mat cb = fb.transpose() * fb / nn;
  const double mean = ca.trace() * cb.trace();
  const double var = 2.0 * ca.squaredNorm() * cb.squaredNorm();
  if (!(mean > 0.0) || !(var > 0.0)) {
    throw StatError("hsic large-scale: degenerate null (feature covariances vanish)");
  }

  const double shape = mean * mean / var;
  const double scale = var / mean;

  IndependenceResult res;
  res.statistic = stat;
  res.p_value = std::clamp(boost::math::gamma_q(shape, std::max(nn * stat, 0.0) / scale), 0.0, 1.0);
  res.method = HsicMethod::LargeScale;
  res.bandwidth_a = sa;
  res.bandwidth_b = sb;
  res.n = n;
  return res;
}

inline IndependenceResult hsic_test(const Vec& a, const Vec& b, const HsicConfig& cfg) {
  switch (cfg.method) {
    case HsicMethod::Permutation:
      return hsic_test_permutation(a, b, cfg);
    case HsicMethod::Gamma:
      return hsic_test_gamma(a, b, cfg);
    case HsicMethod::LargeScale:
      return hsic_test_large_scale(a, b, cfg);
  }
  throw ConfigError("hsic: unknown method");
}

}  // namespace ivcheck
