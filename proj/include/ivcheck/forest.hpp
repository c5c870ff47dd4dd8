#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "ivcheck/dataset.hpp"
#include "ivcheck/errors.hpp"
#include "ivcheck/random.hpp"

namespace ivcheck {

struct ForestParams {
  int num_trees = 200;
  int min_leaf = 5;
  int max_depth = 0;  // 0 = unbounded
  bool bootstrap = true;
  std::uint64_t seed = 0;
};

namespace detail {

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct Tree {
  std::vector<TreeNode> nodes;
  std::vector<std::uint8_t> inbag;  // per training row, for out-of-bag prediction
};

inline double tree_value(const Tree& t, const double* row) {
  int cur = 0;
  while (t.nodes[cur].feature >= 0) {
    const TreeNode& nd = t.nodes[cur];
    cur = (row[nd.feature] <= nd.threshold) ? nd.left : nd.right;
  }
  return t.nodes[cur].value;
}

}  // namespace detail

struct ForestModel {
  ForestParams params;
  Eigen::Index num_features = 0;
  std::vector<detail::Tree> trees;
};

namespace detail {

// Exact greedy SSE split over a random subset of ceil(sqrt(q)) features.
// Children must keep at least min_leaf rows; ties resolved to the first best
// candidate in iteration order so the build is deterministic.
inline Tree build_tree(const Mat& features, const Vec& target, const ForestParams& p,
                       std::uint64_t tree_seed) {
  const Eigen::Index n = features.rows();
  const int q = static_cast<int>(features.cols());
  const int mtry = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(q))));
  Rng rng = make_rng(tree_seed);

  Tree tree;
  tree.inbag.assign(static_cast<std::size_t>(n), 0);
  std::vector<int> sample;
  sample.reserve(static_cast<std::size_t>(n));
  if (p.bootstrap) {
    std::uniform_int_distribution<Eigen::Index> pick(0, n - 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      const Eigen::Index j = pick(rng);
      sample.push_back(static_cast<int>(j));
      tree.inbag[static_cast<std::size_t>(j)] = 1;
    }
  } else {
    sample.resize(static_cast<std::size_t>(n));
    std::iota(sample.begin(), sample.end(), 0);
    std::fill(tree.inbag.begin(), tree.inbag.end(), std::uint8_t{1});
  }

  std::vector<int> feat_pool(static_cast<std::size_t>(q));
  std::iota(feat_pool.begin(), feat_pool.end(), 0);

  struct Work {
    int node;
    std::size_t begin, end;  // range in `sample`
    int depth;
  };
  tree.nodes.push_back({});
  std::vector<Work> stack{{0, 0, sample.size(), 0}};
  std::vector<std::pair<double, double>> vals;  // (feature value, target)

  while (!stack.empty()) {
    const Work wk = stack.back();
    stack.pop_back();
    const std::size_t m = wk.end - wk.begin;

    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = wk.begin; i < wk.end; ++i) {
      const double t = target[sample[i]];
      sum += t;
      sumsq += t * t;
    }
    const double mean = sum / static_cast<double>(m);
    const double node_sse = sumsq - sum * mean;

    auto make_leaf = [&]() {
      tree.nodes[wk.node].feature = -1;
      tree.nodes[wk.node].value = mean;
    };
    if (m < 2 * static_cast<std::size_t>(p.min_leaf) || node_sse <= 0.0 ||
        (p.max_depth > 0 && wk.depth >= p.max_depth)) {
      make_leaf();
      continue;
    }

    // Partial Fisher-Yates for the feature subset of this node.
    for (int j = 0; j < mtry; ++j) {
      std::uniform_int_distribution<int> pick(j, q - 1);
      std::swap(feat_pool[static_cast<std::size_t>(j)],
                feat_pool[static_cast<std::size_t>(pick(rng))]);
    }

    int best_feature = -1;
    double best_sse = node_sse;
    double best_thr = 0.0;
    for (int j = 0; j < mtry; ++j) {
      const int f = feat_pool[static_cast<std::size_t>(j)];
      vals.clear();
      for (std::size_t i = wk.begin; i < wk.end; ++i) {
        vals.emplace_back(features(sample[i], f), target[sample[i]]);
      }
      std::sort(vals.begin(), vals.end(),
                [](const auto& a, const auto& b) { return a.first < b.first; });
      double lsum = 0.0, lsumsq = 0.0;
      for (std::size_t s = 1; s < m; ++s) {
        const double t = vals[s - 1].second;
        lsum += t;
        lsumsq += t * t;
        if (s < static_cast<std::size_t>(p.min_leaf) ||
            m - s < static_cast<std::size_t>(p.min_leaf)) {
          continue;
        }
        if (!(vals[s - 1].first < vals[s].first)) continue;
        const double rsum = sum - lsum;
        const double rsumsq = sumsq - lsumsq;
        const double sse = (lsumsq - lsum * lsum / static_cast<double>(s)) +
                           (rsumsq - rsum * rsum / static_cast<double>(m - s));
        if (sse < best_sse) {
          best_sse = sse;
          best_feature = f;
          double thr = vals[s - 1].first + 0.5 * (vals[s].first - vals[s - 1].first);
          if (!(thr >= vals[s - 1].first) || thr >= vals[s].first) thr = vals[s - 1].first;
          best_thr = thr;
        }
      }
    }
    if (best_feature < 0) {
      make_leaf();
      continue;
    }

    const auto mid = std::stable_partition(
        sample.begin() + static_cast<std::ptrdiff_t>(wk.begin),
        sample.begin() + static_cast<std::ptrdiff_t>(wk.end),
        [&](int idx) { return features(idx, best_feature) <= best_thr; });
    const std::size_t split = static_cast<std::size_t>(mid - sample.begin());
    if (split == wk.begin || split == wk.end) {  // cannot happen for a strict threshold
      make_leaf();
      continue;
    }

    const int left = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    const int right = static_cast<int>(tree.nodes.size());
    tree.nodes.push_back({});
    tree.nodes[wk.node].feature = best_feature;
    tree.nodes[wk.node].threshold = best_thr;
    tree.nodes[wk.node].left = left;
    tree.nodes[wk.node].right = right;
    stack.push_back({right, split, wk.end, wk.depth + 1});
    stack.push_back({left, wk.begin, split, wk.depth + 1});
  }
  return tree;
}

}  // namespace detail

inline ForestModel forest_fit(const Mat& features, const Vec& target, const ForestParams& params) {
  const Eigen::Index n = features.rows();
  if (features.cols() < 1) throw ConfigError("forest_fit: needs at least one feature column");
  if (target.size() != n) throw ConfigError("forest_fit: feature and target lengths differ");
  if (params.num_trees < 1 || params.min_leaf < 1) {
    throw ConfigError("forest_fit: num_trees and min_leaf must be positive");
  }
  if (n < 2 * static_cast<Eigen::Index>(params.min_leaf)) {
    throw StatError("forest_fit: needs at least " + std::to_string(2 * params.min_leaf) +
                    " rows, got " + std::to_string(n));
  }
  ForestModel model;
  model.params = params;
  model.num_features = features.cols();
  model.trees.reserve(static_cast<std::size_t>(params.num_trees));
  for (int t = 0; t < params.num_trees; ++t) {
    model.trees.push_back(
        detail::build_tree(features, target, params, params.seed ^ static_cast<std::uint64_t>(t)));
  }
  return model;
}

inline Vec forest_predict(const ForestModel& model, const Mat& features) {
  if (features.cols() != model.num_features) {
    throw ConfigError("forest_predict: feature width does not match training width");
  }
  const Eigen::Index m = features.rows();
  Vec out(m);
  std::vector<double> row(static_cast<std::size_t>(model.num_features));
  for (Eigen::Index i = 0; i < m; ++i) {
    for (Eigen::Index j = 0; j < model.num_features; ++j) row[static_cast<std::size_t>(j)] = features(i, j);
    double acc = 0.0;
    for (const auto& tree : model.trees) acc += detail::tree_value(tree, row.data());
    out[i] = acc / static_cast<double>(model.trees.size());
  }
  return out;
}

// Out-of-bag conditional-mean estimate on the training rows: each row is
// predicted only by trees whose bootstrap sample missed it. Rows seen by every
// tree (vanishing probability at default num_trees) fall back to the full forest.
inline Vec forest_oob_predict(const ForestModel& model, const Mat& features) {
  if (features.cols() != model.num_features) {
    throw ConfigError("forest_oob_predict: feature width does not match training width");
  }
  const Eigen::Index n = features.rows();
  Vec out(n);
  std::vector<double> row(static_cast<std::size_t>(model.num_features));
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < model.num_features; ++j) row[static_cast<std::size_t>(j)] = features(i, j);
    double acc = 0.0;
    int used = 0;
    for (const auto& tree : model.trees) {
      if (tree.inbag[static_cast<std::size_t>(i)]) continue;
      acc += detail::tree_value(tree, row.data());
      ++used;
    }
    if (used == 0) {
      acc = 0.0;
      for (const auto& tree : model.trees) acc += detail::tree_value(tree, row.data());
      used = static_cast<int>(model.trees.size());
    }
    out[i] = acc / static_cast<double>(used);
  }
  return out;
}

// Z residual used by the covariate-adjusted test: Z minus the out-of-bag forest
// estimate of E[Z|W]. With no covariates the residual is Z itself.
inline Vec residualize(const Vec& z, const Mat& w, const ForestParams& params) {
  if (w.cols() == 0) return z;
  if (w.rows() != z.size()) throw ConfigError("residualize: lengths differ");
  const ForestModel model = forest_fit(w, z, params);
  return z - forest_oob_predict(model, w);
}

}  // namespace ivcheck
