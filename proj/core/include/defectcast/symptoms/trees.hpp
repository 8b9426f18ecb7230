#pragma once

#include "defectcast/common.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

namespace defectcast::symptoms {

/// Row-major design matrix: one row per observation.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct TreeNode {
	int feature = -1; // -1 marks a leaf
	double threshold = 0.0;
	int left = -1;
	int right = -1;
	double value = 0.0;
	/// Reduction in summed squared error achieved by this split.
	double gain = 0.0;
};

struct RegressionTree {
	std::vector<TreeNode> nodes;

	double predict(std::span<const double> row) const;
	double predict(const Matrix &x, Eigen::Index row) const;
	bool uses_feature(int feature) const;
};

struct TreeOptions {
	/// Negative: grow until leaves cannot be split.
	int max_depth = -1;
	std::size_t min_leaf = 1;
	/// Features examined per split; 0 means all of them.
	std::size_t features_per_split = 0;
};

/// CART regression tree grown on `rows` (indices may repeat, as in a bootstrap sample).
/// `rng` is required when features_per_split is smaller than the feature count.
RegressionTree fit_tree(const Matrix &x, std::span<const double> y, std::span<const std::size_t> rows,
                        const TreeOptions &options, Rng *rng = nullptr);

struct ForestOptions {
	std::size_t trees = 100;
	std::size_t min_leaf = 5;
	/// 0 selects ceil(p / 3).
	std::size_t features_per_split = 0;
};

struct Forest {
	std::vector<RegressionTree> trees;
	std::vector<std::vector<std::size_t>> out_of_bag;
	/// Mean out-of-bag increase in squared error when a feature is permuted.
	std::vector<double> permutation_importance;
};

Forest fit_forest(const Matrix &x, std::span<const double> y, std::uint64_t seed, const ForestOptions &options = {});

struct BoostingOptions {
	int rounds = 200;
	int max_depth = 3;
	double learning_rate = 0.1;
	std::size_t min_leaf = 1;
};

struct Boosting {
	double base = 0.0;
	std::vector<RegressionTree> trees;
	/// Training mean squared error after each round.
	std::vector<double> loss_history;
	/// Total split gain per feature.
	std::vector<double> gain_importance;

	double predict(std::span<const double> row, double learning_rate) const;
};

Boosting fit_boosting(const Matrix &x, std::span<const double> y, const BoostingOptions &options = {});

} // namespace defectcast::symptoms
