#include "defectcast/symptoms/trees.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace defectcast::symptoms {

namespace {

struct Builder {
	const Matrix &x;
	std::span<const double> y;
	const TreeOptions &options;
	Rng *rng;
	RegressionTree tree;

	int grow(std::vector<std::size_t> rows, int depth) {
		double sum = 0.0;
		for (auto r : rows) {
			sum += y[r];
		}
		const auto n = static_cast<double>(rows.size());
		const int index = static_cast<int>(tree.nodes.size());
		tree.nodes.push_back({});
		tree.nodes[static_cast<std::size_t>(index)].value = sum / n;

		const bool depth_left = options.max_depth < 0 || depth < options.max_depth;
		if (!depth_left || rows.size() < 2 * std::max<std::size_t>(options.min_leaf, 1)) {
			return index;
		}

		const auto p = static_cast<std::size_t>(x.cols());
		std::vector<std::size_t> features(p);
		std::iota(features.begin(), features.end(), 0);
		const std::size_t m = options.features_per_split == 0 ? p : std::min(options.features_per_split, p);
		if (m < p) {
			// partial Fisher-Yates: the first m entries form the sample
			for (std::size_t i = 0; i < m; ++i) {
				const std::size_t j = i + static_cast<std::size_t>(rng->below(p - i));
				std::swap(features[i], features[j]);
			}
			features.resize(m);
			std::sort(features.begin(), features.end());
		}

		double best_gain = 0.0;
		int best_feature = -1;
		double best_threshold = 0.0;
		const double parent = sum * sum / n;
		std::vector<std::size_t> order = rows;
		for (std::size_t f : features) {
			const auto col = static_cast<Eigen::Index>(f);
			std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
				const double xa = x(static_cast<Eigen::Index>(a), col);
				const double xb = x(static_cast<Eigen::Index>(b), col);
				return xa < xb || (xa == xb && a < b);
			});
			double left = 0.0;
			for (std::size_t i = 0; i + 1 < order.size(); ++i) {
				left += y[order[i]];
				const std::size_t nl = i + 1;
				const std::size_t nr = order.size() - nl;
				if (nl < options.min_leaf || nr < options.min_leaf) {
					continue;
				}
				const double xi = x(static_cast<Eigen::Index>(order[i]), col);
				const double xn = x(static_cast<Eigen::Index>(order[i + 1]), col);
				if (xi == xn) {
					continue;
				}
				const double right = sum - left;
				const double gain = left * left / static_cast<double>(nl) + right * right / static_cast<double>(nr) - parent;
				if (gain > best_gain + 1e-12 * std::max(1.0, std::abs(parent))) {
					best_gain = gain;
					best_feature = static_cast<int>(f);
					best_threshold = 0.5 * (xi + xn);
				}
			}
		}
		if (best_feature < 0) {
			return index;
		}
		std::vector<std::size_t> left_rows, right_rows;
		for (auto r : rows) {
			(x(static_cast<Eigen::Index>(r), best_feature) <= best_threshold ? left_rows : right_rows).push_back(r);
		}
		rows.clear();
		rows.shrink_to_fit();
		const int l = grow(std::move(left_rows), depth + 1);
		const int r = grow(std::move(right_rows), depth + 1);
		auto &node = tree.nodes[static_cast<std::size_t>(index)];
		node.feature = best_feature;
		node.threshold = best_threshold;
		node.left = l;
		node.right = r;
		node.gain = best_gain;
		return index;
	}
};

double mse_on(const RegressionTree &tree, const Matrix &x, std::span<const double> y, std::span<const std::size_t> rows) {
	double s = 0.0;
	for (auto r : rows) {
		const double e = y[r] - tree.predict(x, static_cast<Eigen::Index>(r));
		s += e * e;
	}
	return s / static_cast<double>(rows.size());
}

} // namespace

double RegressionTree::predict(std::span<const double> row) const {
	std::size_t i = 0;
	while (nodes[i].feature >= 0) {
		const auto &n = nodes[i];
		i = static_cast<std::size_t>(row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right);
	}
	return nodes[i].value;
}

double RegressionTree::predict(const Matrix &x, Eigen::Index row) const {
	std::size_t i = 0;
	while (nodes[i].feature >= 0) {
		const auto &n = nodes[i];
		i = static_cast<std::size_t>(x(row, n.feature) <= n.threshold ? n.left : n.right);
	}
	return nodes[i].value;
}

bool RegressionTree::uses_feature(int feature) const {
	return std::any_of(nodes.begin(), nodes.end(), [feature](const TreeNode &n) { return n.feature == feature; });
}

RegressionTree fit_tree(const Matrix &x, std::span<const double> y, std::span<const std::size_t> rows,
                        const TreeOptions &options, Rng *rng) {
	if (rows.empty()) {
		throw PreconditionError("cannot grow a tree on zero rows");
	}
	if (static_cast<std::size_t>(x.rows()) != y.size()) {
		throw PreconditionError("design matrix and target differ in length");
	}
	if (options.features_per_split != 0 && options.features_per_split < static_cast<std::size_t>(x.cols()) && !rng) {
		throw PreconditionError("feature sub-sampling needs a random stream");
	}
	Builder b{x, y, options, rng, {}};
	b.grow(std::vector<std::size_t>(rows.begin(), rows.end()), 0);
	return std::move(b.tree);
}

Forest fit_forest(const Matrix &x, std::span<const double> y, std::uint64_t seed, const ForestOptions &options) {
	const auto n = static_cast<std::size_t>(x.rows());
	const auto p = static_cast<std::size_t>(x.cols());
	TreeOptions tree_options;
	tree_options.min_leaf = options.min_leaf;
	tree_options.features_per_split = options.features_per_split == 0 ? (p + 2) / 3 : options.features_per_split;

	Forest forest;
	forest.permutation_importance.assign(p, 0.0);
	std::size_t scored = 0;
	for (std::size_t t = 0; t < options.trees; ++t) {
		Rng rng(derive_seed(seed, t));
		std::vector<std::size_t> sample(n);
		std::vector<bool> in_bag(n, false);
		for (auto &s : sample) {
			s = static_cast<std::size_t>(rng.below(n));
			in_bag[s] = true;
		}
		std::vector<std::size_t> oob;
		for (std::size_t i = 0; i < n; ++i) {
			if (!in_bag[i]) {
				oob.push_back(i);
			}
		}
		auto tree = fit_tree(x, y, sample, tree_options, &rng);
		if (!oob.empty()) {
			++scored;
			const double base = mse_on(tree, x, y, oob);
			std::vector<double> row(p);
			for (std::size_t f = 0; f < p; ++f) {
				if (!tree.uses_feature(static_cast<int>(f))) {
					continue;
				}
				std::vector<std::size_t> shuffled = oob;
				rng.shuffle(shuffled);
				double s = 0.0;
				for (std::size_t i = 0; i < oob.size(); ++i) {
					const auto r = static_cast<Eigen::Index>(oob[i]);
					for (std::size_t c = 0; c < p; ++c) {
						row[c] = x(r, static_cast<Eigen::Index>(c));
					}
					row[f] = x(static_cast<Eigen::Index>(shuffled[i]), static_cast<Eigen::Index>(f));
					const double e = y[oob[i]] - tree.predict(row);
					s += e * e;
				}
				forest.permutation_importance[f] += s / static_cast<double>(oob.size()) - base;
			}
		}
		forest.trees.push_back(std::move(tree));
		forest.out_of_bag.push_back(std::move(oob));
	}
	if (scored > 0) {
		for (auto &v : forest.permutation_importance) {
			v /= static_cast<double>(scored);
		}
	}
	return forest;
}

double Boosting::predict(std::span<const double> row, double learning_rate) const {
	double v = base;
	for (const auto &t : trees) {
		v += learning_rate * t.predict(row);
	}
	return v;
}

Boosting fit_boosting(const Matrix &x, std::span<const double> y, const BoostingOptions &options) {
	const auto n = static_cast<std::size_t>(x.rows());
	const auto p = static_cast<std::size_t>(x.cols());
	Boosting model;
	model.gain_importance.assign(p, 0.0);
	if (n == 0) {
		return model;
	}
	model.base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
	std::vector<double> fitted(n, model.base);
	std::vector<double> residual(n);
	std::vector<std::size_t> rows(n);
	std::iota(rows.begin(), rows.end(), 0);
	TreeOptions tree_options;
	tree_options.max_depth = options.max_depth;
	tree_options.min_leaf = options.min_leaf;
	for (int round = 0; round < options.rounds; ++round) {
		for (std::size_t i = 0; i < n; ++i) {
			residual[i] = y[i] - fitted[i];
		}
		auto tree = fit_tree(x, residual, rows, tree_options);
		for (const auto &node : tree.nodes) {
			if (node.feature >= 0) {
				model.gain_importance[static_cast<std::size_t>(node.feature)] += node.gain;
			}
		}
		double loss = 0.0;
		for (std::size_t i = 0; i < n; ++i) {
			fitted[i] += options.learning_rate * tree.predict(x, static_cast<Eigen::Index>(i));
			const double e = y[i] - fitted[i];
			loss += e * e;
		}
		model.loss_history.push_back(loss / static_cast<double>(n));
		model.trees.push_back(std::move(tree));
	}
	return model;
}

} // namespace defectcast::symptoms
