#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "abcrf/parallel.hpp"
#include "abcrf/random.hpp"

namespace abcrf {

/// Labelled parameter vectors for classifier training. Features live on the
/// sampling scale of the priors (log10 for log-uniform parameters).
struct Dataset {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> x; // row-major, n_rows * n_cols
    std::vector<std::uint8_t> y;

    double at(std::size_t row, std::size_t col) const { return x[row * n_cols + col]; }

    void validate() const {
        if (n_rows < 2) throw std::invalid_argument("Dataset: need at least 2 rows");
        if (n_cols < 1) throw std::invalid_argument("Dataset: need at least 1 feature");
        if (x.size() != n_rows * n_cols || y.size() != n_rows)
            throw std::invalid_argument("Dataset: shape mismatch");
        bool has0 = false, has1 = false;
        for (auto label : y) {
            if (label > 1) throw std::invalid_argument("Dataset: labels must be 0 or 1");
            (label ? has1 : has0) = true;
        }
        if (!has0 || !has1)
            throw std::invalid_argument("Dataset: both classes must be present; "
                                        "single-class data is unlearnable");
        for (double v : x)
            if (!std::isfinite(v)) throw std::invalid_argument("Dataset: non-finite feature value");
    }
};

enum class Bootstrap : std::uint8_t {
    stratified, // equal per-class draws (n/2 each, with replacement)
    plain,      // n draws with replacement from all rows
    none        // every row once (single-tree / debugging use)
};

struct ForestParams {
    int n_trees = 500;
    int mtry = 0; // 0: floor(sqrt(p))
    int min_node_size = 1;
    int max_depth = 0; // 0: unlimited
    Bootstrap bootstrap = Bootstrap::stratified;

    void validate() const {
        if (n_trees < 1) throw std::invalid_argument("ForestParams: n_trees must be >= 1");
        if (mtry < 0) throw std::invalid_argument("ForestParams: mtry must be >= 0");
        if (min_node_size < 1) throw std::invalid_argument("ForestParams: min_node_size must be >= 1");
        if (max_depth < 0) throw std::invalid_argument("ForestParams: max_depth must be >= 0");
    }

    int resolved_mtry(std::size_t p) const {
        if (mtry > 0) {
            if (static_cast<std::size_t>(mtry) > p)
                throw std::invalid_argument("ForestParams: mtry exceeds feature count");
            return mtry;
        }
        return std::max(1, static_cast<int>(std::sqrt(static_cast<double>(p))));
    }
};

/// Gini impurity 1 - sum((count_k / total)^2).
inline double gini(std::span<const std::size_t> counts) {
    std::size_t total = 0;
    for (auto c : counts) total += c;
    if (total == 0) throw std::invalid_argument("gini: empty node");
    double sum = 0.0;
    for (auto c : counts) {
        const double p = static_cast<double>(c) / static_cast<double>(total);
        sum += p * p;
    }
    return 1.0 - sum;
}

inline double gini(std::size_t c0, std::size_t c1) {
    const std::size_t counts[2] = {c0, c1};
    return gini(counts);
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double impurity = 0.0; // child-size-weighted Gini, normalized by node size
};

namespace detail {

/// Split quality as an exact rational: maximizing
///   (sum of squared class counts left)/n_left + (same right)/n_right
/// minimizes weighted Gini. Integer comparisons make tie-breaking (lowest
/// feature, then smallest threshold) reproducible across platforms.
struct SplitScore {
    std::uint64_t num = 0; // a_left * n_right + a_right * n_left
    std::uint64_t den = 1; // n_left * n_right

    bool beats(const SplitScore& other) const {
        return static_cast<unsigned __int128>(num) * other.den >
               static_cast<unsigned __int128>(other.num) * den;
    }
    /// Strictly better than leaving the node unsplit (a_parent / n_parent).
    bool improves(std::uint64_t a_parent, std::uint64_t n_parent) const {
        return static_cast<unsigned __int128>(num) * n_parent >
               static_cast<unsigned __int128>(a_parent) * den;
    }
};

inline std::uint64_t sq(std::uint64_t v) { return v * v; }

} // namespace detail

/// Best split of the given rows over the candidate features: minimizes
/// child-size-weighted Gini over midpoints between consecutive distinct
/// sorted feature values. Returns nothing when the rows are pure, cannot be
/// separated, or no candidate strictly reduces impurity. Rows with
/// value <= threshold go left; a midpoint that rounds up to the higher
/// value is replaced by the lower value so both children stay non-empty.
inline std::optional<Split> best_split(const Dataset& data, std::span<const std::size_t> rows,
                                       std::span<const int> features, int min_child = 1) {
    const std::uint64_t n = rows.size();
    if (n < 2) return std::nullopt;
    std::uint64_t c1 = 0;
    for (auto row : rows) c1 += data.y[row];
    const std::uint64_t c0 = n - c1;
    if (c0 == 0 || c1 == 0) return std::nullopt;
    const std::uint64_t a_parent = detail::sq(c0) + detail::sq(c1);

    std::optional<Split> best;
    detail::SplitScore best_score;
    std::vector<std::pair<double, std::uint8_t>> sorted;
    sorted.reserve(rows.size());

    for (int f : features) {
        sorted.clear();
        for (auto row : rows) sorted.emplace_back(data.at(row, f), data.y[row]);
        std::sort(sorted.begin(), sorted.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::uint64_t l0 = 0, l1 = 0;
        for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
            (sorted[k].second ? l1 : l0) += 1;
            const double lo = sorted[k].first, hi = sorted[k + 1].first;
            if (!(lo < hi)) continue;
            const std::uint64_t n_left = l0 + l1, n_right = n - n_left;
            if (n_left < static_cast<std::uint64_t>(min_child) ||
                n_right < static_cast<std::uint64_t>(min_child))
                continue;
            double threshold = lo + (hi - lo) / 2.0;
            if (!(threshold < hi)) threshold = lo;

            const std::uint64_t a_left = detail::sq(l0) + detail::sq(l1);
            const std::uint64_t a_right = detail::sq(c0 - l0) + detail::sq(c1 - l1);
            const detail::SplitScore score{a_left * n_right + a_right * n_left, n_left * n_right};
            if (!score.improves(a_parent, n)) continue;
            if (!best || score.beats(best_score)) {
                const double weighted =
                    (static_cast<double>(n_left) * gini(l0, l1) +
                     static_cast<double>(n_right) * gini(c0 - l0, c1 - l1)) /
                    static_cast<double>(n);
                best = Split{f, threshold, weighted};
                best_score = score;
            }
        }
    }
    return best;
}

struct TreeNode {
    int feature = -1; // -1: leaf
    double threshold = 0.0;
    int left = -1, right = -1;
    double value = 0.0; // leaf: class-1 fraction of training rows reaching it

    bool is_leaf() const { return feature < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // preorder, root at 0

    double leaf_value(std::span<const double> x) const {
        int at = 0;
        while (!nodes[at].is_leaf())
            at = x[nodes[at].feature] <= nodes[at].threshold ? nodes[at].left : nodes[at].right;
        return nodes[at].value;
    }
};

struct Forest {
    std::size_t p = 0;
    ForestParams params;
    std::vector<Tree> trees;
    // training-scale metadata, carried through serialization
    std::vector<std::string> feature_names;
    std::vector<std::string> feature_scales;
};

struct OobSummary {
    std::size_t n_rows = 0;
    std::size_t evaluated = 0; // rows left out of at least one bootstrap
    std::size_t misclassified = 0;
    double error_rate = 0.0;
};

namespace detail {

struct TreeScratch {
    std::vector<std::size_t> rows;
    std::vector<int> feature_pool;
    std::vector<int> chosen;
};

inline int grow_node(Tree& tree, const Dataset& data, TreeScratch& ws, std::size_t begin,
                     std::size_t end, int depth, const ForestParams& params, int mtry, Rng& rng) {
    const int idx = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();

    const std::size_t n = end - begin;
    std::size_t c1 = 0;
    for (std::size_t k = begin; k < end; ++k) c1 += data.y[ws.rows[k]];
    tree.nodes[idx].value = static_cast<double>(c1) / static_cast<double>(n);

    const bool depth_ok = params.max_depth == 0 || depth < params.max_depth;
    if (c1 == 0 || c1 == n || n < 2 * static_cast<std::size_t>(params.min_node_size) || !depth_ok)
        return idx;

    // mtry features without replacement, ascending so equal-impurity ties
    // resolve to the lowest feature index
    ws.chosen.clear();
    const std::size_t p = data.n_cols;
    for (int k = 0; k < mtry; ++k) {
        const std::size_t j = k + rng.uniform_index(p - k);
        std::swap(ws.feature_pool[k], ws.feature_pool[j]);
        ws.chosen.push_back(ws.feature_pool[k]);
    }
    std::sort(ws.chosen.begin(), ws.chosen.end());

    const auto split = best_split(data, std::span(ws.rows).subspan(begin, n), ws.chosen,
                                  params.min_node_size);
    if (!split) return idx;

    const auto mid_it = std::partition(
        ws.rows.begin() + begin, ws.rows.begin() + end,
        [&](std::size_t row) { return data.at(row, split->feature) <= split->threshold; });
    const std::size_t mid = static_cast<std::size_t>(mid_it - ws.rows.begin());

    tree.nodes[idx].feature = split->feature;
    tree.nodes[idx].threshold = split->threshold;
    const int left = grow_node(tree, data, ws, begin, mid, depth + 1, params, mtry, rng);
    const int right = grow_node(tree, data, ws, mid, end, depth + 1, params, mtry, rng);
    tree.nodes[idx].left = left;
    tree.nodes[idx].right = right;
    return idx;
}

} // namespace detail

/// Trains a forest of CART trees on bootstrap samples. Deterministic for a
/// given (data, params, seed) regardless of worker count: tree t draws all
/// of its randomness from a stream derived from (seed, t). When `oob` is
/// given, rows outside each tree's bootstrap are voted on by that tree and
/// the aggregated out-of-bag error is reported (requires bootstrapping).
inline Forest train(const Dataset& data, const ForestParams& params, std::uint64_t seed,
                    unsigned workers = 0, OobSummary* oob = nullptr) {
    data.validate();
    params.validate();
    const std::size_t n = data.n_rows, p = data.n_cols;
    const int mtry = params.resolved_mtry(p);

    std::vector<std::size_t> class_rows[2];
    for (std::size_t row = 0; row < n; ++row) class_rows[data.y[row]].push_back(row);

    Forest forest;
    forest.p = p;
    forest.params = params;
    forest.trees.resize(params.n_trees);

    std::vector<std::atomic<std::uint32_t>> votes1(oob ? n : 0), votes(oob ? n : 0);

    parallel_for(static_cast<std::size_t>(params.n_trees), workers, [&](std::size_t t) {
        Rng rng(derive_seed(seed, 0x7265656eULL, t));
        detail::TreeScratch ws;
        ws.feature_pool.resize(p);
        for (std::size_t j = 0; j < p; ++j) ws.feature_pool[j] = static_cast<int>(j);

        switch (params.bootstrap) {
        case Bootstrap::none:
            ws.rows.resize(n);
            for (std::size_t k = 0; k < n; ++k) ws.rows[k] = k;
            break;
        case Bootstrap::plain:
            ws.rows.resize(n);
            for (std::size_t k = 0; k < n; ++k) ws.rows[k] = rng.uniform_index(n);
            break;
        case Bootstrap::stratified: {
            const std::size_t m = std::max<std::size_t>(1, n / 2);
            ws.rows.reserve(2 * m);
            for (int cls = 0; cls < 2; ++cls)
                for (std::size_t k = 0; k < m; ++k)
                    ws.rows.push_back(class_rows[cls][rng.uniform_index(class_rows[cls].size())]);
            break;
        }
        }

        Tree& tree = forest.trees[t];
        tree.nodes.reserve(64);
        detail::grow_node(tree, data, ws, 0, ws.rows.size(), 0, params, mtry, rng);

        if (oob && params.bootstrap != Bootstrap::none) {
            std::vector<std::uint8_t> in_bag(n, 0);
            for (auto row : ws.rows) in_bag[row] = 1;
            for (std::size_t row = 0; row < n; ++row) {
                if (in_bag[row]) continue;
                const double frac = tree.leaf_value(
                    std::span<const double>(data.x.data() + row * p, p));
                votes[row].fetch_add(1, std::memory_order_relaxed);
                if (frac > 0.5) votes1[row].fetch_add(1, std::memory_order_relaxed);
            }
        }
    });

    if (oob) {
        oob->n_rows = n;
        oob->evaluated = 0;
        oob->misclassified = 0;
        for (std::size_t row = 0; row < n; ++row) {
            const std::uint32_t v = votes[row].load();
            if (v == 0) continue;
            ++oob->evaluated;
            const bool predicted = 2 * votes1[row].load() > v;
            if (predicted != static_cast<bool>(data.y[row])) ++oob->misclassified;
        }
        oob->error_rate = oob->evaluated
                              ? static_cast<double>(oob->misclassified) / oob->evaluated
                              : 0.0;
    }
    return forest;
}

/// Predicted acceptance probability: fraction of trees whose leaf for x has
/// class-1 majority (leaf fraction > 0.5), matching classification-mode
/// vote aggregation.
inline double predict_proba(const Forest& forest, std::span<const double> x) {
    if (x.size() != forest.p)
        throw std::invalid_argument("predict_proba: expected " + std::to_string(forest.p) +
                                    " features, got " + std::to_string(x.size()));
    for (double v : x)
        if (!std::isfinite(v)) throw std::invalid_argument("predict_proba: non-finite input");
    std::size_t votes = 0;
    for (const auto& tree : forest.trees)
        if (tree.leaf_value(x) > 0.5) ++votes;
    return static_cast<double>(votes) / static_cast<double>(forest.trees.size());
}

} // namespace abcrf
