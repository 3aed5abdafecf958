#pragma once

// Binary decision trees and the exact greedy split search shared by the
// tree learners.
//
// A split criterion C supplies:
//   typename C::Stats            additive sufficient statistics with a row
//                                count `n`, operator+= and operator-
//   void add(Stats&, row)        accumulate one training row
//   double gain(L, R, parent)    improvement of splitting parent into L, R
//   double min_gain(parent)      gains must exceed this to split
//   double scale(parent)         magnitude used for tie tolerances
//   double leaf_value(Stats)
//   bool is_pure(Stats)
//
// Two exact engines grow identical trees for the same criterion:
// `grow_sorting` sorts the node's rows per feature at every node (classic
// CART), `grow_presorted` sorts each column once and keeps per-node slices
// ordered by stable partitioning (column blocks).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "pnd/dataset.hpp"
#include "pnd/error.hpp"
#include "pnd/parallel.hpp"
#include "pnd/rng.hpp"

namespace pnd {

struct TreeNode {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::int64_t n_samples = 0;

    bool is_leaf() const { return feature < 0; }
    friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

// Nodes in a flat vector, root at index 0. Rows with x[feature] <= threshold
// go left.
class Tree {
public:
    std::vector<TreeNode> nodes;

    static Tree leaf(double value, std::int64_t n) {
        Tree t;
        t.nodes.push_back({-1, 0.0, -1, -1, value, n});
        return t;
    }

    double predict(std::span<const double> x) const {
        int i = 0;
        while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
            const auto& nd = nodes[static_cast<std::size_t>(i)];
            i = x[static_cast<std::size_t>(nd.feature)] <= nd.threshold ? nd.left : nd.right;
        }
        return nodes[static_cast<std::size_t>(i)].value;
    }

    std::size_t leaf_count() const {
        return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const auto& n) { return n.is_leaf(); }));
    }

    int depth() const { return nodes.empty() ? 0 : depth_from(0); }

    // Same tree with nodes renumbered in pre-order (node, left, right).
    Tree preorder() const {
        Tree out;
        if (nodes.empty()) return out;
        out.nodes.reserve(nodes.size());
        copy_preorder(0, out);
        return out;
    }

    friend bool operator==(const Tree&, const Tree&) = default;

private:
    int copy_preorder(int i, Tree& out) const {
        const auto& nd = nodes[static_cast<std::size_t>(i)];
        const int id = static_cast<int>(out.nodes.size());
        out.nodes.push_back(nd);
        if (nd.is_leaf()) return id;
        const int l = copy_preorder(nd.left, out);
        const int r = copy_preorder(nd.right, out);
        out.nodes[static_cast<std::size_t>(id)].left = l;
        out.nodes[static_cast<std::size_t>(id)].right = r;
        return id;
    }

    int depth_from(int i) const {
        const auto& nd = nodes[static_cast<std::size_t>(i)];
        if (nd.is_leaf()) return 0;
        return 1 + std::max(depth_from(nd.left), depth_from(nd.right));
    }
};

struct SplitChoice {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;

    bool valid() const { return feature >= 0; }
};

// A threshold t with a <= t < b for a < b.
inline double split_midpoint(double a, double b) {
    const double m = a + (b - a) * 0.5;
    return m < b ? m : a;
}

inline constexpr double kGainTolerance = 1e-12;

// Split-selection rule: the first candidate must clear min_gain; later ones
// must beat the incumbent by a relative tolerance, so near-equal gains keep
// the earlier (lower feature, lower threshold) candidate.
inline bool improves(const SplitChoice& best, double gain, double min_gain, double scale) {
    return best.valid() ? gain > best.gain + kGainTolerance * scale : gain > min_gain;
}

struct GrowParams {
    int max_depth = 6;
    std::size_t min_samples_leaf = 1;
    std::size_t max_features = 0;  // 0 = all
    std::size_t workers = 1;
};

// ---------------------------------------------------------------------------
// Criteria

// Weighted Gini impurity for 0/1 labels. Leaf value: weighted fraction of 1s.
struct GiniCriterion {
    std::span<const std::uint8_t> labels;
    std::span<const double> weights;

    struct Stats {
        double w = 0.0;
        double w1 = 0.0;
        std::size_t n = 0;
        std::size_t n1 = 0;

        Stats& operator+=(const Stats& o) {
            w += o.w, w1 += o.w1, n += o.n, n1 += o.n1;
            return *this;
        }
        friend Stats operator-(Stats a, const Stats& b) {
            a.w -= b.w, a.w1 -= b.w1, a.n -= b.n, a.n1 -= b.n1;
            return a;
        }
    };

    void add(Stats& s, std::size_t row) const {
        const double w = weights[row];
        s.w += w;
        s.n += 1;
        if (labels[row]) {
            s.w1 += w;
            s.n1 += 1;
        }
    }
    // Parent impurity minus children's, each weighted by node weight:
    // sum over nodes of (w1^2 + w0^2) / w.
    static double score(const Stats& s) {
        if (s.w <= 0.0) return 0.0;
        const double w0 = s.w - s.w1;
        return (s.w1 * s.w1 + w0 * w0) / s.w;
    }
    double gain(const Stats& l, const Stats& r, const Stats& p) const { return score(l) + score(r) - score(p); }
    double min_gain(const Stats& p) const { return kGainTolerance * p.w; }
    double scale(const Stats& p) const { return p.w; }
    double leaf_value(const Stats& s) const { return s.w > 0.0 ? s.w1 / s.w : 0.0; }
    bool is_pure(const Stats& s) const { return s.n1 == 0 || s.n1 == s.n; }
};

// Least-squares split on residuals with a one-step Newton leaf value
// sum(r) / sum(h).
struct NewtonRegressionCriterion {
    std::span<const double> residuals;
    std::span<const double> hessians;

    struct Stats {
        double s = 0.0;
        double h = 0.0;
        std::size_t n = 0;

        Stats& operator+=(const Stats& o) {
            s += o.s, h += o.h, n += o.n;
            return *this;
        }
        friend Stats operator-(Stats a, const Stats& b) {
            a.s -= b.s, a.h -= b.h, a.n -= b.n;
            return a;
        }
    };

    void add(Stats& st, std::size_t row) const {
        st.s += residuals[row];
        st.h += hessians[row];
        st.n += 1;
    }
    static double score(const Stats& st) { return st.n == 0 ? 0.0 : st.s * st.s / static_cast<double>(st.n); }
    double gain(const Stats& l, const Stats& r, const Stats& p) const { return score(l) + score(r) - score(p); }
    double min_gain(const Stats& p) const { return kGainTolerance * static_cast<double>(p.n); }
    double scale(const Stats& p) const { return static_cast<double>(p.n); }
    double leaf_value(const Stats& st) const { return std::abs(st.h) < 1e-150 ? 0.0 : st.s / st.h; }
    bool is_pure(const Stats&) const { return false; }
};

// Second-order objective with L2 leaf penalty lambda and split cost gamma.
struct XgbCriterion {
    std::span<const double> grad;
    std::span<const double> hess;
    double lambda = 1.0;
    double gamma = 0.0;

    struct Stats {
        double g = 0.0;
        double h = 0.0;
        std::size_t n = 0;

        Stats& operator+=(const Stats& o) {
            g += o.g, h += o.h, n += o.n;
            return *this;
        }
        friend Stats operator-(Stats a, const Stats& b) {
            a.g -= b.g, a.h -= b.h, a.n -= b.n;
            return a;
        }
    };

    void add(Stats& st, std::size_t row) const {
        st.g += grad[row];
        st.h += hess[row];
        st.n += 1;
    }
    double score(const Stats& st) const { return st.g * st.g / (st.h + lambda); }
    double gain(const Stats& l, const Stats& r, const Stats& p) const {
        return 0.5 * (score(l) + score(r) - score(p)) - gamma;
    }
    double min_gain(const Stats& p) const { return kGainTolerance * scale(p); }
    double scale(const Stats& p) const { return std::max(1.0, score(p)); }
    double leaf_value(const Stats& st) const { return -st.g / (st.h + lambda); }
    bool is_pure(const Stats&) const { return false; }
};

// ---------------------------------------------------------------------------
// Shared pieces

namespace detail {

// Candidate features for one node, ascending.
inline std::vector<std::size_t> pick_features(std::size_t cols, std::size_t max_features, Engine* rng) {
    std::vector<std::size_t> f(cols);
    std::iota(f.begin(), f.end(), std::size_t{0});
    if (max_features == 0 || max_features >= cols || rng == nullptr) return f;
    for (std::size_t i = 0; i < max_features; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(*rng, cols - i));
        std::swap(f[i], f[j]);
    }
    f.resize(max_features);
    std::sort(f.begin(), f.end());
    return f;
}

// Best threshold on one feature given the node's rows sorted by value.
// value(i) / row(i) address the i-th entry of the sorted order.
template <class Crit, class ValueAt, class RowAt>
SplitChoice scan_feature(const Crit& crit, int feature, std::size_t n, ValueAt value, RowAt row,
                         const typename Crit::Stats& parent, std::size_t min_leaf) {
    SplitChoice best;
    const double min_gain = crit.min_gain(parent);
    const double scale = crit.scale(parent);
    typename Crit::Stats left{};
    for (std::size_t i = 0; i + 1 < n; ++i) {
        crit.add(left, row(i));
        const double v = value(i);
        const double next = value(i + 1);
        if (v == next) continue;
        const std::size_t n_left = i + 1;
        if (n_left < min_leaf) continue;
        if (n - n_left < min_leaf) break;
        const double g = crit.gain(left, parent - left, parent);
        if (improves(best, g, min_gain, scale)) best = {feature, split_midpoint(v, next), g};
    }
    return best;
}

// Per-feature winners are reduced in feature order; the outcome does not
// depend on how the scans were scheduled.
template <class Crit>
SplitChoice reduce_choices(const Crit& crit, const std::vector<SplitChoice>& per_feature,
                           const typename Crit::Stats& parent) {
    SplitChoice best;
    const double min_gain = crit.min_gain(parent);
    const double scale = crit.scale(parent);
    for (const auto& c : per_feature) {
        if (c.valid() && improves(best, c.gain, min_gain, scale)) best = c;
    }
    return best;
}

// Enough rows that handing feature scans to threads pays off.
inline constexpr std::size_t kParallelScanRows = 8192;

}  // namespace detail

// ---------------------------------------------------------------------------
// Engine 1: sort the node's rows per feature at every node.

template <class Crit>
class SortingGrower {
public:
    SortingGrower(MatrixView x, const Crit& crit, GrowParams params, Engine* rng)
        : x_(x), crit_(crit), params_(params), rng_(rng) {}

    Tree grow(std::vector<std::uint32_t> members) {
        if (members.empty()) throw ContractError("tree growth needs at least one row");
        rows_ = std::move(members);
        buffer_.resize(rows_.size());
        tree_ = {};
        grow_node(0, rows_.size(), 0);
        return std::move(tree_);
    }

private:
    int grow_node(std::size_t b, std::size_t e, int depth) {
        typename Crit::Stats stats{};
        for (std::size_t i = b; i < e; ++i) crit_.add(stats, rows_[i]);
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({-1, 0.0, -1, -1, crit_.leaf_value(stats), static_cast<std::int64_t>(e - b)});
        const std::size_t n = e - b;
        if (depth >= params_.max_depth || n < 2 * params_.min_samples_leaf || crit_.is_pure(stats)) return id;

        const auto features = detail::pick_features(x_.cols, params_.max_features, rng_);
        std::vector<SplitChoice> per_feature(features.size());
        std::vector<std::pair<double, std::uint32_t>> sorted(n);
        for (std::size_t k = 0; k < features.size(); ++k) {
            const std::size_t f = features[k];
            for (std::size_t i = 0; i < n; ++i) sorted[i] = {x_.at(rows_[b + i], f), rows_[b + i]};
            std::sort(sorted.begin(), sorted.end());
            per_feature[k] = detail::scan_feature(
                crit_, static_cast<int>(f), n, [&](std::size_t i) { return sorted[i].first; },
                [&](std::size_t i) { return sorted[i].second; }, stats, params_.min_samples_leaf);
        }
        const SplitChoice best = detail::reduce_choices(crit_, per_feature, stats);
        if (!best.valid()) return id;

        // Stable partition of [b, e) on the chosen split.
        std::size_t nl = 0, nr = 0;
        const auto f = static_cast<std::size_t>(best.feature);
        for (std::size_t i = b; i < e; ++i) {
            const auto r = rows_[i];
            if (x_.at(r, f) <= best.threshold) rows_[b + nl++] = r;
            else buffer_[nr++] = r;
        }
        std::copy_n(buffer_.begin(), nr, rows_.begin() + static_cast<std::ptrdiff_t>(b + nl));

        const int l = grow_node(b, b + nl, depth + 1);
        const int r = grow_node(b + nl, e, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    MatrixView x_;
    const Crit& crit_;
    GrowParams params_;
    Engine* rng_;
    std::vector<std::uint32_t> rows_;
    std::vector<std::uint32_t> buffer_;
    Tree tree_;
};

template <class Crit>
Tree grow_sorting(MatrixView x, std::vector<std::uint32_t> members, const Crit& crit, const GrowParams& params,
                  Engine* rng = nullptr) {
    return SortingGrower<Crit>(x, crit, params, rng).grow(std::move(members));
}

// ---------------------------------------------------------------------------
// Engine 2: columns sorted once, node slices kept ordered by partitioning.

// Every row index, sorted per column by (value, row).
struct PresortedColumns {
    std::vector<std::vector<std::uint32_t>> order;

    static PresortedColumns build(MatrixView x) {
        PresortedColumns p;
        const std::size_t n = x.rows();
        p.order.resize(x.cols);
        std::vector<std::pair<double, std::uint32_t>> tmp(n);
        for (std::size_t f = 0; f < x.cols; ++f) {
            for (std::size_t i = 0; i < n; ++i) tmp[i] = {x.at(i, f), static_cast<std::uint32_t>(i)};
            std::sort(tmp.begin(), tmp.end());
            auto& o = p.order[f];
            o.resize(n);
            for (std::size_t i = 0; i < n; ++i) o[i] = tmp[i].second;
        }
        return p;
    }
};

template <class Crit>
class PresortedGrower {
public:
    PresortedGrower(MatrixView x, const PresortedColumns& cols, const Crit& crit, GrowParams params, Engine* rng)
        : x_(x), presorted_(cols), crit_(crit), params_(params), rng_(rng) {}

    // `include` selects the training rows (nullptr = all rows).
    Tree grow(const std::vector<std::uint8_t>* include = nullptr) {
        const std::size_t n_all = x_.rows();
        // One slice per column plus a last one in row order, used for node totals.
        slices_.assign(x_.cols + 1, {});
        for (std::size_t f = 0; f < x_.cols; ++f) {
            auto& s = slices_[f];
            s.reserve(n_all);
            for (auto r : presorted_.order[f]) {
                if (include == nullptr || (*include)[r]) s.push_back(r);
            }
        }
        for (std::size_t r = 0; r < n_all; ++r) {
            if (include == nullptr || (*include)[r]) slices_.back().push_back(static_cast<std::uint32_t>(r));
        }
        if (slices_.back().empty()) throw ContractError("tree growth needs at least one row");
        go_left_.assign(n_all, 0);
        buffer_.resize(slices_[0].size());
        tree_ = {};
        grow_node(0, slices_[0].size(), 0);
        return std::move(tree_);
    }

private:
    int grow_node(std::size_t b, std::size_t e, int depth) {
        const auto& base = slices_.back();
        typename Crit::Stats stats{};
        for (std::size_t i = b; i < e; ++i) crit_.add(stats, base[i]);
        const int id = static_cast<int>(tree_.nodes.size());
        tree_.nodes.push_back({-1, 0.0, -1, -1, crit_.leaf_value(stats), static_cast<std::int64_t>(e - b)});
        const std::size_t n = e - b;
        if (depth >= params_.max_depth || n < 2 * params_.min_samples_leaf || crit_.is_pure(stats)) return id;

        const auto features = detail::pick_features(x_.cols, params_.max_features, rng_);
        std::vector<SplitChoice> per_feature(features.size());
        const auto scan = [&](std::size_t k) {
            const std::size_t f = features[k];
            const auto& s = slices_[f];
            per_feature[k] = detail::scan_feature(
                crit_, static_cast<int>(f), n, [&](std::size_t i) { return x_.at(s[b + i], f); },
                [&](std::size_t i) { return s[b + i]; }, stats, params_.min_samples_leaf);
        };
        const std::size_t workers = n >= detail::kParallelScanRows ? params_.workers : 1;
        parallel_for(features.size(), workers, scan);
        const SplitChoice best = detail::reduce_choices(crit_, per_feature, stats);
        if (!best.valid()) return id;

        const auto bf = static_cast<std::size_t>(best.feature);
        std::size_t nl = 0;
        for (std::size_t i = b; i < e; ++i) {
            const auto r = slices_[bf][i];
            const bool left = x_.at(r, bf) <= best.threshold;
            go_left_[r] = left;
            nl += left;
        }
        for (auto& s : slices_) {
            std::size_t l = b, rr = 0;
            for (std::size_t i = b; i < e; ++i) {
                const auto r = s[i];
                if (go_left_[r]) s[l++] = r;
                else buffer_[rr++] = r;
            }
            std::copy_n(buffer_.begin(), rr, s.begin() + static_cast<std::ptrdiff_t>(l));
        }

        const int l = grow_node(b, b + nl, depth + 1);
        const int r = grow_node(b + nl, e, depth + 1);
        auto& node = tree_.nodes[static_cast<std::size_t>(id)];
        node.feature = best.feature;
        node.threshold = best.threshold;
        node.left = l;
        node.right = r;
        return id;
    }

    MatrixView x_;
    const PresortedColumns& presorted_;
    const Crit& crit_;
    GrowParams params_;
    Engine* rng_;
    std::vector<std::vector<std::uint32_t>> slices_;
    std::vector<std::uint8_t> go_left_;
    std::vector<std::uint32_t> buffer_;
    Tree tree_;
};

template <class Crit>
Tree grow_presorted(MatrixView x, const PresortedColumns& cols, const Crit& crit, const GrowParams& params,
                    const std::vector<std::uint8_t>* include = nullptr, Engine* rng = nullptr) {
    return PresortedGrower<Crit>(x, cols, crit, params, rng).grow(include);
}

}  // namespace pnd
