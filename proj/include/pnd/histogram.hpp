#pragma once

// Histogram-based, leaf-wise tree growth on the second-order objective.

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "pnd/dataset.hpp"
#include "pnd/error.hpp"
#include "pnd/tree.hpp"

namespace pnd {

inline constexpr std::size_t kMaxBins = 256;

// Per-feature bin edges. Value v falls in bin b, the first b with
// v <= edges[b] (or the last bin when v exceeds every edge), so
// "bin <= b" and "v <= edges[b]" select the same rows.
class BinMapper {
public:
    // Equal-frequency bins with edges at midpoints between adjacent
    // distinct values. Features with at most max_bins distinct values get
    // one bin per value.
    static BinMapper fit(MatrixView x, std::size_t max_bins) {
        if (max_bins < 2 || max_bins > kMaxBins)
            throw ConfigError("n_bins must be in [2, " + std::to_string(kMaxBins) + "], got " + std::to_string(max_bins));
        BinMapper m;
        m.edges_.resize(x.cols);
        const std::size_t n = x.rows();
        std::vector<double> col(n);
        for (std::size_t f = 0; f < x.cols; ++f) {
            for (std::size_t i = 0; i < n; ++i) col[i] = x.at(i, f);
            std::sort(col.begin(), col.end());
            std::vector<double> distinct;
            std::vector<std::size_t> counts;
            for (double v : col) {
                if (distinct.empty() || v != distinct.back()) {
                    distinct.push_back(v);
                    counts.push_back(0);
                }
                ++counts.back();
            }
            auto& edges = m.edges_[f];
            if (distinct.size() <= max_bins) {
                for (std::size_t k = 0; k + 1 < distinct.size(); ++k)
                    edges.push_back(split_midpoint(distinct[k], distinct[k + 1]));
                continue;
            }
            const double per_bin = static_cast<double>(n) / static_cast<double>(max_bins);
            std::size_t cum = 0;
            for (std::size_t k = 0; k + 1 < distinct.size() && edges.size() + 1 < max_bins; ++k) {
                cum += counts[k];
                if (static_cast<double>(cum) >= per_bin * static_cast<double>(edges.size() + 1))
                    edges.push_back(split_midpoint(distinct[k], distinct[k + 1]));
            }
        }
        return m;
    }

    std::size_t cols() const { return edges_.size(); }
    std::size_t n_bins(std::size_t f) const { return edges_[f].size() + 1; }
    const std::vector<double>& edges(std::size_t f) const { return edges_[f]; }

    std::uint8_t bin(std::size_t f, double v) const {
        const auto& e = edges_[f];
        return static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), v) - e.begin());
    }

    // Column-major bin codes: out[f * rows + i].
    std::vector<std::uint8_t> transform(MatrixView x) const {
        const std::size_t n = x.rows();
        std::vector<std::uint8_t> out(n * x.cols);
        for (std::size_t f = 0; f < x.cols; ++f)
            for (std::size_t i = 0; i < n; ++i) out[f * n + i] = bin(f, x.at(i, f));
        return out;
    }

private:
    std::vector<std::vector<double>> edges_;
};

struct LeafwiseParams {
    std::size_t max_leaves = 31;
    int max_depth = 6;
    std::size_t min_samples_leaf = 1;
};

// Grows one tree leaf-wise: the live leaf with the largest split gain is
// split next, until the leaf budget, the depth limit, or no positive gain.
// Histograms of the larger child come from parent minus smaller child.
class HistogramGrower {
public:
    HistogramGrower(const BinMapper& bins, const std::vector<std::uint8_t>& codes, std::size_t n_rows,
                    const XgbCriterion& crit, LeafwiseParams params)
        : bins_(bins), codes_(codes), n_rows_(n_rows), crit_(crit), params_(params) {
        stride_ = kMaxBins;
    }

    Tree grow() {
        if (n_rows_ == 0) throw ContractError("tree growth needs at least one row");
        if (params_.max_leaves < 2) throw ConfigError("max_leaves must be >= 2");
        tree_ = {};
        leaves_.clear();

        Leaf root;
        root.rows.resize(n_rows_);
        for (std::size_t i = 0; i < n_rows_; ++i) root.rows[i] = static_cast<std::uint32_t>(i);
        root.hist = build_hist(root.rows);
        root.node = make_node(root);
        root.depth = 0;
        find_split(root);
        leaves_.push_back(std::move(root));

        std::size_t n_leaves = 1;
        while (n_leaves < params_.max_leaves) {
            std::size_t pick = leaves_.size();
            for (std::size_t i = 0; i < leaves_.size(); ++i) {
                if (!leaves_[i].best.valid()) continue;
                if (pick == leaves_.size() || leaves_[i].best.gain > leaves_[pick].best.gain) pick = i;
            }
            if (pick == leaves_.size()) break;
            Leaf parent = std::move(leaves_[pick]);
            leaves_.erase(leaves_.begin() + static_cast<std::ptrdiff_t>(pick));
            auto [l, r] = split(parent);
            leaves_.push_back(std::move(l));
            leaves_.push_back(std::move(r));
            ++n_leaves;
        }
        return tree_.preorder();
    }

private:
    struct Bin {
        double g = 0.0;
        double h = 0.0;
        std::size_t n = 0;
    };

    struct Leaf {
        std::vector<std::uint32_t> rows;
        std::vector<Bin> hist;
        XgbCriterion::Stats total{};
        int node = -1;
        int depth = 0;
        SplitChoice best;
        std::size_t best_bin = 0;
    };

    std::vector<Bin> build_hist(const std::vector<std::uint32_t>& rows) const {
        std::vector<Bin> h(bins_.cols() * stride_);
        for (std::size_t f = 0; f < bins_.cols(); ++f) {
            const std::uint8_t* col = codes_.data() + f * n_rows_;
            Bin* hf = h.data() + f * stride_;
            for (auto r : rows) {
                auto& b = hf[col[r]];
                b.g += crit_.grad[r];
                b.h += crit_.hess[r];
                b.n += 1;
            }
        }
        return h;
    }

    int make_node(Leaf& leaf) {
        leaf.total = {};
        for (auto r : leaf.rows) crit_.add(leaf.total, r);
        tree_.nodes.push_back({-1, 0.0, -1, -1, crit_.leaf_value(leaf.total), static_cast<std::int64_t>(leaf.rows.size())});
        return static_cast<int>(tree_.nodes.size() - 1);
    }

    void find_split(Leaf& leaf) const {
        leaf.best = {};
        if (leaf.depth >= params_.max_depth || leaf.rows.size() < 2 * params_.min_samples_leaf) return;
        const auto& parent = leaf.total;
        const double min_gain = crit_.min_gain(parent);
        const double scale = crit_.scale(parent);
        for (std::size_t f = 0; f < bins_.cols(); ++f) {
            const Bin* hf = leaf.hist.data() + f * stride_;
            XgbCriterion::Stats left{};
            SplitChoice best_f;
            std::size_t best_bin = 0;
            for (std::size_t b = 0; b + 1 < bins_.n_bins(f); ++b) {
                if (hf[b].n == 0) continue;
                left.g += hf[b].g;
                left.h += hf[b].h;
                left.n += hf[b].n;
                if (left.n < params_.min_samples_leaf) continue;
                if (parent.n - left.n < params_.min_samples_leaf) break;
                const double g = crit_.gain(left, parent - left, parent);
                if (improves(best_f, g, min_gain, scale)) {
                    best_f = {static_cast<int>(f), bins_.edges(f)[b], g};
                    best_bin = b;
                }
            }
            if (best_f.valid() && improves(leaf.best, best_f.gain, min_gain, scale)) {
                leaf.best = best_f;
                leaf.best_bin = best_bin;
            }
        }
    }

    std::pair<Leaf, Leaf> split(Leaf& parent) {
        const auto f = static_cast<std::size_t>(parent.best.feature);
        const std::uint8_t* col = codes_.data() + f * n_rows_;
        Leaf l, r;
        for (auto row : parent.rows) (col[row] <= parent.best_bin ? l.rows : r.rows).push_back(row);
        l.depth = r.depth = parent.depth + 1;

        Leaf& small = l.rows.size() <= r.rows.size() ? l : r;
        Leaf& large = l.rows.size() <= r.rows.size() ? r : l;
        small.hist = build_hist(small.rows);
        large.hist = std::move(parent.hist);
        for (std::size_t i = 0; i < large.hist.size(); ++i) {
            large.hist[i].g -= small.hist[i].g;
            large.hist[i].h -= small.hist[i].h;
            large.hist[i].n -= small.hist[i].n;
        }

        l.node = make_node(l);
        r.node = make_node(r);
        auto& node = tree_.nodes[static_cast<std::size_t>(parent.node)];
        node.feature = parent.best.feature;
        node.threshold = parent.best.threshold;
        node.left = l.node;
        node.right = r.node;
        find_split(l);
        find_split(r);
        return {std::move(l), std::move(r)};
    }

    const BinMapper& bins_;
    const std::vector<std::uint8_t>& codes_;
    std::size_t n_rows_;
    const XgbCriterion& crit_;
    LeafwiseParams params_;
    std::size_t stride_;
    Tree tree_;
    std::vector<Leaf> leaves_;
};

}  // namespace pnd
