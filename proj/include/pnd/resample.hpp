#pragma once

// SMOTE oversampling of the positive (minority) class.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pnd/dataset.hpp"
#include "pnd/error.hpp"
#include "pnd/parallel.hpp"
#include "pnd/rng.hpp"

namespace pnd {

struct SmoteConfig {
    std::size_t k_neighbors = 5;
    double target_ratio = 1.0;  // of the majority count
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    void validate() const {
        if (k_neighbors < 1) throw ConfigError("smote: k_neighbors must be >= 1");
        if (!(target_ratio > 0.0 && target_ratio <= 1.0)) throw ConfigError("smote: target_ratio must be in (0, 1]");
    }
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double t = a[i] - b[i];
        d += t * t;
    }
    return d;
}

/// The k rows of `features` nearest to row `query` (excluding itself) by
/// Euclidean distance, nearest first; equal distances go to the lower index.
inline std::vector<std::size_t> knn_minority(MatrixView features, std::size_t query, std::size_t k) {
    const std::size_t n = features.rows();
    if (query >= n) throw ContractError("knn_minority: query index out of range");
    if (k < 1 || k >= n)
        throw ContractError("knn_minority: k=" + std::to_string(k) + " out of range for " + std::to_string(n) + " rows");
    std::vector<std::pair<double, std::size_t>> cand;
    cand.reserve(n - 1);
    const auto q = features.row(query);
    for (std::size_t i = 0; i < n; ++i) {
        if (i != query) cand.emplace_back(squared_distance(q, features.row(i)), i);
    }
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(k), cand.end());
    std::vector<std::size_t> out(k);
    for (std::size_t i = 0; i < k; ++i) out[i] = cand[i].second;
    return out;
}

struct SmoteDraw {
    std::size_t neighbor_slot;  // position in the base row's neighbor list
    double lambda;              // interpolation weight in [0, 1)
};

namespace detail {

// `draw(j, k_eff)` supplies the neighbor choice and weight for synthetic row j.
template <class Draw>
Dataset smote_with(const Dataset& train, const SmoteConfig& cfg, Draw&& draw) {
    cfg.validate();
    const std::size_t n_pos = train.n_pos();
    const std::size_t n_neg = train.n_neg();
    if (n_pos > n_neg)
        throw ContractError("smote: positives (" + std::to_string(n_pos) + ") outnumber negatives (" +
                            std::to_string(n_neg) + ")");
    if (n_pos < 2) throw Error("smote: need at least 2 positive rows to interpolate, got " + std::to_string(n_pos));

    const auto target = static_cast<std::size_t>(std::llround(cfg.target_ratio * static_cast<double>(n_neg)));
    const std::size_t n_syn = target > n_pos ? target - n_pos : 0;
    Dataset out = train;
    if (n_syn == 0) return out;

    const std::size_t cols = train.cols();
    std::vector<double> minority;
    minority.reserve(n_pos * cols);
    for (std::size_t i = 0; i < train.rows(); ++i) {
        if (train.label(i) == 1) {
            const auto r = train.row(i);
            minority.insert(minority.end(), r.begin(), r.end());
        }
    }
    const MatrixView mview{minority, cols};
    const std::size_t k = std::min(cfg.k_neighbors, n_pos - 1);

    std::vector<std::vector<std::size_t>> neighbors(n_pos);
    parallel_for(n_pos, cfg.workers, [&](std::size_t i) { neighbors[i] = knn_minority(mview, i, k); });

    std::vector<double> synth(n_syn * cols);
    parallel_for(n_syn, cfg.workers, [&](std::size_t j) {
        const std::size_t base = j % n_pos;  // round-robin over minority rows
        const SmoteDraw d = draw(j, k);
        const auto x = mview.row(base);
        const auto nn = mview.row(neighbors[base][d.neighbor_slot]);
        double* dst = synth.data() + j * cols;
        for (std::size_t c = 0; c < cols; ++c) {
            // Clamped to the segment.
            const auto [lo, hi] = std::minmax(x[c], nn[c]);
            dst[c] = std::clamp(x[c] + d.lambda * (nn[c] - x[c]), lo, hi);
        }
    });

    out.reserve(train.rows() + n_syn);
    for (std::size_t j = 0; j < n_syn; ++j) out.add_row(std::span<const double>(synth.data() + j * cols, cols), 1);
    return out;
}

}  // namespace detail

/// Appends synthetic positives until n_pos = round(target_ratio * n_neg).
/// Original rows are kept unchanged and in order; synthetic rows follow.
/// Synthetic row j interpolates minority row (j mod n_pos) toward one of
/// its k nearest minority neighbors, with draws from a counter-based
/// generator keyed on (seed, j) so the result does not depend on the
/// worker count.
inline Dataset smote(const Dataset& train, const SmoteConfig& cfg) {
    return detail::smote_with(train, cfg, [&cfg](std::size_t j, std::size_t k) {
        const std::uint64_t key = derive_seed(cfg.seed, j);
        const auto hi = static_cast<unsigned __int128>(splitmix64(key)) * k;
        const auto slot = static_cast<std::size_t>(hi >> 64);
        const double lambda = static_cast<double>(splitmix64(key + 1) >> 11) * 0x1.0p-53;
        return SmoteDraw{slot, lambda};
    });
}

}  // namespace pnd
