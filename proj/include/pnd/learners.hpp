#pragma once

// The five tree-ensemble trainers and their shared prediction rule.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pnd/dataset.hpp"
#include "pnd/error.hpp"
#include "pnd/histogram.hpp"
#include "pnd/parallel.hpp"
#include "pnd/rng.hpp"
#include "pnd/tree.hpp"

namespace pnd {

enum class ModelKind { random_forest, adaboost, gbm, xgb, lgbm };

inline constexpr ModelKind kAllModelKinds[] = {ModelKind::random_forest, ModelKind::adaboost, ModelKind::gbm,
                                               ModelKind::xgb, ModelKind::lgbm};

inline std::string_view to_string(ModelKind k) {
    switch (k) {
        case ModelKind::random_forest: return "random_forest";
        case ModelKind::adaboost: return "adaboost";
        case ModelKind::gbm: return "gbm";
        case ModelKind::xgb: return "xgb";
        case ModelKind::lgbm: return "lgbm";
    }
    return "?";
}

// Short CLI names as used in report tables.
inline std::string_view short_name(ModelKind k) {
    switch (k) {
        case ModelKind::random_forest: return "rf";
        case ModelKind::adaboost: return "ada";
        default: return to_string(k);
    }
}

inline std::string_view display_name(ModelKind k) {
    switch (k) {
        case ModelKind::random_forest: return "RF";
        case ModelKind::adaboost: return "AdaBoost";
        case ModelKind::gbm: return "GBM";
        case ModelKind::xgb: return "XGBoost";
        case ModelKind::lgbm: return "LightGBM";
    }
    return "?";
}

inline std::optional<ModelKind> parse_model_kind(std::string_view s) {
    for (auto k : kAllModelKinds) {
        if (s == to_string(k) || s == short_name(k)) return k;
    }
    return std::nullopt;
}

enum class FeatureSubsample { all, sqrt };

struct TrainParams {
    std::size_t n_trees = 100;
    int max_depth = 6;
    double learning_rate = 0.1;
    double lambda_reg = 1.0;
    double gamma_min_gain = 0.0;
    std::size_t max_leaves = 31;
    std::size_t n_bins = 255;
    std::size_t min_samples_leaf = 1;
    FeatureSubsample feature_subsample = FeatureSubsample::all;
    bool bootstrap = true;  // forest only
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    void validate(ModelKind kind) const {
        if (max_depth < 0) throw ConfigError("max_depth must be >= 0");
        if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw ConfigError("learning_rate must be in (0, 1]");
        if (lambda_reg < 0.0 || !std::isfinite(lambda_reg)) throw ConfigError("lambda_reg must be >= 0");
        if (gamma_min_gain < 0.0) throw ConfigError("gamma_min_gain must be >= 0");
        if (min_samples_leaf < 1) throw ConfigError("min_samples_leaf must be >= 1");
        if (kind == ModelKind::lgbm) {
            if (max_leaves < 2) throw ConfigError("max_leaves must be >= 2");
            if (n_bins < 2 || n_bins > kMaxBins) throw ConfigError("n_bins must be in [2, 256]");
        }
    }
};

/// Defaults per kind: 100 trees, depth 6 (stumps for AdaBoost), lr 0.1,
/// lambda 1, gamma 0, 31 leaves, 255 bins; sqrt feature sampling for the
/// forest.
inline TrainParams default_params(ModelKind kind) {
    TrainParams p;
    if (kind == ModelKind::adaboost) p.max_depth = 1;
    if (kind == ModelKind::random_forest) p.feature_subsample = FeatureSubsample::sqrt;
    return p;
}

struct EnsembleModel {
    ModelKind kind = ModelKind::gbm;
    std::size_t n_features = kFeatureCount;
    std::vector<Tree> trees;
    std::vector<double> tree_weights;
    double base_score = 0.0;
    double threshold = 0.5;
    TrainParams params;
    std::vector<std::string> warnings;  // not serialized

    // Weighted tree sum plus base score (forest: the mean leaf probability).
    double raw_score(std::span<const double> x) const {
        double s = base_score;
        for (std::size_t t = 0; t < trees.size(); ++t) s += tree_weights[t] * trees[t].predict(x);
        return s;
    }
};

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

// ---------------------------------------------------------------------------
// Logistic loss on raw scores

inline constexpr double kProbClamp = 1e-15;

inline double logistic_loss(double score, int y) {
    const double p = std::clamp(sigmoid(score), kProbClamp, 1.0 - kProbClamp);
    return y == 1 ? -std::log(p) : -std::log(1.0 - p);
}

struct GradHess {
    double g;
    double h;
};

// First and second derivative of the logistic loss in the raw score.
inline GradHess logistic_grad_hess(double score, int y) {
    const double p = sigmoid(score);
    return {p - static_cast<double>(y), p * (1.0 - p)};
}

inline double mean_logistic_loss(const std::vector<double>& scores, const Dataset& d) {
    double s = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) s += logistic_loss(scores[i], d.label(i));
    return s / static_cast<double>(scores.size());
}

// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t max_features_for(const TrainParams& p, std::size_t cols) {
    if (p.feature_subsample == FeatureSubsample::all) return 0;
    return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(cols))));
}

inline GrowParams grow_params(const TrainParams& p, std::size_t cols) {
    return {p.max_depth, p.min_samples_leaf, max_features_for(p, cols), p.workers};
}

inline void require_both_classes(const Dataset& d, ModelKind kind) {
    if (d.empty()) throw ContractError(std::string(to_string(kind)) + ": empty training data");
    if (d.n_pos() == 0 || d.n_neg() == 0)
        throw ContractError(std::string(to_string(kind)) + ": training data must contain both classes");
}

inline std::vector<std::uint32_t> all_rows(std::size_t n) {
    std::vector<std::uint32_t> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<std::uint32_t>(i);
    return r;
}

inline double prior_log_odds(const Dataset& d) {
    return std::log(static_cast<double>(d.n_pos()) / static_cast<double>(d.n_neg()));
}

inline void check_scores(const std::vector<double>& scores, ModelKind kind, std::size_t round) {
    for (double s : scores) {
        if (!std::isfinite(s))
            throw TrainingError(std::string(to_string(kind)) + ": score overflow in round " + std::to_string(round));
    }
}

}  // namespace detail

/// Gini CART on weighted rows. Rows with zero weight are left out.
/// Candidate thresholds are midpoints between consecutive distinct values;
/// equal gains go to the lower feature, then the lower threshold.
inline Tree train_cart(const Dataset& data, std::span<const double> sample_weights, const TrainParams& params) {
    if (data.empty()) throw ContractError("train_cart: empty data");
    if (sample_weights.size() != data.rows()) throw ContractError("train_cart: one weight per row required");
    std::vector<std::uint32_t> members;
    double total = 0.0;
    for (std::size_t i = 0; i < data.rows(); ++i) {
        if (sample_weights[i] < 0.0) throw ContractError("train_cart: negative sample weight");
        if (sample_weights[i] > 0.0) members.push_back(static_cast<std::uint32_t>(i));
        total += sample_weights[i];
    }
    if (!(total > 0.0)) throw ContractError("train_cart: all sample weights are zero");
    const GiniCriterion crit{data.labels(), sample_weights};
    Engine rng(params.seed);
    return grow_sorting(data.matrix(), std::move(members), crit, detail::grow_params(params, data.cols()), &rng);
}

/// Bagged Gini trees with per-split feature sampling; the prediction is the
/// mean leaf probability. Tree t draws its bootstrap and feature subsets
/// from its own seed, so output is independent of params.workers.
inline EnsembleModel train_random_forest(const Dataset& data, const TrainParams& params) {
    params.validate(ModelKind::random_forest);
    if (data.empty()) throw ContractError("random_forest: empty training data");
    EnsembleModel m;
    m.kind = ModelKind::random_forest;
    m.n_features = data.cols();
    m.params = params;
    if (data.n_pos() == 0 || data.n_neg() == 0) {
        const double p = data.n_pos() == 0 ? 0.0 : 1.0;
        m.warnings.push_back("random_forest: single-class training data, returning a constant predictor");
        m.trees.push_back(Tree::leaf(p, static_cast<std::int64_t>(data.rows())));
        m.tree_weights.push_back(1.0);
        return m;
    }
    const std::size_t n = data.rows();
    const GrowParams gp = detail::grow_params(params, data.cols());
    m.trees.resize(params.n_trees);
    parallel_for(params.n_trees, params.workers, [&](std::size_t t) {
        Engine rng(derive_seed(params.seed, t));
        std::vector<double> w(n, 1.0);
        if (params.bootstrap) {
            std::fill(w.begin(), w.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) w[uniform_index(rng, n)] += 1.0;
        }
        std::vector<std::uint32_t> members;
        members.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (w[i] > 0.0) members.push_back(static_cast<std::uint32_t>(i));
        }
        const GiniCriterion crit{data.labels(), w};
        GrowParams local = gp;
        local.workers = 1;
        m.trees[t] = grow_sorting(data.matrix(), std::move(members), crit, local, &rng);
    });
    m.tree_weights.assign(params.n_trees, params.n_trees == 0 ? 0.0 : 1.0 / static_cast<double>(params.n_trees));
    return m;
}

struct AdaBoostRound {
    double error;
    double alpha;
    double weight_sum;  // after renormalization
    double min_weight;
};

inline constexpr double kAdaMinError = 1e-10;

inline double adaboost_alpha(double error) { return 0.5 * std::log((1.0 - error) / error); }

/// Discrete AdaBoost over Gini CART weak learners (stumps by default).
/// Leaves are stored as +1/-1 votes; tree_weights hold the alphas. Stops
/// when a learner's weighted error reaches 0.5 (learner dropped) or 0
/// (learner kept with alpha capped at error 1e-10). `trace`, if given,
/// receives one entry per accepted round.
inline EnsembleModel train_adaboost(const Dataset& data, const TrainParams& params,
                                    std::vector<AdaBoostRound>* trace = nullptr) {
    params.validate(ModelKind::adaboost);
    detail::require_both_classes(data, ModelKind::adaboost);
    const std::size_t n = data.rows();
    EnsembleModel m;
    m.kind = ModelKind::adaboost;
    m.n_features = data.cols();
    m.params = params;

    std::vector<double> w(n, 1.0 / static_cast<double>(n));
    std::vector<double> vote(n);
    const GrowParams gp = detail::grow_params(params, data.cols());
    Engine rng(params.seed);
    for (std::size_t round = 0; round < params.n_trees; ++round) {
        const GiniCriterion crit{data.labels(), w};
        Tree tree = grow_sorting(data.matrix(), detail::all_rows(n), crit, gp, &rng);
        if (round == 0 && tree.nodes.size() == 1)
            throw TrainingError("adaboost: the first weak learner found no split (constant predictor)");
        for (auto& node : tree.nodes) {
            if (node.is_leaf()) node.value = node.value > 0.5 ? 1.0 : -1.0;
        }
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            vote[i] = tree.predict(data.row(i));
            const double y = data.label(i) == 1 ? 1.0 : -1.0;
            if (vote[i] != y) err += w[i];
        }
        if (err >= 0.5) break;
        const bool perfect = err <= 0.0;
        const double alpha = adaboost_alpha(std::max(err, kAdaMinError));
        m.trees.push_back(std::move(tree));
        m.tree_weights.push_back(alpha);

        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double y = data.label(i) == 1 ? 1.0 : -1.0;
            w[i] *= std::exp(-alpha * y * vote[i]);
            total += w[i];
        }
        double sum = 0.0, min_w = 1.0;
        for (auto& wi : w) {
            wi /= total;
            sum += wi;
            min_w = std::min(min_w, wi);
        }
        if (trace) trace->push_back({err, alpha, sum, min_w});
        if (perfect) break;
    }
    return m;
}

/// Gradient boosting on the logistic loss: each round fits a least-squares
/// tree to the residuals y - p and replaces each leaf by the Newton step
/// sum(r) / sum(p(1-p)) over its rows. Starts from the prior log-odds.
inline EnsembleModel train_gbm(const Dataset& data, const TrainParams& params) {
    params.validate(ModelKind::gbm);
    detail::require_both_classes(data, ModelKind::gbm);
    const std::size_t n = data.rows();
    EnsembleModel m;
    m.kind = ModelKind::gbm;
    m.n_features = data.cols();
    m.params = params;
    m.base_score = detail::prior_log_odds(data);

    std::vector<double> score(n, m.base_score), resid(n), hess(n);
    const GrowParams gp = detail::grow_params(params, data.cols());
    Engine rng(params.seed);
    for (std::size_t round = 0; round < params.n_trees; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const double p = sigmoid(score[i]);
            resid[i] = static_cast<double>(data.label(i)) - p;
            hess[i] = p * (1.0 - p);
        }
        const NewtonRegressionCriterion crit{resid, hess};
        Tree tree = grow_sorting(data.matrix(), detail::all_rows(n), crit, gp, &rng);
        for (std::size_t i = 0; i < n; ++i) score[i] += params.learning_rate * tree.predict(data.row(i));
        detail::check_scores(score, ModelKind::gbm, round);
        m.trees.push_back(std::move(tree));
        m.tree_weights.push_back(params.learning_rate);
    }
    return m;
}

/// Newton boosting with exact greedy splits over presorted columns. Leaf
/// weight -G/(H + lambda); split gain
/// 0.5 [G_L^2/(H_L+l) + G_R^2/(H_R+l) - G^2/(H+l)] - gamma, kept only when
/// positive. Feature scans may run on params.workers threads.
inline EnsembleModel train_xgb(const Dataset& data, const TrainParams& params) {
    params.validate(ModelKind::xgb);
    detail::require_both_classes(data, ModelKind::xgb);
    const std::size_t n = data.rows();
    EnsembleModel m;
    m.kind = ModelKind::xgb;
    m.n_features = data.cols();
    m.params = params;
    m.base_score = detail::prior_log_odds(data);

    const auto presorted = PresortedColumns::build(data.matrix());
    std::vector<double> score(n, m.base_score), grad(n), hess(n);
    const GrowParams gp = detail::grow_params(params, data.cols());
    Engine rng(params.seed);
    for (std::size_t round = 0; round < params.n_trees; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto gh = logistic_grad_hess(score[i], data.label(i));
            grad[i] = gh.g;
            hess[i] = gh.h;
        }
        const XgbCriterion crit{grad, hess, params.lambda_reg, params.gamma_min_gain};
        Tree tree = grow_presorted(data.matrix(), presorted, crit, gp, nullptr, &rng);
        for (std::size_t i = 0; i < n; ++i) score[i] += params.learning_rate * tree.predict(data.row(i));
        detail::check_scores(score, ModelKind::xgb, round);
        m.trees.push_back(std::move(tree));
        m.tree_weights.push_back(params.learning_rate);
    }
    return m;
}

/// Same objective as train_xgb, but split search runs over quantile-bin
/// histograms (edges fixed once from the training matrix) and trees grow
/// leaf-wise up to max_leaves leaves and max_depth levels.
inline EnsembleModel train_lgbm(const Dataset& data, const TrainParams& params) {
    params.validate(ModelKind::lgbm);
    detail::require_both_classes(data, ModelKind::lgbm);
    const std::size_t n = data.rows();
    EnsembleModel m;
    m.kind = ModelKind::lgbm;
    m.n_features = data.cols();
    m.params = params;
    m.base_score = detail::prior_log_odds(data);

    const auto bins = BinMapper::fit(data.matrix(), params.n_bins);
    const auto codes = bins.transform(data.matrix());
    std::vector<double> score(n, m.base_score), grad(n), hess(n);
    const LeafwiseParams lp{params.max_leaves, params.max_depth, params.min_samples_leaf};
    for (std::size_t round = 0; round < params.n_trees; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            const auto gh = logistic_grad_hess(score[i], data.label(i));
            grad[i] = gh.g;
            hess[i] = gh.h;
        }
        const XgbCriterion crit{grad, hess, params.lambda_reg, params.gamma_min_gain};
        Tree tree = HistogramGrower(bins, codes, n, crit, lp).grow();
        for (std::size_t i = 0; i < n; ++i) score[i] += params.learning_rate * tree.predict(data.row(i));
        detail::check_scores(score, ModelKind::lgbm, round);
        m.trees.push_back(std::move(tree));
        m.tree_weights.push_back(params.learning_rate);
    }
    return m;
}

inline EnsembleModel train_model(ModelKind kind, const Dataset& data, const TrainParams& params) {
    switch (kind) {
        case ModelKind::random_forest: return train_random_forest(data, params);
        case ModelKind::adaboost: return train_adaboost(data, params);
        case ModelKind::gbm: return train_gbm(data, params);
        case ModelKind::xgb: return train_xgb(data, params);
        case ModelKind::lgbm: return train_lgbm(data, params);
    }
    throw ContractError("unknown model kind");
}

/// Class-1 probability per row. Forest: mean leaf probability; AdaBoost:
/// sigmoid(2 * sum alpha_t h_t); boosted kinds: sigmoid(base + sum lr * tree).
inline std::vector<double> predict_proba(const EnsembleModel& model, MatrixView rows) {
    if (rows.cols != model.n_features)
        throw ContractError("predict_proba: model expects " + std::to_string(model.n_features) + " columns, got " +
                            std::to_string(rows.cols));
    std::vector<double> out(rows.rows());
    for (std::size_t i = 0; i < out.size(); ++i) {
        const double s = model.raw_score(rows.row(i));
        switch (model.kind) {
            case ModelKind::random_forest: out[i] = std::clamp(s, 0.0, 1.0); break;
            case ModelKind::adaboost: out[i] = sigmoid(2.0 * s); break;
            default: out[i] = sigmoid(s); break;
        }
    }
    return out;
}

inline std::vector<int> predict_labels(const EnsembleModel& model, MatrixView rows) {
    const auto p = predict_proba(model, rows);
    std::vector<int> out(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) out[i] = p[i] > model.threshold ? 1 : 0;
    return out;
}

}  // namespace pnd
