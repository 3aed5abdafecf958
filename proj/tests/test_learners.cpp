#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "pnd/learners.hpp"
#include "pnd/model_io.hpp"

using namespace pnd;

namespace {

Dataset line(const std::vector<double>& x, const std::vector<int>& y) {
    Dataset d(1);
    for (std::size_t i = 0; i < x.size(); ++i) d.add_row(std::vector<double>{x[i]}, y[i]);
    return d;
}

TrainParams small(ModelKind k, std::size_t trees = 10) {
    TrainParams p = default_params(k);
    p.n_trees = trees;
    p.seed = 42;
    return p;
}

std::vector<double> random_rows(std::uint64_t seed, std::size_t n, std::size_t cols, double spread = 3.0) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(-spread, spread);
    std::vector<double> v(n * cols);
    for (auto& x : v) x = u(eng);
    return v;
}

}  // namespace

TEST(Params, DefaultsPerKind) {
    const auto rf = default_params(ModelKind::random_forest);
    EXPECT_EQ(rf.n_trees, 100u);
    EXPECT_EQ(rf.max_depth, 6);
    EXPECT_EQ(rf.feature_subsample, FeatureSubsample::sqrt);
    EXPECT_EQ(default_params(ModelKind::adaboost).max_depth, 1);
    const auto x = default_params(ModelKind::xgb);
    EXPECT_EQ(x.learning_rate, 0.1);
    EXPECT_EQ(x.lambda_reg, 1.0);
    EXPECT_EQ(x.gamma_min_gain, 0.0);
    EXPECT_EQ(x.max_leaves, 31u);
    EXPECT_EQ(x.n_bins, 255u);
}

TEST(Params, ValidationAndNames) {
    TrainParams p;
    p.learning_rate = 0.0;
    EXPECT_THROW(p.validate(ModelKind::gbm), ConfigError);
    p = {};
    p.n_bins = 1;
    EXPECT_THROW(p.validate(ModelKind::lgbm), ConfigError);
    for (auto k : kAllModelKinds) {
        EXPECT_EQ(parse_model_kind(short_name(k)), k);
        EXPECT_EQ(parse_model_kind(to_string(k)), k);
    }
    EXPECT_FALSE(parse_model_kind("svm"));
}

TEST(Logistic, GradHessMatchCentralDifferences) {
    std::mt19937_64 eng(2024);
    std::uniform_real_distribution<double> u(-10.0, 10.0);
    for (int i = 0; i < 100; ++i) {
        const double z = u(eng);
        const int y = i % 2;
        const auto gh = logistic_grad_hess(z, y);
        const auto fd = oracles::central_differences(z, y);
        EXPECT_LE(std::abs(gh.g - fd.g), 1e-5 * std::abs(fd.g)) << z;
        EXPECT_LE(std::abs(gh.h - fd.h), 1e-5 * std::abs(fd.h)) << z;
    }
}

TEST(Logistic, LossIsClamped) {
    EXPECT_DOUBLE_EQ(logistic_loss(1000.0, 0), -std::log(1.0 - (1.0 - kProbClamp)));
    EXPECT_DOUBLE_EQ(logistic_loss(-1000.0, 1), -std::log(kProbClamp));
    EXPECT_TRUE(std::isfinite(logistic_loss(-1000.0, 1)));
    EXPECT_NEAR(sigmoid(0.0), 0.5, 0.0);
}

TEST(Cart, EmptyAndBadWeightsRejected) {
    const Dataset d = line({0, 1}, {0, 1});
    EXPECT_THROW(train_cart(Dataset(1), std::vector<double>{}, TrainParams{}), ContractError);
    EXPECT_THROW(train_cart(d, std::vector<double>{0, 0}, TrainParams{}), ContractError);
    EXPECT_THROW(train_cart(d, std::vector<double>{1, -1}, TrainParams{}), ContractError);
    EXPECT_THROW(train_cart(d, std::vector<double>{1}, TrainParams{}), ContractError);
}

TEST(RandomForest, SingleUnbaggedTreeEqualsCart) {
    const Dataset d = fixtures::random_dataset(1, 300, 4);
    TrainParams p = small(ModelKind::random_forest, 1);
    p.feature_subsample = FeatureSubsample::all;
    p.bootstrap = false;
    const EnsembleModel m = train_random_forest(d, p);
    const Tree cart = train_cart(d, std::vector<double>(d.rows(), 1.0), p);
    const auto x = random_rows(2, 500, 4);
    const MatrixView mv{x, 4};
    const auto prob = predict_proba(m, mv);
    for (std::size_t i = 0; i < mv.rows(); ++i) EXPECT_DOUBLE_EQ(prob[i], cart.predict(mv.row(i)));
}

TEST(RandomForest, TreeOrderDoesNotMatter) {
    const Dataset d = fixtures::random_dataset(2, 300, 4);
    EnsembleModel m = train_random_forest(d, small(ModelKind::random_forest, 8));
    const auto x = random_rows(3, 300, 4);
    const auto before = predict_proba(m, {x, 4});
    std::reverse(m.trees.begin(), m.trees.end());
    const auto after = predict_proba(m, {x, 4});
    for (std::size_t i = 0; i < before.size(); ++i) EXPECT_NEAR(before[i], after[i], 1e-12);
}

TEST(RandomForest, IdenticalTreesEqualOneTree) {
    const Dataset d = fixtures::random_dataset(3, 200, 3);
    EnsembleModel one = train_random_forest(d, small(ModelKind::random_forest, 1));
    EnsembleModel many = one;
    many.trees.assign(5, one.trees[0]);
    many.tree_weights.assign(5, 0.2);
    const auto x = random_rows(4, 200, 3);
    const auto a = predict_proba(one, {x, 3}), b = predict_proba(many, {x, 3});
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-12);
}

TEST(RandomForest, SingleClassWarnsAndPredictsConstant) {
    const Dataset d = line({0, 1, 2}, {0, 0, 0});
    const EnsembleModel m = train_random_forest(d, small(ModelKind::random_forest));
    EXPECT_FALSE(m.warnings.empty());
    EXPECT_EQ(predict_proba(m, d.matrix())[0], 0.0);
}

TEST(AdaBoost, SeparableStopsAfterOneRoundWithCappedAlpha) {
    const Dataset d = line({0, 1, 2, 3}, {0, 0, 1, 1});
    std::vector<AdaBoostRound> trace;
    const EnsembleModel m = train_adaboost(d, small(ModelKind::adaboost, 50), &trace);
    ASSERT_EQ(m.trees.size(), 1u);
    EXPECT_EQ(trace[0].error, 0.0);
    EXPECT_NEAR(m.tree_weights[0], 0.5 * std::log((1.0 - 1e-10) / 1e-10), 1e-9);
    EXPECT_EQ(predict_labels(m, d.matrix()), (std::vector<int>{0, 0, 1, 1}));
}

TEST(AdaBoost, AlphaClosedForm) { EXPECT_NEAR(adaboost_alpha(0.25), 0.5 * std::log(3.0), 1e-15); }

TEST(AdaBoost, WeightsStayNormalizedAndErrorsBelowHalf) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const Dataset d = fixtures::random_dataset(seed, 400, 5, 0.2);
        std::vector<AdaBoostRound> trace;
        const EnsembleModel m = train_adaboost(d, small(ModelKind::adaboost, 40), &trace);
        ASSERT_EQ(trace.size(), m.trees.size());
        for (const auto& r : trace) {
            EXPECT_NEAR(r.weight_sum, 1.0, 1e-12);
            EXPECT_GT(r.min_weight, 0.0);
            EXPECT_LT(r.error, 0.5);
            EXPECT_GT(r.alpha, 0.0);
        }
        for (const auto& t : m.trees)
            for (const auto& n : t.nodes)
                if (n.is_leaf()) {
                    EXPECT_TRUE(n.value == 1.0 || n.value == -1.0);
                }
    }
}

TEST(AdaBoost, RequiresBothClasses) {
    EXPECT_THROW(train_adaboost(line({0, 1}, {1, 1}), small(ModelKind::adaboost)), ContractError);
}

TEST(Gbm, ZeroTreesPredictsPrior) {
    const Dataset d = line({0, 1, 2, 3, 4}, {0, 1, 0, 0, 1});
    const EnsembleModel m = train_gbm(d, small(ModelKind::gbm, 0));
    for (double p : predict_proba(m, d.matrix())) EXPECT_NEAR(p, 0.4, 1e-15);
}

TEST(Gbm, HandNewtonStep) {
    const Dataset d = line({0, 1, 2, 3}, {0, 0, 0, 1});
    TrainParams p = small(ModelKind::gbm, 1);
    p.max_depth = 1;
    const EnsembleModel m = train_gbm(d, p);
    EXPECT_NEAR(m.base_score, std::log(1.0 / 3.0), 1e-15);
    const Tree& t = m.trees[0];
    ASSERT_EQ(t.nodes.size(), 3u);
    EXPECT_EQ(t.nodes[0].threshold, 2.5);
    // prior p = 0.25: residuals -0.25 x3 and 0.75, hessian 0.1875 each
    EXPECT_NEAR(t.nodes[static_cast<std::size_t>(t.nodes[0].left)].value, -0.75 / 0.5625, 1e-12);
    EXPECT_NEAR(t.nodes[static_cast<std::size_t>(t.nodes[0].right)].value, 0.75 / 0.1875, 1e-12);

    const Dataset e = line({0, 1, 2, 3}, {0, 0, 1, 1});
    const EnsembleModel me = train_gbm(e, p);
    EXPECT_EQ(me.trees[0].nodes[0].threshold, 1.5);
    EXPECT_NEAR(me.trees[0].nodes[1].value, -2.0, 1e-12);
    EXPECT_NEAR(me.trees[0].nodes[2].value, 2.0, 1e-12);
}

TEST(Gbm, TrainingLossNonIncreasing) {
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const Dataset d = fixtures::random_dataset(seed, 500, 5, 0.15, seed % 2 ? 8 : 0);
        TrainParams p = small(ModelKind::gbm, 50);
        p.max_depth = 3;
        const EnsembleModel m = train_gbm(d, p);
        std::vector<double> score(d.rows(), m.base_score);
        double prev = mean_logistic_loss(score, d);
        for (std::size_t t = 0; t < m.trees.size(); ++t) {
            for (std::size_t i = 0; i < d.rows(); ++i) score[i] += m.tree_weights[t] * m.trees[t].predict(d.row(i));
            const double loss = mean_logistic_loss(score, d);
            EXPECT_LE(loss, prev + 1e-12) << "seed " << seed << " round " << t;
            prev = loss;
        }
    }
}

TEST(Xgb, HugeLambdaShrinksLeavesToZero) {
    const Dataset d = fixtures::random_dataset(5, 300, 4);
    TrainParams p = small(ModelKind::xgb, 3);
    p.lambda_reg = 1e12;
    const EnsembleModel m = train_xgb(d, p);
    for (const auto& t : m.trees)
        for (const auto& n : t.nodes)
            if (n.is_leaf()) {
                EXPECT_LE(std::abs(n.value), 1e-6);
            }
}

TEST(Xgb, LargerLambdaNeverGrowsLeafWeights) {
    std::mt19937_64 eng(8);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(0.0, 0.25);
    for (int trial = 0; trial < 200; ++trial) {
        XgbCriterion::Stats s{n(eng) * 10, u(eng) * 10, 10};
        double prev = std::numeric_limits<double>::infinity();
        for (double lambda : {0.0, 0.1, 1.0, 10.0, 1e3}) {
            const XgbCriterion c{{}, {}, lambda, 0.0};
            EXPECT_LE(std::abs(c.leaf_value(s)), prev);
            prev = std::abs(c.leaf_value(s));
        }
    }
}

TEST(Xgb, GammaPrunesWeakSplits) {
    const Dataset d = fixtures::random_dataset(6, 300, 4);
    TrainParams p = small(ModelKind::xgb, 1);
    p.gamma_min_gain = 1e9;
    EXPECT_EQ(train_xgb(d, p).trees[0].nodes.size(), 1u);
}

TEST(Lgbm, TwoLeavesIsOneSplit) {
    const Dataset d = fixtures::random_dataset(7, 500, 4);
    for (int depth : {1, 6, 12}) {
        TrainParams p = small(ModelKind::lgbm, 3);
        p.max_leaves = 2;
        p.max_depth = depth;
        for (const auto& t : train_lgbm(d, p).trees) EXPECT_LE(t.leaf_count(), 2u);
    }
}

TEST(Lgbm, LeafBudgetAndDepth) {
    const Dataset d = fixtures::random_dataset(8, 2000, 5);
    TrainParams p = small(ModelKind::lgbm, 5);
    p.max_leaves = 7;
    p.max_depth = 3;
    for (const auto& t : train_lgbm(d, p).trees) {
        EXPECT_LE(t.leaf_count(), 7u);
        EXPECT_LE(t.depth(), 3);
    }
}

TEST(Lgbm, RootMatchesXgbWithExactBins) {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const Dataset d = fixtures::random_dataset(seed, 100, 5, 0.3, 20);
        TrainParams p = small(ModelKind::lgbm, 1);
        p.max_leaves = 2;
        const auto l = train_lgbm(d, p);
        const auto x = train_xgb(d, small(ModelKind::xgb, 1));
        EXPECT_EQ(l.trees[0].nodes[0].feature, x.trees[0].nodes[0].feature);
        EXPECT_EQ(l.trees[0].nodes[0].threshold, x.trees[0].nodes[0].threshold);
    }
}

TEST(Predict, EmptyBoostedModelIsSigmoidOfBase) {
    EnsembleModel m;
    m.kind = ModelKind::xgb;
    m.n_features = 2;
    m.base_score = -1.0;
    const std::vector<double> x = {1, 2, 3, 4};
    for (double p : predict_proba(m, {x, 2})) EXPECT_DOUBLE_EQ(p, sigmoid(-1.0));
}

TEST(Predict, ColumnMismatchRejected) {
    EnsembleModel m;
    m.n_features = 9;
    const std::vector<double> x(8);
    EXPECT_THROW(predict_proba(m, {x, 4}), ContractError);
}

TEST(Predict, ProbabilitiesInUnitIntervalForAllKinds) {
    const Dataset d = fixtures::random_dataset(9, 400, 9, 0.1);
    const auto x = random_rows(10, 10'000, 9, 50.0);
    for (auto k : kAllModelKinds) {
        const auto m = train_model(k, d, small(k, 20));
        for (double p : predict_proba(m, {x, 9})) {
            EXPECT_GE(p, 0.0);
            EXPECT_LE(p, 1.0);
        }
    }
}

TEST(Determinism, SameModelAcrossRunsAndWorkers) {
    const Dataset d = fixtures::random_dataset(11, 3000, 9, 0.1);
    for (auto k : kAllModelKinds) {
        TrainParams p = small(k, 12);
        const std::string a = serialize_model(train_model(k, d, p));
        EXPECT_EQ(serialize_model(train_model(k, d, p)), a) << to_string(k);
        p.workers = 4;
        EXPECT_EQ(serialize_model(train_model(k, d, p)), a) << to_string(k);
    }
}

TEST(Determinism, LargeNodesUseParallelScansIdentically) {
    const Dataset d = fixtures::random_dataset(12, 20'000, 9, 0.05);
    TrainParams p = small(ModelKind::xgb, 2);
    const std::string a = serialize_model(train_xgb(d, p));
    p.workers = 4;
    EXPECT_EQ(serialize_model(train_xgb(d, p)), a);
}
