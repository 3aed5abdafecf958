#include <gtest/gtest.h>

#include <random>

#include "fixtures.hpp"
#include "pnd/model_io.hpp"

using namespace pnd;

namespace {

EnsembleModel fitted(ModelKind k) {
    TrainParams p = default_params(k);
    p.n_trees = 15;
    p.seed = 5;
    return train_model(k, fixtures::random_dataset(21, 600, 9, 0.1), p);
}

}  // namespace

TEST(ModelIo, RoundTripPreservesPredictionsForEveryKind) {
    std::mt19937_64 eng(1);
    std::uniform_real_distribution<double> u(-2.0, 2.0);
    std::vector<double> x(1000 * 9);
    for (auto& v : x) v = u(eng);
    for (auto k : kAllModelKinds) {
        const EnsembleModel m = fitted(k);
        const EnsembleModel back = deserialize_model(serialize_model(m));
        EXPECT_EQ(back.kind, m.kind);
        EXPECT_EQ(back.trees, m.trees);
        EXPECT_EQ(back.tree_weights, m.tree_weights);
        EXPECT_EQ(predict_proba(back, {x, 9}), predict_proba(m, {x, 9})) << to_string(k);
        EXPECT_EQ(serialize_model(back), serialize_model(m));
    }
}

TEST(ModelIo, EmptyModelRoundTrips) {
    EnsembleModel m;
    m.kind = ModelKind::lgbm;
    m.base_score = -2.5;
    const EnsembleModel back = deserialize_model(serialize_model(m));
    EXPECT_TRUE(back.trees.empty());
    EXPECT_EQ(back.base_score, -2.5);
}

TEST(ModelIo, TruncatedAndCorruptFilesFailCleanly) {
    const std::string text = serialize_model(fitted(ModelKind::xgb));
    for (std::size_t cut : {std::size_t{0}, std::size_t{1}, text.size() / 3, text.size() / 2, text.size() - 3})
        EXPECT_THROW(deserialize_model(text.substr(0, cut)), FormatError) << cut;
    EXPECT_THROW(deserialize_model("[]"), FormatError);
    EXPECT_THROW(deserialize_model("{\"format_version\": 99}"), FormatError);

    auto j = nlohmann::json::parse(text);
    j["kind"] = "svm";
    EXPECT_THROW(deserialize_model(j.dump()), FormatError);
    j = nlohmann::json::parse(text);
    j["tree_weights"].push_back(1.0);
    EXPECT_THROW(deserialize_model(j.dump()), FormatError);
    j = nlohmann::json::parse(text);
    j["trees"][0].erase(j["trees"][0].size() - 1);
    EXPECT_THROW(deserialize_model(j.dump()), FormatError);
    j = nlohmann::json::parse(text);
    j["trees"][0][0]["feature"] = 40;
    EXPECT_THROW(deserialize_model(j.dump()), FormatError);
}

TEST(ModelIo, FileCarriesDeclaredFields) {
    const auto j = model_to_json(fitted(ModelKind::adaboost));
    for (const char* key : {"format_version", "kind", "params", "base_score", "threshold", "trees", "tree_weights"})
        EXPECT_TRUE(j.contains(key)) << key;
    EXPECT_EQ(j["kind"], "adaboost");
    EXPECT_TRUE(j["trees"][0].back().contains("leaf"));
}
