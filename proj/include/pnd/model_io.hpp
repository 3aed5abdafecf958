#pragma once

// Model files: JSON with a format version, trees written pre-order.

#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "pnd/error.hpp"
#include "pnd/learners.hpp"

namespace pnd {

inline constexpr int kModelFormatVersion = 1;

namespace detail {

using nlohmann::json;

inline void tree_to_json(const Tree& tree, int i, json& out) {
    const auto& nd = tree.nodes[static_cast<std::size_t>(i)];
    if (nd.is_leaf()) {
        out.push_back({{"leaf", nd.value}, {"n", nd.n_samples}});
        return;
    }
    out.push_back({{"feature", nd.feature}, {"threshold", nd.threshold}, {"value", nd.value}, {"n", nd.n_samples}});
    tree_to_json(tree, nd.left, out);
    tree_to_json(tree, nd.right, out);
}

inline int tree_from_json(const json& arr, std::size_t& pos, std::size_t n_features, Tree& tree, int depth) {
    if (depth > 4096) throw FormatError("model file: tree too deep");
    if (pos >= arr.size()) throw FormatError("model file: tree ends before all children were read");
    const json& j = arr.at(pos++);
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("leaf")) {
        tree.nodes.back().value = j.at("leaf").get<double>();
        tree.nodes.back().n_samples = j.at("n").get<std::int64_t>();
        return id;
    }
    const int feature = j.at("feature").get<int>();
    if (feature < 0 || static_cast<std::size_t>(feature) >= n_features)
        throw FormatError("model file: feature index " + std::to_string(feature) + " out of range");
    const double threshold = j.at("threshold").get<double>();
    const double value = j.at("value").get<double>();
    const auto n = j.at("n").get<std::int64_t>();
    const int l = tree_from_json(arr, pos, n_features, tree, depth + 1);
    const int r = tree_from_json(arr, pos, n_features, tree, depth + 1);
    tree.nodes[static_cast<std::size_t>(id)] = {feature, threshold, l, r, value, n};
    return id;
}

inline json params_to_json(const TrainParams& p) {
    return {{"n_trees", p.n_trees},
            {"max_depth", p.max_depth},
            {"learning_rate", p.learning_rate},
            {"lambda_reg", p.lambda_reg},
            {"gamma_min_gain", p.gamma_min_gain},
            {"max_leaves", p.max_leaves},
            {"n_bins", p.n_bins},
            {"min_samples_leaf", p.min_samples_leaf},
            {"feature_subsample", p.feature_subsample == FeatureSubsample::sqrt ? "sqrt" : "all"},
            {"bootstrap", p.bootstrap},
            {"seed", p.seed}};
}

inline TrainParams params_from_json(const json& j) {
    TrainParams p;
    p.n_trees = j.at("n_trees").get<std::size_t>();
    p.max_depth = j.at("max_depth").get<int>();
    p.learning_rate = j.at("learning_rate").get<double>();
    p.lambda_reg = j.at("lambda_reg").get<double>();
    p.gamma_min_gain = j.at("gamma_min_gain").get<double>();
    p.max_leaves = j.at("max_leaves").get<std::size_t>();
    p.n_bins = j.at("n_bins").get<std::size_t>();
    p.min_samples_leaf = j.at("min_samples_leaf").get<std::size_t>();
    const auto fs = j.at("feature_subsample").get<std::string>();
    if (fs != "all" && fs != "sqrt") throw FormatError("model file: unknown feature_subsample '" + fs + "'");
    p.feature_subsample = fs == "sqrt" ? FeatureSubsample::sqrt : FeatureSubsample::all;
    p.bootstrap = j.at("bootstrap").get<bool>();
    p.seed = j.at("seed").get<std::uint64_t>();
    return p;
}

}  // namespace detail

inline nlohmann::json model_to_json(const EnsembleModel& m) {
    using nlohmann::json;
    json trees = json::array();
    for (const auto& t : m.trees) {
        json nodes = json::array();
        if (!t.nodes.empty()) detail::tree_to_json(t, 0, nodes);
        trees.push_back(std::move(nodes));
    }
    return {{"format_version", kModelFormatVersion},
            {"kind", std::string(to_string(m.kind))},
            {"n_features", m.n_features},
            {"params", detail::params_to_json(m.params)},
            {"base_score", m.base_score},
            {"threshold", m.threshold},
            {"trees", std::move(trees)},
            {"tree_weights", m.tree_weights}};
}

inline void serialize_model(const EnsembleModel& m, std::ostream& out) {
    out << model_to_json(m).dump(1) << '\n';
    if (!out) throw Error("serialize_model: write failed");
}

inline std::string serialize_model(const EnsembleModel& m) {
    std::ostringstream os;
    serialize_model(m, os);
    return os.str();
}

inline EnsembleModel deserialize_model(std::istream& in) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw FormatError(std::string("model file: malformed JSON: ") + e.what());
    }
    try {
        if (!j.is_object()) throw FormatError("model file: top level must be an object");
        const int version = j.at("format_version").get<int>();
        if (version != kModelFormatVersion)
            throw FormatError("model file: format_version " + std::to_string(version) + " unsupported (expected " +
                              std::to_string(kModelFormatVersion) + ")");
        EnsembleModel m;
        const auto kind = parse_model_kind(j.at("kind").get<std::string>());
        if (!kind) throw FormatError("model file: unknown kind");
        m.kind = *kind;
        m.n_features = j.at("n_features").get<std::size_t>();
        m.params = detail::params_from_json(j.at("params"));
        m.base_score = j.at("base_score").get<double>();
        m.threshold = j.at("threshold").get<double>();
        m.tree_weights = j.at("tree_weights").get<std::vector<double>>();
        for (const auto& arr : j.at("trees")) {
            if (!arr.is_array() || arr.empty()) throw FormatError("model file: empty tree");
            Tree t;
            std::size_t pos = 0;
            detail::tree_from_json(arr, pos, m.n_features, t, 0);
            if (pos != arr.size()) throw FormatError("model file: trailing nodes after tree");
            m.trees.push_back(std::move(t));
        }
        if (m.trees.size() != m.tree_weights.size())
            throw FormatError("model file: trees and tree_weights differ in length");
        if (m.kind == ModelKind::adaboost) {
            for (double a : m.tree_weights) {
                if (!(a > 0.0) || !std::isfinite(a)) throw FormatError("model file: adaboost weights must be positive");
            }
        }
        return m;
    } catch (const json::exception& e) {
        throw FormatError(std::string("model file: ") + e.what());
    }
}

inline EnsembleModel deserialize_model(const std::string& text) {
    std::istringstream is(text);
    return deserialize_model(is);
}

}  // namespace pnd
