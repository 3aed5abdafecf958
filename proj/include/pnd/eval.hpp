#pragma once

// Stratified splitting, confusion-matrix metrics, and the original-vs-SMOTE
// experiment runner with its report tables.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "pnd/dataset.hpp"
#include "pnd/error.hpp"
#include "pnd/learners.hpp"
#include "pnd/resample.hpp"
#include "pnd/rng.hpp"

namespace pnd {

struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;
    std::size_t fn = 0;

    std::size_t total() const { return tp + fp + tn + fn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

template <class P, class A>
ConfusionMatrix confusion(std::span<const P> predicted, std::span<const A> actual) {
    if (predicted.size() != actual.size())
        throw ContractError("confusion: " + std::to_string(predicted.size()) + " predictions for " +
                            std::to_string(actual.size()) + " labels");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        const bool p = predicted[i] != 0;
        const bool a = actual[i] != 0;
        if (p && a) ++cm.tp;
        else if (p) ++cm.fp;
        else if (a) ++cm.fn;
        else ++cm.tn;
    }
    return cm;
}

inline ConfusionMatrix confusion(const std::vector<int>& predicted, const std::vector<int>& actual) {
    return confusion(std::span<const int>(predicted), std::span<const int>(actual));
}

// Percentages. Ratios with a zero denominator stay undefined.
struct Metrics {
    double accuracy = 0.0;
    std::optional<double> precision;
    std::optional<double> recall;
    std::optional<double> f1;
};

inline std::optional<double> f1_score(std::optional<double> precision, std::optional<double> recall) {
    if (!precision || !recall || *precision + *recall <= 0.0) return std::nullopt;
    return 2.0 * *precision * *recall / (*precision + *recall);
}

inline Metrics compute_metrics(const ConfusionMatrix& cm) {
    if (cm.total() == 0) throw ContractError("compute_metrics: empty confusion matrix");
    const auto ratio = [](std::size_t num, std::size_t den) -> std::optional<double> {
        if (den == 0) return std::nullopt;
        return 100.0 * static_cast<double>(num) / static_cast<double>(den);
    };
    Metrics m;
    m.accuracy = *ratio(cm.tp + cm.tn, cm.total());
    m.precision = ratio(cm.tp, cm.tp + cm.fp);
    m.recall = ratio(cm.tp, cm.tp + cm.fn);
    m.f1 = f1_score(m.precision, m.recall);
    return m;
}

inline constexpr const char* kUndefined = "—";

inline std::string format_percent(std::optional<double> v) {
    if (!v) return kUndefined;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", *v);
    return buf;
}

// ---------------------------------------------------------------------------
// Splitting

struct SplitResult {
    Dataset train;
    Dataset test;
    std::vector<std::size_t> train_index;  // rows of the input, ascending
    std::vector<std::size_t> test_index;
};

/// Shuffles each class separately and sends round(train_frac * n_class)
/// of it to training, clamped so both sides keep at least one row of each
/// class. Partitions preserve the input row order.
inline SplitResult stratified_split(const Dataset& data, double train_frac, std::uint64_t seed) {
    if (!(train_frac > 0.0 && train_frac < 1.0)) throw ConfigError("train_frac must be in (0, 1)");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < data.rows(); ++i) by_class[data.label(i)].push_back(i);
    for (int c = 0; c < 2; ++c) {
        if (by_class[c].size() < 2)
            throw SplitError("stratified_split: class " + std::to_string(c) + " has " +
                             std::to_string(by_class[c].size()) + " rows, need at least 2");
    }
    SplitResult out{Dataset(data.cols()), Dataset(data.cols()), {}, {}};
    std::vector<std::uint8_t> in_train(data.rows(), 0);
    for (int c = 0; c < 2; ++c) {
        auto& idx = by_class[c];
        Engine eng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        // Fisher-Yates.
        for (std::size_t i = idx.size(); i > 1; --i) std::swap(idx[i - 1], idx[uniform_index(eng, i)]);
        const auto n = static_cast<double>(idx.size());
        auto n_train = static_cast<std::size_t>(std::llround(train_frac * n));
        n_train = std::clamp<std::size_t>(n_train, 1, idx.size() - 1);
        for (std::size_t i = 0; i < n_train; ++i) in_train[idx[i]] = 1;
    }
    for (std::size_t i = 0; i < data.rows(); ++i) (in_train[i] ? out.train_index : out.test_index).push_back(i);
    out.train = data.subset(out.train_index);
    out.test = data.subset(out.test_index);
    return out;
}

// Order-sensitive fingerprint over all rows.
inline std::uint64_t dataset_fingerprint(const Dataset& d) {
    std::uint64_t h = splitmix64(d.rows());
    for (std::size_t i = 0; i < d.rows(); ++i) h = splitmix64(h ^ d.row_hash(i));
    return h;
}

// ---------------------------------------------------------------------------
// Experiment

enum class DataVariant { original, smote };

inline std::string_view to_string(DataVariant v) { return v == DataVariant::original ? "original" : "smote"; }

inline std::string_view display_name(DataVariant v) { return v == DataVariant::original ? "Original" : "SMOTE"; }

inline std::optional<DataVariant> parse_variant(std::string_view s) {
    if (s == "original") return DataVariant::original;
    if (s == "smote") return DataVariant::smote;
    return std::nullopt;
}

struct EvalReport {
    ModelKind kind = ModelKind::gbm;
    DataVariant variant = DataVariant::original;
    ConfusionMatrix cm;
    Metrics metrics;
    double train_seconds = 0.0;
    std::uint64_t seed = 0;
    TrainParams params;
    std::size_t train_rows = 0;
    std::size_t train_pos = 0;
};

struct ExperimentConfig {
    std::vector<ModelKind> models{std::begin(kAllModelKinds), std::end(kAllModelKinds)};
    std::vector<DataVariant> variants{DataVariant::original, DataVariant::smote};
    double train_frac = 0.7;
    SmoteConfig smote;
    std::map<ModelKind, TrainParams> params;  // missing kinds use default_params
    std::uint64_t seed = 0;
    std::size_t workers = 1;

    TrainParams params_for(ModelKind k) const {
        const auto it = params.find(k);
        return it == params.end() ? default_params(k) : it->second;
    }
};

struct ExperimentResult {
    std::vector<EvalReport> reports;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::size_t n_train_pos = 0;
    std::size_t n_test_pos = 0;
    std::size_t n_smote_rows = 0;  // 0 when the SMOTE variant was not run
    std::uint64_t test_fingerprint = 0;
};

inline std::uint64_t model_seed(std::uint64_t seed, ModelKind k) { return derive_seed(seed, to_string(k)); }

/// Trains every selected model on the raw training split and/or its SMOTE
/// resampling, and scores each on the same untouched test split. Only the
/// training call is timed. Cells run one at a time so timings are unshared.
inline ExperimentResult run_experiment(const Dataset& data, const ExperimentConfig& cfg) {
    if (cfg.models.empty()) throw ConfigError("experiment: no model kinds selected");
    if (cfg.variants.empty()) throw ConfigError("experiment: no data variants selected");
    auto split = stratified_split(data, cfg.train_frac, derive_seed(cfg.seed, "split"));
    ExperimentResult res;
    res.n_train = split.train.rows();
    res.n_test = split.test.rows();
    res.n_train_pos = split.train.n_pos();
    res.n_test_pos = split.test.n_pos();
    res.test_fingerprint = dataset_fingerprint(split.test);

    std::optional<Dataset> resampled;
    if (std::find(cfg.variants.begin(), cfg.variants.end(), DataVariant::smote) != cfg.variants.end()) {
        SmoteConfig sc = cfg.smote;
        sc.seed = derive_seed(cfg.seed, "smote");
        sc.workers = cfg.workers;
        resampled = smote(split.train, sc);
        res.n_smote_rows = resampled->rows();
    }

    std::vector<int> actual(split.test.rows());
    for (std::size_t i = 0; i < actual.size(); ++i) actual[i] = split.test.label(i);

    for (auto kind : cfg.models) {
        for (auto variant : cfg.variants) {
            const Dataset& train = variant == DataVariant::smote ? *resampled : split.train;
            EvalReport rep;
            rep.kind = kind;
            rep.variant = variant;
            rep.seed = cfg.seed;
            rep.params = cfg.params_for(kind);
            rep.params.seed = model_seed(cfg.seed, kind);
            rep.params.workers = cfg.workers;
            rep.train_rows = train.rows();
            rep.train_pos = train.n_pos();
            try {
                const auto t0 = std::chrono::steady_clock::now();
                const EnsembleModel model = train_model(kind, train, rep.params);
                const auto t1 = std::chrono::steady_clock::now();
                rep.train_seconds = std::chrono::duration<double>(t1 - t0).count();
                rep.cm = confusion(predict_labels(model, split.test.matrix()), actual);
                rep.metrics = compute_metrics(rep.cm);
            } catch (const Error& e) {
                throw Error("experiment cell (" + std::string(short_name(kind)) + ", " +
                            std::string(to_string(variant)) + "): " + e.what());
            }
            res.reports.push_back(rep);
        }
    }
    if (dataset_fingerprint(split.test) != res.test_fingerprint)
        throw ContractError("experiment: test partition changed during the run");
    return res;
}

// ---------------------------------------------------------------------------
// Reports

inline constexpr std::string_view kReportCsvHeader = "model,variant,accuracy,precision,recall,f1,train_seconds,seed";

inline void write_report_csv(const std::vector<EvalReport>& reports, std::ostream& out, bool with_timing = true) {
    out << kReportCsvHeader << '\n';
    for (const auto& r : reports) {
        char secs[32];
        std::snprintf(secs, sizeof secs, "%.3f", r.train_seconds);
        out << short_name(r.kind) << ',' << to_string(r.variant) << ',' << format_percent(r.metrics.accuracy) << ','
            << format_percent(r.metrics.precision) << ',' << format_percent(r.metrics.recall) << ','
            << format_percent(r.metrics.f1) << ',' << (with_timing ? secs : "") << ',' << r.seed << '\n';
    }
}

namespace detail {

inline std::string pad(std::string_view s, std::size_t width) {
    std::string out(s);
    // Count code points so the em dash lines up.
    std::size_t cps = 0;
    for (unsigned char c : s) cps += (c & 0xC0) != 0x80;
    if (cps < width) out.append(width - cps, ' ');
    return out;
}

}  // namespace detail

/// Aligned text table: Model, Data, Accuracy, Precision, Recall, F1-Score.
inline std::string render_metrics_table(const std::vector<EvalReport>& reports) {
    std::ostringstream os;
    os << detail::pad("Model", 10) << detail::pad("Data", 10) << detail::pad("Accuracy", 10)
       << detail::pad("Precision", 11) << detail::pad("Recall", 9) << "F1-Score\n";
    ModelKind prev{};
    bool first = true;
    for (const auto& r : reports) {
        const bool same = !first && r.kind == prev;
        os << detail::pad(same ? "" : display_name(r.kind), 10) << detail::pad(display_name(r.variant), 10)
           << detail::pad(format_percent(r.metrics.accuracy), 10) << detail::pad(format_percent(r.metrics.precision), 11)
           << detail::pad(format_percent(r.metrics.recall), 9) << format_percent(r.metrics.f1) << '\n';
        prev = r.kind;
        first = false;
    }
    return os.str();
}

/// Aligned text table of training seconds for the SMOTE-variant cells (all
/// cells when no SMOTE variant ran).
inline std::string render_timing_table(const std::vector<EvalReport>& reports) {
    const bool any_smote = std::any_of(reports.begin(), reports.end(),
                                       [](const auto& r) { return r.variant == DataVariant::smote; });
    std::ostringstream os;
    os << detail::pad("Model", 10) << detail::pad("Data", 10) << "Training Time (s)\n";
    for (const auto& r : reports) {
        if (any_smote && r.variant != DataVariant::smote) continue;
        char secs[32];
        std::snprintf(secs, sizeof secs, "%.3f", r.train_seconds);
        os << detail::pad(display_name(r.kind), 10) << detail::pad(display_name(r.variant), 10) << secs << '\n';
    }
    return os.str();
}

}  // namespace pnd
