#pragma once

// Command-line front end: simulate, featurize, train, evaluate, experiment, bench.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "pnd/pnd.hpp"

namespace pnd::cli {

enum ExitCode : int { kOk = 0, kUsage = 1, kDataError = 2 };

struct ParamFlags {
    std::optional<std::size_t> n_trees;
    std::optional<int> max_depth;
    std::optional<double> learning_rate;
    std::optional<double> lambda_reg;
    std::optional<double> gamma_min_gain;
    std::optional<std::size_t> max_leaves;
    std::optional<std::size_t> n_bins;
    std::optional<std::size_t> min_samples_leaf;

    void attach(CLI::App* sub) {
        sub->add_option("--n-trees", n_trees, "Trees / boosting rounds (default 100)");
        sub->add_option("--max-depth", max_depth, "Tree depth limit (default 6, AdaBoost 1)");
        sub->add_option("--learning-rate", learning_rate, "Shrinkage for boosted kinds (default 0.1)");
        sub->add_option("--lambda", lambda_reg, "L2 leaf regularization for xgb/lgbm (default 1)");
        sub->add_option("--gamma", gamma_min_gain, "Minimum split gain for xgb/lgbm (default 0)");
        sub->add_option("--max-leaves", max_leaves, "Leaf budget for lgbm (default 31)");
        sub->add_option("--n-bins", n_bins, "Histogram bins for lgbm (default 255)");
        sub->add_option("--min-samples-leaf", min_samples_leaf, "Minimum rows per leaf (default 1)");
    }

    TrainParams apply(ModelKind kind) const {
        TrainParams p = default_params(kind);
        if (n_trees) p.n_trees = *n_trees;
        if (max_depth) p.max_depth = *max_depth;
        if (learning_rate) p.learning_rate = *learning_rate;
        if (lambda_reg) p.lambda_reg = *lambda_reg;
        if (gamma_min_gain) p.gamma_min_gain = *gamma_min_gain;
        if (max_leaves) p.max_leaves = *max_leaves;
        if (n_bins) p.n_bins = *n_bins;
        if (min_samples_leaf) p.min_samples_leaf = *min_samples_leaf;
        return p;
    }
};

struct Options {
    // shared
    std::optional<std::uint64_t> seed;
    std::string out;
    std::size_t workers = 1;
    bool quiet = false;
    int chunk_seconds = 25;
    double window_hours = 7.0;
    double train_frac = 0.7;
    std::size_t smote_k = 5;
    std::vector<std::string> data;
    bool smote_on = false;

    // simulate
    std::string synth_config;
    std::size_t streams = 10;
    std::size_t events_per_stream = 3;
    std::optional<double> days;
    std::optional<double> imbalance;
    bool single_stream = false;
    bool no_trades = false;
    bool no_vary = false;

    // featurize
    std::string trades;
    std::string events;

    // train / evaluate
    std::string model = "xgb";
    std::string model_file;
    bool test_split = false;

    // experiment / bench
    std::string models = "all";

    ParamFlags params;
};

inline std::vector<ModelKind> parse_models(const std::string& spec) {
    if (spec == "all") return {std::begin(kAllModelKinds), std::end(kAllModelKinds)};
    std::vector<ModelKind> out;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        const auto k = parse_model_kind(item);
        if (!k) throw CLI::ValidationError("--models", "unknown model kind '" + item + "'");
        if (std::find(out.begin(), out.end(), *k) == out.end()) out.push_back(*k);
    }
    if (out.empty()) throw CLI::ValidationError("--models", "empty model list");
    return out;
}

namespace detail {

namespace fs = std::filesystem;

inline void require_file(const std::string& path, const char* what) {
    if (path.empty()) throw CLI::ValidationError(what, "a path is required");
    if (!fs::is_regular_file(path)) throw CLI::ValidationError(what, "no such file '" + path + "'");
}

inline void require_output_parent(const std::string& path) {
    if (path.empty()) return;
    const auto parent = fs::path(path).parent_path();
    if (!parent.empty() && !fs::is_directory(parent))
        throw CLI::ValidationError("--out", "directory '" + parent.string() + "' does not exist");
}

inline std::vector<std::string> expand_data(const std::vector<std::string>& inputs) {
    if (inputs.empty()) throw CLI::ValidationError("--data", "at least one feature CSV or manifest is required");
    std::vector<std::string> paths;
    for (const auto& p : inputs) {
        require_file(p, "--data");
        if (fs::path(p).extension() == ".json") {
            for (auto& f : manifest_feature_paths(p)) paths.push_back(std::move(f));
        } else {
            paths.push_back(p);
        }
    }
    return paths;
}

inline std::uint64_t resolve_seed(const Options& o, std::ostream& out) {
    if (o.seed) return *o.seed;
    std::random_device rd;
    const std::uint64_t s = (std::uint64_t{rd()} << 32) ^ rd();
    out << "seed: " << s << " (randomly selected; pass --seed " << s << " to reproduce)\n";
    return s;
}

inline WindowConfig window_config(const Options& o) {
    WindowConfig w;
    w.window_hours = o.window_hours;
    w.chunk_len_s = o.chunk_seconds;
    w.validate();
    return w;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::ofstream f(path);
    if (!f) throw Error("cannot write '" + path + "'");
    f << text;
    if (!f) throw Error("write to '" + path + "' failed");
}

inline std::string effective_config(const CLI::App& app, const CLI::App* sub, std::uint64_t seed) {
    std::ostringstream os;
    os << "# effective configuration\n"
       << "subcommand = \"" << sub->get_name() << "\"\n"
       << "seed = " << seed << '\n'
       << app.config_to_str(true, false);
    return os.str();
}

// ---------------------------------------------------------------------------

inline int cmd_simulate(const Options& o, std::ostream& out) {
    if (o.out.empty()) throw CLI::ValidationError("--out", "an output directory is required");
    if (!o.synth_config.empty()) require_file(o.synth_config, "--synth-config");
    const std::uint64_t seed = resolve_seed(o, out);

    SynthConfig tmpl;
    if (!o.synth_config.empty()) {
        std::ifstream f(o.synth_config);
        try {
            tmpl = synth_config_from_json(nlohmann::json::parse(f));
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("synth config '" + o.synth_config + "': " + e.what());
        }
    }
    tmpl.chunk_len_s = o.chunk_seconds;
    if (o.days) tmpl.duration_days = *o.days;

    if (o.single_stream) {
        tmpl.seed = seed;
        const SynthStream s = generate(tmpl);
        fs::create_directories(o.out);
        const auto base = fs::path(o.out) / tmpl.symbol;
        {
            std::ofstream f(base.string() + "_trades.csv");
            write_trades_csv(s.trades, f);
        }
        {
            std::ofstream f(base.string() + "_events.csv");
            write_events_csv(s.events, f);
        }
        out << "wrote " << s.trades.size() << " trades and " << s.events.size() << " events to " << o.out << '\n';
        return kOk;
    }

    BenchmarkConfig bc;
    bc.n_streams = o.streams;
    bc.events_per_stream = o.events_per_stream;
    bc.imbalance_target = o.imbalance;
    bc.stream_template = tmpl;
    bc.window = window_config(o);
    bc.seed = seed;
    bc.vary_streams = !o.no_vary;
    bc.out_dir = o.out;
    bc.write_trades = !o.no_trades;
    bc.workers = o.workers;
    const BenchmarkResult r = make_benchmark(bc);
    std::size_t dropped = 0, dropped_pos = 0, events = 0;
    for (const auto& s : r.streams) {
        dropped += s.warmup_dropped;
        dropped_pos += s.warmup_dropped_positives;
        events += s.n_events;
    }
    out << "streams: " << r.streams.size() << "\nrows: " << r.data.rows() << "\npositives: " << r.n_pos
        << "\nnegatives: " << r.n_neg << "\nimbalance: " << r.achieved_imbalance << ":1\nevents: " << events
        << "\nwarm-up rows dropped: " << dropped << " (" << dropped_pos << " positive)\nmanifest: " << r.manifest_path
        << '\n';
    return kOk;
}

inline int cmd_featurize(const Options& o, std::ostream& out) {
    require_file(o.trades, "--trades");
    require_file(o.events, "--events");
    if (o.out.empty()) throw CLI::ValidationError("--out", "an output path is required");
    require_output_parent(o.out);
    const WindowConfig w = window_config(o);

    std::ifstream tf(o.trades), ef(o.events);
    std::vector<TradeRecord> trades;
    std::vector<PumpEvent> events;
    try {
        trades = parse_trades(tf);
    } catch (const Error& e) {
        throw Error(o.trades + ": " + e.what());
    }
    try {
        events = parse_events(ef);
    } catch (const Error& e) {
        throw Error(o.events + ": " + e.what());
    }
    const auto chunks = label_chunks(chunkize(trades, o.chunk_seconds), events);
    const FeatureResult fr = compute_features(chunks, w);
    std::ofstream f(o.out);
    if (!f) throw Error("cannot write '" + o.out + "'");
    write_feature_csv(fr.rows, f);
    std::size_t pos = 0;
    for (const auto& r : fr.rows) pos += static_cast<std::size_t>(r.label);
    out << "chunks: " << chunks.size() << "\nrows: " << fr.rows.size() << "\npositive rows: " << pos
        << "\nwarm-up rows dropped: " << fr.warmup_dropped << " (" << fr.warmup_dropped_positives << " positive)\n";
    return kOk;
}

inline int cmd_train(const Options& o, std::ostream& out, const std::string& config_echo) {
    const auto kind = parse_model_kind(o.model);
    if (!kind) throw CLI::ValidationError("--model", "unknown model kind '" + o.model + "'");
    const auto paths = expand_data(o.data);
    if (o.out.empty()) throw CLI::ValidationError("--out", "a model output path is required");
    require_output_parent(o.out);
    const std::uint64_t seed = resolve_seed(o, out);
    TrainParams p = o.params.apply(*kind);
    p.seed = model_seed(seed, *kind);
    p.workers = o.workers;
    p.validate(*kind);

    const Dataset data = load_feature_dataset(paths);
    const SplitResult split = stratified_split(data, o.train_frac, derive_seed(seed, "split"));
    Dataset train = split.train;
    if (o.smote_on) {
        SmoteConfig sc;
        sc.k_neighbors = o.smote_k;
        sc.seed = derive_seed(seed, "smote");
        sc.workers = o.workers;
        train = smote(split.train, sc);
    }
    const EnsembleModel m = train_model(*kind, train, p);
    std::ofstream f(o.out);
    if (!f) throw Error("cannot write '" + o.out + "'");
    serialize_model(m, f);
    write_text(o.out + ".config", config_echo);
    for (const auto& w : m.warnings) out << "warning: " << w << '\n';
    if (!o.quiet)
        out << "trained " << display_name(*kind) << " on " << train.rows() << " rows (" << train.n_pos()
            << " positive); model written to " << o.out << '\n';
    return kOk;
}

inline int cmd_evaluate(const Options& o, std::ostream& out) {
    require_file(o.model_file, "--model-file");
    const auto paths = expand_data(o.data);
    require_output_parent(o.out);
    if (o.test_split && !o.seed) throw CLI::ValidationError("--test-split", "needs the --seed used for training");

    std::ifstream mf(o.model_file);
    EnsembleModel m;
    try {
        m = deserialize_model(mf);
    } catch (const Error& e) {
        throw Error(o.model_file + ": " + e.what());
    }
    const Dataset data = load_feature_dataset(paths);
    const Dataset test = o.test_split ? stratified_split(data, o.train_frac, derive_seed(*o.seed, "split")).test : data;
    const auto predicted = predict_labels(m, test.matrix());
    const auto cm = confusion(std::span<const int>(predicted), std::span<const std::uint8_t>(test.labels()));
    const Metrics mt = compute_metrics(cm);
    std::ostringstream csv;
    csv << "model,rows,tp,fp,tn,fn,accuracy,precision,recall,f1\n"
        << to_string(m.kind) << ',' << cm.total() << ',' << cm.tp << ',' << cm.fp << ',' << cm.tn << ',' << cm.fn << ','
        << format_percent(mt.accuracy) << ',' << format_percent(mt.precision) << ',' << format_percent(mt.recall)
        << ',' << format_percent(mt.f1) << '\n';
    if (!o.out.empty()) write_text(o.out, csv.str());
    if (!o.quiet) out << csv.str();
    return kOk;
}

inline ExperimentConfig experiment_config(const Options& o, std::uint64_t seed, bool smote_on) {
    ExperimentConfig ec;
    ec.models = parse_models(o.models);
    ec.variants = smote_on ? std::vector<DataVariant>{DataVariant::original, DataVariant::smote}
                           : std::vector<DataVariant>{DataVariant::original};
    ec.train_frac = o.train_frac;
    ec.smote.k_neighbors = o.smote_k;
    ec.seed = seed;
    ec.workers = o.workers;
    for (auto k : ec.models) {
        ec.params[k] = o.params.apply(k);
        ec.params[k].validate(k);
    }
    return ec;
}

inline void print_split(const ExperimentResult& r, std::ostream& out) {
    out << "train rows: " << r.n_train << " (" << r.n_train_pos << " positive)\ntest rows: " << r.n_test << " ("
        << r.n_test_pos << " positive)\n";
    if (r.n_smote_rows) out << "train rows after SMOTE: " << r.n_smote_rows << '\n';
}

inline int cmd_experiment(const Options& o, std::ostream& out, const std::string& config_echo) {
    const auto paths = expand_data(o.data);
    require_output_parent(o.out);
    parse_models(o.models);
    const std::uint64_t seed = resolve_seed(o, out);
    const ExperimentConfig ec = experiment_config(o, seed, o.smote_on);
    const Dataset data = load_feature_dataset(paths);
    const ExperimentResult r = run_experiment(data, ec);
    if (!o.quiet) {
        out << config_echo;
        print_split(r, out);
        out << '\n' << render_metrics_table(r.reports);
        if (o.smote_on) out << '\n' << render_timing_table(r.reports);
    }
    if (!o.out.empty()) {
        std::ofstream f(o.out);
        if (!f) throw Error("cannot write '" + o.out + "'");
        write_report_csv(r.reports, f);
        write_text(o.out + ".config", config_echo);
    }
    return kOk;
}

inline int cmd_bench(const Options& o, std::ostream& out, const std::string& config_echo) {
    const auto paths = expand_data(o.data);
    require_output_parent(o.out);
    parse_models(o.models);
    const std::uint64_t seed = resolve_seed(o, out);
    ExperimentConfig ec = experiment_config(o, seed, true);
    ec.variants = {o.smote_on ? DataVariant::smote : DataVariant::original};
    const Dataset data = load_feature_dataset(paths);
    const ExperimentResult r = run_experiment(data, ec);
    std::ostringstream csv;
    csv << "model,variant,train_rows,train_seconds\n";
    for (const auto& rep : r.reports) {
        char secs[32];
        std::snprintf(secs, sizeof secs, "%.3f", rep.train_seconds);
        csv << short_name(rep.kind) << ',' << to_string(rep.variant) << ',' << rep.train_rows << ',' << secs << '\n';
    }
    if (!o.quiet) {
        out << config_echo;
        print_split(r, out);
        out << '\n' << render_timing_table(r.reports);
    }
    if (!o.out.empty()) {
        write_text(o.out, csv.str());
        write_text(o.out + ".config", config_echo);
    }
    return kOk;
}

}  // namespace detail

/// Runs the command line; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
    CLI::App app{"Pump-and-dump detection pipeline: synthetic data, features, SMOTE and tree ensembles", "pnd"};
    app.set_config("--config", "", "TOML/INI file with option values (flags take precedence)");
    app.require_subcommand(1, 1);
    app.fallthrough();

    Options o;
    bool smote_flag = false, no_smote_flag = false;

    const auto shared = [&](CLI::App* sub) {
        sub->add_option("--seed", o.seed, "Master seed (random and printed when omitted)");
        sub->add_option("--out", o.out, "Output path");
        sub->add_option("--workers", o.workers, "Worker threads")->check(CLI::PositiveNumber);
        sub->add_flag("-q,--quiet", o.quiet, "Suppress tables on standard output");
    };
    const auto window_flags = [&](CLI::App* sub) {
        sub->add_option("--chunk-seconds", o.chunk_seconds, "Chunk length in seconds (default 25)")
            ->check(CLI::PositiveNumber);
        sub->add_option("--window-hours", o.window_hours, "Moving-window length in hours (default 7)")
            ->check(CLI::PositiveNumber);
    };
    const auto model_flags = [&](CLI::App* sub) {
        sub->add_option("--data", o.data, "Feature CSVs or a benchmark manifest.json")->required();
        sub->add_option("--train-frac", o.train_frac, "Training fraction of the stratified split (default 0.7)");
        sub->add_flag("--smote", smote_flag, "Enable SMOTE on the training split");
        sub->add_flag("--no-smote", no_smote_flag, "Disable SMOTE");
        sub->add_option("--smote-k", o.smote_k, "SMOTE neighbours (default 5)")->check(CLI::PositiveNumber);
        o.params.attach(sub);
    };

    auto* simulate = app.add_subcommand("simulate", "Generate synthetic trade streams and a labeled feature benchmark");
    shared(simulate);
    window_flags(simulate);
    simulate->add_option("--synth-config", o.synth_config, "JSON stream template (pump shape, baseline flow)");
    simulate->add_option("--streams", o.streams, "Number of streams (default 10)");
    simulate->add_option("--events-per-stream", o.events_per_stream, "Pump events per stream (default 3)");
    simulate->add_option("--days", o.days, "Stream length in days (default 14)");
    simulate->add_option("--imbalance", o.imbalance, "Required negatives per positive (refused if off by > 10%)");
    simulate->add_flag("--single-stream", o.single_stream, "Write one stream's trades and events only");
    simulate->add_flag("--no-trades", o.no_trades, "Skip writing trade CSVs in benchmark mode");
    simulate->add_flag("--uniform-streams", o.no_vary, "Give every stream the template's price level and rate");

    auto* featurize = app.add_subcommand("featurize", "Trades + events CSV -> labeled feature CSV");
    shared(featurize);
    window_flags(featurize);
    featurize->add_option("--trades", o.trades, "Trade CSV")->required();
    featurize->add_option("--events", o.events, "Event CSV")->required();

    auto* train = app.add_subcommand("train", "Split, optionally SMOTE, train one model, write the model file");
    shared(train);
    model_flags(train);
    train->add_option("--model", o.model, "rf, ada, gbm, xgb or lgbm (default xgb)");

    auto* evaluate = app.add_subcommand("evaluate", "Score a model file on feature CSVs");
    shared(evaluate);
    evaluate->add_option("--model-file", o.model_file, "Model file written by train")->required();
    evaluate->add_option("--data", o.data, "Feature CSVs or a benchmark manifest.json")->required();
    evaluate->add_flag("--test-split", o.test_split, "Score only the test partition of the seeded split");
    evaluate->add_option("--train-frac", o.train_frac, "Training fraction used when splitting (default 0.7)");

    auto* experiment = app.add_subcommand("experiment", "Every model on original and SMOTE training data");
    shared(experiment);
    model_flags(experiment);
    experiment->add_option("--models", o.models, "Comma list of rf,ada,gbm,xgb,lgbm or 'all'");

    auto* bench = app.add_subcommand("bench", "Training-time table per model");
    shared(bench);
    model_flags(bench);
    bench->add_option("--models", o.models, "Comma list of rf,ada,gbm,xgb,lgbm or 'all'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) {
            app.exit(e, out, err);
            return kOk;
        }
        app.exit(e, err, err);
        if (argc <= 1) err << app.help();
        return kUsage;
    }

    CLI::App* sub = app.get_subcommands().front();
    if (smote_flag && no_smote_flag) {
        err << "--smote and --no-smote are mutually exclusive\n";
        return kUsage;
    }
    const bool is_train = sub == train;
    o.smote_on = is_train ? smote_flag : !no_smote_flag;

    try {
        if (o.train_frac <= 0.0 || o.train_frac >= 1.0)
            throw CLI::ValidationError("--train-frac", "must be in (0, 1)");
        if (sub == simulate) return detail::cmd_simulate(o, out);
        if (sub == featurize) return detail::cmd_featurize(o, out);
        if (sub == evaluate) return detail::cmd_evaluate(o, out);
        o.seed = detail::resolve_seed(o, out);
        const std::string echo = detail::effective_config(app, sub, *o.seed);
        if (sub == train) return detail::cmd_train(o, out, echo);
        if (sub == experiment) return detail::cmd_experiment(o, out, echo);
        return detail::cmd_bench(o, out, echo);
    } catch (const CLI::ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kUsage;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kDataError;
    }
}

}  // namespace pnd::cli
