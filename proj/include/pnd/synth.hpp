#pragma once

// Seeded synthetic trade streams with injected pump-and-dump windows.
// All numeric parameters are synthetic; none are calibrated to a real venue.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pnd/dataset.hpp"
#include "pnd/error.hpp"
#include "pnd/features.hpp"
#include "pnd/ingest.hpp"
#include "pnd/parallel.hpp"
#include "pnd/rng.hpp"

namespace pnd {

struct PumpSpec {
    double start_offset_s = 0.0;
    double pump_duration_s = 600.0;
    double rate_multiplier = 100.0;
    double buy_bias = 0.95;        // taker-buy probability inside the window
    double price_ramp_pct = 30.0;  // linear climb over the window
    double crash_pct = 25.0;       // single drop at the window end

    double end_s() const { return start_offset_s + pump_duration_s; }
};

struct SynthConfig {
    std::string symbol = "SYN";
    std::int64_t start_ms = 1'600'000'000'000;
    double duration_days = 14.0;
    double base_trade_rate = 0.2;  // trades per second
    double volume_mu = 0.0;        // lognormal quantity parameters
    double volume_sigma = 1.0;
    double price_start = 1.0;
    double price_walk_sigma = 0.002;     // log-return sd per chunk
    double trade_price_noise = 0.0005;   // per-trade log noise around the chunk mid
    double taker_buy_prob = 0.5;
    int chunk_len_s = 25;
    std::vector<PumpSpec> events;
    std::uint64_t seed = 0;

    double duration_s() const { return duration_days * 86400.0; }

    void validate() const {
        if (!(duration_days > 0.0)) throw ConfigError("synth: duration_days must be positive");
        if (!(base_trade_rate > 0.0)) throw ConfigError("synth: base_trade_rate must be positive");
        if (!(volume_sigma >= 0.0)) throw ConfigError("synth: volume_sigma must be >= 0");
        if (!(price_start > 0.0)) throw ConfigError("synth: price_start must be positive");
        if (!(price_walk_sigma >= 0.0) || !(trade_price_noise >= 0.0))
            throw ConfigError("synth: price noise parameters must be >= 0");
        if (!(taker_buy_prob >= 0.0 && taker_buy_prob <= 1.0)) throw ConfigError("synth: taker_buy_prob must be in [0, 1]");
        if (chunk_len_s < 1) throw ConfigError("synth: chunk_len_s must be >= 1");
        auto sorted = events;
        std::sort(sorted.begin(), sorted.end(),
                  [](const PumpSpec& a, const PumpSpec& b) { return a.start_offset_s < b.start_offset_s; });
        for (std::size_t i = 0; i < sorted.size(); ++i) {
            const auto& e = sorted[i];
            if (!(e.pump_duration_s > 0.0)) throw ConfigError("synth: pump_duration_s must be positive");
            if (!(e.rate_multiplier > 0.0)) throw ConfigError("synth: rate_multiplier must be positive");
            if (!(e.buy_bias > 0.5 && e.buy_bias <= 1.0)) throw ConfigError("synth: buy_bias must be in (0.5, 1]");
            if (!(e.price_ramp_pct >= 0.0) || !(e.crash_pct >= 0.0 && e.crash_pct < 100.0))
                throw ConfigError("synth: price_ramp_pct must be >= 0 and crash_pct in [0, 100)");
            if (e.start_offset_s < 0.0 || e.end_s() > duration_s())
                throw ConfigError("synth: pump window at " + std::to_string(e.start_offset_s) + "s lies outside the stream");
            if (i > 0 && e.start_offset_s < sorted[i - 1].end_s())
                throw ConfigError("synth: pump windows overlap at " + std::to_string(e.start_offset_s) + "s");
        }
    }
};

struct SynthStream {
    std::vector<TradeRecord> trades;
    std::vector<PumpEvent> events;
};

/// Baseline: Poisson arrivals at base_trade_rate, lognormal quantities, a
/// per-chunk log-normal random walk for the mid price, Bernoulli taker side.
/// Inside a pump window the arrival rate is multiplied, the taker-buy
/// probability becomes buy_bias, and the price climbs linearly by
/// price_ramp_pct, then drops crash_pct when the window closes.
inline SynthStream generate(const SynthConfig& cfg) {
    cfg.validate();
    auto events = cfg.events;
    std::sort(events.begin(), events.end(),
              [](const PumpSpec& a, const PumpSpec& b) { return a.start_offset_s < b.start_offset_s; });

    const double total_s = cfg.duration_s();
    const double chunk_s = cfg.chunk_len_s;
    const auto n_chunks = static_cast<std::size_t>(std::ceil(total_s / chunk_s)) + 1;

    // Mid price per chunk including the pump shape.
    std::vector<double> mid(n_chunks);
    {
        Engine eng(derive_seed(cfg.seed, "price"));
        std::normal_distribution<double> step(0.0, 1.0);
        double log_p = std::log(cfg.price_start);
        for (auto& m : mid) {
            m = std::exp(log_p);
            log_p += cfg.price_walk_sigma * step(eng);
        }
        double carried = 1.0;  // net effect of finished pumps
        std::size_t next = 0;
        for (std::size_t c = 0; c < n_chunks; ++c) {
            const double t = static_cast<double>(c) * chunk_s;
            while (next < events.size() && t >= events[next].end_s()) {
                carried *= (1.0 + events[next].price_ramp_pct / 100.0) * (1.0 - events[next].crash_pct / 100.0);
                ++next;
            }
            double factor = carried;
            if (next < events.size() && t + chunk_s > events[next].start_offset_s) {
                const auto& e = events[next];
                const auto c0 = static_cast<std::size_t>(e.start_offset_s / chunk_s);
                const auto c1 = std::max(c0 + 1, static_cast<std::size_t>(std::ceil(e.end_s() / chunk_s)));
                const double progress = static_cast<double>(c - c0 + 1) / static_cast<double>(c1 - c0);
                factor *= 1.0 + e.price_ramp_pct / 100.0 * std::min(progress, 1.0);
            }
            mid[c] *= factor;
        }
    }

    SynthStream out;
    Engine arrivals(derive_seed(cfg.seed, "arrivals"));
    Engine marks(derive_seed(cfg.seed, "marks"));
    std::exponential_distribution<double> unit_exp(1.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    // Piecewise-constant arrival rate; boundaries are the pump window edges.
    const auto rate_at = [&](double t, double& seg_end, const PumpSpec*& pump) {
        for (const auto& e : events) {
            if (t < e.start_offset_s) {
                seg_end = e.start_offset_s;
                pump = nullptr;
                return cfg.base_trade_rate;
            }
            if (t < e.end_s()) {
                seg_end = e.end_s();
                pump = &e;
                return cfg.base_trade_rate * e.rate_multiplier;
            }
        }
        seg_end = total_s;
        pump = nullptr;
        return cfg.base_trade_rate;
    };

    double t = 0.0;
    for (;;) {
        double need = unit_exp(arrivals);  // integrated-rate budget to the next arrival
        const PumpSpec* pump = nullptr;
        bool done = false;
        for (;;) {
            double seg_end = total_s;
            const double rate = rate_at(t, seg_end, pump);
            const double dt = need / rate;
            if (t + dt < seg_end) {
                t += dt;
                break;
            }
            need -= (seg_end - t) * rate;
            t = seg_end;
            if (t >= total_s) {
                done = true;
                break;
            }
        }
        if (done) break;
        const auto c = static_cast<std::size_t>(t / chunk_s);
        TradeRecord tr;
        tr.timestamp_ms = cfg.start_ms + static_cast<std::int64_t>(std::floor(t * 1000.0));
        tr.price = mid[c] * std::exp(cfg.trade_price_noise * noise(marks));
        tr.quantity = std::exp(cfg.volume_mu + cfg.volume_sigma * noise(marks));
        tr.taker_is_buyer = uniform01(marks) < (pump ? pump->buy_bias : cfg.taker_buy_prob);
        out.trades.push_back(tr);
    }

    for (const auto& e : events)
        out.events.push_back({cfg.symbol, cfg.start_ms + static_cast<std::int64_t>(std::llround(e.start_offset_s * 1000.0))});
    return out;
}

// ---------------------------------------------------------------------------
// Benchmark corpus

struct BenchmarkConfig {
    std::size_t n_streams = 10;
    std::size_t events_per_stream = 3;
    std::optional<double> imbalance_target;  // negatives per positive
    SynthConfig stream_template;             // its events (if any) give the pump shape
    WindowConfig window;
    std::uint64_t seed = 0;
    bool vary_streams = true;  // per-stream price level and activity
    std::string out_dir;       // empty: keep everything in memory
    bool write_trades = true;
    std::size_t workers = 1;
};

struct StreamSummary {
    std::string symbol;
    std::uint64_t seed = 0;
    std::string trades_file;
    std::string events_file;
    std::string features_file;
    std::size_t n_trades = 0;
    double trade_quantity_sum = 0.0;
    double chunk_volume_sum = 0.0;
    std::size_t n_chunks = 0;
    std::size_t n_rows = 0;
    std::size_t n_events = 0;
    std::size_t n_positive_rows = 0;
    std::size_t warmup_dropped = 0;
    std::size_t warmup_dropped_positives = 0;
};

struct BenchmarkResult {
    std::vector<StreamSummary> streams;
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
    double achieved_imbalance = 0.0;
    Dataset data;  // all streams' feature rows, stream order
    std::string manifest_path;
};

namespace detail {

inline SynthConfig stream_config(const BenchmarkConfig& bc, std::size_t s) {
    SynthConfig c = bc.stream_template;
    const PumpSpec shape = c.events.empty() ? PumpSpec{} : c.events.front();
    c.seed = derive_seed(bc.seed, s);
    char name[32];
    std::snprintf(name, sizeof name, "SYN%03zu", s);
    c.symbol = name;
    Engine eng(derive_seed(c.seed, "layout"));
    if (bc.vary_streams) {
        c.price_start *= std::exp(std::log(10.0) * (2.0 * uniform01(eng) - 1.0));
        c.base_trade_rate *= std::exp(std::log(2.0) * (2.0 * uniform01(eng) - 1.0));
    }
    // One event per equal segment after the warm-up span.
    const double lead = bc.window.window_hours * 3600.0 + shape.pump_duration_s;
    const double usable = c.duration_s() - lead - shape.pump_duration_s;
    const double seg = usable / static_cast<double>(bc.events_per_stream);
    if (seg < 2.0 * shape.pump_duration_s)
        throw ConfigError("benchmark: stream too short for " + std::to_string(bc.events_per_stream) + " events");
    c.events.clear();
    for (std::size_t k = 0; k < bc.events_per_stream; ++k) {
        PumpSpec e = shape;
        const double room = seg - shape.pump_duration_s;
        const double at = lead + seg * static_cast<double>(k) + room * uniform01(eng);
        e.start_offset_s = std::floor(at / c.chunk_len_s) * c.chunk_len_s;
        c.events.push_back(e);
    }
    return c;
}

inline nlohmann::json synth_to_json(const SynthConfig& c) {
    nlohmann::json ev = nlohmann::json::array();
    for (const auto& e : c.events)
        ev.push_back({{"start_offset_s", e.start_offset_s},
                      {"pump_duration_s", e.pump_duration_s},
                      {"rate_multiplier", e.rate_multiplier},
                      {"buy_bias", e.buy_bias},
                      {"price_ramp_pct", e.price_ramp_pct},
                      {"crash_pct", e.crash_pct}});
    return {{"symbol", c.symbol},
            {"start_ms", c.start_ms},
            {"duration_days", c.duration_days},
            {"base_trade_rate", c.base_trade_rate},
            {"volume_mu", c.volume_mu},
            {"volume_sigma", c.volume_sigma},
            {"price_start", c.price_start},
            {"price_walk_sigma", c.price_walk_sigma},
            {"trade_price_noise", c.trade_price_noise},
            {"taker_buy_prob", c.taker_buy_prob},
            {"chunk_len_s", c.chunk_len_s},
            {"events", ev},
            {"seed", c.seed}};
}

}  // namespace detail

/// Reads a SynthConfig from JSON; absent keys keep their defaults.
inline SynthConfig synth_config_from_json(const nlohmann::json& j) {
    SynthConfig c;
    try {
        c.symbol = j.value("symbol", c.symbol);
        c.start_ms = j.value("start_ms", c.start_ms);
        c.duration_days = j.value("duration_days", c.duration_days);
        c.base_trade_rate = j.value("base_trade_rate", c.base_trade_rate);
        c.volume_mu = j.value("volume_mu", c.volume_mu);
        c.volume_sigma = j.value("volume_sigma", c.volume_sigma);
        c.price_start = j.value("price_start", c.price_start);
        c.price_walk_sigma = j.value("price_walk_sigma", c.price_walk_sigma);
        c.trade_price_noise = j.value("trade_price_noise", c.trade_price_noise);
        c.taker_buy_prob = j.value("taker_buy_prob", c.taker_buy_prob);
        c.chunk_len_s = j.value("chunk_len_s", c.chunk_len_s);
        c.seed = j.value("seed", c.seed);
        if (j.contains("events")) {
            for (const auto& e : j.at("events")) {
                PumpSpec p;
                p.start_offset_s = e.value("start_offset_s", p.start_offset_s);
                p.pump_duration_s = e.value("pump_duration_s", p.pump_duration_s);
                p.rate_multiplier = e.value("rate_multiplier", p.rate_multiplier);
                p.buy_bias = e.value("buy_bias", p.buy_bias);
                p.price_ramp_pct = e.value("price_ramp_pct", p.price_ramp_pct);
                p.crash_pct = e.value("crash_pct", p.crash_pct);
                c.events.push_back(p);
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("synth config: ") + e.what());
    }
    return c;
}

/// generate -> chunkize -> label -> features for each stream, optionally
/// writing per-stream CSVs and a manifest.json. Streams run in parallel on
/// `workers` threads with per-stream derived seeds.
inline BenchmarkResult make_benchmark(const BenchmarkConfig& bc) {
    if (bc.n_streams == 0) throw ConfigError("benchmark: n_streams must be >= 1");
    if (bc.events_per_stream == 0) throw ConfigError("benchmark: events_per_stream must be >= 1 (no positive class)");
    bc.window.validate();
    if (bc.window.chunk_len_s != bc.stream_template.chunk_len_s)
        throw ConfigError("benchmark: window and stream chunk lengths differ");
    if (bc.imbalance_target) {
        if (*bc.imbalance_target < 100.0) throw ConfigError("benchmark: imbalance_target must be >= 100");
        const double rows_per_stream = std::floor(bc.stream_template.duration_s() / bc.stream_template.chunk_len_s) -
                                       static_cast<double>(bc.window.min_window_chunks - 1);
        const double expected = rows_per_stream / static_cast<double>(bc.events_per_stream) - 1.0;
        if (std::abs(expected - *bc.imbalance_target) > 0.1 * *bc.imbalance_target)
            throw ConfigError("benchmark: imbalance " + std::to_string(*bc.imbalance_target) +
                              ":1 is not achievable; this grid gives about " + std::to_string(expected) + ":1");
    }

    namespace fs = std::filesystem;
    if (!bc.out_dir.empty()) fs::create_directories(bc.out_dir);

    std::vector<StreamSummary> summaries(bc.n_streams);
    std::vector<std::vector<FeatureRow>> rows(bc.n_streams);
    std::vector<SynthConfig> configs(bc.n_streams);
    parallel_for(bc.n_streams, bc.workers, [&](std::size_t s) {
        configs[s] = detail::stream_config(bc, s);
        const SynthStream stream = generate(configs[s]);
        const auto& sc = configs[s];
        const auto end_ms = sc.start_ms + static_cast<std::int64_t>(std::llround(sc.duration_s() * 1000.0));
        auto chunks = label_chunks(chunkize_span(stream.trades, sc.chunk_len_s, sc.start_ms, end_ms), stream.events);
        FeatureResult fr = compute_features(chunks, bc.window);

        StreamSummary& sum = summaries[s];
        sum.symbol = configs[s].symbol;
        sum.seed = configs[s].seed;
        sum.n_trades = stream.trades.size();
        for (const auto& t : stream.trades) sum.trade_quantity_sum += t.quantity;
        for (const auto& c : chunks) sum.chunk_volume_sum += c.volume;
        sum.n_chunks = chunks.size();
        sum.n_rows = fr.rows.size();
        sum.n_events = stream.events.size();
        for (const auto& r : fr.rows) sum.n_positive_rows += static_cast<std::size_t>(r.label);
        sum.warmup_dropped = fr.warmup_dropped;
        sum.warmup_dropped_positives = fr.warmup_dropped_positives;

        if (!bc.out_dir.empty()) {
            const std::string stem = sum.symbol;
            sum.events_file = stem + "_events.csv";
            sum.features_file = stem + "_features.csv";
            {
                std::ofstream f(fs::path(bc.out_dir) / sum.events_file);
                write_events_csv(stream.events, f);
            }
            {
                std::ofstream f(fs::path(bc.out_dir) / sum.features_file);
                write_feature_csv(fr.rows, f);
            }
            if (bc.write_trades) {
                sum.trades_file = stem + "_trades.csv";
                std::ofstream f(fs::path(bc.out_dir) / sum.trades_file);
                write_trades_csv(stream.trades, f);
            }
        }
        rows[s] = std::move(fr.rows);
    });

    BenchmarkResult res;
    res.streams = std::move(summaries);
    for (const auto& r : rows) res.data.append(Dataset::from_rows(r));
    res.n_pos = res.data.n_pos();
    res.n_neg = res.data.n_neg();
    res.achieved_imbalance = static_cast<double>(res.n_neg) / static_cast<double>(std::max<std::size_t>(res.n_pos, 1));
    if (res.n_pos == 0) throw Error("benchmark: no positive rows survived feature extraction");
    if (bc.imbalance_target &&
        std::abs(res.achieved_imbalance - *bc.imbalance_target) > 0.1 * *bc.imbalance_target)
        throw Error("benchmark: achieved imbalance " + std::to_string(res.achieved_imbalance) + ":1 deviates more than 10% from " +
                    std::to_string(*bc.imbalance_target) + ":1");

    if (!bc.out_dir.empty()) {
        nlohmann::json streams = nlohmann::json::array();
        for (std::size_t s = 0; s < res.streams.size(); ++s) {
            const auto& st = res.streams[s];
            streams.push_back({{"symbol", st.symbol},
                               {"seed", st.seed},
                               {"trades_file", st.trades_file},
                               {"events_file", st.events_file},
                               {"features_file", st.features_file},
                               {"n_trades", st.n_trades},
                               {"n_chunks", st.n_chunks},
                               {"n_rows", st.n_rows},
                               {"n_events", st.n_events},
                               {"n_positive_rows", st.n_positive_rows},
                               {"warmup_dropped", st.warmup_dropped},
                               {"warmup_dropped_positives", st.warmup_dropped_positives},
                               {"config", detail::synth_to_json(configs[s])}});
        }
        const nlohmann::json manifest = {
            {"format_version", 1},
            {"note", "synthetic streams; parameters are not calibrated to any real market"},
            {"seed", bc.seed},
            {"n_streams", bc.n_streams},
            {"events_per_stream", bc.events_per_stream},
            {"window", {{"window_hours", bc.window.window_hours},
                        {"chunk_len_s", bc.window.chunk_len_s},
                        {"min_window_chunks", bc.window.min_window_chunks}}},
            {"template", detail::synth_to_json(bc.stream_template)},
            {"n_pos", res.n_pos},
            {"n_neg", res.n_neg},
            {"achieved_imbalance", res.achieved_imbalance},
            {"streams", streams}};
        res.manifest_path = (fs::path(bc.out_dir) / "manifest.json").string();
        std::ofstream f(res.manifest_path);
        f << manifest.dump(1) << '\n';
    }
    return res;
}

/// Feature CSV paths listed in a benchmark manifest, resolved against the
/// manifest's directory.
inline std::vector<std::string> manifest_feature_paths(const std::string& manifest_path) {
    std::ifstream in(manifest_path);
    if (!in) throw Error("cannot open manifest '" + manifest_path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
        const auto dir = std::filesystem::path(manifest_path).parent_path();
        std::vector<std::string> out;
        for (const auto& s : j.at("streams")) out.push_back((dir / s.at("features_file").get<std::string>()).string());
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw FormatError("manifest '" + manifest_path + "': " + e.what());
    }
}

}  // namespace pnd
