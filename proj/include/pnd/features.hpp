#pragma once

// Trailing-window moving statistics over the chunk grid.

#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pnd/csv.hpp"
#include "pnd/error.hpp"
#include "pnd/ingest.hpp"

namespace pnd {

inline constexpr std::size_t kFeatureCount = 9;

enum FeatureIndex : std::size_t {
    kStdRushOrders = 0,
    kAvgRushOrders,
    kStdTrades,
    kStdVolumes,
    kAvgVolumes,
    kStdPrice,
    kAvgPrice,
    kAvgPriceMax,
    kAvgPriceMin,
};

inline constexpr std::array<std::string_view, kFeatureCount> kFeatureNames = {
    "StdRushOrders", "AvgRushOrders", "StdTrades", "StdVolumes", "AvgVolumes",
    "StdPrice",      "AvgPrice",      "AvgPriceMax", "AvgPriceMin",
};

struct FeatureRow {
    std::int64_t start_ms = 0;
    std::array<double, kFeatureCount> values{};
    int label = 0;

    double operator[](FeatureIndex f) const { return values[f]; }
    friend bool operator==(const FeatureRow&, const FeatureRow&) = default;
};

struct WindowConfig {
    double window_hours = 7.0;
    int chunk_len_s = 25;
    int min_window_chunks = 2;

    std::size_t window_chunks() const {
        return static_cast<std::size_t>(std::llround(window_hours * 3600.0 / chunk_len_s));
    }

    void validate() const {
        if (!(window_hours > 0.0)) throw ConfigError("window_hours must be positive");
        if (chunk_len_s < 1) throw ConfigError("chunk_len_s must be >= 1");
        if (min_window_chunks < 1) throw ConfigError("min_window_chunks must be >= 1");
        if (window_chunks() < static_cast<std::size_t>(min_window_chunks))
            throw ConfigError("window of " + std::to_string(window_chunks()) + " chunks is shorter than min_window_chunks");
    }
};

// Running mean and population variance over a sliding window, updated by
// Welford insert/remove steps.
class RollingMoments {
public:
    void add(double x) {
        ++n_;
        const double d = x - mean_;
        mean_ += d / static_cast<double>(n_);
        m2_ += d * (x - mean_);
    }

    void remove(double x) {
        if (n_ <= 1) {
            reset();
            return;
        }
        const double d = x - mean_;
        mean_ -= d / static_cast<double>(n_ - 1);
        m2_ -= d * (x - mean_);
        --n_;
        if (m2_ < 0.0) m2_ = 0.0;
    }

    // Replace the state with an exact two-pass recomputation over `window`.
    void resync(std::span<const double> window) {
        reset();
        if (window.empty()) return;
        double sum = 0.0;
        for (double v : window) sum += v;
        n_ = window.size();
        mean_ = sum / static_cast<double>(n_);
        for (double v : window) m2_ += (v - mean_) * (v - mean_);
    }

    void reset() { n_ = 0, mean_ = 0.0, m2_ = 0.0; }

    std::size_t count() const { return n_; }
    double mean() const { return mean_; }
    double pstddev() const { return n_ == 0 ? 0.0 : std::sqrt(m2_ / static_cast<double>(n_)); }

private:
    std::size_t n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct FeatureResult {
    std::vector<FeatureRow> rows;
    std::size_t warmup_dropped = 0;            // chunks with too little history
    std::size_t warmup_dropped_positives = 0;  // of which labeled positive
};

/// One row per chunk once at least `min_window_chunks` of trailing history
/// exist. The window is the W chunks ending at (and including) the current
/// one, shorter only during warm-up. Std* are population deviations.
inline FeatureResult compute_features(const std::vector<Chunk>& chunks, const WindowConfig& cfg = {}) {
    cfg.validate();
    check_regular_grid(chunks, "compute_features");
    if (!chunks.empty() && chunks.front().chunk_len_s != cfg.chunk_len_s)
        throw ContractError("compute_features: chunks are " + std::to_string(chunks.front().chunk_len_s) +
                            "s but the window config expects " + std::to_string(cfg.chunk_len_s) + "s");

    constexpr std::size_t kSeries = 6;  // rush, trades, volume, close, high, low
    constexpr std::size_t kResyncEvery = 4096;
    const auto series_value = [&](std::size_t i, std::size_t s) -> double {
        const Chunk& c = chunks[i];
        switch (s) {
            case 0: return c.rush_volume;
            case 1: return static_cast<double>(c.n_trades);
            case 2: return c.volume;
            case 3: return c.close_price;
            case 4: return c.high_price;
            default: return c.low_price;
        }
    };

    const std::size_t window = cfg.window_chunks();
    const auto min_hist = static_cast<std::size_t>(cfg.min_window_chunks);
    FeatureResult out;
    out.rows.reserve(chunks.size());
    std::array<RollingMoments, kSeries> acc;
    std::vector<double> scratch;

    for (std::size_t i = 0; i < chunks.size(); ++i) {
        for (std::size_t s = 0; s < kSeries; ++s) acc[s].add(series_value(i, s));
        if (i >= window) {
            for (std::size_t s = 0; s < kSeries; ++s) acc[s].remove(series_value(i - window, s));
        }
        if (i >= window && i % kResyncEvery == 0) {
            // Bound the drift of the insert/remove updates.
            for (std::size_t s = 0; s < kSeries; ++s) {
                scratch.clear();
                for (std::size_t j = i + 1 - window; j <= i; ++j) scratch.push_back(series_value(j, s));
                acc[s].resync(scratch);
            }
        }
        if (acc[0].count() < min_hist) {
            ++out.warmup_dropped;
            if (chunks[i].label == 1) ++out.warmup_dropped_positives;
            continue;
        }
        FeatureRow row;
        row.start_ms = chunks[i].start_ms;
        row.label = chunks[i].label;
        row.values[kStdRushOrders] = acc[0].pstddev();
        row.values[kAvgRushOrders] = acc[0].mean();
        row.values[kStdTrades] = acc[1].pstddev();
        row.values[kStdVolumes] = acc[2].pstddev();
        row.values[kAvgVolumes] = acc[2].mean();
        row.values[kStdPrice] = acc[3].pstddev();
        row.values[kAvgPrice] = acc[3].mean();
        row.values[kAvgPriceMax] = acc[4].mean();
        row.values[kAvgPriceMin] = acc[5].mean();
        out.rows.push_back(row);
    }
    return out;
}

inline std::string feature_csv_header() {
    std::string h = "start_ms";
    for (auto name : kFeatureNames) {
        h += ',';
        h += name;
    }
    return h + ",label";
}

inline std::size_t write_feature_csv(const std::vector<FeatureRow>& rows, std::ostream& out) {
    out << feature_csv_header() << '\n';
    for (const auto& r : rows) {
        out << r.start_ms;
        for (double v : r.values) out << ',' << csv::format_double(v);
        out << ',' << r.label << '\n';
    }
    if (!out) throw Error("write_feature_csv: sink write failed");
    return rows.size();
}

inline std::vector<FeatureRow> read_feature_csv(std::istream& in) {
    detail::expect_header(in, feature_csv_header());
    std::vector<FeatureRow> rows;
    std::string line;
    std::size_t lineno = 1;
    while (csv::read_line(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != kFeatureCount + 2)
            throw ParseError(lineno, "expected " + std::to_string(kFeatureCount + 2) + " columns, got " +
                                         std::to_string(f.size()));
        FeatureRow r;
        const auto ts = csv::parse_int(f[0]);
        if (!ts) throw ParseError(lineno, "start_ms is not an integer");
        r.start_ms = *ts;
        for (std::size_t k = 0; k < kFeatureCount; ++k) {
            const auto v = csv::parse_double(f[k + 1]);
            if (!v) throw ParseError(lineno, std::string(kFeatureNames[k]) + " is not numeric");
            if (!std::isfinite(*v)) throw ValidationError(lineno, std::string(kFeatureNames[k]) + " is not finite");
            r.values[k] = *v;
        }
        const auto label = csv::parse_int(f.back());
        if (!label || (*label != 0 && *label != 1)) throw ParseError(lineno, "label must be 0 or 1");
        r.label = static_cast<int>(*label);
        rows.push_back(r);
    }
    return rows;
}

}  // namespace pnd
