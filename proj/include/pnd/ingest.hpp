#pragma once

// Trade-log ingestion: CSV parsing, aggregation onto a fixed chunk grid,
// and ground-truth labeling from a pump event list.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "pnd/csv.hpp"
#include "pnd/error.hpp"

namespace pnd {

struct TradeRecord {
    std::int64_t timestamp_ms = 0;
    double price = 0.0;
    double quantity = 0.0;
    bool taker_is_buyer = false;  // aggressive market buy

    friend bool operator==(const TradeRecord&, const TradeRecord&) = default;
};

struct Chunk {
    std::int64_t start_ms = 0;
    int chunk_len_s = 25;
    std::int64_t n_trades = 0;
    double volume = 0.0;
    double rush_volume = 0.0;  // taker-buy quantity
    double close_price = 0.0;
    double high_price = 0.0;
    double low_price = 0.0;
    int label = 0;

    friend bool operator==(const Chunk&, const Chunk&) = default;
};

struct PumpEvent {
    std::string symbol;
    std::int64_t pump_start_ms = 0;

    friend bool operator==(const PumpEvent&, const PumpEvent&) = default;
};

inline constexpr std::string_view kTradeCsvHeader = "timestamp_ms,price,quantity,taker_is_buyer";
inline constexpr std::string_view kEventCsvHeader = "symbol,pump_start_ms";
inline constexpr std::string_view kChunkCsvHeader =
    "start_ms,n_trades,volume,rush_volume,close,high,low,label";

namespace detail {

inline std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

inline void expect_header(std::istream& in, std::string_view header) {
    std::string line;
    if (!csv::read_line(in, line)) throw ParseError(1, "missing header, expected '" + std::string(header) + "'");
    if (line != header)
        throw ParseError(1, "unexpected header '" + line + "', expected '" + std::string(header) + "'");
}

}  // namespace detail

/// Parses a trade CSV (header `timestamp_ms,price,quantity,taker_is_buyer`).
/// Rows come back sorted by timestamp, stable for equal timestamps.
/// Blank lines are ignored; any other malformed row raises ParseError, and
/// a non-positive price or quantity raises ValidationError, both carrying
/// the 1-based line number.
inline std::vector<TradeRecord> parse_trades(std::istream& in) {
    detail::expect_header(in, kTradeCsvHeader);
    std::vector<TradeRecord> out;
    std::string line;
    std::size_t lineno = 1;
    while (csv::read_line(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 4)
            throw ParseError(lineno, "expected 4 columns, got " + std::to_string(f.size()));
        const auto ts = csv::parse_int(f[0]);
        const auto price = csv::parse_double(f[1]);
        const auto qty = csv::parse_double(f[2]);
        const auto buyer = csv::parse_bool(f[3]);
        if (!ts) throw ParseError(lineno, "timestamp_ms is not an integer");
        if (!price) throw ParseError(lineno, "price is not numeric");
        if (!qty) throw ParseError(lineno, "quantity is not numeric");
        if (!buyer) throw ParseError(lineno, "taker_is_buyer must be 'true' or 'false'");
        if (!(*price > 0.0) || !std::isfinite(*price)) throw ValidationError(lineno, "price must be positive");
        if (!(*qty > 0.0) || !std::isfinite(*qty)) throw ValidationError(lineno, "quantity must be positive");
        out.push_back({*ts, *price, *qty, *buyer});
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const TradeRecord& a, const TradeRecord& b) { return a.timestamp_ms < b.timestamp_ms; });
    return out;
}

inline void write_trades_csv(const std::vector<TradeRecord>& trades, std::ostream& out) {
    out << kTradeCsvHeader << '\n';
    for (const auto& t : trades) {
        out << t.timestamp_ms << ',' << csv::format_double(t.price) << ',' << csv::format_double(t.quantity) << ','
            << (t.taker_is_buyer ? "true" : "false") << '\n';
    }
}

inline std::vector<PumpEvent> parse_events(std::istream& in) {
    detail::expect_header(in, kEventCsvHeader);
    std::vector<PumpEvent> out;
    std::string line;
    std::size_t lineno = 1;
    while (csv::read_line(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = csv::split(line);
        if (f.size() != 2) throw ParseError(lineno, "expected 2 columns, got " + std::to_string(f.size()));
        const auto ts = csv::parse_int(f[1]);
        if (!ts) throw ParseError(lineno, "pump_start_ms is not an integer");
        out.push_back({std::string(f[0]), *ts});
    }
    return out;
}

inline void write_events_csv(const std::vector<PumpEvent>& events, std::ostream& out) {
    out << kEventCsvHeader << '\n';
    for (const auto& e : events) out << e.symbol << ',' << e.pump_start_ms << '\n';
}

namespace detail {

inline std::vector<Chunk> chunkize_slots(const std::vector<TradeRecord>& trades, int chunk_len_s,
                                         std::int64_t first_slot, std::int64_t last_slot) {
    const std::int64_t len_ms = std::int64_t{chunk_len_s} * 1000;
    std::vector<Chunk> out;
    out.resize(static_cast<std::size_t>(last_slot - first_slot + 1));
    for (std::size_t s = 0; s < out.size(); ++s) {
        out[s].start_ms = (first_slot + static_cast<std::int64_t>(s)) * len_ms;
        out[s].chunk_len_s = chunk_len_s;
    }
    for (const auto& t : trades) {
        auto& c = out[static_cast<std::size_t>(detail::floor_div(t.timestamp_ms, len_ms) - first_slot)];
        if (c.n_trades == 0) {
            c.high_price = c.low_price = t.price;
        } else {
            c.high_price = std::max(c.high_price, t.price);
            c.low_price = std::min(c.low_price, t.price);
        }
        ++c.n_trades;
        c.volume += t.quantity;
        if (t.taker_is_buyer) c.rush_volume += t.quantity;
        c.close_price = t.price;
    }
    double last_close = trades.front().price;
    for (auto& c : out) {
        if (c.n_trades == 0) c.close_price = c.high_price = c.low_price = last_close;
        last_close = c.close_price;
    }
    return out;
}

inline void check_sorted(const std::vector<TradeRecord>& trades) {
    for (std::size_t i = 1; i < trades.size(); ++i) {
        if (trades[i].timestamp_ms < trades[i - 1].timestamp_ms)
            throw ContractError("chunkize: trades not sorted by timestamp at index " + std::to_string(i));
    }
}

}  // namespace detail

/// Aggregates sorted trades onto a grid of `chunk_len_s`-second chunks.
/// The grid starts at the floor-aligned slot of the first trade and runs
/// through the slot of the last trade; empty slots are emitted with zero
/// volume and the previous close carried into close/high/low.
inline std::vector<Chunk> chunkize(const std::vector<TradeRecord>& trades, int chunk_len_s = 25) {
    if (chunk_len_s < 1) throw ConfigError("chunk_len_s must be >= 1");
    if (trades.empty()) return {};
    detail::check_sorted(trades);
    const std::int64_t len_ms = std::int64_t{chunk_len_s} * 1000;
    return detail::chunkize_slots(trades, chunk_len_s, detail::floor_div(trades.front().timestamp_ms, len_ms),
                                  detail::floor_div(trades.back().timestamp_ms, len_ms));
}

/// Same, but the grid spans [begin_ms, end_ms) regardless of where the
/// first and last trades fall. Leading empty chunks take the first price.
inline std::vector<Chunk> chunkize_span(const std::vector<TradeRecord>& trades, int chunk_len_s, std::int64_t begin_ms,
                                        std::int64_t end_ms) {
    if (chunk_len_s < 1) throw ConfigError("chunk_len_s must be >= 1");
    if (end_ms <= begin_ms) throw ContractError("chunkize_span: empty span");
    if (trades.empty()) throw ContractError("chunkize_span: no trades");
    detail::check_sorted(trades);
    if (trades.front().timestamp_ms < begin_ms || trades.back().timestamp_ms >= end_ms)
        throw ContractError("chunkize_span: trades fall outside the span");
    const std::int64_t len_ms = std::int64_t{chunk_len_s} * 1000;
    return detail::chunkize_slots(trades, chunk_len_s, detail::floor_div(begin_ms, len_ms),
                                  detail::floor_div(end_ms - 1, len_ms));
}

/// Throws ContractError unless consecutive chunks are exactly one chunk
/// length apart and all share the same length.
inline void check_regular_grid(const std::vector<Chunk>& chunks, const char* who) {
    for (std::size_t i = 1; i < chunks.size(); ++i) {
        const auto& prev = chunks[i - 1];
        if (chunks[i].chunk_len_s != prev.chunk_len_s ||
            chunks[i].start_ms - prev.start_ms != std::int64_t{prev.chunk_len_s} * 1000)
            throw ContractError(std::string(who) + ": irregular chunk grid at index " + std::to_string(i));
    }
}

/// Marks the chunk containing each event's start as positive; everything
/// else is negative. One positive per event, so two events landing in the
/// same chunk are rejected as ambiguous.
inline std::vector<Chunk> label_chunks(std::vector<Chunk> chunks, const std::vector<PumpEvent>& events) {
    check_regular_grid(chunks, "label_chunks");
    for (auto& c : chunks) c.label = 0;
    if (events.empty()) return chunks;
    if (chunks.empty()) throw LabelError("event '" + events.front().symbol + "' given but the chunk stream is empty");
    const std::int64_t origin = chunks.front().start_ms;
    const std::int64_t len_ms = std::int64_t{chunks.front().chunk_len_s} * 1000;
    for (const auto& e : events) {
        const auto name = e.symbol + "@" + std::to_string(e.pump_start_ms);
        if (e.pump_start_ms < origin) throw LabelError("event " + name + " precedes the stream");
        const auto idx = static_cast<std::size_t>((e.pump_start_ms - origin) / len_ms);
        if (idx >= chunks.size()) throw LabelError("event " + name + " is past the end of the stream");
        if (chunks[idx].label == 1)
            throw LabelError("event " + name + " shares chunk " + std::to_string(chunks[idx].start_ms) +
                             " with another event");
        chunks[idx].label = 1;
    }
    return chunks;
}

inline void write_chunk_csv(const std::vector<Chunk>& chunks, std::ostream& out) {
    out << kChunkCsvHeader << '\n';
    for (const auto& c : chunks) {
        out << c.start_ms << ',' << c.n_trades << ',' << csv::format_double(c.volume) << ','
            << csv::format_double(c.rush_volume) << ',' << csv::format_double(c.close_price) << ','
            << csv::format_double(c.high_price) << ',' << csv::format_double(c.low_price) << ',' << c.label << '\n';
    }
}

}  // namespace pnd
