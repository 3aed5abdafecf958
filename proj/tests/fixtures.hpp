#pragma once

#include <algorithm>
#include <cstdint>
#include <ostream>
#include <random>
#include <vector>

#include "pnd/dataset.hpp"
#include "pnd/ingest.hpp"
#include "pnd/tree.hpp"

namespace pnd {

inline void PrintTo(const Tree& t, std::ostream* os) {
    for (std::size_t i = 0; i < t.nodes.size(); ++i) {
        const auto& n = t.nodes[i];
        *os << "\n  #" << i << " f" << n.feature << " <= " << n.threshold << " -> " << n.left << "," << n.right
            << " v=" << n.value << " n=" << n.n_samples;
    }
}

}  // namespace pnd

namespace fixtures {

inline pnd::Dataset random_dataset(std::uint64_t seed, std::size_t rows, std::size_t cols, double pos_rate = 0.3,
                                   int distinct = 0) {
    std::mt19937_64 eng(seed);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    std::uniform_int_distribution<int> grid(0, distinct > 0 ? distinct - 1 : 0);
    std::bernoulli_distribution pos(pos_rate);
    pnd::Dataset d(cols);
    std::vector<double> x(cols);
    for (std::size_t i = 0; i < rows; ++i) {
        double s = 0.0;
        for (std::size_t f = 0; f < cols; ++f) {
            x[f] = distinct > 0 ? static_cast<double>(grid(eng)) : u(eng);
            s += (f % 2 == 0 ? 1.0 : -0.5) * x[f];
        }
        const bool y = pos(eng) ? true : (s > 0.8);
        d.add_row(x, y ? 1 : 0);
    }
    if (d.n_pos() == 0 || d.n_neg() == 0) {
        x.assign(cols, 0.0);
        d.add_row(x, d.n_pos() == 0 ? 1 : 0);
    }
    return d;
}

inline std::vector<pnd::TradeRecord> random_trades(std::uint64_t seed, std::size_t n, std::int64_t t0_ms,
                                                   std::int64_t span_ms) {
    std::mt19937_64 eng(seed);
    std::uniform_int_distribution<std::int64_t> ts(t0_ms, t0_ms + span_ms - 1);
    std::uniform_real_distribution<double> px(1.0, 2.0), q(0.01, 5.0);
    std::bernoulli_distribution side(0.5);
    std::vector<pnd::TradeRecord> out(n);
    for (auto& t : out) t = {ts(eng), px(eng), q(eng), side(eng)};
    std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.timestamp_ms < b.timestamp_ms; });
    return out;
}

}  // namespace fixtures
