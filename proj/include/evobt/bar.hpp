// bar.hpp — minute bar and bar-series types shared across the workbench.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace evobt {

// One minute of OHLCV. Timestamps are UTC epoch minutes so consecutive bars
// differ by exactly 1 when the feed has no gaps.
struct Bar {
    std::int64_t ts_min = 0;
    double open = 0.0;
    double high = 0.0;
    double low = 0.0;
    double close = 0.0;
    double volume = 0.0;

    bool valid() const {
        if (!(open > 0.0 && high > 0.0 && low > 0.0 && close > 0.0)) return false;
        if (volume < 0.0) return false;
        if (low > open || low > close) return false;
        if (high < open || high < close) return false;
        return true;
    }
};

struct BarSeries {
    std::string label;
    std::vector<Bar> bars;

    std::size_t size() const { return bars.size(); }
    bool empty() const { return bars.empty(); }
    const Bar& operator[](std::size_t i) const { return bars[i]; }

    // Count of index gaps, i.e. adjacent pairs more than one minute apart.
    std::size_t gap_count() const {
        std::size_t n = 0;
        for (std::size_t i = 1; i < bars.size(); ++i)
            if (bars[i].ts_min - bars[i - 1].ts_min > 1) ++n;
        return n;
    }

    // Strictly increasing timestamps and per-bar sanity. Throws on violation.
    void validate() const {
        for (std::size_t i = 0; i < bars.size(); ++i) {
            if (!bars[i].valid())
                throw std::runtime_error(label + ": invalid bar at index " + std::to_string(i));
            if (i > 0 && bars[i].ts_min <= bars[i - 1].ts_min)
                throw std::runtime_error(label + ": non-increasing timestamp at index " +
                                         std::to_string(i));
        }
    }
};

// Date-granular split boundaries, UTC. End dates are inclusive: a bar belongs
// to a split when start_day*1440 <= ts_min < (end_day+1)*1440, so the minute
// interval is closed on the left and open on the right.
struct SplitSpec {
    std::int64_t train_start_day = 0;  // days since epoch
    std::int64_t train_end_day = 0;
    std::int64_t val_start_day = 0;
    std::int64_t val_end_day = 0;
    std::int64_t test_start_day = 0;
    std::int64_t test_end_day = 0;

    void validate() const {
        if (!(train_start_day <= train_end_day && val_start_day <= val_end_day &&
              test_start_day <= test_end_day))
            throw std::runtime_error("split spec: start after end");
        if (!(train_end_day < val_start_day && val_end_day < test_start_day))
            throw std::runtime_error("split spec: intervals out of order or overlapping");
    }
};

}  // namespace evobt
