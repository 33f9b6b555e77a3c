#pragma once

#include <occtrack/imaging.hpp>

namespace occtrack {

/// Correlation response with its peak. Ties resolve to the first cell in
/// row-major order.
struct ResponseMap {
    RealGrid grid;
    int peak_row = 0;
    int peak_col = 0;
    double peak_val = 0;
    /// Peak value before normalization; equals peak_val for raw maps.
    double raw_peak = 0;
    bool normalized = false;

    static ResponseMap from_grid(RealGrid grid);
};

inline ResponseMap ResponseMap::from_grid(RealGrid grid) {
    ResponseMap r;
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i] > grid[best]) {
            best = i;
        }
    }
    r.peak_row = static_cast<int>(best / static_cast<std::size_t>(grid.cols()));
    r.peak_col = static_cast<int>(best % static_cast<std::size_t>(grid.cols()));
    r.peak_val = grid[best];
    r.raw_peak = r.peak_val;
    r.grid = std::move(grid);
    return r;
}

} // namespace occtrack
