#pragma once

#include <cstddef>
#include <span>

namespace ecfc {

inline constexpr double kDefaultZeroFloor = 1e-9;

struct MapeResult {
    double percent = 0.0;
    std::size_t excluded = 0;
};

struct MetricReport {
    double mae = 0.0;   // kWh, over every pair
    double mape = 0.0;  // percent, over pairs with |actual| > zero floor
    std::size_t n_points = 0;
    std::size_t n_excluded = 0;
};

double mae(std::span<const double> actual, std::span<const double> predicted);

// Pairs with |actual| <= zero_floor are skipped and counted. Throws
// UndefinedMetricError when nothing is left.
MapeResult mape(std::span<const double> actual, std::span<const double> predicted,
                double zero_floor = kDefaultZeroFloor);

MetricReport evaluate(std::span<const double> actual, std::span<const double> predicted,
                      double zero_floor = kDefaultZeroFloor);

}  // namespace ecfc
