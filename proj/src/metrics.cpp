#include "ecfc/metrics.hpp"

#include <cmath>
#include <string>

#include "ecfc/error.hpp"

namespace ecfc {

namespace {

void check_pairs(std::span<const double> actual, std::span<const double> predicted) {
    if (actual.empty()) throw ContractError("metric over zero points");
    if (actual.size() != predicted.size()) {
        throw ContractError("metric length mismatch: " + std::to_string(actual.size()) + " actual vs " +
                            std::to_string(predicted.size()) + " predicted");
    }
}

}  // namespace

double mae(std::span<const double> actual, std::span<const double> predicted) {
    check_pairs(actual, predicted);
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) sum += std::abs(actual[i] - predicted[i]);
    return sum / static_cast<double>(actual.size());
}

MapeResult mape(std::span<const double> actual, std::span<const double> predicted, double zero_floor) {
    check_pairs(actual, predicted);
    if (!(zero_floor >= 0.0)) throw ContractError("zero floor must be nonnegative");
    MapeResult out;
    double sum = 0.0;
    for (std::size_t i = 0; i < actual.size(); ++i) {
        const double a = std::abs(actual[i]);
        if (a <= zero_floor) {
            ++out.excluded;
            continue;
        }
        sum += std::abs(actual[i] - predicted[i]) / a;
    }
    const std::size_t used = actual.size() - out.excluded;
    if (used == 0) throw UndefinedMetricError("MAPE undefined: every target is within the zero floor");
    out.percent = 100.0 * sum / static_cast<double>(used);
    return out;
}

MetricReport evaluate(std::span<const double> actual, std::span<const double> predicted, double zero_floor) {
    MetricReport report;
    report.mae = mae(actual, predicted);
    const auto p = mape(actual, predicted, zero_floor);
    report.mape = p.percent;
    report.n_excluded = p.excluded;
    report.n_points = actual.size() - p.excluded;
    return report;
}

}  // namespace ecfc
