#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <vector>

#include "ecfc/ingest.hpp"
#include "ecfc/metrics.hpp"
#include "ecfc/trainer.hpp"

namespace ecfc {

struct ForecastResult {
    std::size_t start_index = 0;  // first half hour after the training range
    std::vector<Timestamp> timestamps;
    std::vector<double> predicted;             // kWh
    std::vector<std::optional<double>> actual;  // kWh where the series covers the horizon
    std::optional<MetricReport> metrics;        // over the points that have actuals
};

// Pure autoregression from the end of the training range: the window is seeded
// with measurements and then fed only with the model's own predictions.
ForecastResult forecast(const Checkpoint& checkpoint, const MeasurementSeries& series, std::size_t horizon);

// What a rollout needs besides the predictor itself.
struct ForecastSetup {
    FeatureSchema schema;
    Normalizer normalizer;
    std::size_t start = 0;  // index of the first forecast half hour
    double zero_floor = kDefaultZeroFloor;
};

ForecastResult forecast(const StepPredictor& predictor, const ForecastSetup& setup, const MeasurementSeries& series,
                        std::size_t horizon);

struct HorizonMetrics {
    std::size_t horizon = 0;  // half hours
    std::size_t covered = 0;  // points with actuals
    std::optional<MetricReport> metrics;
};

// Metrics for several horizons from one trajectory of the longest horizon.
std::vector<HorizonMetrics> horizon_sweep(const Checkpoint& checkpoint, const MeasurementSeries& series,
                                          const std::vector<std::size_t>& horizons);

// Metrics over the first `horizon` points of an existing forecast.
HorizonMetrics score_prefix(const ForecastResult& result, std::size_t horizon, double zero_floor);

// `timestamp,predicted_kwh,actual_kwh`; the actual field is empty past the series end.
void write_forecast_csv(std::ostream& out, const ForecastResult& result);

}  // namespace ecfc
