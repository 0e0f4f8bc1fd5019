#include "ecfc/forecast.hpp"

#include <algorithm>
#include <ostream>

#include "ecfc/error.hpp"
#include "ecfc/format.hpp"

namespace ecfc {

ForecastResult forecast(const StepPredictor& predictor, const ForecastSetup& setup, const MeasurementSeries& series,
                        std::size_t horizon) {
    if (horizon < 1) throw ContractError("forecast horizon must be at least one half hour");
    const std::size_t start = setup.start;
    if (start > series.size()) {
        throw BoundsError("series has " + std::to_string(series.size()) + " points; forecasting starts at " +
                          std::to_string(start));
    }
    const FeatureTable table(series, setup.schema, setup.normalizer, start + horizon);
    const auto normalized = feedback_rollout(predictor, table, start, horizon);

    ForecastResult result;
    result.start_index = start;
    std::vector<double> actual, predicted;
    for (std::size_t j = 0; j < horizon; ++j) {
        const std::size_t k = start + j;
        result.timestamps.push_back(series.time_at(k));
        const double p = setup.normalizer.target.denormalize(normalized[j]);
        result.predicted.push_back(p);
        if (k < series.size()) {
            result.actual.emplace_back(series.values[k]);
            actual.push_back(series.values[k]);
            predicted.push_back(p);
        } else {
            result.actual.emplace_back(std::nullopt);
        }
    }
    if (!actual.empty()) result.metrics = evaluate(actual, predicted, setup.zero_floor);
    return result;
}

ForecastResult forecast(const Checkpoint& checkpoint, const MeasurementSeries& series, std::size_t horizon) {
    if (series.size() > 0 && series.start != checkpoint.series_start) {
        throw DataError("series starts at " + format_timestamp(series.start) + " but the model was trained on one "
                        "starting at " + format_timestamp(checkpoint.series_start));
    }
    const auto& cfg = checkpoint.config;
    const ForecastSetup setup{cfg.schema, checkpoint.normalizer, cfg.split.train_end(), cfg.zero_floor};
    if (checkpoint.model.shape().input_mode != cfg.schema.mode ||
        checkpoint.model.shape().in_dim != cfg.schema.step_width()) {
        throw ContractError("model input does not match the feature schema");
    }
    return forecast(make_predictor(checkpoint.model, checkpoint.state), setup, series, horizon);
}

HorizonMetrics score_prefix(const ForecastResult& result, std::size_t horizon, double zero_floor) {
    if (horizon > result.predicted.size()) throw ContractError("horizon longer than the forecast");
    std::vector<double> actual, predicted;
    for (std::size_t j = 0; j < horizon; ++j) {
        if (!result.actual[j]) continue;
        actual.push_back(*result.actual[j]);
        predicted.push_back(result.predicted[j]);
    }
    HorizonMetrics out{horizon, actual.size(), std::nullopt};
    if (!actual.empty()) out.metrics = evaluate(actual, predicted, zero_floor);
    return out;
}

std::vector<HorizonMetrics> horizon_sweep(const Checkpoint& checkpoint, const MeasurementSeries& series,
                                          const std::vector<std::size_t>& horizons) {
    if (horizons.empty()) throw ContractError("horizon list is empty");
    const auto longest = *std::max_element(horizons.begin(), horizons.end());
    const auto trajectory = forecast(checkpoint, series, longest);
    std::vector<HorizonMetrics> out;
    for (auto h : horizons) out.push_back(score_prefix(trajectory, h, checkpoint.config.zero_floor));
    return out;
}

void write_forecast_csv(std::ostream& out, const ForecastResult& result) {
    std::string text = "timestamp,predicted_kwh,actual_kwh\n";
    for (std::size_t j = 0; j < result.predicted.size(); ++j) {
        text += format_timestamp(result.timestamps[j]) + ',' + format_double(result.predicted[j]) + ',';
        if (result.actual[j]) text += format_double(*result.actual[j]);
        text += '\n';
    }
    out << text;
}

}  // namespace ecfc
