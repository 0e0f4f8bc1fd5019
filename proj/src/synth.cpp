#include "ecfc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "ecfc/error.hpp"
#include "ecfc/features.hpp"

namespace ecfc {

double weekday_factor(int day_of_week) { return day_of_week >= 5 ? -1.0 : 0.0; }

double synth_clean_value(const SynthParams& params, std::size_t index) {
    const auto cal = calendar_of(slot_time(params.start, 0) + static_cast<long>(index) * kSlotLength);
    const double phase = 2.0 * std::numbers::pi * cal.half_hour / kSlotsPerDay;
    return params.base +
           params.amplitude * std::sin(phase) * (1.0 + params.weekly * weekday_factor(cal.day_of_week));
}

MeasurementSeries generate_synthetic(const SynthParams& params) {
    if (params.days < 1) throw ContractError("synthetic series needs at least one day");
    if (!(params.noise_sigma >= 0.0)) throw ContractError("noise sigma must be nonnegative");
    MeasurementSeries series;
    series.start = slot_time(params.start, 0);
    const std::size_t n = params.days * kSlotsPerDay;
    series.values.reserve(n);
    series.gap_mask.assign(n, false);
    std::mt19937_64 rng(params.seed);
    std::normal_distribution<double> noise(0.0, 1.0);
    for (std::size_t k = 0; k < n; ++k) {
        double v = synth_clean_value(params, k);
        if (params.noise_sigma > 0.0) v += params.noise_sigma * noise(rng);
        series.values.push_back(std::max(0.0, v));
    }
    return series;
}

}  // namespace ecfc
