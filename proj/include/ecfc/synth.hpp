#pragma once

#include <cstddef>
#include <cstdint>

#include "ecfc/ingest.hpp"

namespace ecfc {

// value = base + amplitude * sin(2*pi*h_n/48) * (1 + weekly * weekday_factor(d_w)) + N(0, noise_sigma),
// floored at zero.
struct SynthParams {
    Date start = Date{std::chrono::year{2019} / std::chrono::January / 7};
    std::size_t days = 60;
    double base = 100.0;
    double amplitude = 50.0;
    double weekly = 0.3;
    double noise_sigma = 1.0;
    std::uint64_t seed = 42;
};

// 0 on weekdays, -1 on Saturday and Sunday: the daily swing shrinks at weekends.
double weekday_factor(int day_of_week);

// Noise-free value at a series index.
double synth_clean_value(const SynthParams& params, std::size_t index);

// Noise is drawn sequentially, so a longer series with the same seed extends a
// shorter one point for point.
MeasurementSeries generate_synthetic(const SynthParams& params);

}  // namespace ecfc
