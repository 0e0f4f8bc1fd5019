#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ecfc/ingest.hpp"
#include "ecfc/timestamp.hpp"

namespace ecfc {

struct CalendarFeatures {
    int year = 0;
    int month = 0;         // 1-12
    int day_of_month = 0;  // 1-31
    int half_hour = 0;     // 0-47
    int day_of_week = 0;   // 0-6, Monday = 0
    int week_of_year = 0;  // ISO-8601 week, 1-53
    int day_of_year = 0;   // 1-366
};

// Throws ContractError when t is not on the half-hour grid.
CalendarFeatures calendar_of(Timestamp t);

enum class SchemaKind { Calendar4, Calendar7, Windowed };

// How a windowed example is presented to the LSTM.
//   Flat:     the whole vector is a single timestep; state carries over between
//             chronologically consecutive examples.
//   Sequence: the window is unrolled into n timesteps of [s_t, calendar(s_t)].
enum class InputMode { Flat, Sequence };

struct FeatureSchema {
    SchemaKind kind = SchemaKind::Windowed;
    std::size_t window = 96;
    InputMode mode = InputMode::Flat;

    static FeatureSchema calendar4() { return {SchemaKind::Calendar4, 0, InputMode::Flat}; }
    static FeatureSchema calendar7() { return {SchemaKind::Calendar7, 0, InputMode::Flat}; }
    static FeatureSchema windowed(std::size_t n, InputMode mode = InputMode::Flat) {
        return {SchemaKind::Windowed, n, mode};
    }

    std::size_t calendar_width() const;
    std::size_t history() const { return kind == SchemaKind::Windowed ? window : 0; }
    // Arity of the flat example vector: 4, 7 or 6 + n.
    std::size_t input_width() const;
    // Geometry of what the model consumes per example.
    bool unrolled() const { return kind == SchemaKind::Windowed && mode == InputMode::Sequence; }
    std::size_t steps() const { return unrolled() ? window : 1; }
    std::size_t step_width() const { return unrolled() ? 1 + calendar_width() : input_width(); }

    void validate() const;
};

std::string to_string(SchemaKind kind);
std::string to_string(InputMode mode);
SchemaKind schema_kind_from_string(const std::string& text);
InputMode input_mode_from_string(const std::string& text);

// Raw calendar values in schema order:
//   Calendar4: year, month, day_of_month, half_hour
//   Calendar7: Calendar4 + day_of_week, day_of_year, week_of_year
//   Windowed:  half_hour, day_of_month, day_of_week, week_of_year, day_of_year, year
std::vector<double> calendar_vector(const CalendarFeatures& cal, SchemaKind kind);

struct MinMax {
    double min = 0.0;
    double max = 0.0;

    double range() const { return max - min; }
    // Constant channels map to 0.
    double normalize(double x) const { return max > min ? (x - min) / (max - min) : 0.0; }
    double denormalize(double y) const { return max > min ? min + y * (max - min) : min; }
};

struct Normalizer {
    std::vector<MinMax> calendar;  // schema order
    MinMax target;
};

struct SplitSpec {
    std::size_t train_start = 0;
    std::size_t train_len = 0;
    std::size_t val_end = 0;  // exclusive

    std::size_t train_end() const { return train_start + train_len; }
};

// Half-open interval of target indices.
struct IndexRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const { return end > begin ? end - begin : 0; }
};

// Target index ranges implied by a split: training targets start once a full
// window of history is available inside the training range.
IndexRange train_targets(const SplitSpec& split, const FeatureSchema& schema);
IndexRange validation_targets(const SplitSpec& split);

struct Example {
    std::size_t index = 0;
    std::vector<double> input;  // normalized flat vector, schema order
    double target = 0.0;        // normalized
    double target_raw = 0.0;    // kWh
};

// Statistics come from [train_start, train_end) only.
Normalizer fit_normalizer(const MeasurementSeries& series, const FeatureSchema& schema,
                          const SplitSpec& split);

// Normalized calendar rows and measurement channel, indexed like the series.
// The extent may run past the end of the series so that forecasts can compute
// calendar features for future half hours.
class FeatureTable {
public:
    FeatureTable(const MeasurementSeries& series, FeatureSchema schema, Normalizer normalizer,
                 std::size_t extent = 0);

    const FeatureSchema& schema() const { return schema_; }
    const Normalizer& normalizer() const { return normalizer_; }
    std::size_t extent() const { return extent_; }

    // Normalized measurements for the covered part of the series.
    const std::vector<double>& channel() const { return channel_; }
    std::span<const double> calendar_row(std::size_t index) const;

    // Flat schema vector for target `index`; window slots are read from
    // `channel` at [index - n, index).
    std::vector<double> flat_input(std::size_t index, std::span<const double> channel) const;

    // Writes timestep `step` of the model input for target `index` into
    // out[0 .. schema.step_width()).
    void write_step(std::size_t index, std::size_t step, std::span<const double> channel,
                    double* out) const;

private:
    FeatureSchema schema_;
    Normalizer normalizer_;
    std::size_t extent_;
    std::size_t width_;
    std::vector<double> calendar_;  // extent x calendar_width, row-major
    std::vector<double> channel_;
};

std::vector<Example> build_examples(const MeasurementSeries& series, const FeatureSchema& schema,
                                    const Normalizer& normalizer, IndexRange targets);

struct DatasetSplit {
    Normalizer normalizer;
    std::vector<Example> train;
    std::vector<Example> validation;
};

// Checks the split geometry against the series and schema.
void check_split(const SplitSpec& split, const FeatureSchema& schema, std::size_t series_length);

DatasetSplit split_dataset(const MeasurementSeries& series, const FeatureSchema& schema,
                           const SplitSpec& split);

}  // namespace ecfc
