#include "ecfc/features.hpp"

#include <algorithm>
#include <limits>

#include "ecfc/error.hpp"

namespace ecfc {

CalendarFeatures calendar_of(Timestamp t) {
    using namespace std::chrono;
    const sys_days day = floor<days>(t);
    const auto minute_of_day = (t - day).count();
    if (minute_of_day % kSlotLength.count() != 0) {
        throw ContractError("timestamp " + format_timestamp(t) + " is off the half-hour grid");
    }
    const year_month_day ymd{day};
    const int dow = static_cast<int>(weekday{day}.iso_encoding()) - 1;

    // ISO week: the week belongs to the year containing its Thursday.
    const sys_days thursday = day + days{3 - dow};
    const year iso_year = year_month_day{thursday}.year();
    const auto week = (thursday - sys_days{iso_year / January / 1}).count() / 7 + 1;

    CalendarFeatures cal;
    cal.year = static_cast<int>(ymd.year());
    cal.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
    cal.day_of_month = static_cast<int>(static_cast<unsigned>(ymd.day()));
    cal.half_hour = static_cast<int>(minute_of_day / kSlotLength.count());
    cal.day_of_week = dow;
    cal.week_of_year = static_cast<int>(week);
    cal.day_of_year = static_cast<int>((day - sys_days{ymd.year() / January / 1}).count()) + 1;
    return cal;
}

std::size_t FeatureSchema::calendar_width() const {
    switch (kind) {
        case SchemaKind::Calendar4: return 4;
        case SchemaKind::Calendar7: return 7;
        case SchemaKind::Windowed: return 6;
    }
    return 0;
}

std::size_t FeatureSchema::input_width() const { return calendar_width() + history(); }

void FeatureSchema::validate() const {
    if (kind == SchemaKind::Windowed && window < 1) {
        throw ConfigError("windowed schema needs a window of at least one half hour");
    }
}

std::string to_string(SchemaKind kind) {
    switch (kind) {
        case SchemaKind::Calendar4: return "calendar4";
        case SchemaKind::Calendar7: return "calendar7";
        case SchemaKind::Windowed: return "windowed";
    }
    return "?";
}

std::string to_string(InputMode mode) { return mode == InputMode::Flat ? "flat" : "sequence"; }

SchemaKind schema_kind_from_string(const std::string& text) {
    if (text == "calendar4") return SchemaKind::Calendar4;
    if (text == "calendar7") return SchemaKind::Calendar7;
    if (text == "windowed") return SchemaKind::Windowed;
    throw ConfigError("unknown schema '" + text + "' (calendar4, calendar7, windowed)");
}

InputMode input_mode_from_string(const std::string& text) {
    if (text == "flat") return InputMode::Flat;
    if (text == "sequence") return InputMode::Sequence;
    throw ConfigError("unknown input mode '" + text + "' (flat, sequence)");
}

std::vector<double> calendar_vector(const CalendarFeatures& cal, SchemaKind kind) {
    switch (kind) {
        case SchemaKind::Calendar4:
            return {double(cal.year), double(cal.month), double(cal.day_of_month), double(cal.half_hour)};
        case SchemaKind::Calendar7:
            return {double(cal.year),        double(cal.month),       double(cal.day_of_month),
                    double(cal.half_hour),   double(cal.day_of_week), double(cal.day_of_year),
                    double(cal.week_of_year)};
        case SchemaKind::Windowed:
            return {double(cal.half_hour),    double(cal.day_of_month), double(cal.day_of_week),
                    double(cal.week_of_year), double(cal.day_of_year),  double(cal.year)};
    }
    return {};
}

IndexRange train_targets(const SplitSpec& split, const FeatureSchema& schema) {
    return {split.train_start + schema.history(), split.train_end()};
}

IndexRange validation_targets(const SplitSpec& split) { return {split.train_end(), split.val_end}; }

Normalizer fit_normalizer(const MeasurementSeries& series, const FeatureSchema& schema,
                          const SplitSpec& split) {
    if (split.train_len == 0) throw ContractError("training range is empty");
    if (split.train_end() > series.size()) {
        throw BoundsError("training range [" + std::to_string(split.train_start) + ", " +
                          std::to_string(split.train_end()) + ") exceeds series length " +
                          std::to_string(series.size()));
    }
    constexpr double inf = std::numeric_limits<double>::infinity();
    Normalizer norm;
    norm.calendar.assign(schema.calendar_width(), MinMax{inf, -inf});
    norm.target = MinMax{inf, -inf};
    for (std::size_t k = split.train_start; k < split.train_end(); ++k) {
        const double v = series.values[k];
        norm.target.min = std::min(norm.target.min, v);
        norm.target.max = std::max(norm.target.max, v);
        const auto row = calendar_vector(calendar_of(series.time_at(k)), schema.kind);
        for (std::size_t j = 0; j < row.size(); ++j) {
            norm.calendar[j].min = std::min(norm.calendar[j].min, row[j]);
            norm.calendar[j].max = std::max(norm.calendar[j].max, row[j]);
        }
    }
    return norm;
}

FeatureTable::FeatureTable(const MeasurementSeries& series, FeatureSchema schema,
                           Normalizer normalizer, std::size_t extent)
    : schema_(schema),
      normalizer_(std::move(normalizer)),
      extent_(std::max(extent, series.size())),
      width_(schema.calendar_width()) {
    schema_.validate();
    if (normalizer_.calendar.size() != width_) {
        throw ContractError("normalizer has " + std::to_string(normalizer_.calendar.size()) +
                            " calendar channels, schema needs " + std::to_string(width_));
    }
    calendar_.resize(extent_ * width_);
    for (std::size_t k = 0; k < extent_; ++k) {
        const auto row = calendar_vector(calendar_of(series.time_at(k)), schema_.kind);
        for (std::size_t j = 0; j < width_; ++j) {
            calendar_[k * width_ + j] = normalizer_.calendar[j].normalize(row[j]);
        }
    }
    channel_.reserve(series.size());
    for (double v : series.values) channel_.push_back(normalizer_.target.normalize(v));
}

std::span<const double> FeatureTable::calendar_row(std::size_t index) const {
    if (index >= extent_) throw BoundsError("calendar index " + std::to_string(index) + " out of range");
    return {calendar_.data() + index * width_, width_};
}

std::vector<double> FeatureTable::flat_input(std::size_t index, std::span<const double> channel) const {
    const std::size_t n = schema_.history();
    if (index < n) throw BoundsError("target " + std::to_string(index) + " needs " + std::to_string(n) +
                                     " half hours of history");
    if (index > channel.size()) throw BoundsError("window for target " + std::to_string(index) +
                                                  " runs past the available channel");
    auto cal = calendar_row(index);
    std::vector<double> input(cal.begin(), cal.end());
    input.insert(input.end(), channel.begin() + static_cast<long>(index - n),
                 channel.begin() + static_cast<long>(index));
    return input;
}

void FeatureTable::write_step(std::size_t index, std::size_t step, std::span<const double> channel,
                              double* out) const {
    if (!schema_.unrolled()) {
        const auto input = flat_input(index, channel);
        std::copy(input.begin(), input.end(), out);
        return;
    }
    const std::size_t n = schema_.window;
    if (index < n || index > channel.size() || step >= n) {
        throw BoundsError("window step " + std::to_string(step) + " for target " +
                          std::to_string(index) + " is out of range");
    }
    const std::size_t source = index - n + step;
    out[0] = channel[source];
    auto cal = calendar_row(source);
    std::copy(cal.begin(), cal.end(), out + 1);
}

std::vector<Example> build_examples(const MeasurementSeries& series, const FeatureSchema& schema,
                                    const Normalizer& normalizer, IndexRange targets) {
    if (targets.end > series.size()) {
        throw BoundsError("target range end " + std::to_string(targets.end) + " exceeds series length " +
                          std::to_string(series.size()));
    }
    if (targets.size() > 0 && targets.begin < schema.history()) {
        throw BoundsError("target " + std::to_string(targets.begin) + " needs " +
                          std::to_string(schema.history()) + " half hours of history before the series start");
    }
    FeatureTable table(series, schema, normalizer);
    std::vector<Example> examples;
    examples.reserve(targets.size());
    for (std::size_t k = targets.begin; k < targets.end; ++k) {
        examples.push_back({k, table.flat_input(k, table.channel()), table.channel()[k], series.values[k]});
    }
    return examples;
}

void check_split(const SplitSpec& split, const FeatureSchema& schema, std::size_t series_length) {
    if (split.train_len <= schema.history()) {
        throw ContractError("training length " + std::to_string(split.train_len) +
                            " must exceed the window size " + std::to_string(schema.history()));
    }
    if (split.val_end < split.train_end()) {
        throw ContractError("validation end " + std::to_string(split.val_end) +
                            " precedes training end " + std::to_string(split.train_end()));
    }
    if (split.val_end > series_length) {
        throw BoundsError("split needs " + std::to_string(split.val_end) + " points, series has " +
                          std::to_string(series_length));
    }
}

DatasetSplit split_dataset(const MeasurementSeries& series, const FeatureSchema& schema,
                           const SplitSpec& split) {
    check_split(split, schema, series.size());
    DatasetSplit out;
    out.normalizer = fit_normalizer(series, schema, split);
    out.train = build_examples(series, schema, out.normalizer, train_targets(split, schema));
    out.validation = build_examples(series, schema, out.normalizer, validation_targets(split));
    return out;
}

}  // namespace ecfc
