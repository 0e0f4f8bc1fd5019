#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "ecfc/timestamp.hpp"

namespace ecfc {

// One day of readings as it appears in the raw file. Missing or non-numeric
// cells are kept as nullopt so a gap policy can decide what to do with them.
struct RawRow {
    Date date;
    std::vector<std::optional<double>> values;  // kSlotsPerDay entries
    std::size_t line = 0;                       // 1-based source line
};

struct RawTable {
    std::vector<RawRow> rows;
};

enum class HeaderMode { Auto, Present, Absent };

// Where the date and the 48 half-hour readings live in a delimited row.
// The 48 value columns are contiguous starting at first_value_column.
struct TableLayout {
    char delimiter = ',';
    std::size_t date_column = 0;
    std::size_t first_value_column = 1;
    DateFormat date_format = DateFormat::Iso;
    HeaderMode header = HeaderMode::Auto;

    std::size_t column_count() const;
};

enum class GapPolicy { Strict, LinearInterpolate, ForwardFill };

// Contiguous half-hourly series: values[k] is the reading at start + k * 30min.
struct MeasurementSeries {
    Timestamp start{};
    std::vector<double> values;
    std::vector<bool> gap_mask;  // true where the value was imputed

    std::size_t size() const { return values.size(); }
    Timestamp time_at(std::size_t index) const {
        return start + static_cast<long>(index) * kSlotLength;
    }
    std::size_t imputed_count() const;
};

RawTable parse_table(std::istream& source, const TableLayout& layout = {});

MeasurementSeries flatten(const RawTable& table, GapPolicy policy = GapPolicy::Strict);

// Canonical series file: `ECFC-SERIES v1` header, then `timestamp,value,imputed`.
// Values are written in shortest round-trip form, so read(write(s)) == s.
void write_series(std::ostream& out, const MeasurementSeries& series);
MeasurementSeries read_series(std::istream& in);

MeasurementSeries load_series_file(const std::string& path);
void save_series_file(const std::string& path, const MeasurementSeries& series);

}  // namespace ecfc
