#include "ecfc/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string_view>

#include "ecfc/error.hpp"
#include "ecfc/format.hpp"

namespace ecfc {

namespace {

constexpr std::string_view kSeriesHeader = "ECFC-SERIES v1";

std::string_view trim(std::string_view s) {
    const auto not_space = [](char c) { return c != ' ' && c != '\t' && c != '\r' && c != '\n'; };
    auto first = std::find_if(s.begin(), s.end(), not_space);
    auto last = std::find_if(s.rbegin(), s.rend(), not_space).base();
    return first < last ? std::string_view(&*first, static_cast<std::size_t>(last - first))
                        : std::string_view{};
}

std::vector<std::string_view> split(std::string_view line, char delimiter) {
    std::vector<std::string_view> cells;
    std::size_t pos = 0;
    while (true) {
        auto next = line.find(delimiter, pos);
        if (next == std::string_view::npos) {
            cells.push_back(trim(line.substr(pos)));
            return cells;
        }
        cells.push_back(trim(line.substr(pos, next - pos)));
        pos = next + 1;
    }
}

std::optional<double> parse_number(std::string_view cell) {
    if (cell.empty()) return std::nullopt;
    if (cell.front() == '+') cell.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size() || !std::isfinite(value))
        return std::nullopt;
    return value;
}

void fill_linear_by_slot(std::vector<double>& values, const std::vector<bool>& observed,
                         std::size_t days, const MeasurementSeries& series) {
    for (int slot = 0; slot < kSlotsPerDay; ++slot) {
        const auto at = [slot](std::size_t day) { return day * kSlotsPerDay + slot; };
        std::optional<std::size_t> prev;
        std::size_t first_known = days;
        for (std::size_t d = 0; d < days; ++d) {
            if (observed[at(d)]) {
                first_known = d;
                break;
            }
        }
        if (first_known == days) {
            throw GapError(format_timestamp(series.time_at(at(0))),
                           "cannot impute: no observed reading for half-hour slot " +
                               std::to_string(slot));
        }
        for (std::size_t day = 0; day < days; ++day) {
            if (observed[at(day)]) {
                prev = day;
                continue;
            }
            std::size_t next = day + 1;
            while (next < days && !observed[at(next)]) ++next;
            if (!prev) {
                values[at(day)] = values[at(first_known)];
            } else if (next == days) {
                values[at(day)] = values[at(*prev)];
            } else {
                const double a = values[at(*prev)];
                const double b = values[at(next)];
                const double frac = static_cast<double>(day - *prev) / static_cast<double>(next - *prev);
                values[at(day)] = a + (b - a) * frac;
            }
        }
    }
}

void fill_forward(std::vector<double>& values, const std::vector<bool>& observed) {
    auto first = std::find(observed.begin(), observed.end(), true);
    if (first == observed.end()) throw GapError("", "cannot impute: series has no observed readings");
    const auto first_index = static_cast<std::size_t>(first - observed.begin());
    // Leading gap has no predecessor; back-fill it from the first reading.
    for (std::size_t k = 0; k < first_index; ++k) values[k] = values[first_index];
    for (std::size_t k = first_index + 1; k < values.size(); ++k) {
        if (!observed[k]) values[k] = values[k - 1];
    }
}

}  // namespace

std::size_t TableLayout::column_count() const {
    return std::max(date_column, first_value_column + kSlotsPerDay - 1) + 1;
}

std::size_t MeasurementSeries::imputed_count() const {
    return static_cast<std::size_t>(std::count(gap_mask.begin(), gap_mask.end(), true));
}

RawTable parse_table(std::istream& source, const TableLayout& layout) {
    if (layout.date_column >= layout.first_value_column &&
        layout.date_column < layout.first_value_column + kSlotsPerDay) {
        throw ContractError("date column overlaps the half-hour value columns");
    }
    RawTable table;
    std::string line;
    std::size_t line_no = 0;
    bool seen_first = false;
    while (std::getline(source, line)) {
        ++line_no;
        std::string_view text = trim(line);
        if (text.empty()) continue;
        auto cells = split(text, layout.delimiter);
        const bool first = !seen_first;
        seen_first = true;
        if (first && layout.header == HeaderMode::Present) continue;

        const auto date_cell = layout.date_column < cells.size() ? cells[layout.date_column]
                                                                 : std::string_view{};
        auto date = parse_date(date_cell, layout.date_format);
        if (first && layout.header == HeaderMode::Auto && !date) continue;

        if (cells.size() != layout.column_count()) {
            throw ArityError(line_no, "expected " + std::to_string(layout.column_count()) +
                                          " columns, found " + std::to_string(cells.size()));
        }
        if (!date) throw ParseError(line_no, "malformed date '" + std::string(date_cell) + "'");
        if (!table.rows.empty() && *date <= table.rows.back().date) {
            throw ParseError(line_no, "date " + format_date(*date) + " does not follow " +
                                          format_date(table.rows.back().date));
        }
        RawRow row{*date, {}, line_no};
        row.values.reserve(kSlotsPerDay);
        for (int slot = 0; slot < kSlotsPerDay; ++slot) {
            row.values.push_back(parse_number(cells[layout.first_value_column + slot]));
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

MeasurementSeries flatten(const RawTable& table, GapPolicy policy) {
    if (table.rows.empty()) throw ContractError("cannot flatten an empty table");

    const Date first_day = table.rows.front().date;
    const auto days = static_cast<std::size_t>((table.rows.back().date - first_day).count()) + 1;

    MeasurementSeries series;
    series.start = slot_time(first_day, 0);
    series.values.assign(days * kSlotsPerDay, 0.0);
    std::vector<bool> observed(days * kSlotsPerDay, false);

    for (const auto& row : table.rows) {
        if (row.values.size() != static_cast<std::size_t>(kSlotsPerDay)) {
            throw ArityError(row.line, "row has " + std::to_string(row.values.size()) + " readings");
        }
        const auto day = static_cast<std::size_t>((row.date - first_day).count());
        for (int slot = 0; slot < kSlotsPerDay; ++slot) {
            const auto& cell = row.values[slot];
            if (!cell) continue;
            const std::size_t k = day * kSlotsPerDay + slot;
            if (*cell < 0.0) {
                throw ValidationError("negative reading " + std::to_string(*cell) + " at " +
                                      format_timestamp(series.time_at(k)));
            }
            series.values[k] = *cell;
            observed[k] = true;
        }
    }

    auto gap = std::find(observed.begin(), observed.end(), false);
    if (gap != observed.end()) {
        const auto k = static_cast<std::size_t>(gap - observed.begin());
        if (policy == GapPolicy::Strict) {
            const auto ts = format_timestamp(series.time_at(k));
            throw GapError(ts, "missing reading at " + ts);
        }
        if (policy == GapPolicy::LinearInterpolate) {
            fill_linear_by_slot(series.values, observed, days, series);
        } else {
            fill_forward(series.values, observed);
        }
    }
    series.gap_mask.resize(observed.size());
    for (std::size_t k = 0; k < observed.size(); ++k) series.gap_mask[k] = !observed[k];
    return series;
}

void write_series(std::ostream& out, const MeasurementSeries& series) {
    if (series.values.size() != series.gap_mask.size()) {
        throw ContractError("series values and gap mask differ in length");
    }
    std::string buffer;
    buffer.append(kSeriesHeader).push_back('\n');
    for (std::size_t k = 0; k < series.size(); ++k) {
        buffer += format_timestamp(series.time_at(k));
        buffer.push_back(',');
        buffer += format_double(series.values[k]);
        buffer += series.gap_mask[k] ? ",1\n" : ",0\n";
    }
    out << buffer;
}

MeasurementSeries read_series(std::istream& in) {
    std::string line;
    if (!std::getline(in, line) || trim(line) != kSeriesHeader) {
        throw DataError("not a series file: missing '" + std::string(kSeriesHeader) + "' header");
    }
    MeasurementSeries series;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        auto text = trim(line);
        if (text.empty()) continue;
        auto cells = split(text, ',');
        if (cells.size() != 3) throw ArityError(line_no, "expected timestamp,value,imputed");
        auto ts = parse_timestamp(cells[0]);
        if (!ts) throw ParseError(line_no, "malformed timestamp '" + std::string(cells[0]) + "'");
        if (series.values.empty()) {
            if ((ts->time_since_epoch().count() % kSlotLength.count()) != 0) {
                throw ParseError(line_no, "timestamp off the half-hour grid");
            }
            series.start = *ts;
        } else if (*ts != series.time_at(series.size())) {
            throw ParseError(line_no, "timestamp breaks the 30-minute cadence");
        }
        auto value = parse_number(cells[1]);
        if (!value) throw ParseError(line_no, "malformed value '" + std::string(cells[1]) + "'");
        if (*value < 0.0) throw ValidationError("negative reading at line " + std::to_string(line_no));
        if (cells[2] != "0" && cells[2] != "1") throw ParseError(line_no, "imputed flag must be 0 or 1");
        series.values.push_back(*value);
        series.gap_mask.push_back(cells[2] == "1");
    }
    return series;
}

MeasurementSeries load_series_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open series file " + path);
    return read_series(in);
}

void save_series_file(const std::string& path, const MeasurementSeries& series) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write series file " + path);
    write_series(out, series);
    if (!out) throw IoError("write failed for " + path);
}

}  // namespace ecfc
