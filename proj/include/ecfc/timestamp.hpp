#pragma once

#include <chrono>
#include <optional>
#include <string>
#include <string_view>

namespace ecfc {

// Naive civil time at minute resolution. Readings carry no timezone; the
// half-hour grid is positional, so there is no DST handling anywhere.
using Timestamp = std::chrono::sys_time<std::chrono::minutes>;
using Date = std::chrono::sys_days;

inline constexpr std::chrono::minutes kSlotLength{30};
inline constexpr int kSlotsPerDay = 48;

enum class DateFormat { Iso, DayMonthYear };

inline Timestamp slot_time(Date day, int slot) {
    return Timestamp{day} + slot * kSlotLength;
}

// `YYYY-MM-DD` or `DD/MM/YYYY`; nullopt on anything that is not a real date.
std::optional<Date> parse_date(std::string_view text, DateFormat format);
std::string format_date(Date day);

// `YYYY-MM-DDTHH:MM:SS`.
std::string format_timestamp(Timestamp t);
std::optional<Timestamp> parse_timestamp(std::string_view text);

}  // namespace ecfc
