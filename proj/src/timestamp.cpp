#include "ecfc/timestamp.hpp"

#include <charconv>
#include <cstdio>

namespace ecfc {

namespace {

bool parse_int(std::string_view text, int& out) {
    if (text.empty()) return false;
    for (char ch : text) {
        if (ch < '0' || ch > '9') return false;
    }
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
    return ec == std::errc{} && ptr == text.data() + text.size();
}

std::optional<Date> make_date(int y, int m, int d) {
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok()) return std::nullopt;
    return sys_days{ymd};
}

}  // namespace

std::optional<Date> parse_date(std::string_view text, DateFormat format) {
    int y = 0, m = 0, d = 0;
    if (format == DateFormat::Iso) {
        if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
        if (!parse_int(text.substr(0, 4), y) || !parse_int(text.substr(5, 2), m) ||
            !parse_int(text.substr(8, 2), d))
            return std::nullopt;
    } else {
        if (text.size() != 10 || text[2] != '/' || text[5] != '/') return std::nullopt;
        if (!parse_int(text.substr(0, 2), d) || !parse_int(text.substr(3, 2), m) ||
            !parse_int(text.substr(6, 4), y))
            return std::nullopt;
    }
    return make_date(y, m, d);
}

std::string format_date(Date day) {
    using namespace std::chrono;
    year_month_day ymd{day};
    char buf[16];
    std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                  static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
    return buf;
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const auto minutes_of_day = (t - day).count();
    char buf[16];
    std::snprintf(buf, sizeof buf, "T%02d:%02d:00", static_cast<int>(minutes_of_day / 60),
                  static_cast<int>(minutes_of_day % 60));
    return format_date(day) + buf;
}

std::optional<Timestamp> parse_timestamp(std::string_view text) {
    if (text.size() != 19 || text[10] != 'T' || text[13] != ':' || text[16] != ':')
        return std::nullopt;
    auto day = parse_date(text.substr(0, 10), DateFormat::Iso);
    int hh = 0, mm = 0, ss = 0;
    if (!day || !parse_int(text.substr(11, 2), hh) || !parse_int(text.substr(14, 2), mm) ||
        !parse_int(text.substr(17, 2), ss))
        return std::nullopt;
    if (hh > 23 || mm > 59 || ss != 0) return std::nullopt;
    return Timestamp{*day} + std::chrono::minutes{hh * 60 + mm};
}

}  // namespace ecfc
