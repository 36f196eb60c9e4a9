#include "rmtwarn/core.hpp"

#include <charconv>

#include <fmt/format.h>

namespace rmtwarn {

namespace {

int parse_int(std::string_view text, std::string_view whole) {
    int value = 0;
    const auto* end = text.data() + text.size();
    auto [ptr, ec] = std::from_chars(text.data(), end, value);
    if (ec != std::errc{} || ptr != end) {
        throw DataError(fmt::format("invalid date '{}'", whole));
    }
    return value;
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
    const std::chrono::year_month_day ymd{std::chrono::year{year}, std::chrono::month{month},
                                          std::chrono::day{day}};
    if (!ymd.ok()) {
        throw DataError(fmt::format("invalid calendar date {}-{}-{}", year, month, day));
    }
    days_ = std::chrono::sys_days{ymd};
}

Date Date::parse(std::string_view text) {
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        throw DataError(fmt::format("invalid date '{}' (expected YYYY-MM-DD)", text));
    }
    const int y = parse_int(text.substr(0, 4), text);
    const int m = parse_int(text.substr(5, 2), text);
    const int d = parse_int(text.substr(8, 2), text);
    if (m < 1 || m > 12 || d < 1 || d > 31) {
        throw DataError(fmt::format("invalid date '{}'", text));
    }
    return Date(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

std::string Date::to_string() const {
    const std::chrono::year_month_day ymd{days_};
    return fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
}

bool Date::is_weekend() const {
    const std::chrono::weekday wd{days_};
    return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

}  // namespace rmtwarn
