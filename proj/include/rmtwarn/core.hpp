// Shared vocabulary types: calendar dates and the error hierarchy.

#pragma once

#include <chrono>
#include <compare>
#include <stdexcept>
#include <string>
#include <string_view>

namespace rmtwarn {

/// Calendar date at day resolution. Ordered, hashable through `days_since_epoch`.
class Date {
public:
    Date() = default;
    explicit Date(std::chrono::sys_days days) : days_(days) {}
    Date(int year, unsigned month, unsigned day);

    /// Parses `YYYY-MM-DD`; throws DataError on anything else.
    static Date parse(std::string_view text);

    [[nodiscard]] std::string to_string() const;
    [[nodiscard]] std::chrono::sys_days sys_days() const { return days_; }
    [[nodiscard]] long days_since_epoch() const { return days_.time_since_epoch().count(); }
    [[nodiscard]] bool is_weekend() const;

    [[nodiscard]] Date plus_days(int n) const { return Date(days_ + std::chrono::days(n)); }

    friend auto operator<=>(const Date&, const Date&) = default;
    friend bool operator==(const Date&, const Date&) = default;

private:
    std::chrono::sys_days days_{};
};

/// Closed date interval [first, last].
struct DateRange {
    Date first;
    Date last;

    [[nodiscard]] bool contains(const Date& d) const { return first <= d && d <= last; }
};

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input data (unparseable rows, bad prices, empty calendars).
class DataError : public Error {
public:
    using Error::Error;
};

/// Not enough dated observations for a rolling computation.
class InsufficientHistoryError : public Error {
public:
    using Error::Error;
};

/// An asset whose return row is (numerically) constant inside a window.
class DegenerateAssetError : public Error {
public:
    DegenerateAssetError(std::string ticker, const std::string& message)
        : Error(message), ticker_(std::move(ticker)) {}
    [[nodiscard]] const std::string& ticker() const { return ticker_; }

private:
    std::string ticker_;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace rmtwarn
