#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include <fmt/format.h>

#include "microres/error.hpp"

namespace microres {

/// Calendar date stored as days since 1970-01-01.
class Date {
public:
    constexpr Date() = default;
    constexpr explicit Date(std::int32_t serial) : serial_(serial) {}

    static Date from_ymd(int y, unsigned m, unsigned d) {
        const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m},
                                              std::chrono::day{d}};
        if (!ymd.ok()) throw Error(fmt::format("invalid date {:04d}-{:02d}-{:02d}", y, m, d));
        return Date(static_cast<std::int32_t>(
            std::chrono::sys_days{ymd}.time_since_epoch().count()));
    }

    constexpr std::int32_t serial() const noexcept { return serial_; }

    std::chrono::year_month_day ymd() const {
        return std::chrono::year_month_day{std::chrono::sys_days{std::chrono::days{serial_}}};
    }
    int year() const { return static_cast<int>(ymd().year()); }
    unsigned month() const { return static_cast<unsigned>(ymd().month()); }
    unsigned day() const { return static_cast<unsigned>(ymd().day()); }

    constexpr Date operator+(std::int32_t days) const noexcept { return Date(serial_ + days); }
    constexpr Date operator-(std::int32_t days) const noexcept { return Date(serial_ - days); }
    constexpr std::int32_t operator-(Date other) const noexcept { return serial_ - other.serial_; }
    constexpr auto operator<=>(const Date&) const = default;

private:
    std::int32_t serial_ = 0;
};

enum class DateFormat { Iso, DayMonthYear };

inline std::optional<DateFormat> parse_date_format(std::string_view s) {
    if (s == "iso" || s == "yyyy-mm-dd") return DateFormat::Iso;
    if (s == "dmy" || s == "dd-mm-yyyy") return DateFormat::DayMonthYear;
    return std::nullopt;
}

namespace detail {
inline bool parse_uint(std::string_view s, int& out) {
    if (s.empty() || s.size() > 4) return false;
    int v = 0;
    for (char c : s) {
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}
}  // namespace detail

/// Parses `yyyy-mm-dd` or `dd-mm-yyyy` (separator '-', '/' or '.').
inline std::optional<Date> parse_date(std::string_view s, DateFormat fmt) {
    std::string_view parts[3];
    std::size_t n = 0;
    std::size_t start = 0;
    for (std::size_t i = 0; i <= s.size(); ++i) {
        if (i == s.size() || s[i] == '-' || s[i] == '/' || s[i] == '.') {
            if (n == 3) return std::nullopt;
            parts[n++] = s.substr(start, i - start);
            start = i + 1;
        }
    }
    if (n != 3) return std::nullopt;
    int a = 0, b = 0, c = 0;
    if (!detail::parse_uint(parts[0], a) || !detail::parse_uint(parts[1], b) ||
        !detail::parse_uint(parts[2], c))
        return std::nullopt;
    int y = 0, m = 0, d = 0;
    if (fmt == DateFormat::Iso) {
        y = a, m = b, d = c;
    } else {
        d = a, m = b, y = c;
    }
    if (m < 1 || m > 12 || d < 1 || d > 31) return std::nullopt;
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month(m),
                                          std::chrono::day(d)};
    if (!ymd.ok()) return std::nullopt;
    return Date::from_ymd(y, static_cast<unsigned>(m), static_cast<unsigned>(d));
}

inline std::string format_date(Date d, DateFormat fmt) {
    if (fmt == DateFormat::Iso) return fmt::format("{:04d}-{:02d}-{:02d}", d.year(), d.month(), d.day());
    return fmt::format("{:02d}-{:02d}-{:04d}", d.day(), d.month(), d.year());
}

}  // namespace microres
