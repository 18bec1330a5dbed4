#pragma once

#include <compare>
#include <cstdint>
#include <cstdlib>
#include <optional>
#include <string>
#include <string_view>

#include <fmt/format.h>

namespace microres {

/// Monetary amount in integer minor units (cents).
class Money {
public:
    constexpr Money() = default;
    static constexpr Money from_cents(std::int64_t cents) noexcept { return Money(cents); }
    static Money from_units(double units) noexcept {
        return Money(static_cast<std::int64_t>(units < 0 ? units * 100.0 - 0.5 : units * 100.0 + 0.5));
    }

    constexpr std::int64_t cents() const noexcept { return cents_; }
    constexpr double units() const noexcept { return static_cast<double>(cents_) / 100.0; }
    constexpr Money abs() const noexcept { return Money(cents_ < 0 ? -cents_ : cents_); }

    constexpr Money operator+(Money o) const noexcept { return Money(cents_ + o.cents_); }
    constexpr Money operator-(Money o) const noexcept { return Money(cents_ - o.cents_); }
    constexpr Money operator-() const noexcept { return Money(-cents_); }
    constexpr Money& operator+=(Money o) noexcept { cents_ += o.cents_; return *this; }
    constexpr Money& operator-=(Money o) noexcept { cents_ -= o.cents_; return *this; }
    constexpr auto operator<=>(const Money&) const = default;

private:
    constexpr explicit Money(std::int64_t c) : cents_(c) {}
    std::int64_t cents_ = 0;
};

/// Parses decimal text such as "4,087.61", "-3829.99" or "200". Grouping commas and
/// underscores are skipped; more than two decimals is rejected.
inline std::optional<Money> parse_money(std::string_view s) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s.empty()) return std::nullopt;
    bool neg = false;
    if (s.front() == '-' || s.front() == '+') {
        neg = s.front() == '-';
        s.remove_prefix(1);
    }
    std::int64_t whole = 0;
    std::int64_t frac = 0;
    int frac_digits = 0;
    bool seen_point = false;
    bool any_digit = false;
    for (char c : s) {
        if (c == ',' || c == '_') {
            if (seen_point) return std::nullopt;
            continue;
        }
        if (c == '.') {
            if (seen_point) return std::nullopt;
            seen_point = true;
            continue;
        }
        if (c < '0' || c > '9') return std::nullopt;
        any_digit = true;
        if (seen_point) {
            if (++frac_digits > 2) return std::nullopt;
            frac = frac * 10 + (c - '0');
        } else {
            if (whole > 90'000'000'000'000'000LL / 10) return std::nullopt;
            whole = whole * 10 + (c - '0');
        }
    }
    if (!any_digit) return std::nullopt;
    if (frac_digits == 1) frac *= 10;
    const std::int64_t cents = whole * 100 + frac;
    return Money::from_cents(neg ? -cents : cents);
}

/// Plain decimal text with two decimals, no grouping ("-3829.99").
inline std::string format_money(Money m) {
    const std::int64_t c = m.cents();
    const std::int64_t a = c < 0 ? -c : c;
    return fmt::format("{}{}.{:02d}", c < 0 ? "-" : "", a / 100, a % 100);
}

}  // namespace microres
