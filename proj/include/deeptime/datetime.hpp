#pragma once

#include <array>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "deeptime/errors.hpp"
#include "deeptime/matrix.hpp"

namespace deeptime::data {

using numkit::Matrix;

struct DateTime {
    int year = 1970;
    int month = 1; // 1..12
    int day = 1;   // 1..31
    int hour = 0;
    int minute = 0;
    int second = 0;

    friend bool operator==(const DateTime&, const DateTime&) = default;
};

namespace detail {

inline bool is_leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

inline int days_in_month(int y, int m) {
    static constexpr std::array<int, 12> lengths = {31, 28, 31, 30, 31, 30,
                                                    31, 31, 30, 31, 30, 31};
    return m == 2 && is_leap(y) ? 29 : lengths[m - 1];
}

// Days since 1970-01-01 (Howard Hinnant's civil-date algorithm).
inline long days_from_civil(int y, int m, int d) {
    y -= m <= 2;
    const long era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (m + (m > 2 ? -3 : 9)) + 2u) / 5u + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<long>(doe) - 719468;
}

inline int day_of_year(const DateTime& t) {
    int doy = t.day - 1;
    for (int m = 1; m < t.month; ++m) doy += days_in_month(t.year, m);
    return doy; // 0-based
}

// 0 = Monday .. 6 = Sunday.
inline int day_of_week(const DateTime& t) {
    const long days = days_from_civil(t.year, t.month, t.day);
    return static_cast<int>(((days % 7) + 10) % 7); // 1970-01-01 was a Thursday
}

} // namespace detail

inline long long epoch_seconds(const DateTime& t) {
    return detail::days_from_civil(t.year, t.month, t.day) * 86400LL + t.hour * 3600LL +
           t.minute * 60LL + t.second;
}

// Accepts "YYYY-MM-DD[ HH:MM[:SS]]" with '-' or '/' date separators and an
// optional 'T' before the time.
inline std::optional<DateTime> parse_timestamp(const std::string& text) {
    DateTime t;
    char sep1 = 0, sep2 = 0;
    int n = 0;
    const int fields = std::sscanf(text.c_str(), "%d%c%d%c%d%n", &t.year, &sep1, &t.month,
                                   &sep2, &t.day, &n);
    if (fields < 5 || sep1 != sep2 || (sep1 != '-' && sep1 != '/')) return std::nullopt;
    std::size_t pos = static_cast<std::size_t>(n);
    if (pos < text.size()) {
        if (text[pos] != ' ' && text[pos] != 'T') return std::nullopt;
        ++pos;
        int consumed = 0;
        const int time_fields = std::sscanf(text.c_str() + pos, "%d:%d:%d%n", &t.hour,
                                            &t.minute, &t.second, &consumed);
        if (time_fields < 2) return std::nullopt;
        if (time_fields == 2) {
            t.second = 0;
            std::sscanf(text.c_str() + pos, "%d:%d%n", &t.hour, &t.minute, &consumed);
        }
        if (pos + static_cast<std::size_t>(consumed) != text.size()) return std::nullopt;
    }
    if (t.month < 1 || t.month > 12 || t.day < 1 || t.day > detail::days_in_month(t.year, t.month) ||
        t.hour < 0 || t.hour > 23 || t.minute < 0 || t.minute > 59 || t.second < 0 ||
        t.second > 59)
        return std::nullopt;
    return t;
}

// Names of the nine calendar features, in column order.
inline const std::vector<std::string>& datetime_feature_names() {
    static const std::vector<std::string> names = {
        "quarter_of_year", "month_of_year",  "week_of_year",
        "day_of_year",     "day_of_month",   "day_of_week",
        "hour_of_day",     "minute_of_hour", "second_of_minute"};
    return names;
}

// n x 9 matrix of calendar features, each mapped to [0,1] over its calendar
// range. Callers select the subset appropriate to the sampling frequency.
inline Matrix datetime_features(const std::vector<DateTime>& stamps) {
    Matrix out(stamps.size(), 9);
    for (std::size_t i = 0; i < stamps.size(); ++i) {
        const DateTime& t = stamps[i];
        double* row = out.row_ptr(i);
        row[0] = static_cast<double>((t.month - 1) / 3) / 3.0;
        row[1] = static_cast<double>(t.month - 1) / 11.0;
        row[2] = std::min(static_cast<double>(detail::day_of_year(t) / 7), 52.0) / 52.0;
        row[3] = static_cast<double>(detail::day_of_year(t)) / 365.0;
        row[4] = static_cast<double>(t.day - 1) / 30.0;
        row[5] = static_cast<double>(detail::day_of_week(t)) / 6.0;
        row[6] = static_cast<double>(t.hour) / 23.0;
        row[7] = static_cast<double>(t.minute) / 59.0;
        row[8] = static_cast<double>(t.second) / 59.0;
    }
    return out;
}

// Column indices appropriate for a sampling period of whole minutes
// (drops second-of-minute); hourly data also drops minute-of-hour, etc.
inline std::vector<std::size_t> datetime_columns_for_period(int period_seconds) {
    std::vector<std::size_t> cols = {0, 1, 2, 3, 4, 5, 6, 7, 8};
    if (period_seconds >= 60) cols.pop_back();
    if (period_seconds >= 3600) cols.pop_back();
    return cols;
}

inline Matrix select_columns(const Matrix& m, const std::vector<std::size_t>& cols) {
    Matrix out(m.rows(), cols.size());
    for (std::size_t i = 0; i < m.rows(); ++i)
        for (std::size_t j = 0; j < cols.size(); ++j) {
            if (cols[j] >= m.cols()) throw InvalidConfig("select_columns: index out of range");
            out(i, j) = m(i, cols[j]);
        }
    return out;
}

} // namespace deeptime::data
