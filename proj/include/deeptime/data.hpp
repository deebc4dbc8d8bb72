#pragma once

#include <charconv>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "deeptime/datetime.hpp"
#include "deeptime/errors.hpp"
#include "deeptime/matrix.hpp"
#include "deeptime/tasks.hpp"

namespace deeptime::data {

using forecaster::Task;
using forecaster::TaskSet;
using numkit::Matrix;

struct Normalization {
    std::vector<double> mean;
    std::vector<double> std_dev;
};

struct TimeSeries {
    Matrix values; // T x m
    std::vector<DateTime> timestamps;
    std::string name;
    std::optional<Normalization> normalization;

    bool has_timestamps() const { return !timestamps.empty(); }
};

enum class TargetMode { kMultivariate, kUnivariateLast };

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::stringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_number(const std::string& cell, std::size_t line_no, std::size_t col) {
    const char* begin = cell.data();
    const char* end = begin + cell.size();
    while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
    while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end)
        throw ParseError("CSV parse error: non-numeric cell at row " + std::to_string(line_no) +
                         ", column " + std::to_string(col + 1));
    return value;
}

} // namespace detail

// Comma-separated, UTF-8, header row required. A first column named "date"
// carries timestamps; every other column is numeric. Rows keep file order
// (assumed chronological).
inline TimeSeries load_csv(const std::string& path,
                           TargetMode mode = TargetMode::kMultivariate) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open file: " + path);

    std::string line;
    if (!std::getline(in, line)) throw EmptyFile("empty file: " + path);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::vector<std::string> header = detail::split_csv_line(line);
    if (header.empty()) throw EmptyFile("empty header: " + path);

    std::string first = header.front();
    while (!first.empty() && (first.back() == ' ' || first.back() == '\r')) first.pop_back();
    const bool has_date = first == "date" || first == "Date" || first == "DATE";
    const std::size_t value_cols = header.size() - (has_date ? 1 : 0);
    if (value_cols == 0) throw ParseError("no value columns in " + path);

    std::vector<double> flat;
    std::vector<DateTime> stamps;
    std::size_t line_no = 1;
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::vector<std::string> cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError("CSV parse error: row " + std::to_string(line_no) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()));
        std::size_t c = 0;
        if (has_date) {
            const auto stamp = parse_timestamp(cells[0]);
            if (!stamp)
                throw ParseError("CSV parse error: bad timestamp at row " +
                                 std::to_string(line_no) + ", column 1");
            stamps.push_back(*stamp);
            c = 1;
        }
        for (; c < cells.size(); ++c)
            flat.push_back(detail::parse_number(cells[c], line_no, c));
        ++rows;
    }
    if (rows == 0) throw EmptyFile("no data rows in " + path);

    TimeSeries ts;
    ts.name = path;
    ts.timestamps = std::move(stamps);
    ts.values = Matrix(rows, value_cols);
    std::copy(flat.begin(), flat.end(), ts.values.data());

    if (mode == TargetMode::kUnivariateLast && value_cols > 1)
        ts.values = numkit::cols_block(ts.values, value_cols - 1, 1);
    return ts;
}

struct SplitSpec {
    double train_frac = 0.7;
    double val_frac = 0.1;
    double test_frac = 0.2;

    static SplitSpec standard() { return {0.7, 0.1, 0.2}; }
    static SplitSpec ettm2() { return {0.6, 0.2, 0.2}; }

    void validate() const {
        if (train_frac < 0.0 || val_frac < 0.0 || test_frac < 0.0 ||
            std::abs(train_frac + val_frac + test_frac - 1.0) > 1e-9)
            throw InvalidConfig("SplitSpec: fractions must be >= 0 and sum to 1");
    }
};

struct Splits {
    TimeSeries train, val, test;
};

namespace detail {

inline TimeSeries slice(const TimeSeries& ts, std::size_t start, std::size_t count) {
    TimeSeries out;
    out.name = ts.name;
    out.values = numkit::rows_block(ts.values, start, count);
    out.normalization = ts.normalization;
    if (ts.has_timestamps())
        out.timestamps.assign(ts.timestamps.begin() + static_cast<long>(start),
                              ts.timestamps.begin() + static_cast<long>(start + count));
    return out;
}

} // namespace detail

// Contiguous prefix / middle / suffix split by row count: floor for train and
// validation, remainder to test. Never shuffles.
inline Splits chrono_split(const TimeSeries& ts, const SplitSpec& spec) {
    spec.validate();
    const std::size_t total = ts.values.rows();
    const std::size_t n_train = static_cast<std::size_t>(
        std::floor(static_cast<double>(total) * spec.train_frac));
    const std::size_t n_val =
        static_cast<std::size_t>(std::floor(static_cast<double>(total) * spec.val_frac));
    if (n_train + n_val > total) throw InvalidConfig("chrono_split: fractions overflow series");
    Splits out;
    out.train = detail::slice(ts, 0, n_train);
    out.val = detail::slice(ts, n_train, n_val);
    out.test = detail::slice(ts, n_train + n_val, total - n_train - n_val);
    return out;
}

// Per-channel mean and population standard deviation from the train split
// only. Zero-variance channels get std 1 with a warning.
inline Normalization fit_standardizer(const TimeSeries& train) {
    const Matrix& v = train.values;
    if (v.rows() == 0) throw InvalidConfig("fit_standardizer: empty train split");
    Normalization norm;
    norm.mean.resize(v.cols());
    norm.std_dev.resize(v.cols());
    for (std::size_t c = 0; c < v.cols(); ++c) {
        double mean = 0.0;
        for (std::size_t r = 0; r < v.rows(); ++r) mean += v(r, c);
        mean /= static_cast<double>(v.rows());
        double var = 0.0;
        for (std::size_t r = 0; r < v.rows(); ++r) {
            const double d = v(r, c) - mean;
            var += d * d;
        }
        var /= static_cast<double>(v.rows());
        norm.mean[c] = mean;
        if (var > 0.0) {
            norm.std_dev[c] = std::sqrt(var);
        } else {
            std::cerr << "warning: channel " << c << " has zero variance; std set to 1\n";
            norm.std_dev[c] = 1.0;
        }
    }
    return norm;
}

inline Matrix standardize(const Matrix& values, const Normalization& norm) {
    if (values.cols() != norm.mean.size())
        throw ShapeMismatch("standardize: channel count mismatch");
    Matrix out = values;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
            out(r, c) = (out(r, c) - norm.mean[c]) / norm.std_dev[c];
    return out;
}

inline Matrix unstandardize(const Matrix& values, const Normalization& norm) {
    if (values.cols() != norm.mean.size())
        throw ShapeMismatch("unstandardize: channel count mismatch");
    Matrix out = values;
    for (std::size_t r = 0; r < out.rows(); ++r)
        for (std::size_t c = 0; c < out.cols(); ++c)
            out(r, c) = out(r, c) * norm.std_dev[c] + norm.mean[c];
    return out;
}

inline TimeSeries apply_standardizer(TimeSeries ts, const Normalization& norm) {
    ts.values = standardize(ts.values, norm);
    ts.normalization = norm;
    return ts;
}

// Stride-1 sliding-window tasks over a series: one task per horizon start
// t in [L, T-H], so T-L-H+1 tasks, all strictly inside the series.
inline TaskSet windows(const TimeSeries& ts, std::size_t lookback_len, std::size_t horizon_len,
                       std::shared_ptr<const Matrix> extra_features = nullptr) {
    auto values = std::make_shared<Matrix>(ts.values);
    return TaskSet::sliding_windows(std::move(values), std::move(extra_features), lookback_len,
                                    horizon_len);
}

} // namespace deeptime::data
