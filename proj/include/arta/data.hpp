#pragma once

// Time-series ingestion: CSV load/save, train/test splitting, z-score
// normalization with train-split statistics, sliding windows and the
// window-local per-sensor baseline.

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "arta/tensor.hpp"

namespace arta {

// Row-major N x F sensor matrix with optional binary point labels.
struct TimeSeries {
    int n = 0, f = 0;
    std::vector<float> values;        // n * f
    std::vector<std::uint8_t> labels; // empty or length n
    std::vector<std::string> sensor_names;

    bool has_labels() const { return !labels.empty(); }
    float& at(int t, int s) { return values[static_cast<std::size_t>(t) * f + s]; }
    float at(int t, int s) const { return values[static_cast<std::size_t>(t) * f + s]; }
};

struct Window {
    Tensor values;  // T x F
    int start_index = 0;
};

namespace detail {

inline std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

inline std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        if (pos == std::string::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, pos - start)));
        start = pos + 1;
    }
    return out;
}

inline double parse_number(const std::string& cell, int row, int col) {
    double v = 0.0;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    auto res = std::from_chars(first, last, v);
    if (res.ec != std::errc{} || res.ptr != last)
        throw ParseError("non-numeric cell at row " + std::to_string(row) + ", column " +
                         std::to_string(col) + ": '" + cell + "'");
    return v;
}

}  // namespace detail

// Comment lines (leading '#') are skipped so our own CSV outputs, which
// carry a seed echo, round-trip through the loader.
inline TimeSeries load_csv(const std::string& path, bool expect_labels) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    std::string line;
    int lineno = 0;
    do {
        if (!std::getline(in, line)) throw ParseError(path + ": empty file");
        ++lineno;
    } while (!line.empty() && line[0] == '#');
    auto header = detail::split_csv_line(line);
    if (header.empty()) throw ParseError(path + ": missing header row");

    int label_col = -1;
    TimeSeries ts;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (detail::lower(header[i]) == "label") {
            if (label_col >= 0) throw ParseError(path + ": duplicate label column");
            label_col = static_cast<int>(i);
        } else {
            ts.sensor_names.push_back(header[i]);
        }
    }
    if (expect_labels && label_col < 0) throw ConfigError(path + ": no label column found");
    ts.f = static_cast<int>(ts.sensor_names.size());
    if (ts.f < 1) throw ParseError(path + ": no sensor columns");

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto cells = detail::split_csv_line(line);
        if (cells.size() != header.size())
            throw ParseError(path + ": ragged row at line " + std::to_string(lineno) + " (" +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(header.size()) + ")");
        int si = 0;
        for (std::size_t i = 0; i < cells.size(); ++i) {
            double v = detail::parse_number(cells[i], lineno, static_cast<int>(i) + 1);
            if (static_cast<int>(i) == label_col) {
                if (v != 0.0 && v != 1.0)
                    throw ParseError(path + ": label must be 0 or 1 at line " + std::to_string(lineno));
                ts.labels.push_back(static_cast<std::uint8_t>(v));
            } else {
                ts.values.push_back(static_cast<float>(v));
                ++si;
            }
        }
        (void)si;
        ++ts.n;
    }
    if (ts.n < 1) throw ParseError(path + ": no data rows");
    return ts;
}

// %.9g preserves float32 exactly, so load -> save -> load is bit-stable.
inline void save_csv(const TimeSeries& ts, const std::string& path,
                     const std::string& comment = "") {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write file: " + path);
    if (!comment.empty()) out << "# " << comment << "\n";
    for (int s = 0; s < ts.f; ++s) out << (s ? "," : "") << ts.sensor_names[static_cast<std::size_t>(s)];
    if (ts.has_labels()) out << ",label";
    out << "\n";
    char buf[64];
    for (int t = 0; t < ts.n; ++t) {
        for (int s = 0; s < ts.f; ++s) {
            std::snprintf(buf, sizeof buf, "%.9g", static_cast<double>(ts.at(t, s)));
            out << (s ? "," : "") << buf;
        }
        if (ts.has_labels()) out << "," << static_cast<int>(ts.labels[static_cast<std::size_t>(t)]);
        out << "\n";
    }
    if (!out) throw ConfigError("write failed: " + path);
}

inline std::int64_t window_count(std::int64_t n, int t, int stride) {
    if (t > n) throw ConfigError("window length exceeds series length");
    if (stride < 1) throw ConfigError("stride must be >= 1");
    return (n - t) / stride + 1;
}

inline std::vector<Window> make_windows(const TimeSeries& ts, int t, int stride) {
    std::int64_t count = window_count(ts.n, t, stride);
    std::vector<Window> out;
    out.reserve(static_cast<std::size_t>(count));
    for (std::int64_t k = 0; k < count; ++k) {
        int start = static_cast<int>(k) * stride;
        Window w;
        w.start_index = start;
        w.values = Tensor::zeros({t, ts.f});
        std::copy(ts.values.begin() + static_cast<std::ptrdiff_t>(start) * ts.f,
                  ts.values.begin() + static_cast<std::ptrdiff_t>(start + t) * ts.f,
                  w.values.data.begin());
        out.push_back(std::move(w));
    }
    return out;
}

// Per-sensor z-score statistics fitted on the training split only.
struct Normalizer {
    std::vector<double> mean, sigma;  // sigma floored at 1e-8

    static Normalizer fit(const TimeSeries& ts, int row_begin, int row_end) {
        if (row_end <= row_begin) throw ConfigError("normalizer: empty fit range");
        Normalizer nz;
        nz.mean.assign(static_cast<std::size_t>(ts.f), 0.0);
        nz.sigma.assign(static_cast<std::size_t>(ts.f), 0.0);
        double count = static_cast<double>(row_end - row_begin);
        for (int t = row_begin; t < row_end; ++t)
            for (int s = 0; s < ts.f; ++s) nz.mean[static_cast<std::size_t>(s)] += ts.at(t, s);
        for (auto& m : nz.mean) m /= count;
        for (int t = row_begin; t < row_end; ++t)
            for (int s = 0; s < ts.f; ++s) {
                double d = ts.at(t, s) - nz.mean[static_cast<std::size_t>(s)];
                nz.sigma[static_cast<std::size_t>(s)] += d * d;
            }
        for (auto& v : nz.sigma) v = std::max(std::sqrt(v / count), 1e-8);
        return nz;
    }

    static Normalizer fit(const TimeSeries& ts) { return fit(ts, 0, ts.n); }

    void apply(TimeSeries& ts) const {
        if (static_cast<int>(mean.size()) != ts.f) throw ConfigError("normalizer: sensor count mismatch");
        for (int t = 0; t < ts.n; ++t)
            for (int s = 0; s < ts.f; ++s)
                ts.at(t, s) = static_cast<float>((ts.at(t, s) - mean[static_cast<std::size_t>(s)]) /
                                                 sigma[static_cast<std::size_t>(s)]);
    }

    void invert(TimeSeries& ts) const {
        for (int t = 0; t < ts.n; ++t)
            for (int s = 0; s < ts.f; ++s)
                ts.at(t, s) = static_cast<float>(static_cast<double>(ts.at(t, s)) *
                                                     sigma[static_cast<std::size_t>(s)] +
                                                 mean[static_cast<std::size_t>(s)]);
    }
};

// Fit on the training series, transform it and every other series with the
// same statistics.
inline Normalizer fit_apply_normalizer(TimeSeries& train, std::vector<TimeSeries*> others) {
    Normalizer nz = Normalizer::fit(train);
    nz.apply(train);
    for (TimeSeries* o : others) nz.apply(*o);
    return nz;
}

// Per-sensor temporal mean over the window, repeated across all T rows.
// Uses no data outside the window.
inline Tensor compute_baseline(const Window& w) {
    int t = w.values.rows(), f = w.values.cols();
    std::vector<double> mean(static_cast<std::size_t>(f), 0.0);
    for (int s = 0; s < t; ++s)
        for (int j = 0; j < f; ++j) mean[static_cast<std::size_t>(j)] += w.values.at(s, j);
    for (auto& m : mean) m /= static_cast<double>(t);
    Tensor b = Tensor::zeros({t, f});
    for (int s = 0; s < t; ++s)
        for (int j = 0; j < f; ++j) b.at(s, j) = static_cast<float>(mean[static_cast<std::size_t>(j)]);
    return b;
}

// First split_fraction of the series is the (assumed normal) training
// region; the remainder is the evaluation region.
inline int split_point(const TimeSeries& ts, double split_fraction) {
    if (split_fraction <= 0.0 || split_fraction > 1.0)
        throw ConfigError("split_fraction must be in (0, 1]");
    return static_cast<int>(static_cast<double>(ts.n) * split_fraction);
}

inline TimeSeries slice(const TimeSeries& ts, int row_begin, int row_end) {
    TimeSeries out;
    out.f = ts.f;
    out.n = row_end - row_begin;
    out.sensor_names = ts.sensor_names;
    out.values.assign(ts.values.begin() + static_cast<std::ptrdiff_t>(row_begin) * ts.f,
                      ts.values.begin() + static_cast<std::ptrdiff_t>(row_end) * ts.f);
    if (ts.has_labels())
        out.labels.assign(ts.labels.begin() + row_begin, ts.labels.begin() + row_end);
    return out;
}

}  // namespace arta
