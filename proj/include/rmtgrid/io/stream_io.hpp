#pragma once

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <random>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <json.hpp>

#include "rmtgrid/core/errors.hpp"
#include "rmtgrid/core/linalg.hpp"

namespace rmtgrid::io {

/// Malformed stream input; the message carries the 1-based line number.
class ParseError : public InputError {
public:
    ParseError(std::size_t line, const std::string& what)
        : InputError("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct StreamMeta {
    double sampling_hz = 1.0;
    std::string units = "p.u.";
    std::string source;
};

/// Sensor stream: rows of `values` are sensors, columns are sample instants.
struct StreamData {
    std::vector<std::string> sensors;
    std::vector<double> times;
    RealMatrix values;
    StreamMeta meta;

    std::size_t sensor_count() const { return sensors.size(); }
    std::size_t sample_count() const { return times.size(); }
};

/// Shortest decimal that parses back to exactly `v`.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    if (res.ec != std::errc()) throw IoError("format_double: conversion failed");
    return std::string(buf, res.ptr);
}

/// Writes `content` next to `path` and renames it into place.
inline void write_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    const fs::path dir = path.has_parent_path() ? path.parent_path() : fs::path(".");
    std::random_device rd;
    const fs::path tmp = dir / ("." + path.filename().string() + ".tmp" + std::to_string(rd()));
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out) {
            std::error_code ec;
            fs::remove(tmp, ec);
            throw IoError("write to '" + tmp.string() + "' failed");
        }
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot move output into place at '" + path.string() + "'");
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

namespace detail {

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_number(std::string_view field, std::size_t line, std::size_t column) {
    field = trim(field);
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    double v = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), v);
    if (field.empty() || res.ec != std::errc() || res.ptr != field.data() + field.size())
        throw ParseError(line, "column " + std::to_string(column) + ": '" + std::string(field) + "' is not a number");
    if (!std::isfinite(v)) throw ParseError(line, "column " + std::to_string(column) + ": non-finite value");
    return v;
}

} // namespace detail

/// Parses `t,<sensor_1>,...,<sensor_N>` CSV text.
inline StreamData parse_stream_csv(std::string_view text) {
    StreamData data;
    std::vector<double> flat;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool header_seen = false;
    while (pos <= text.size()) {
        const std::size_t nl = text.find('\n', pos);
        std::string_view line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;
        line = detail::trim(line);
        if (line.empty()) {
            if (pos > text.size()) break;
            continue;
        }
        const auto fields = detail::split_csv_line(line);
        if (!header_seen) {
            if (detail::trim(fields.front()) != "t") throw ParseError(line_no, "header must start with column 't'");
            if (fields.size() < 2) throw ParseError(line_no, "header names no sensors");
            for (std::size_t k = 1; k < fields.size(); ++k) {
                const auto name = detail::trim(fields[k]);
                if (name.empty()) throw ParseError(line_no, "empty sensor name in column " + std::to_string(k + 1));
                data.sensors.emplace_back(name);
            }
            header_seen = true;
            continue;
        }
        if (fields.size() != data.sensors.size() + 1)
            throw ParseError(line_no, "expected " + std::to_string(data.sensors.size() + 1) + " columns, found " +
                                          std::to_string(fields.size()));
        const double t = detail::parse_number(fields[0], line_no, 1);
        if (!data.times.empty() && !(t > data.times.back()))
            throw ParseError(line_no, "time stamps must be strictly increasing");
        data.times.push_back(t);
        for (std::size_t k = 1; k < fields.size(); ++k) flat.push_back(detail::parse_number(fields[k], line_no, k + 1));
    }
    if (!header_seen) throw ParseError(1, "empty stream file");
    if (data.times.empty()) throw ParseError(line_no, "stream has a header but no samples");
    const auto n = static_cast<Eigen::Index>(data.sensors.size());
    const auto m = static_cast<Eigen::Index>(data.times.size());
    data.values.resize(n, m);
    for (Eigen::Index j = 0; j < m; ++j)
        for (Eigen::Index i = 0; i < n; ++i) data.values(i, j) = flat[static_cast<std::size_t>(j * n + i)];
    return data;
}

inline std::string format_stream_csv(const StreamData& data) {
    if (static_cast<std::size_t>(data.values.rows()) != data.sensors.size() ||
        static_cast<std::size_t>(data.values.cols()) != data.times.size())
        throw InputError("format_stream_csv: shape does not match sensors and times");
    std::string out = "t";
    for (const auto& s : data.sensors) out += "," + s;
    out += "\n";
    for (std::size_t j = 0; j < data.times.size(); ++j) {
        out += format_double(data.times[j]);
        for (Eigen::Index i = 0; i < data.values.rows(); ++i) {
            out += ',';
            out += format_double(data.values(i, static_cast<Eigen::Index>(j)));
        }
        out += '\n';
    }
    return out;
}

inline std::filesystem::path meta_path(const std::filesystem::path& csv) {
    return std::filesystem::path(csv.string() + ".meta.json");
}

inline nlohmann::json to_json(const StreamMeta& m) {
    return {{"sampling_hz", m.sampling_hz}, {"units", m.units}, {"source", m.source}};
}

inline StreamMeta meta_from_json(const nlohmann::json& j) {
    StreamMeta m;
    m.sampling_hz = j.value("sampling_hz", 1.0);
    m.units = j.value("units", std::string("p.u."));
    m.source = j.value("source", std::string());
    if (!(m.sampling_hz > 0.0)) throw InputError("metadata: sampling_hz must be > 0");
    return m;
}

/// Reads the CSV and, when present, its `<path>.meta.json` sidecar.
inline StreamData read_stream(const std::filesystem::path& path) {
    StreamData data = parse_stream_csv(read_file(path));
    const auto mp = meta_path(path);
    if (std::filesystem::exists(mp)) {
        try {
            data.meta = meta_from_json(nlohmann::json::parse(read_file(mp)));
        } catch (const nlohmann::json::exception& e) {
            throw InputError("metadata '" + mp.string() + "': " + e.what());
        }
    }
    return data;
}

inline void write_stream(const std::filesystem::path& path, const StreamData& data) {
    write_atomic(path, format_stream_csv(data));
    write_atomic(meta_path(path), to_json(data.meta).dump(2) + "\n");
}

/// Writes rows of numbers under a header as CSV.
inline std::string format_table(const std::vector<std::string>& header, const std::vector<std::vector<double>>& rows) {
    std::string out;
    for (std::size_t k = 0; k < header.size(); ++k) out += (k ? "," : "") + header[k];
    out += '\n';
    for (const auto& r : rows) {
        for (std::size_t k = 0; k < r.size(); ++k) {
            if (k) out += ',';
            out += format_double(r[k]);
        }
        out += '\n';
    }
    return out;
}

} // namespace rmtgrid::io
