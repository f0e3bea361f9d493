#pragma once

#include <cmath>
#include <string>
#include <vector>

#include <json.hpp>

#include "rmtgrid/covariance_tests.hpp"
#include "rmtgrid/io/stream_io.hpp"
#include "rmtgrid/sa_pipeline.hpp"

namespace rmtgrid::io {

/// NaN and infinities have no JSON form; they serialise as null.
inline nlohmann::json number_or_null(double v) {
    return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const TestReport& r) {
    nlohmann::json v_st = nlohmann::json::array();
    for (Eigen::Index i = 0; i < r.v_st.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < r.v_st.cols(); ++j) row.push_back(number_or_null(r.v_st(i, j)));
        v_st.push_back(std::move(row));
    }
    return {
        {"v1", number_or_null(r.v1)},
        {"sigma_v1", number_or_null(r.sigma_v1)},
        {"r_statistic", number_or_null(r.r_statistic)},
        {"threshold", number_or_null(r.threshold)},
        {"alpha", r.alpha},
        {"decision", to_string(r.decision)},
        {"trace_estimates", r.a},
        {"v_st", std::move(v_st)},
        {"excluded_windows", r.excluded},
        {"notes", r.notes},
    };
}

inline nlohmann::json to_json(const Stage& s) {
    return {
        {"t_begin", s.t_begin},
        {"t_end", s.t_end},
        {"first_window", s.first},
        {"last_window", s.last},
        {"length", s.length()},
        {"type", to_string(s.type)},
    };
}

inline nlohmann::json to_json(const std::vector<Stage>& stages) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& s : stages) out.push_back(to_json(s));
    return out;
}

/// One indicator value of one window, as written to the indicator CSV.
struct IndicatorRow {
    double t_end = 0.0;
    std::string name;
    double value = 0.0;
    double ratio = NAN;
    bool flag = false;
};

inline std::string format_indicator_csv(const std::vector<IndicatorRow>& rows) {
    std::string out = "t_end,name,value,ratio,flag\n";
    for (const auto& r : rows) {
        out += format_double(r.t_end) + "," + r.name + "," + format_double(r.value) + ",";
        if (std::isfinite(r.ratio)) out += format_double(r.ratio);
        out += r.flag ? ",1\n" : ",0\n";
    }
    return out;
}

} // namespace rmtgrid::io
