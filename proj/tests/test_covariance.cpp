#include <gtest/gtest.h>

#include <cmath>

#include <boost/math/distributions/chi_squared.hpp>

#include "oracles.hpp"
#include "rmtgrid/covariance_tests.hpp"

using namespace rmtgrid;

namespace {

RealMatrix gaussian(Eigen::Index p, Eigen::Index n, std::uint64_t seed, double sd = 1.0) {
    Rng rng(seed);
    return rng.gaussian_matrix(p, n, sd);
}

double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

} // namespace

TEST(TraceEstimator, SmallIntegerMatrixMatchesEnumeration) {
    RealMatrix z(2, 4);
    z << 1, -2, 0, 3, 2, 1, -1, 1;
    EXPECT_LE(rel_err(trace_sq_estimator(z), oracle::trace_sq_bruteforce(z)), 1e-12);
    RealMatrix y(2, 4);
    y << 0, 1, 1, -2, 3, 0, -1, 2;
    EXPECT_LE(rel_err(cross_trace_estimator(z, y), oracle::cross_trace_bruteforce(z, y)), 1e-12);
}

TEST(TraceEstimator, FastFormsEqualEnumerationOnRandomInstances) {
    Rng pick(100);
    for (int inst = 0; inst < 200; ++inst) {
        const auto p = static_cast<Eigen::Index>(1 + pick.next() % 4);
        const auto n = static_cast<Eigen::Index>(4 + pick.next() % 5);
        const RealMatrix zs = gaussian(p, n, 1000 + inst);
        const RealMatrix zt = gaussian(p, n, 5000 + inst, 1.5);
        const double a = trace_sq_estimator(zs), ab = oracle::trace_sq_bruteforce(zs);
        const double c = cross_trace_estimator(zs, zt), cb = oracle::cross_trace_bruteforce(zs, zt);
        EXPECT_LE(std::abs(a - ab), 1e-9 * std::max(1.0, std::abs(ab))) << "p=" << p << " n=" << n;
        EXPECT_LE(std::abs(c - cb), 1e-9 * std::max(1.0, std::abs(cb))) << "p=" << p << " n=" << n;
    }
}

TEST(TraceEstimator, RotationInvariance) {
    const RealMatrix z = gaussian(6, 12, 7);
    const RealMatrix q = oracle::random_orthogonal(6, 8);
    EXPECT_LE(rel_err(trace_sq_estimator(q * z), trace_sq_estimator(z)), 1e-9);
    const RealMatrix y = gaussian(6, 12, 9);
    EXPECT_LE(rel_err(cross_trace_estimator(q * z, q * y), cross_trace_estimator(z, y)), 1e-9);
}

TEST(TraceEstimator, Unbiasedness) {
    std::vector<double> a, c;
    for (std::uint64_t s = 0; s < 500; ++s) {
        a.push_back(trace_sq_estimator(gaussian(20, 30, 2 * s)));
        c.push_back(cross_trace_estimator(gaussian(20, 30, 2 * s), gaussian(20, 30, 2 * s + 1)));
    }
    EXPECT_NEAR(oracle::mean(a), 20.0, 3 * oracle::sd(a) / std::sqrt(500.0));
    EXPECT_NEAR(oracle::mean(c), 20.0, 3 * oracle::sd(c) / std::sqrt(500.0));
}

TEST(TraceEstimator, SameWindowCrossEqualsTraceEstimate) {
    const RealMatrix z = gaussian(10, 30, 40);
    const RealMatrix w = gaussian(10, 30, 41);
    // Cross estimator on two equal-law windows tracks A within sampling noise.
    EXPECT_NEAR(cross_trace_estimator(z, w), trace_sq_estimator(z), 6.0);
}

TEST(TraceEstimator, Preconditions) {
    EXPECT_THROW(trace_sq_estimator(gaussian(3, 3, 1)), InputError);
    EXPECT_THROW(cross_trace_estimator(gaussian(3, 5, 1), gaussian(4, 5, 2)), InputError);
}

TEST(PairwiseDistance, SelfDistanceSymmetryAndMean) {
    // Identical windows do not give exactly 0: the cross estimator treats its
    // arguments as independent samples and keeps the i = j terms.
    const RealMatrix z = gaussian(8, 20, 50);
    const RealMatrix y = gaussian(8, 20, 51);
    EXPECT_NEAR(pairwise_distance(z, y), pairwise_distance(y, z), 1e-10);

    std::vector<double> v;
    for (std::uint64_t s = 0; s < 500; ++s) v.push_back(pairwise_distance(gaussian(10, 30, 3 * s), gaussian(10, 30, 3 * s + 1, 2.0)));
    EXPECT_NEAR(oracle::mean(v), 90.0, 9.0);

    std::vector<double> h0;
    for (std::uint64_t s = 0; s < 500; ++s) h0.push_back(pairwise_distance(gaussian(10, 30, 7 * s), gaussian(10, 30, 7 * s + 1)));
    EXPECT_NEAR(oracle::mean(h0), 0.0, 3 * oracle::sd(h0) / std::sqrt(500.0));
}

TEST(Threshold, NormalQuantile) {
    EXPECT_NEAR(fap_threshold(0.5), 0.0, 1e-15);
    EXPECT_NEAR(fap_threshold(0.05), 1.6449, 1e-4);
    for (double a : {1e-6, 0.01, 0.05, 0.3, 0.9}) EXPECT_NEAR(q_function(fap_threshold(a)), a, 1e-10);
    EXPECT_THROW(fap_threshold(0.0), InputError);
    EXPECT_THROW(fap_threshold(1.0), InputError);
}

TEST(Pooled, TwoWindowReduction) {
    WindowedStream s;
    s.windows = {gaussian(5, 20, 60), gaussian(5, 20, 61)};
    const auto rep = pooled_statistic(s);
    EXPECT_NEAR(rep.v1, rep.v_st(0, 1), 1e-12);
    EXPECT_NEAR(rep.v1, pairwise_distance(s.windows[0], s.windows[1]), 1e-9);
    EXPECT_EQ(rep.decision == Decision::H1, rep.r_statistic > rep.threshold);
}

TEST(Pooled, DegenerateWindowExcluded) {
    WindowedStream s;
    s.windows = {gaussian(5, 20, 62), RealMatrix::Zero(5, 20), gaussian(5, 20, 63)};
    const auto rep = pooled_statistic(s);
    ASSERT_EQ(rep.excluded, (std::vector<std::size_t>{1}));
    EXPECT_FALSE(rep.notes.empty());
    EXPECT_TRUE(std::isnan(rep.v_st(0, 1)));
    EXPECT_NEAR(rep.v1, rep.v_st(0, 2), 1e-12);
}

TEST(Pooled, DecisionMonotoneInAlpha) {
    for (std::uint64_t seed = 0; seed < 30; ++seed) {
        const auto stream = sample_stream({}, CovarianceAlternative::scaled_window({}, 2, 1.3), seed);
        bool h1 = false;
        for (double a : {0.001, 0.01, 0.05, 0.1, 0.3}) {
            const bool now = pooled_statistic(stream, a).decision == Decision::H1;
            EXPECT_TRUE(!h1 || now) << "alpha " << a;
            h1 = now;
        }
    }
}

TEST(Pooled, WindowingFromSeries) {
    const RealMatrix series = gaussian(4, 100, 70);
    const auto s = make_windowed_stream(series, 3, 20, 10);
    EXPECT_EQ(s.q(), 3u);
    EXPECT_EQ(s.windows[1], series.middleCols(30, 20));
    EXPECT_EQ(s.timestamps[2].first, 50.0);
    EXPECT_THROW(make_windowed_stream(series, 5, 20, 10), InputError);
    EXPECT_THROW(make_windowed_stream(series, 1, 20), InputError);
}

TEST(Calibration, FalseAlarmAndPower) {
    const TestConfig cfg;  // p = 34, n_g = 50, q = 5
    const double fap = detection_rate_estimate(cfg, CovarianceAlternative::null_hypothesis(), 1000, 80);
    EXPECT_GE(fap, 0.03);
    EXPECT_LE(fap, 0.08);
    const double dr = detection_rate_estimate(cfg, CovarianceAlternative::scaled_window(cfg, 2, 2.0), 200, 81);
    EXPECT_GE(dr, 0.9);
    EXPECT_THROW(detection_rate_estimate(cfg, {}, 0, 1), InputError);
}

namespace {

WindowedStream with_row_anomaly(std::uint64_t seed, const std::vector<Eigen::Index>& rows, double sd) {
    TestConfig cfg;
    auto s = sample_stream(cfg, CovarianceAlternative::null_hypothesis(), seed);
    for (auto r : rows) s.windows[2].row(r) *= sd;
    return s;
}

} // namespace

TEST(Localization, SingleInjectedRowRanksFirst) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed)
        hits += localize_sensitive_sensors(with_row_anomaly(seed, {17}, 3.0), 2).order.front() == 17;
    EXPECT_GE(hits, 95);
}

TEST(Localization, TwoInjectedRowsFillTopTwo) {
    int hits = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto r = localize_sensitive_sensors(with_row_anomaly(1000 + seed, {16, 17}, 3.0), 2);
        const std::vector<std::size_t> top(r.order.begin(), r.order.begin() + 2);
        hits += std::count(top.begin(), top.end(), 16u) && std::count(top.begin(), top.end(), 17u);
    }
    EXPECT_GE(hits, 90);
}

TEST(Localization, NullRankingUniform) {
    const std::size_t p = 34, seeds = 680;
    std::vector<double> counts(p, 0.0);
    for (std::uint64_t seed = 0; seed < seeds; ++seed)
        counts[localize_sensitive_sensors(with_row_anomaly(5000 + seed, {}, 1.0)).order.front()] += 1.0;
    const double expected = static_cast<double>(seeds) / p;
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - expected) * (c - expected) / expected;
    const double pvalue = 1.0 - boost::math::cdf(boost::math::chi_squared(p - 1.0), chi2);
    EXPECT_GT(pvalue, 0.01) << "chi2 = " << chi2;
    EXPECT_THROW(localize_sensitive_sensors(sample_stream({1, 50, 5, 0.05}, {}, 1)), InputError);
}
