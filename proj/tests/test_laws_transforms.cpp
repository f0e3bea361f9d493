#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "oracles.hpp"
#include "rmtgrid/ensembles.hpp"
#include "rmtgrid/free_probability.hpp"
#include "rmtgrid/spectral_laws.hpp"
#include "rmtgrid/transforms.hpp"

using namespace rmtgrid;
using namespace std::complex_literals;

namespace {

SpectrumSample gue_scaled(std::size_t n, std::uint64_t seed) {
    auto s = eig_hermitian(sample_gue({EnsembleKind::gue, n, 0, 1.0, seed}));
    for (double& v : s.values) v /= std::sqrt(static_cast<double>(n));
    return s;
}

} // namespace

// ---------------------------------------------------------------- laws

TEST(Semicircle, DensityValuesAndMass) {
    EXPECT_NEAR(semicircle_density(0.0), 1.0 / std::numbers::pi, 1e-12);
    EXPECT_NEAR(semicircle_density(0.0), 0.318310, 1e-6);
    EXPECT_EQ(semicircle_density(2.0), 0.0);
    EXPECT_NEAR(quad_integrate([](double x) { return semicircle_density(x); }, -2, 2, 1e-10, EndpointRule::sqrt_edges),
                1.0, 1e-8);
    EXPECT_THROW(semicircle_density(0.0, 0.0), InputError);
}

TEST(Semicircle, MatchesElementaryFormulaAndSymmetry) {
    for (double s : {0.5, 1.0, 1.7})
        for (double x = -4.0; x <= 4.0; x += 0.137) {
            EXPECT_NEAR(semicircle_density(x, s), oracle::semicircle(x, s * s), 1e-13);
            EXPECT_EQ(semicircle_density(x, s), semicircle_density(-x, s));
        }
    for (double x = -2.1; x <= 2.1; x += 0.05) EXPECT_NEAR(semicircle_cdf(x), oracle::semicircle_cdf(x), 1e-13);
}

TEST(MarchenkoPastur, UnitRatioSupportAndShape) {
    const auto [a, b] = mp_edges(1.0);
    EXPECT_EQ(a, 0.0);
    EXPECT_EQ(b, 4.0);
    for (double x : {0.1, 1.0, 2.5, 3.9})
        EXPECT_NEAR(mp_density(x, 1.0), std::sqrt((4 - x) / x) / (2 * std::numbers::pi), 1e-13);
}

TEST(MarchenkoPastur, OutsideSupportAndEdges) {
    const auto [a, b] = mp_edges(0.5);
    EXPECT_EQ(mp_density(a - 0.1, 0.5), 0.0);
    EXPECT_EQ(mp_density(b + 0.1, 0.5), 0.0);
    EXPECT_EQ(mp_density(a, 0.5), 0.0);
    EXPECT_EQ(mp_density(b, 0.5), 0.0);
    EXPECT_NEAR(mp_cdf(b, 0.5), 1.0, 1e-6);
    for (double x = a; x < b; x += 0.05) EXPECT_NEAR(mp_density(x, 0.5), oracle::mp(x, 0.5), 1e-13);
}

TEST(MarchenkoPastur, CdfMonotoneWithAtom) {
    for (double c : {0.3, 1.0, 2.0}) {
        double prev = 0.0;
        const auto [a, b] = mp_edges(c);
        for (double x = -0.5; x <= b + 0.5; x += 0.02) {
            const double f = mp_cdf(x, c);
            EXPECT_GE(f, prev - 1e-12);
            EXPECT_LE(f, 1.0);
            prev = f;
        }
        EXPECT_NEAR(mp_cdf(b, c), 1.0, 1e-6);
        (void)a;
    }
    EXPECT_NEAR(mp_atom(2.0), 0.5, 1e-15);
    EXPECT_NEAR(mp_cdf(0.0, 2.0), 0.5, 1e-15);
    EXPECT_EQ(mp_atom(0.5), 0.0);
}

TEST(SingleRing, RadiiFromMoments) {
    auto [a, b] = single_ring_radii(1.0, 1.0);
    EXPECT_EQ(a, 1.0);
    EXPECT_EQ(b, 1.0);
    // Scaling the singular-value law by s divides the -2 moment by s^2 and multiplies the +2 moment by s^2.
    const double s = 1.7;
    auto [a2, b2] = single_ring_radii(0.8 / (s * s), 1.3 * s * s);
    auto [a1, b1] = single_ring_radii(0.8, 1.3);
    EXPECT_NEAR(a2, s * a1, 1e-14);
    EXPECT_NEAR(b2, s * b1, 1e-14);
    EXPECT_THROW(single_ring_radii(0.0, 1.0), InputError);
    EXPECT_THROW(single_ring_radii(1.0, INFINITY), InputError);
}

TEST(SingleRing, StandardizedConstructionInnerRadius) {
    // Singular values squared of the normalised data follow M-P(c); the ring
    // matrix is rescaled so the +2 moment is 1, giving a = sqrt(1 - c).
    const double c = 0.5;
    const double neg = mp_moment(-1.0, c);
    const double pos = mp_moment(1.0, c);
    const auto [a, b] = single_ring_radii(neg * pos, 1.0);
    EXPECT_NEAR(a, std::sqrt(1.0 - c), 1e-6);
    EXPECT_NEAR(a, 0.7071, 1e-4);
    EXPECT_EQ(b, 1.0);
}

TEST(Esd, TrivialSpectra) {
    const Esd one = esd_from_spectrum(make_real_spectrum({0.0}));
    EXPECT_EQ(one.cdf_at(-1e-9), 0.0);
    EXPECT_EQ(one.cdf_at(0.0), 1.0);
    const Esd two = esd_from_spectrum(make_real_spectrum({-1.0, 1.0}));
    EXPECT_EQ(two.cdf_at(0.0), 0.5);
    EXPECT_THROW(esd_from_values({}), InputError);
}

TEST(Esd, HistogramIntegratesToOneAndCdfEndsAtOne) {
    const auto s = gue_scaled(400, 30);
    const Esd e = esd_from_spectrum(s, 37);
    double mass = 0.0;
    for (std::size_t k = 0; k < e.bin_density.size(); ++k) {
        EXPECT_GE(e.bin_density[k], 0.0);
        mass += e.bin_density[k] * (e.bin_edges[k + 1] - e.bin_edges[k]);
    }
    EXPECT_NEAR(mass, 1.0, 1e-9);
    EXPECT_EQ(e.cdf.back(), 1.0);
    EXPECT_TRUE(std::is_sorted(e.cdf.begin(), e.cdf.end()));
}

TEST(Esd, GueHistogramMatchesSemicircle) {
    const Esd e = esd_from_spectrum(gue_scaled(1000, 31), 40);
    double worst = 0.0;
    for (std::size_t k = 0; k < e.bin_density.size(); ++k) {
        const double lo = e.bin_edges[k], hi = e.bin_edges[k + 1];
        const double expected = (semicircle_cdf(hi) - semicircle_cdf(lo)) / (hi - lo);
        worst = std::max(worst, std::abs(e.bin_density[k] - expected));
    }
    EXPECT_LT(worst, 0.05);
}

TEST(ConvergenceGap, ZeroForMatchingLawAndOraclePeak) {
    // Quantiles of the law: the step ESD sits within 1/N of the CDF everywhere.
    std::vector<double> q;
    const int n = 200;
    for (int i = 1; i <= n; ++i) {
        const double target = (i - 0.5) / n;
        double lo = -2, hi = 2;
        for (int it = 0; it < 80; ++it) {
            const double mid = 0.5 * (lo + hi);
            (semicircle_cdf(mid) < target ? lo : hi) = mid;
        }
        q.push_back(0.5 * (lo + hi));
    }
    const double gap = convergence_gap(esd_from_values(q), LawSpec::semicircle());
    EXPECT_NEAR(gap, 0.5 / n, 1e-9);

    const auto s = gue_scaled(300, 32);
    const double g = convergence_gap(esd_from_spectrum(s), LawSpec::semicircle());
    EXPECT_NEAR(g, oracle::ks_one_sample(s.values, oracle::semicircle_cdf), 1e-12);
}

TEST(ConvergenceGap, LogLogSlopeRecoversPowerLaw) {
    const std::vector<double> ns{100, 200, 400, 800};
    std::vector<double> gaps;
    for (double n : ns) gaps.push_back(3.0 / n);
    EXPECT_NEAR(loglog_slope(ns, gaps), -1.0, 1e-12);
}

TEST(DensityBound, ExactDensityGivesZeroAndEmptyIntervalThrows) {
    const auto law = LawSpec::semicircle();
    const auto r = density_bound_check([&](double x) { return law.density(x); }, 1000, law);
    EXPECT_EQ(r.max_abs_diff, 0.0);
    EXPECT_EQ(r.c_statistic, 0.0);
    EXPECT_THROW(density_bound_check([](double) { return 0.0; }, 1, law, 3.0), InputError);
    EXPECT_THROW(density_bound_check([](double) { return 0.0; }, 10, LawSpec::circular()), ContractViolation);
}

TEST(DensityBound, GueStatisticStableAcrossSeeds) {
    // The histogram statistic is a maximum of per-bin noise and varies several-fold
    // between seeds; the kernel estimate is bias-dominated and therefore stable.
    std::vector<double> cs;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto spectrum = gue_scaled(1000, 200 + seed);
        const auto hist = density_bound_check(spectrum, LawSpec::semicircle());
        EXPECT_TRUE(std::isfinite(hist.c_statistic));
        EXPECT_GT(hist.points, 0u);
        cs.push_back(density_bound_check(spectrum, LawSpec::semicircle(), 1.0, DensityEstimator::kernel).c_statistic);
    }
    const double m = oracle::mean(cs);
    for (double c : cs) EXPECT_LE(std::abs(c - m), 0.2 * m) << "C statistic " << c << " vs mean " << m;
}

TEST(Annulus, FractionCountsModuli) {
    const std::vector<cplx> v{0.5, 1.0i, 2.0, -0.9};
    EXPECT_EQ(fraction_in_annulus(v, 0.8, 1.0), 0.5);
    EXPECT_EQ(fraction_in_annulus(v, 0.8, 1.0, 0.3), 0.75);
    EXPECT_EQ(fraction_in_annulus(v, 0.0, 2.0), 1.0);
}

// ---------------------------------------------------------------- transforms

TEST(Stieltjes, HandEvaluableSpectra) {
    EXPECT_NEAR(std::abs(stieltjes_from_spectrum(make_real_spectrum({0.0}), -1.0i) - (-1.0i)), 0.0, 1e-15);
    EXPECT_NEAR(std::abs(stieltjes_from_spectrum(make_real_spectrum({-1.0, 1.0}), -1.0i) - (-0.5i)), 0.0, 1e-15);
    EXPECT_THROW(stieltjes_from_spectrum(make_real_spectrum({1.0}), 1.0), InputError);
}

TEST(Stieltjes, GueSpectrumMatchesClosedForm) {
    const auto g = CauchyEvaluator::from_spectrum(gue_scaled(2000, 33));
    const cplx z(2.0, -0.5);
    // Under the (x - z)^{-1} convention the closed form reads -(z - sqrt(z^2 - 4)) / 2 on this branch.
    const cplx closed = -0.5 * (z - std::sqrt(z - 2.0) * std::sqrt(z + 2.0));
    EXPECT_LT(std::abs(g.stieltjes(z) - closed), 0.02);
    EXPECT_LT(std::abs(g.stieltjes(z) - stieltjes_semicircle(z)), 0.02);
}

TEST(Stieltjes, ClosedFormsMatchQuadratureOfDensity) {
    for (cplx z : {cplx(0.3, 0.7), cplx(-1.5, 0.2), cplx(3.0, -0.4), cplx(0.0, -2.0)}) {
        const double re = quad_integrate([&](double x) { return (semicircle_density(x) / (x - z)).real(); }, -2, 2,
                                         1e-11, EndpointRule::sqrt_edges);
        const double im = quad_integrate([&](double x) { return (semicircle_density(x) / (x - z)).imag(); }, -2, 2,
                                         1e-11, EndpointRule::sqrt_edges);
        EXPECT_LT(std::abs(stieltjes_semicircle(z) - cplx(re, im)), 1e-8) << z;

        const auto [a, b] = mp_edges(0.5);
        const double mre = quad_integrate([&](double x) { return (oracle::mp(x, 0.5) / (x - z)).real(); }, a, b, 1e-11,
                                          EndpointRule::sqrt_edges);
        const double mim = quad_integrate([&](double x) { return (oracle::mp(x, 0.5) / (x - z)).imag(); }, a, b, 1e-11,
                                          EndpointRule::sqrt_edges);
        EXPECT_LT(std::abs(stieltjes_mp(z, 0.5) - cplx(mre, mim)), 1e-7) << z;
    }
}

TEST(Stieltjes, TailAndBranch) {
    const cplx z(0.0, 1e4);
    const cplx s = stieltjes_semicircle(z);
    EXPECT_NEAR(s.real(), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(s), 1e-4, 1e-10);
    const cplx m = stieltjes_mp(-1.0i, 1.0);
    EXPECT_TRUE(std::isfinite(std::abs(m)));
    EXPECT_LT(m.imag(), 0.0);
    const auto law = CauchyEvaluator::from_law(LawSpec::marchenko_pastur(2.0));
    for (double re = -3; re <= 8; re += 0.5)
        for (double im : {-1.0, -0.01, 0.01, 1.0}) {
            const cplx v = law.stieltjes(cplx(re, im));
            EXPECT_GT(v.imag() * im, 0.0);
        }
}

TEST(Stieltjes, BranchViolationIsReported) {
    const auto bad = CauchyEvaluator::tabulated([](cplx z) { return 1.0 / (z - 0.0); }, 0.0);
    EXPECT_THROW(bad.stieltjes(1.0i), ContractViolation);
}

TEST(Inversion, SemicircleAtZero) {
    const auto g = CauchyEvaluator::from_law(LawSpec::semicircle());
    EXPECT_NEAR(density_from_stieltjes(g, 0.0, 1e-4), 1.0 / std::numbers::pi, 1e-3);
    EXPECT_NEAR(density_from_stieltjes(g, 0.0), 1.0 / std::numbers::pi, 1e-4);
}

TEST(Inversion, PointMassPoissonPeakAndOffSupport) {
    const auto delta = CauchyEvaluator::from_spectrum(make_real_spectrum({0.0}));
    const double eps = 1e-3;
    EXPECT_NEAR(density_from_stieltjes(delta, 0.0, eps), 1.0 / (std::numbers::pi * eps), 1e-6);
    const auto mp = CauchyEvaluator::from_law(LawSpec::marchenko_pastur(0.5));
    EXPECT_LE(density_from_stieltjes(mp, mp_edges(0.5).first - 0.5, 1e-4), 1e-3);
    EXPECT_THROW(density_from_stieltjes(mp, 1.0, 0.0), InputError);
}

TEST(Inversion, SpectrumRoundTripIntegratesToOne) {
    const auto s = gue_scaled(200, 34);
    const auto g = CauchyEvaluator::from_spectrum(s);
    const double eps = 0.05;
    const double lo = -6, hi = 6;
    const double mass = oracle::midpoint([&](double x) { return density_from_stieltjes(g, x, eps); }, lo, hi, 6000);
    // Poisson-kernel tails beyond [lo, hi] carry O(eps) of the mass.
    EXPECT_NEAR(mass, 1.0, 5 * eps);
    EXPECT_GT(mass, 0.98);
}

TEST(RTransform, SemicircleAndPointMass) {
    const auto sc = CauchyEvaluator::from_law(LawSpec::semicircle());
    EXPECT_LT(std::abs(r_transform_numeric(sc, 0.1i) - 0.1i), 1e-6);
    const double m = 0.7;
    const auto atom = CauchyEvaluator::from_spectrum(make_real_spectrum({m}));
    for (cplx w : {cplx(0.05, 0.1), cplx(-0.1, -0.05), cplx(0.0, 0.2)})
        EXPECT_LT(std::abs(r_transform_numeric(atom, w) - m), 1e-8);
}

TEST(RTransform, ScalingProperty) {
    const double alpha = 2.0;
    const auto x = CauchyEvaluator::from_law(LawSpec::semicircle());
    // alpha X has Stieltjes transform s(z / alpha) / alpha.
    const auto ax = CauchyEvaluator::tabulated([](cplx z) { return stieltjes_semicircle(z / 2.0) / 2.0; }, 0.0);
    for (cplx w : {cplx(0.0, 0.1), cplx(0.05, 0.08), cplx(-0.03, -0.1)})
        EXPECT_LT(std::abs(r_transform_numeric(ax, w) - alpha * r_transform_numeric(x, alpha * w)), 1e-6) << w;
}

TEST(RTransform, BlueInvertsCauchy) {
    const auto mp = CauchyEvaluator::from_law(LawSpec::marchenko_pastur(0.5));
    for (cplx w : {cplx(0.1, 0.05), cplx(0.2, -0.1), cplx(-0.05, 0.15)}) {
        const cplx z = blue_transform(mp, w);
        EXPECT_LT(std::abs(mp.cauchy(z) - w), 1e-8);
    }
    EXPECT_THROW(blue_transform(mp, 0.0), InputError);
}

TEST(STransform, PointMassAndMarchenkoPastur) {
    const double m = 2.5;
    const auto atom = CauchyEvaluator::from_spectrum(make_real_spectrum({m}));
    EXPECT_LT(std::abs(s_transform_numeric(atom, cplx(0.1, 0.05)) - 1.0 / m), 1e-8);

    const double c = 0.5;
    const auto mp = CauchyEvaluator::from_law(LawSpec::marchenko_pastur(c));
    const cplx z = 0.2;
    const cplx s = s_transform_numeric(mp, z);
    EXPECT_LT(std::abs(s - 1.0 / (1.0 + c * z)), 1e-8);
    EXPECT_LT(std::abs(s * r_transform_numeric(mp, z * s) - 1.0), 1e-8);
    EXPECT_THROW(s_transform_numeric(CauchyEvaluator::from_law(LawSpec::semicircle()), z), InputError);
}

TEST(RAdditivity, SemicirclePairsAndShift) {
    const std::vector<cplx> pts{cplx(0, 0.1), cplx(0.05, 0.1), cplx(-0.05, 0.1), cplx(0.1, -0.05), cplx(0, -0.15)};
    const auto rep = verify_r_additivity(LawSpec::semicircle(), LawSpec::semicircle(), pts);
    EXPECT_LT(rep.max_error, 1e-6);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LT(std::abs(rep.r_sum[i] - 2.0 * pts[i]), 1e-6);

    const double m = 1.3;
    const auto atom = CauchyEvaluator::from_spectrum(make_real_spectrum({m}));
    const auto sc = CauchyEvaluator::from_law(LawSpec::semicircle());
    const auto shifted = free_additive_convolution(atom, sc);
    for (cplx z : {cplx(0.5, 0.3), cplx(-1.0, 1.0), cplx(2.0, -0.2)})
        EXPECT_LT(std::abs(shifted.stieltjes(z) - stieltjes_semicircle(z - m)), 1e-8) << z;
}

TEST(RAdditivity, SemicircleWithMarchenkoPastur) {
    const std::vector<cplx> pts{cplx(0, 0.1), cplx(0.05, 0.1), cplx(-0.05, 0.1), cplx(0.1, -0.05), cplx(0, -0.15)};
    const auto rep = verify_r_additivity(LawSpec::semicircle(), LawSpec::marchenko_pastur(0.5), pts);
    EXPECT_LT(rep.max_error, 1e-3);
}
