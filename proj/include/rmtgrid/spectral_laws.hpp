#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <numbers>
#include <string>
#include <utility>
#include <vector>

#include "rmtgrid/core/errors.hpp"
#include "rmtgrid/core/linalg.hpp"
#include "rmtgrid/core/quadrature.hpp"

namespace rmtgrid {

// ---------------------------------------------------------------------------
// Closed-form limit laws
// ---------------------------------------------------------------------------

/// Semicircle density of variance sigma^2, supported on [-2 sigma, 2 sigma].
inline double semicircle_density(double x, double sigma = 1.0) {
    if (!(sigma > 0.0)) throw InputError("semicircle_density: sigma must be > 0");
    const double r2 = 4.0 * sigma * sigma - x * x;
    if (r2 <= 0.0) return 0.0;
    return std::sqrt(r2) / (2.0 * std::numbers::pi * sigma * sigma);
}

inline double semicircle_cdf(double x, double sigma = 1.0) {
    if (!(sigma > 0.0)) throw InputError("semicircle_cdf: sigma must be > 0");
    const double u = x / sigma;
    if (u <= -2.0) return 0.0;
    if (u >= 2.0) return 1.0;
    return 0.5 + u * std::sqrt(4.0 - u * u) / (4.0 * std::numbers::pi) + std::asin(u / 2.0) / std::numbers::pi;
}

/// Support edges a = (1 - sqrt c)^2, b = (1 + sqrt c)^2 of the Marchenko-Pastur law.
inline std::pair<double, double> mp_edges(double c) {
    if (!(c > 0.0)) throw InputError("Marchenko-Pastur: c must be > 0");
    const double r = std::sqrt(c);
    return {(1.0 - r) * (1.0 - r), (1.0 + r) * (1.0 + r)};
}

/// Mass of the point at zero, (1 - 1/c)^+.
inline double mp_atom(double c) {
    if (!(c > 0.0)) throw InputError("Marchenko-Pastur: c must be > 0");
    return std::max(0.0, 1.0 - 1.0 / c);
}

/// Absolutely continuous part of the eigenvalue density of W = X X^T / T with
/// c = p / T and unit-variance entries. The atom at zero (c > 1) is reported
/// by mp_atom and included by mp_cdf.
inline double mp_density(double x, double c) {
    const auto [a, b] = mp_edges(c);
    if (x <= a || x >= b || x <= 0.0) return 0.0;
    return std::sqrt((x - a) * (b - x)) / (2.0 * std::numbers::pi * c * x);
}

inline double mp_cdf(double x, double c) {
    const auto [a, b] = mp_edges(c);
    const double atom = mp_atom(c);
    if (x < 0.0) return 0.0;
    if (x <= a) return atom;
    if (x >= b) return 1.0;
    const double body = quad_integrate([c](double u) { return mp_density(u, c); }, a, x, 1e-11,
                                       EndpointRule::sqrt_edges);
    return std::min(1.0, atom + body);
}

/// Radii of the single-ring annulus: a = (int x^-2 dTheta)^(-1/2), b = (int x^2 dTheta)^(1/2).
inline std::pair<double, double> single_ring_radii(double theta_moment_neg2, double theta_moment_pos2) {
    if (!(theta_moment_neg2 > 0.0) || !std::isfinite(theta_moment_neg2) || !(theta_moment_pos2 > 0.0) ||
        !std::isfinite(theta_moment_pos2)) {
        throw InputError("single_ring_radii: moments must be positive and finite");
    }
    return {1.0 / std::sqrt(theta_moment_neg2), std::sqrt(theta_moment_pos2)};
}

/// int x^k dMP_c(x) over the absolutely continuous part (the atom contributes
/// nothing for k >= 1 and is excluded for k < 0).
inline double mp_moment(double k, double c) {
    const auto [a, b] = mp_edges(c);
    return quad_integrate([k, c](double x) { return std::pow(x, k) * mp_density(x, c); }, a, b, 1e-11,
                          EndpointRule::sqrt_edges);
}

enum class LawKind { semicircle, marchenko_pastur, circular, single_ring };

/// Parametric limit law. Real laws (semicircle, Marchenko-Pastur) evaluate
/// densities and CDFs on the line; the planar laws (circular, single ring)
/// describe an annulus a <= |z| <= b.
struct LawSpec {
    LawKind kind = LawKind::semicircle;
    double c = 1.0;
    double sigma = 1.0;
    double ring_a = 0.0;
    double ring_b = 1.0;

    static LawSpec semicircle(double sigma = 1.0) { return {LawKind::semicircle, 1.0, sigma, 0.0, 0.0}; }
    static LawSpec marchenko_pastur(double c) {
        mp_edges(c);
        return {LawKind::marchenko_pastur, c, 1.0, 0.0, 0.0};
    }
    static LawSpec circular() { return {LawKind::circular, 1.0, 1.0, 0.0, 1.0}; }
    static LawSpec single_ring(double a, double b) {
        if (!(a >= 0.0) || !(b >= a)) throw InputError("single_ring: need 0 <= a <= b");
        return {LawKind::single_ring, 1.0, 1.0, a, b};
    }

    bool is_real_line() const { return kind == LawKind::semicircle || kind == LawKind::marchenko_pastur; }

    std::pair<double, double> support() const {
        switch (kind) {
        case LawKind::semicircle: return {-2.0 * sigma, 2.0 * sigma};
        case LawKind::marchenko_pastur: {
            auto [a, b] = mp_edges(c);
            if (mp_atom(c) > 0.0) a = 0.0;
            return {a, b};
        }
        case LawKind::circular: return {0.0, 1.0};
        case LawKind::single_ring: return {ring_a, ring_b};
        }
        return {0.0, 0.0};
    }

    double atom() const { return kind == LawKind::marchenko_pastur ? mp_atom(c) : 0.0; }

    double mean() const { return kind == LawKind::marchenko_pastur ? 1.0 : 0.0; }

    double density(double x) const {
        switch (kind) {
        case LawKind::semicircle: return semicircle_density(x, sigma);
        case LawKind::marchenko_pastur: return mp_density(x, c);
        default: throw ContractViolation("LawSpec::density: planar law has no density on the line");
        }
    }

    double cdf(double x) const {
        switch (kind) {
        case LawKind::semicircle: return semicircle_cdf(x, sigma);
        case LawKind::marchenko_pastur: return mp_cdf(x, c);
        default: throw ContractViolation("LawSpec::cdf: planar law has no CDF on the line");
        }
    }

    /// Left limit G(x-), differing from cdf only at an atom.
    double cdf_left(double x) const {
        const double v = cdf(x);
        return (x == 0.0 && atom() > 0.0) ? v - atom() : v;
    }

    std::string name() const {
        switch (kind) {
        case LawKind::semicircle: return "semicircle";
        case LawKind::marchenko_pastur: return "marchenko-pastur";
        case LawKind::circular: return "circular";
        case LawKind::single_ring: return "single-ring";
        }
        return "unknown";
    }
};

// ---------------------------------------------------------------------------
// Empirical spectral distributions
// ---------------------------------------------------------------------------

/// Step CDF of a (possibly pooled) real spectrum plus an equal-width histogram.
struct Esd {
    std::vector<double> grid;          // sorted eigenvalues
    std::vector<double> cdf;           // cdf[i] = F(grid[i]) (ties resolved to the right)
    std::vector<double> bin_edges;     // size bins + 1
    std::vector<double> bin_density;   // size bins, integrates to 1

    std::size_t size() const { return grid.size(); }

    double cdf_at(double x) const {
        const auto it = std::upper_bound(grid.begin(), grid.end(), x);
        return static_cast<double>(it - grid.begin()) / static_cast<double>(grid.size());
    }
    double cdf_left_at(double x) const {
        const auto it = std::lower_bound(grid.begin(), grid.end(), x);
        return static_cast<double>(it - grid.begin()) / static_cast<double>(grid.size());
    }
};

inline Esd esd_from_values(std::vector<double> values, std::size_t bins = 50) {
    if (values.empty()) throw InputError("esd_from_spectrum: empty spectrum");
    if (bins < 1) throw InputError("esd_from_spectrum: bins must be >= 1");
    std::sort(values.begin(), values.end());
    Esd e;
    const double n = static_cast<double>(values.size());
    e.cdf.resize(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        const auto hi = std::upper_bound(values.begin(), values.end(), values[i]);
        e.cdf[i] = static_cast<double>(hi - values.begin()) / n;
    }
    double lo = values.front();
    double hi = values.back();
    if (hi - lo <= 0.0) {
        lo -= 0.5;
        hi += 0.5;
    }
    const double width = (hi - lo) / static_cast<double>(bins);
    e.bin_edges.resize(bins + 1);
    for (std::size_t k = 0; k <= bins; ++k) e.bin_edges[k] = lo + width * static_cast<double>(k);
    e.bin_edges.back() = hi;
    e.bin_density.assign(bins, 0.0);
    for (double v : values) {
        auto k = static_cast<std::size_t>((v - lo) / width);
        if (k >= bins) k = bins - 1;
        e.bin_density[k] += 1.0;
    }
    for (double& d : e.bin_density) d /= n * width;
    e.grid = std::move(values);
    return e;
}

inline Esd esd_from_spectrum(const SpectrumSample& s, std::size_t bins = 50) {
    if (!s.is_real()) throw InputError("esd_from_spectrum: spectrum is not real");
    return esd_from_values(s.values, bins);
}

/// ESD of the pooled spectra; equals the seed-average of the individual ESDs
/// when every sample has the same size.
inline Esd average_esd(const std::vector<SpectrumSample>& spectra, std::size_t bins = 50) {
    std::vector<double> pooled;
    for (const auto& s : spectra) {
        if (!s.is_real()) throw InputError("average_esd: spectrum is not real");
        pooled.insert(pooled.end(), s.values.begin(), s.values.end());
    }
    return esd_from_values(std::move(pooled), bins);
}

/// sup_x |F(x) - G(x)| between the ESD step function and the law CDF, taking
/// both one-sided limits at every jump so the supremum is exact.
inline double convergence_gap(const Esd& esd, const LawSpec& law) {
    if (!law.is_real_line()) throw ContractViolation("convergence_gap: law must live on the real line");
    if (esd.grid.empty()) throw InputError("convergence_gap: empty ESD");
    const double n = static_cast<double>(esd.grid.size());
    double gap = 0.0;
    std::size_t i = 0;
    while (i < esd.grid.size()) {
        const double v = esd.grid[i];
        std::size_t j = i;
        while (j < esd.grid.size() && esd.grid[j] == v) ++j;
        const double f_left = static_cast<double>(i) / n;
        const double f_right = static_cast<double>(j) / n;
        const double g = law.cdf(v);
        const double g_left = law.cdf_left(v);
        gap = std::max({gap, std::abs(f_right - g), std::abs(f_left - g_left)});
        i = j;
    }
    return gap;
}

/// Least-squares slope of log(gap) against log(N).
inline double loglog_slope(const std::vector<double>& ns, const std::vector<double>& gaps) {
    if (ns.size() != gaps.size() || ns.size() < 2) throw InputError("loglog_slope: need >= 2 points");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double m = static_cast<double>(ns.size());
    for (std::size_t i = 0; i < ns.size(); ++i) {
        const double x = std::log(ns[i]);
        const double y = std::log(gaps[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

// ---------------------------------------------------------------------------
// Bulk density bounds
// ---------------------------------------------------------------------------

enum class DensityEstimator { histogram_fd, kernel };

struct DensityBoundReport {
    double lower = 0.0;          // bulk interval actually evaluated
    double upper = 0.0;
    double max_abs_diff = 0.0;   // max |p_hat - g|
    double c_statistic = 0.0;    // max |p_hat - g| * N * edge factor
    std::size_t points = 0;
};

namespace detail {
inline std::pair<double, double> bulk_interval(const LawSpec& law, std::size_t n, double epsilon) {
    const double nn = static_cast<double>(n);
    double lo = 0, hi = 0;
    if (law.kind == LawKind::semicircle) {
        const double shift = std::pow(nn, -1.0 / 3.0) * epsilon * law.sigma;
        lo = -2.0 * law.sigma + shift;
        hi = 2.0 * law.sigma - shift;
    } else if (law.kind == LawKind::marchenko_pastur) {
        const auto [a, b] = mp_edges(law.c);
        const double shift = std::pow(nn, -2.0 / 3.0) * epsilon;
        lo = a + shift;
        hi = b - shift;
    } else {
        throw ContractViolation("density_bound_check: law must be semicircle or marchenko-pastur");
    }
    if (!(hi > lo)) throw InputError("density_bound_check: bulk interval is empty for this N and epsilon");
    return {lo, hi};
}

inline double edge_factor(const LawSpec& law, double x) {
    if (law.kind == LawKind::semicircle) {
        const double u = x / law.sigma;
        return 4.0 - u * u;
    }
    const auto [a, b] = mp_edges(law.c);
    return (x - a) * (b - x);
}
} // namespace detail

/// Compares a density estimate against the law inside the bulk interval
/// [-2 + N^(-1/3) eps, 2 - N^(-1/3) eps] (semicircle) or
/// [a + N^(-2/3) eps, b - N^(-2/3) eps] (Marchenko-Pastur).
inline DensityBoundReport density_bound_check(const std::function<double(double)>& estimate, std::size_t n,
                                              const LawSpec& law, double epsilon = 1.0,
                                              std::size_t points = 200) {
    const auto [lo, hi] = detail::bulk_interval(law, n, epsilon);
    DensityBoundReport r{lo, hi, 0.0, 0.0, points};
    for (std::size_t k = 0; k < points; ++k) {
        const double x = lo + (hi - lo) * (static_cast<double>(k) + 0.5) / static_cast<double>(points);
        const double diff = std::abs(estimate(x) - law.density(x));
        r.max_abs_diff = std::max(r.max_abs_diff, diff);
        r.c_statistic = std::max(r.c_statistic, diff * static_cast<double>(n) * detail::edge_factor(law, x));
    }
    return r;
}

inline DensityBoundReport density_bound_check(const SpectrumSample& spectrum, const LawSpec& law,
                                              double epsilon = 1.0,
                                              DensityEstimator estimator = DensityEstimator::histogram_fd) {
    if (!spectrum.is_real() || spectrum.values.size() < 4) {
        throw InputError("density_bound_check: need a real spectrum with >= 4 values");
    }
    const auto& v = spectrum.values;
    const std::size_t n = v.size();
    const auto [lo, hi] = detail::bulk_interval(law, n, epsilon);
    const double nn = static_cast<double>(n);
    auto quantile = [&](double q) { return v[static_cast<std::size_t>(q * static_cast<double>(n - 1))]; };

    if (estimator == DensityEstimator::kernel) {
        double mean = 0, sq = 0;
        for (double x : v) mean += x;
        mean /= nn;
        for (double x : v) sq += (x - mean) * (x - mean);
        const double sd = std::sqrt(sq / (nn - 1.0));
        const double iqr = quantile(0.75) - quantile(0.25);
        const double h = 0.9 * std::min(sd, iqr / 1.34) * std::pow(nn, -0.2);
        auto kde = [&, h](double x) {
            double acc = 0.0;
            for (double e : v) {
                const double u = (x - e) / h;
                acc += std::exp(-0.5 * u * u);
            }
            return acc / (nn * h * std::sqrt(2.0 * std::numbers::pi));
        };
        return density_bound_check(kde, n, law, epsilon);
    }

    const double iqr = quantile(0.75) - quantile(0.25);
    double h = 2.0 * iqr * std::pow(nn, -1.0 / 3.0);
    if (!(h > 0.0)) h = (v.back() - v.front() + 1e-12) / 10.0;
    const double start = v.front();
    const auto bins = static_cast<std::size_t>(std::ceil((v.back() - start) / h)) + 1;
    std::vector<double> counts(bins, 0.0);
    for (double x : v) counts[std::min(bins - 1, static_cast<std::size_t>((x - start) / h))] += 1.0;

    DensityBoundReport r{lo, hi, 0.0, 0.0, 0};
    for (std::size_t k = 0; k < bins; ++k) {
        const double centre = start + (static_cast<double>(k) + 0.5) * h;
        if (centre < lo || centre > hi) continue;
        const double p_hat = counts[k] / (nn * h);
        const double diff = std::abs(p_hat - law.density(centre));
        r.max_abs_diff = std::max(r.max_abs_diff, diff);
        r.c_statistic = std::max(r.c_statistic, diff * nn * detail::edge_factor(law, centre));
        ++r.points;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Planar laws
// ---------------------------------------------------------------------------

/// Fraction of complex values whose modulus lies in [inner - delta, outer + delta].
inline double fraction_in_annulus(const std::vector<cplx>& values, double inner, double outer,
                                  double delta = 0.0) {
    if (values.empty()) return 0.0;
    std::size_t inside = 0;
    for (const auto& z : values) {
        const double r = std::abs(z);
        if (r >= inner - delta && r <= outer + delta) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(values.size());
}

/// (x, density, cdf) rows of a real-line law on an even grid.
inline std::vector<std::array<double, 3>> law_curve(const LawSpec& law, double lo, double hi, std::size_t points) {
    if (points < 2 || !(hi > lo)) throw InputError("law_curve: need >= 2 points over a nonempty interval");
    std::vector<std::array<double, 3>> rows(points);
    for (std::size_t k = 0; k < points; ++k) {
        const double x = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
        rows[k] = {x, law.density(x), law.cdf(x)};
    }
    return rows;
}

} // namespace rmtgrid
