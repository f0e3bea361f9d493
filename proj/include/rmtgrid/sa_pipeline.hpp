#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rmtgrid/core/errors.hpp"
#include "rmtgrid/core/linalg.hpp"
#include "rmtgrid/core/parallel.hpp"
#include "rmtgrid/core/quadrature.hpp"
#include "rmtgrid/core/random.hpp"
#include "rmtgrid/ensembles.hpp"
#include "rmtgrid/spectral_laws.hpp"

namespace rmtgrid {

// ---------------------------------------------------------------------------
// Windows
// ---------------------------------------------------------------------------

/// Columns [start, start + T) of a stream; labelled by the time of its last column.
struct WindowSpan {
    std::size_t start = 0;
    std::size_t length = 0;
    double t_end = 0.0;
};

struct AnalysisWindow {
    RealMatrix matrix;  // N x T
    double t_end = 0.0;
    bool standardized = false;

    double c() const { return static_cast<double>(matrix.rows()) / static_cast<double>(matrix.cols()); }
};

/// Spans of every window of length T advanced by `stride`; the count is
/// floor((total - T) / stride) + 1. Without `times`, labels are 1-based sample indices.
inline std::vector<WindowSpan> window_spans(std::size_t total, std::size_t window, std::size_t stride = 1,
                                            const std::vector<double>& times = {}) {
    if (window < 1 || stride < 1) throw InputError("window_stream: T and stride must be >= 1");
    if (window > total) throw InputError("window_stream: T exceeds the stream length");
    if (!times.empty() && times.size() != total) throw InputError("window_stream: one timestamp per sample required");
    std::vector<WindowSpan> spans;
    for (std::size_t s = 0; s + window <= total; s += stride) {
        const std::size_t last = s + window - 1;
        spans.push_back({s, window, times.empty() ? static_cast<double>(last + 1) : times[last]});
    }
    return spans;
}

inline AnalysisWindow extract_window(const RealMatrix& series, const WindowSpan& span) {
    return {series.middleCols(static_cast<Eigen::Index>(span.start), static_cast<Eigen::Index>(span.length)),
            span.t_end, false};
}

/// Materialises every window (memory grows as count * N * T; prefer window_spans for long streams).
inline std::vector<AnalysisWindow> window_stream(const RealMatrix& series, std::size_t window, std::size_t stride = 1,
                                                 const std::vector<double>& times = {}) {
    std::vector<AnalysisWindow> out;
    for (const auto& span : window_spans(static_cast<std::size_t>(series.cols()), window, stride, times))
        out.push_back(extract_window(series, span));
    return out;
}

// ---------------------------------------------------------------------------
// Ring law
// ---------------------------------------------------------------------------

struct RingLawReport {
    std::vector<cplx> eigenvalues;
    double inner_radius = 0.0;  // (1 - c)^(L/2)
    double outer_radius = 1.0;
    double fraction_inside = 0.0;
    double msr = 0.0;           // mean |lambda|
    bool degenerate = false;    // standardisation replaced constant rows
    bool anomaly = false;
};

struct RingLawOptions {
    std::size_t copies = 1;          // L
    double delta = 0.05;             // radial tolerance on both radii
    double min_fraction = 0.95;
    std::uint64_t seed = 0;
};

/// Mean of |lambda| for the product of L singular-value equivalents at ratio c:
/// (2 / (c (2 + L))) (1 - (1 - c)^(1 + L/2)).
inline double msr_theoretical(double c, std::size_t copies = 1) {
    if (!(c > 0.0) || c > 1.0) throw InputError("msr_theoretical: c must lie in (0, 1]");
    if (copies < 1) throw InputError("msr_theoretical: L must be >= 1");
    const double l = static_cast<double>(copies);
    return 2.0 / (c * (2.0 + l)) * (1.0 - std::pow(1.0 - c, 1.0 + l / 2.0));
}

inline RingLawReport ring_law_check(const AnalysisWindow& w, RingLawOptions opt = {}) {
    const auto n = w.matrix.rows();
    const auto t = w.matrix.cols();
    if (n > t) throw InputError("ring_law_check: N exceeds T");
    if (opt.copies < 1) throw InputError("ring_law_check: L must be >= 1");
    RingLawReport rep;
    StandardizedMatrix z;
    if (w.standardized) z.matrix = w.matrix;
    else z = standardize(w.matrix, derive_seed(opt.seed, 99));
    rep.degenerate = z.degenerate();
    ComplexMatrix prod = singular_value_equivalent(z.matrix, derive_seed(opt.seed, 0));
    for (std::size_t k = 1; k < opt.copies; ++k)
        prod = prod * singular_value_equivalent(z.matrix, derive_seed(opt.seed, k));
    rep.eigenvalues = eig_general(prod).complex_values;
    const double c = static_cast<double>(n) / static_cast<double>(t);
    rep.inner_radius = std::pow(1.0 - c, static_cast<double>(opt.copies) / 2.0);
    rep.fraction_inside = fraction_in_annulus(rep.eigenvalues, rep.inner_radius, rep.outer_radius, opt.delta);
    double s = 0.0;
    for (const auto& l : rep.eigenvalues) s += std::abs(l);
    rep.msr = s / static_cast<double>(rep.eigenvalues.size());
    rep.anomaly = rep.degenerate || rep.fraction_inside < opt.min_fraction;
    return rep;
}

// ---------------------------------------------------------------------------
// Linear eigenvalue statistics
// ---------------------------------------------------------------------------

struct LesIndicator {
    std::string name;
    double value = 0.0;
    std::optional<double> theoretical_mean;
    double ratio = NAN;          // value / theoretical_mean
    bool floored = false;        // a log-type phi met a nonpositive eigenvalue
};

/// Test function phi with a name; `log_type` functions floor their argument at 1e-12.
struct LesFunction {
    std::string name;
    std::function<double(double)> phi;
    bool log_type = false;

    static LesFunction moment(int k) {
        if (k < 0) throw InputError("LesFunction::moment: k must be >= 0");
        return {"moment-" + std::to_string(k), [k](double x) { return std::pow(x, k); }, false};
    }
    static LesFunction log_det() {
        return {"log-det", [](double x) { return std::log(x); }, true};
    }
    static LesFunction likelihood_ratio() {
        return {"likelihood-ratio", [](double x) { return x - std::log(x) - 1.0; }, true};
    }
    static LesFunction counting() {
        return {"count", [](double) { return 1.0; }, false};
    }
    static LesFunction custom(std::string name, std::function<double(double)> phi, bool log_type = false) {
        return {std::move(name), std::move(phi), log_type};
    }
};

inline constexpr double kLogFloor = 1e-12;

/// Resolves a built-in indicator name: moment-k, log-det, likelihood-ratio or count.
inline LesFunction les_function(const std::string& name) {
    if (name == "log-det") return LesFunction::log_det();
    if (name == "likelihood-ratio") return LesFunction::likelihood_ratio();
    if (name == "count") return LesFunction::counting();
    if (name.rfind("moment-", 0) == 0) {
        std::size_t used = 0;
        int k = -1;
        try {
            k = std::stoi(name.substr(7), &used);
        } catch (const std::exception&) {
            used = 0;
        }
        if (used == name.size() - 7 && k >= 0) return LesFunction::moment(k);
    }
    throw InputError("unknown indicator '" + name + "'");
}

/// Ascending eigenvalues of (1/T) X X^T for the standardised window.
inline SpectrumSample covariance_spectrum(const AnalysisWindow& w, std::uint64_t seed = 0,
                                          bool* degenerate = nullptr) {
    StandardizedMatrix z;
    if (w.standardized) z.matrix = w.matrix;
    else z = standardize(w.matrix, seed);
    if (degenerate) *degenerate = z.degenerate();
    RealMatrix s = z.matrix * z.matrix.transpose() / static_cast<double>(z.matrix.cols());
    SpectrumSample spec = eig_hermitian(hermitian_part(s));
    spec.t = static_cast<std::size_t>(w.matrix.cols());
    return spec;
}

inline double les_value(const SpectrumSample& spectrum, const LesFunction& f, bool* floored = nullptr) {
    double v = 0.0;
    bool hit = false;
    for (double l : spectrum.values) {
        double x = l;
        if (f.log_type && x < kLogFloor) {
            x = kLogFloor;
            hit = true;
        }
        v += f.phi(x);
    }
    if (floored) *floored = hit;
    return v;
}

/// N * int phi dMP_c over the absolutely continuous part (c <= 1).
inline double les_theoretical(const LesFunction& f, std::size_t n, std::size_t t) {
    const double c = static_cast<double>(n) / static_cast<double>(t);
    if (c > 1.0) throw InputError("les_theoretical: requires N <= T");
    const auto [a, b] = mp_edges(c);
    auto integrand = [&](double x) {
        const double arg = f.log_type ? std::max(x, kLogFloor) : x;
        return f.phi(arg) * mp_density(x, c);
    };
    return static_cast<double>(n) * quad_integrate(integrand, a, b, 1e-9, EndpointRule::sqrt_edges);
}

inline LesIndicator les(const SpectrumSample& spectrum, const LesFunction& f,
                        std::optional<double> theoretical = std::nullopt) {
    LesIndicator ind;
    ind.name = f.name;
    ind.value = les_value(spectrum, f, &ind.floored);
    ind.theoretical_mean = theoretical;
    if (theoretical && *theoretical != 0.0) ind.ratio = ind.value / *theoretical;
    return ind;
}

inline LesIndicator les(const AnalysisWindow& w, const LesFunction& f, std::uint64_t seed = 0) {
    const SpectrumSample spec = covariance_spectrum(w, seed);
    std::optional<double> theory;
    if (w.matrix.rows() <= w.matrix.cols())
        theory = les_theoretical(f, static_cast<std::size_t>(w.matrix.rows()), static_cast<std::size_t>(w.matrix.cols()));
    return les(spec, f, theory);
}

inline LesIndicator msr(const RingLawReport& ring, double c, std::size_t copies = 1) {
    LesIndicator ind;
    ind.name = "msr";
    ind.value = ring.msr;
    ind.theoretical_mean = msr_theoretical(c, copies);
    ind.ratio = ind.value / *ind.theoretical_mean;
    return ind;
}

inline LesIndicator msr(const AnalysisWindow& w, RingLawOptions opt = {}) {
    return msr(ring_law_check(w, opt), w.c(), opt.copies);
}

// ---------------------------------------------------------------------------
// Marchenko-Pastur bounds
// ---------------------------------------------------------------------------

struct MpBoundReport {
    double fraction_inside = 0.0;
    double lower = 0.0;        // a
    double upper = 0.0;        // b
    double max_eigenvalue = 0.0;
    bool spike = false;        // max eigenvalue beyond b + spike_margin
    bool degenerate = false;
    bool anomaly = false;
};

struct MpBoundOptions {
    double edge_tolerance = 0.05;  // eigenvalues within [a - tol, b + tol] count as inside
    double spike_margin = 0.3;     // lambda_max > b + margin flags a spike
    double min_fraction = 0.95;
    std::uint64_t seed = 0;
};

inline MpBoundReport mp_bound_check(const SpectrumSample& spectrum, double c, bool degenerate = false,
                                    MpBoundOptions opt = {}) {
    MpBoundReport rep;
    const auto [a, b] = mp_edges(c);
    rep.lower = a;
    rep.upper = b;
    rep.degenerate = degenerate;
    const double atom = mp_atom(c);
    std::size_t inside = 0;
    std::size_t zeros = 0;
    for (double l : spectrum.values) {
        if (l >= a - opt.edge_tolerance && l <= b + opt.edge_tolerance) ++inside;
        else if (atom > 0.0 && std::abs(l) <= opt.edge_tolerance) ++zeros;
    }
    const double n = static_cast<double>(spectrum.values.size());
    const double allowed_zeros = std::min(static_cast<double>(zeros), std::round(atom * n));
    rep.fraction_inside = (static_cast<double>(inside) + allowed_zeros) / n;
    rep.max_eigenvalue = spectrum.values.empty() ? 0.0 : spectrum.values.back();
    rep.spike = rep.max_eigenvalue > b + opt.spike_margin;
    rep.anomaly = rep.degenerate || rep.spike || rep.fraction_inside < opt.min_fraction;
    return rep;
}

inline MpBoundReport mp_bound_check(const AnalysisWindow& w, MpBoundOptions opt = {}) {
    bool degenerate = false;
    const SpectrumSample spec = covariance_spectrum(w, opt.seed, &degenerate);
    return mp_bound_check(spec, w.c(), degenerate, opt);
}

// ---------------------------------------------------------------------------
// Stage segmentation
// ---------------------------------------------------------------------------

enum class StageType { steady, transition, anomalous };

inline const char* to_string(StageType s) {
    switch (s) {
    case StageType::steady: return "steady";
    case StageType::transition: return "transition";
    case StageType::anomalous: return "anomalous";
    }
    return "unknown";
}

struct Stage {
    double t_begin = 0.0;   // t_end label of the first window in the stage
    double t_end = 0.0;     // t_end label of the last window in the stage
    std::size_t first = 0;  // window indices, inclusive
    std::size_t last = 0;
    std::size_t length() const { return last - first + 1; }
    StageType type = StageType::steady;
};

/// Splits stride-1 window flags into maximal runs. A flagged run of exactly
/// T - 1 windows is a transition (one abrupt change crossing the window);
/// any other flagged run is anomalous.
inline std::vector<Stage> stage_segmentation(const std::vector<bool>& flags, const std::vector<double>& t_end,
                                             std::size_t window_t) {
    if (flags.size() != t_end.size()) throw InputError("stage_segmentation: flags and labels differ in length");
    if (flags.size() < window_t) throw InputError("stage_segmentation: series shorter than T");
    std::vector<Stage> stages;
    std::size_t i = 0;
    while (i < flags.size()) {
        std::size_t j = i;
        while (j + 1 < flags.size() && flags[j + 1] == flags[i]) ++j;
        Stage s;
        s.first = i;
        s.last = j;
        s.t_begin = t_end[i];
        s.t_end = t_end[j];
        if (flags[i]) s.type = s.length() == window_t - 1 ? StageType::transition : StageType::anomalous;
        stages.push_back(s);
        i = j + 1;
    }
    return stages;
}

struct IndicatorBand {
    double mean = 0.0;
    double sd = 0.0;
    double width = 3.0;  // band = mean +- width * sd
    bool contains(double v) const { return std::abs(v - mean) <= width * sd; }
};

/// Flags every value outside the band and segments the resulting series.
inline std::vector<Stage> stage_segmentation(const std::vector<double>& values, const std::vector<double>& t_end,
                                             std::size_t window_t, const IndicatorBand& band) {
    std::vector<bool> flags(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) flags[i] = !band.contains(values[i]);
    return stage_segmentation(flags, t_end, window_t);
}

/// H0 band of an indicator from `reps` seeded Gaussian N x T windows.
inline IndicatorBand calibrate_band(const std::function<double(const AnalysisWindow&, std::uint64_t)>& indicator,
                                    std::size_t n, std::size_t t, std::size_t reps = 200, std::uint64_t seed = 0,
                                    double width = 3.0) {
    if (reps < 2) throw InputError("calibrate_band: need >= 2 repetitions");
    std::vector<double> v(reps);
    parallel_for(reps, [&](std::size_t r) {
        Rng rng(derive_seed(seed, r));
        AnalysisWindow w{rng.gaussian_matrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(t)), 0.0, false};
        v[r] = indicator(w, derive_seed(seed, r + reps));
    });
    const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(reps);
    double sq = 0.0;
    for (double x : v) sq += (x - mean) * (x - mean);
    return {mean, std::sqrt(sq / static_cast<double>(reps - 1)), width};
}

// ---------------------------------------------------------------------------
// Window scan
// ---------------------------------------------------------------------------

struct WindowResult {
    double t_end = 0.0;
    double ring_fraction = 0.0;
    double mp_fraction = 0.0;
    double max_eigenvalue = 0.0;
    double msr = 0.0;
    std::vector<std::pair<std::string, double>> les;  // extra indicators
    bool degenerate = false;
    bool ring_anomaly = false;
    bool mp_anomaly = false;
    bool flag() const { return ring_anomaly || mp_anomaly; }
};

struct ScanOptions {
    std::size_t window = 240;
    std::size_t stride = 1;
    RingLawOptions ring{};
    MpBoundOptions mp{};
    std::vector<LesFunction> indicators{};
    std::uint64_t seed = 0;
};

/// Ring-law, Marchenko-Pastur and LES evaluation of every window of a stream.
inline std::vector<WindowResult> scan_stream(const RealMatrix& series, const std::vector<double>& times,
                                             const ScanOptions& opt) {
    const auto spans = window_spans(static_cast<std::size_t>(series.cols()), opt.window, opt.stride, times);
    if (static_cast<std::size_t>(series.rows()) > opt.window) throw InputError("scan_stream: N exceeds T");
    std::vector<WindowResult> out(spans.size());
    parallel_for(spans.size(), [&](std::size_t k) {
        AnalysisWindow w = extract_window(series, spans[k]);
        const StandardizedMatrix z = standardize(w.matrix, derive_seed(opt.seed, 2 * k));
        w.matrix = z.matrix;
        w.standardized = true;
        RingLawOptions ro = opt.ring;
        ro.seed = derive_seed(opt.seed, 2 * k + 1);
        const auto ring = ring_law_check(w, ro);
        const SpectrumSample spec = covariance_spectrum(w);
        const auto mp = mp_bound_check(spec, w.c(), z.degenerate(), opt.mp);
        WindowResult& r = out[k];
        r.t_end = spans[k].t_end;
        r.ring_fraction = ring.fraction_inside;
        r.mp_fraction = mp.fraction_inside;
        r.max_eigenvalue = mp.max_eigenvalue;
        r.msr = ring.msr;
        r.degenerate = z.degenerate();
        r.ring_anomaly = ring.anomaly || r.degenerate;
        r.mp_anomaly = mp.anomaly;
        for (const auto& f : opt.indicators) r.les.emplace_back(f.name, les_value(spec, f));
    });
    return out;
}

// ---------------------------------------------------------------------------
// Concatenated-matrix sensitivity
// ---------------------------------------------------------------------------

struct SensitivityReport {
    std::vector<std::size_t> order;  // factor indices, most influential first
    std::vector<double> les_values;  // LES([B; C_i])
    std::vector<double> scores;      // |LES([B; C_i]) - LES([B; R_i])|
    std::vector<double> baselines;   // LES([B; R_i])
};

/// Ranks factors C_i by how far the LES of the concatenation [B; C_i] moves
/// away from that of [B; R_i] with R_i a seeded Gaussian block of C_i's shape.
inline SensitivityReport concat_sensitivity(const RealMatrix& b, const std::vector<RealMatrix>& factors,
                                            const LesFunction& phi = LesFunction::moment(2),
                                            std::uint64_t seed = 0) {
    if (factors.empty()) throw InputError("concat_sensitivity: no factors");
    for (const auto& f : factors)
        if (f.cols() != b.cols()) throw InputError("concat_sensitivity: factor column count differs from B");
    auto les_of = [&](const RealMatrix& c) {
        RealMatrix a(b.rows() + c.rows(), b.cols());
        a.topRows(b.rows()) = b;
        a.bottomRows(c.rows()) = c;
        return les_value(covariance_spectrum({a, 0.0, false}, derive_seed(seed, 7)), phi);
    };
    SensitivityReport rep;
    rep.les_values.assign(factors.size(), 0.0);
    rep.baselines.assign(factors.size(), 0.0);
    parallel_for(factors.size(), [&](std::size_t i) {
        // The same seed gives every factor of a given height the same random baseline block.
        Rng rng(seed);
        rep.baselines[i] = les_of(rng.gaussian_matrix(factors[i].rows(), b.cols()));
        rep.les_values[i] = les_of(factors[i]);
    });
    rep.scores.resize(factors.size());
    for (std::size_t i = 0; i < factors.size(); ++i) rep.scores[i] = std::abs(rep.les_values[i] - rep.baselines[i]);
    rep.order.resize(factors.size());
    std::iota(rep.order.begin(), rep.order.end(), std::size_t{0});
    std::stable_sort(rep.order.begin(), rep.order.end(),
                     [&](std::size_t x, std::size_t y) { return rep.scores[x] > rep.scores[y]; });
    return rep;
}

} // namespace rmtgrid
