#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rmtgrid/core/errors.hpp"
#include "rmtgrid/core/linalg.hpp"
#include "rmtgrid/spectral_laws.hpp"

// Two transforms of a probability law F on the real line appear below:
//   Stieltjes  s(z) = int dF(x) / (x - z),   sign(Im s) = sign(Im z)
//   Cauchy     g(z) = int dF(x) / (z - x) = -s(z)
// Densities are read off s; R and S transforms are defined through g, so
// that R(w) = w for the standard semicircle and R(w) = m for a point mass.

namespace rmtgrid {

/// Closed-form Stieltjes transform of the semicircle law of variance sigma^2,
/// analytic on C minus [-2 sigma, 2 sigma].
inline cplx stieltjes_semicircle(cplx z, double sigma = 1.0) {
    if (!(sigma > 0.0)) throw InputError("stieltjes_semicircle: sigma must be > 0");
    const cplx r = std::sqrt(z - 2.0 * sigma) * std::sqrt(z + 2.0 * sigma);
    return -2.0 / (z + r);
}

/// Closed-form Stieltjes transform of the Marchenko-Pastur law with ratio c,
/// including the atom at 0 when c > 1.
inline cplx stieltjes_mp(cplx z, double c) {
    const auto [a, b] = mp_edges(c);
    const cplx r = std::sqrt(z - a) * std::sqrt(z - b);
    return 2.0 / (1.0 - c - z - r);
}

inline cplx stieltjes_law(const LawSpec& law, cplx z) {
    switch (law.kind) {
    case LawKind::semicircle: return stieltjes_semicircle(z, law.sigma);
    case LawKind::marchenko_pastur: return stieltjes_mp(z, law.c);
    default: throw ContractViolation("stieltjes_law: only semicircle and marchenko-pastur are supported");
    }
}

/// (1/N) sum 1/(lambda_i - z). Exact rational evaluation.
inline cplx stieltjes_from_spectrum(const SpectrumSample& s, cplx z) {
    if (!s.is_real()) throw InputError("stieltjes_from_spectrum: spectrum is not real");
    if (s.values.empty()) throw InputError("stieltjes_from_spectrum: empty spectrum");
    cplx acc = 0.0;
    for (double l : s.values) {
        const cplx d = l - z;
        if (std::abs(d) < 1e-14) throw InputError("stieltjes_from_spectrum: z coincides with an eigenvalue");
        acc += 1.0 / d;
    }
    return acc / static_cast<double>(s.values.size());
}

enum class CauchySource { spectrum, law, tabulated };

/// Immutable transform evaluator. Every evaluation off the real axis asserts
/// the half-plane branch invariant.
class CauchyEvaluator {
public:
    using Fn = std::function<cplx(cplx)>;

    static CauchyEvaluator from_spectrum(SpectrumSample s) {
        if (!s.is_real() || s.values.empty()) throw InputError("CauchyEvaluator: need a non-empty real spectrum");
        auto shared = std::make_shared<const SpectrumSample>(std::move(s));
        double mean = 0.0;
        for (double v : shared->values) mean += v;
        mean /= static_cast<double>(shared->values.size());
        Fn f = [shared](cplx z) { return stieltjes_from_spectrum(*shared, z); };
        Fn df = [shared](cplx z) {
            cplx acc = 0.0;
            for (double l : shared->values) {
                const cplx d = l - z;
                acc += 1.0 / (d * d);
            }
            return acc / static_cast<double>(shared->values.size());
        };
        return CauchyEvaluator(CauchySource::spectrum, std::move(f), std::move(df), mean);
    }

    static CauchyEvaluator from_law(const LawSpec& law) {
        if (!law.is_real_line()) throw ContractViolation("CauchyEvaluator: law must live on the real line");
        Fn f = [law](cplx z) { return stieltjes_law(law, z); };
        return CauchyEvaluator(CauchySource::law, std::move(f), {}, law.mean());
    }

    /// Wraps an arbitrary Stieltjes transform; derivatives by central differences.
    static CauchyEvaluator tabulated(Fn stieltjes, double mean) {
        return CauchyEvaluator(CauchySource::tabulated, std::move(stieltjes), {}, mean);
    }

    /// Wraps a Cauchy transform g = -s.
    static CauchyEvaluator from_cauchy(Fn cauchy, double mean) {
        Fn f = [g = std::move(cauchy)](cplx z) { return -g(z); };
        return CauchyEvaluator(CauchySource::tabulated, std::move(f), {}, mean);
    }

    CauchySource source() const { return source_; }
    double mean() const { return mean_; }

    cplx stieltjes(cplx z) const {
        const cplx s = s_(z);
        if (!std::isfinite(s.real()) || !std::isfinite(s.imag())) {
            throw ConvergenceError("CauchyEvaluator: non-finite transform value", NAN);
        }
        const double tol = 1e-12 * std::max(1.0, std::abs(s));
        if ((z.imag() > 0.0 && s.imag() < -tol) || (z.imag() < 0.0 && s.imag() > tol)) {
            throw ContractViolation("CauchyEvaluator: branch invariant sign(Im s) = sign(Im z) violated");
        }
        return s;
    }

    cplx cauchy(cplx z) const { return -stieltjes(z); }

    cplx cauchy_derivative(cplx z) const {
        if (ds_) return -ds_(z);
        const double h = 1e-5 * (1.0 + std::abs(z));
        return -(s_(z + h) - s_(z - h)) / (2.0 * h);
    }

private:
    CauchyEvaluator(CauchySource source, Fn s, Fn ds, double mean)
        : source_(source), s_(std::move(s)), ds_(std::move(ds)), mean_(mean) {}

    CauchySource source_;
    Fn s_;
    Fn ds_;
    double mean_;
};

/// Density at x from the boundary value (1/pi) Im s(x + i eps).
inline double density_from_stieltjes(const CauchyEvaluator& g, double x, double epsilon) {
    if (!(epsilon > 0.0)) throw InputError("density_from_stieltjes: epsilon must be > 0");
    const double d = g.stieltjes(cplx(x, epsilon)).imag() / std::numbers::pi;
    if (d < -1e-6) throw ContractViolation("density_from_stieltjes: negative density, branch misconfigured");
    return std::max(d, 0.0);
}

/// Polynomial (Neville) extrapolation to eps -> 0 over a ladder of smoothing
/// widths; removes the O(eps) Poisson-kernel bias.
inline double density_from_stieltjes(const CauchyEvaluator& g, double x,
                                     const std::vector<double>& ladder = {1e-2, 5e-3, 2.5e-3}) {
    if (ladder.empty()) throw InputError("density_from_stieltjes: empty epsilon ladder");
    std::vector<double> e = ladder;
    std::vector<double> p(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (!(e[i] > 0.0)) throw InputError("density_from_stieltjes: epsilon must be > 0");
        p[i] = g.stieltjes(cplx(x, e[i])).imag() / std::numbers::pi;
    }
    for (std::size_t k = 1; k < e.size(); ++k) {
        for (std::size_t i = e.size() - 1; i >= k; --i) {
            p[i] = (e[i - k] * p[i] - e[i] * p[i - 1]) / (e[i - k] - e[i]);
        }
    }
    const double d = p.back();
    if (d < -1e-6) throw ContractViolation("density_from_stieltjes: negative density, branch misconfigured");
    return std::max(d, 0.0);
}

struct InverseOptions {
    double tol = 1e-12;
    int max_iter = 100;
};

/// Solves g(z) = w by complex Newton iteration seeded at 1/w + mean and
/// returns the root B(w).
inline cplx blue_transform(const CauchyEvaluator& g, cplx w, InverseOptions opt = {},
                           std::optional<cplx> seed = std::nullopt) {
    if (w == cplx(0.0, 0.0)) throw InputError("blue_transform: w must be nonzero");
    cplx z = seed.value_or(1.0 / w + g.mean());
    const double scale = std::max(1.0, std::abs(w));
    cplx best = z;
    double best_res = INFINITY;
    for (int it = 0; it <= opt.max_iter; ++it) {
        const cplx f = g.cauchy(z) - w;
        const double res = std::abs(f);
        if (res < best_res) {
            best_res = res;
            best = z;
        }
        if (res <= opt.tol * scale) return z;
        if (it == opt.max_iter) break;
        const cplx d = g.cauchy_derivative(z);
        if (d == cplx(0.0, 0.0)) break;
        cplx step = f / d;
        // g maps each open half-plane into the opposite one; keep the iterate on
        // the side where the preimage of w must lie.
        const double side = w.imag() < 0.0 ? 1.0 : (w.imag() > 0.0 ? -1.0 : 0.0);
        for (int k = 0; k < 40 && side != 0.0 && (z - step).imag() * side <= 0.0; ++k) step *= 0.5;
        z -= step;
    }
    throw ConvergenceError("blue_transform: Newton did not converge (residual " + std::to_string(best_res) + ")",
                           (best - 1.0 / w).real());
}

/// R(w) = B(w) - 1/w.
inline cplx r_transform_numeric(const CauchyEvaluator& g, cplx w, InverseOptions opt = {}) {
    return blue_transform(g, w, opt) - 1.0 / w;
}

/// Solves S(z) R(z S(z)) = 1 by secant iteration seeded at S = 1/mean.
inline cplx s_transform_numeric(const CauchyEvaluator& g, cplx z, double tol = 1e-10, int max_iter = 100) {
    if (g.mean() == 0.0) throw InputError("s_transform_numeric: law has zero mean, S transform undefined");
    InverseOptions inner{std::min(1e-12, tol * 1e-2), 100};
    auto residual = [&](cplx s) { return s * r_transform_numeric(g, z * s, inner) - 1.0; };
    if (z == cplx(0.0, 0.0)) return 1.0 / g.mean();
    cplx s0 = 1.0 / g.mean();
    cplx f0 = residual(s0);
    if (std::abs(f0) <= tol) return s0;
    cplx s1 = s0 * (1.0 - 0.05 * z);
    cplx f1 = residual(s1);
    for (int it = 0; it < max_iter; ++it) {
        if (std::abs(f1) <= tol) return s1;
        const cplx denom = f1 - f0;
        if (denom == cplx(0.0, 0.0)) break;
        const cplx s2 = s1 - f1 * (s1 - s0) / denom;
        s0 = s1;
        f0 = f1;
        s1 = s2;
        f1 = residual(s1);
    }
    if (std::abs(f1) <= tol) return s1;
    throw ConvergenceError("s_transform_numeric: secant iteration did not converge", s1.real());
}

} // namespace rmtgrid
