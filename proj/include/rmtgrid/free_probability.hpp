#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>

#include "rmtgrid/core/errors.hpp"
#include "rmtgrid/core/linalg.hpp"
#include "rmtgrid/core/parallel.hpp"
#include "rmtgrid/core/random.hpp"
#include "rmtgrid/ensembles.hpp"
#include "rmtgrid/spectral_laws.hpp"
#include "rmtgrid/transforms.hpp"

namespace rmtgrid {

// ---------------------------------------------------------------------------
// Linear pencils
// ---------------------------------------------------------------------------

/// L = b0 (x) 1 + sum_j b_j (x) X_j with Hermitian N x N coefficients. The
/// polynomial is recovered as the Schur complement p = L_11 - u Q^{-1} v of
/// the (1,1) corner.
struct LinearPencil {
    std::size_t dim_n = 0;
    std::vector<ComplexMatrix> coeffs;  // b0, b1, ..., bk

    std::size_t var_count() const { return coeffs.empty() ? 0 : coeffs.size() - 1; }

    void validate() const {
        if (dim_n < 1 || coeffs.size() < 2) throw InputError("LinearPencil: need N >= 1 and at least one variable");
        for (const auto& b : coeffs) {
            if (b.rows() != static_cast<Eigen::Index>(dim_n) || b.cols() != static_cast<Eigen::Index>(dim_n))
                throw InputError("LinearPencil: coefficient shape differs from N x N");
            if (!is_hermitian(b)) throw ContractViolation("LinearPencil: coefficient is not Hermitian");
        }
    }
};

namespace detail {
inline ComplexMatrix unit_sym(std::size_t n, Eigen::Index i, Eigen::Index j, double v = 1.0) {
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    m(i, j) += v;
    if (i != j) m(j, i) += v;
    return m;
}
} // namespace detail

/// p = X1 X2 + X2 X1 via [[0, X1, X2], [X1, 0, -1], [X2, -1, 0]].
inline LinearPencil pencil_anticommutator() {
    LinearPencil p;
    p.dim_n = 3;
    p.coeffs = {detail::unit_sym(3, 1, 2, -1.0), detail::unit_sym(3, 0, 1), detail::unit_sym(3, 0, 2)};
    return p;
}

/// p = X1 X2 + X2 X1 + X1^2 via [[0, X1, X1/2 + X2], [X1, 0, -1], [X1/2 + X2, -1, 0]].
inline LinearPencil pencil_anticommutator_plus_square() {
    LinearPencil p;
    p.dim_n = 3;
    ComplexMatrix b1 = detail::unit_sym(3, 0, 1) + detail::unit_sym(3, 0, 2, 0.5);
    p.coeffs = {detail::unit_sym(3, 1, 2, -1.0), b1, detail::unit_sym(3, 0, 2)};
    return p;
}

/// p = X1 as a 1 x 1 pencil.
inline LinearPencil pencil_identity() {
    LinearPencil p;
    p.dim_n = 1;
    p.coeffs = {ComplexMatrix::Zero(1, 1), ComplexMatrix::Identity(1, 1)};
    return p;
}

/// Evaluates the pencil's polynomial on concrete n x n matrices through the
/// Schur complement of the assembled (N n) x (N n) block matrix.
inline ComplexMatrix pencil_evaluate(const LinearPencil& pencil, const std::vector<ComplexMatrix>& x) {
    pencil.validate();
    if (x.size() != pencil.var_count()) throw InputError("pencil_evaluate: wrong number of substitutions");
    const Eigen::Index n = x.front().rows();
    for (const auto& m : x)
        if (m.rows() != n || m.cols() != n) throw InputError("pencil_evaluate: substitutions must be n x n");
    const auto big_n = static_cast<Eigen::Index>(pencil.dim_n);
    ComplexMatrix l = ComplexMatrix::Zero(big_n * n, big_n * n);
    const ComplexMatrix id = ComplexMatrix::Identity(n, n);
    for (Eigen::Index i = 0; i < big_n; ++i) {
        for (Eigen::Index j = 0; j < big_n; ++j) {
            ComplexMatrix block = pencil.coeffs[0](i, j) * id;
            for (std::size_t k = 0; k < x.size(); ++k) block += pencil.coeffs[k + 1](i, j) * x[k];
            l.block(i * n, j * n, n, n) = block;
        }
    }
    if (big_n == 1) return l;
    const ComplexMatrix q = l.bottomRightCorner((big_n - 1) * n, (big_n - 1) * n);
    const ComplexMatrix u = l.topRightCorner(n, (big_n - 1) * n);
    const ComplexMatrix v = l.bottomLeftCorner((big_n - 1) * n, n);
    return l.topLeftCorner(n, n) - u * q.partialPivLu().solve(v);
}

// ---------------------------------------------------------------------------
// Operator-valued Cauchy transforms
// ---------------------------------------------------------------------------

/// Im M = (M - M^H) / 2i, smallest eigenvalue.
inline double min_imag_eigenvalue(const ComplexMatrix& m) {
    const ComplexMatrix im = (m - m.adjoint()) / cplx(0.0, 2.0);
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(hermitian_part(im), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

enum class OperatorCauchyMethod { exact, quadrature };

namespace detail {

inline cplx law_cauchy(const LawSpec& law, cplx z) { return -stieltjes_law(law, z); }

/// E[(omega - t coeff)^{-1}] with t ~ law, by integrating against the density
/// on the sin^2-substituted support (composite Gauss-Legendre), plus the atom.
inline ComplexMatrix operator_cauchy_quadrature(const ComplexMatrix& omega, const ComplexMatrix& coeff,
                                                const LawSpec& law, double tol) {
    const auto [lo, hi] = law.kind == LawKind::marchenko_pastur ? mp_edges(law.c) : law.support();
    const double width = hi - lo;
    const Eigen::Index n = omega.rows();
    using rule = boost::math::quadrature::gauss<double, 20>;
    auto integrate = [&](int panels) {
        ComplexMatrix acc = ComplexMatrix::Zero(n, n);
        const double h = (std::numbers::pi / 2) / panels;
        const auto& xs = rule::abscissa();
        const auto& ws = rule::weights();
        for (int p = 0; p < panels; ++p) {
            const double mid = (p + 0.5) * h;
            for (std::size_t k = 0; k < xs.size(); ++k) {
                for (int sgn : {-1, 1}) {
                    if (k == 0 && sgn == 1 && xs[0] == 0.0) continue;
                    const double theta = mid + sgn * xs[k] * h / 2;
                    const double s = std::sin(theta);
                    const double t = lo + width * s * s;
                    const double jac = width * std::sin(2.0 * theta);
                    const double weight = ws[k] * h / 2 * jac * law.density(t);
                    if (weight == 0.0) continue;
                    acc += weight * (omega - t * coeff).inverse();
                }
            }
        }
        return acc;
    };
    ComplexMatrix coarse = integrate(64);
    for (int panels = 128; panels <= 8192; panels *= 2) {
        ComplexMatrix fine = integrate(panels);
        const double err = (fine - coarse).cwiseAbs().maxCoeff();
        coarse = std::move(fine);
        if (err <= tol) {
            if (law.atom() > 0.0) coarse += law.atom() * omega.inverse();
            return coarse;
        }
    }
    throw ConvergenceError("operator_cauchy: quadrature did not reach tolerance", coarse(0, 0).real());
}

inline ComplexMatrix operator_cauchy_exact(const ComplexMatrix& omega, const ComplexMatrix& coeff,
                                           const LawSpec& law, double tol) {
    const Eigen::Index n = omega.rows();
    const ComplexMatrix omega_inv = omega.inverse();
    const ComplexMatrix m = omega_inv * coeff;
    const double scale = m.cwiseAbs().maxCoeff();
    if (scale == 0.0) return omega_inv;
    Eigen::ComplexEigenSolver<ComplexMatrix> es(m, true);
    if (es.info() != Eigen::Success) return operator_cauchy_quadrature(omega, coeff, law, tol);
    const ComplexMatrix& v = es.eigenvectors();
    Eigen::JacobiSVD<ComplexMatrix> svd(v);
    const auto& sv = svd.singularValues();
    if (!(sv(n - 1) > 0.0) || sv(0) / sv(n - 1) > 1e8) return operator_cauchy_quadrature(omega, coeff, law, tol);
    ComplexVector g(n);
    for (Eigen::Index k = 0; k < n; ++k) {
        const cplx d = es.eigenvalues()(k);
        // E[1/(1 - t d)] = g(1/d)/d, and 1 at d = 0.
        g(k) = std::abs(d) <= 1e-14 * scale ? cplx(1.0, 0.0) : law_cauchy(law, 1.0 / d) / d;
    }
    return v * g.asDiagonal() * v.inverse() * omega_inv;
}

} // namespace detail

/// G(omega) = E[(omega - coeff x)^{-1}] for a scalar variable x with the given
/// law. The exact method diagonalises omega^{-1} coeff and applies the scalar
/// Cauchy transform to each eigenvalue; it falls back to quadrature when the
/// eigenbasis is ill-conditioned.
inline ComplexMatrix operator_cauchy(const ComplexMatrix& omega, const ComplexMatrix& coeff, const LawSpec& law,
                                     OperatorCauchyMethod method = OperatorCauchyMethod::exact,
                                     double tol = 1e-10) {
    if (omega.rows() != omega.cols() || coeff.rows() != omega.rows() || coeff.cols() != omega.cols())
        throw InputError("operator_cauchy: shape mismatch");
    if (!law.is_real_line()) throw ContractViolation("operator_cauchy: law must live on the real line");
    if (!(min_imag_eigenvalue(omega) > 0.0)) throw InputError("operator_cauchy: Im b is not positive definite");
    return method == OperatorCauchyMethod::exact ? detail::operator_cauchy_exact(omega, coeff, law, tol)
                                                 : detail::operator_cauchy_quadrature(omega, coeff, law, tol);
}

inline ComplexMatrix operator_cauchy_semicircle(const ComplexMatrix& b, const ComplexMatrix& coeff,
                                                OperatorCauchyMethod method = OperatorCauchyMethod::exact) {
    return operator_cauchy(b, coeff, LawSpec::semicircle(), method);
}

// ---------------------------------------------------------------------------
// Subordination
// ---------------------------------------------------------------------------

using OperatorCauchyFn = std::function<ComplexMatrix(const ComplexMatrix&)>;

struct OperatorCauchyState {
    ComplexMatrix b;
    ComplexMatrix omega1;
    ComplexMatrix omega2;
    ComplexMatrix cauchy;    // G_{x+y}(b) = G_x(omega1)
    double residual = INFINITY;
    int iterations = 0;
    bool converged = false;
    bool invariant_ok = true;  // Im omega_j >= Im b at every accepted iterate
    std::vector<double> residual_history;
};

struct SubordinationOptions {
    double tol = 1e-12;
    int max_iter = 100000;
    double alpha = 0.5;
    double alpha_oscillation = 0.1;
    bool record_history = false;
};

/// Fixed point of f_b(omega) = h_y(h_x(omega) + b) + b with h(b) = G(b)^{-1} - b,
/// iterated with damping omega <- (1 - alpha) omega + alpha f_b(omega).
/// Never throws on non-convergence; the returned state is flagged instead.
inline OperatorCauchyState subordination_solve(const OperatorCauchyFn& gx, const OperatorCauchyFn& gy,
                                               const ComplexMatrix& b, SubordinationOptions opt = {},
                                               std::optional<ComplexMatrix> warm_start = std::nullopt) {
    const double delta = min_imag_eigenvalue(b);
    if (!(delta > 0.0)) throw InputError("subordination_solve: Im b must be positive definite");
    const double inv_tol = -1e-9 * std::max(1.0, b.cwiseAbs().maxCoeff());

    auto h = [](const OperatorCauchyFn& g, const ComplexMatrix& w) -> ComplexMatrix {
        return g(w).inverse() - w;
    };

    OperatorCauchyState st;
    st.b = b;
    ComplexMatrix omega = warm_start && min_imag_eigenvalue(*warm_start - b) >= 0.0 ? *warm_start : b;
    double alpha = opt.alpha;
    double previous = INFINITY;
    ComplexMatrix best = omega;
    double best_res = INFINITY;
    for (int it = 1; it <= opt.max_iter; ++it) {
        const ComplexMatrix omega2 = h(gx, omega) + b;
        const ComplexMatrix f = h(gy, omega2) + b;
        const double res = (f - omega).cwiseAbs().maxCoeff();
        if (opt.record_history) st.residual_history.push_back(res);
        st.iterations = it;
        if (res < best_res) {
            best_res = res;
            best = omega;
        }
        if (res <= opt.tol * std::max(1.0, omega.cwiseAbs().maxCoeff())) {
            st.converged = true;
            break;
        }
        if (it > 5 && res > previous) alpha = opt.alpha_oscillation;
        previous = res;
        ComplexMatrix next = (1.0 - alpha) * omega + alpha * f;
        if (min_imag_eigenvalue(next - b) < inv_tol) st.invariant_ok = false;
        omega = std::move(next);
    }
    if (!st.converged) omega = best;
    st.omega1 = omega;
    st.omega2 = h(gx, omega) + b;
    st.cauchy = gx(omega);
    st.residual = best_res;
    if (min_imag_eigenvalue(st.omega1 - b) < inv_tol || min_imag_eigenvalue(st.omega2 - b) < inv_tol)
        st.invariant_ok = false;
    return st;
}

// ---------------------------------------------------------------------------
// Spectra of polynomials
// ---------------------------------------------------------------------------

struct PolynomialCauchyResult {
    cplx cauchy;  // g_P(z) = [ (Lambda_eps(z) - L)^{-1} ]_11, extrapolated over the ladder
    bool converged = true;
    int iterations = 0;
    ComplexMatrix omega1;  // subordination state at the smallest epsilon (for warm starts)
};

/// Cauchy transform of the polynomial encoded by `pencil` at z (Im z > 0),
/// with Lambda_eps(z) = diag(z, i eps, ..., i eps). A ladder with more than one
/// epsilon is extrapolated to eps -> 0.
inline PolynomialCauchyResult polynomial_cauchy(const LinearPencil& pencil, const std::vector<LawSpec>& laws,
                                                cplx z, const std::vector<double>& eps_ladder,
                                                SubordinationOptions opt = {},
                                                std::optional<ComplexMatrix> warm_start = std::nullopt) {
    pencil.validate();
    if (laws.size() != pencil.var_count()) throw InputError("polynomial_cauchy: one law per variable required");
    if (pencil.var_count() > 2) throw InputError("polynomial_cauchy: at most two variables are supported");
    if (!(z.imag() > 0.0)) throw InputError("polynomial_cauchy: Im z must be > 0");
    if (eps_ladder.empty()) throw InputError("polynomial_cauchy: empty epsilon ladder");
    const auto n = static_cast<Eigen::Index>(pencil.dim_n);

    PolynomialCauchyResult out;
    std::vector<cplx> values;
    std::optional<ComplexMatrix> warm = warm_start;
    for (double eps : eps_ladder) {
        if (!(eps > 0.0)) throw InputError("polynomial_cauchy: epsilon must be > 0");
        ComplexMatrix lambda = ComplexMatrix::Identity(n, n) * cplx(0.0, eps);
        lambda(0, 0) = z;
        const ComplexMatrix b = lambda - pencil.coeffs[0];
        ComplexMatrix g;
        if (pencil.var_count() == 1) {
            g = detail::operator_cauchy_exact(b, pencil.coeffs[1], laws[0], 1e-10);
            out.omega1 = b;
        } else {
            const LawSpec lx = laws[0];
            const LawSpec ly = laws[1];
            const ComplexMatrix cx = pencil.coeffs[1];
            const ComplexMatrix cy = pencil.coeffs[2];
            OperatorCauchyFn gx = [&](const ComplexMatrix& w) { return detail::operator_cauchy_exact(w, cx, lx, 1e-10); };
            OperatorCauchyFn gy = [&](const ComplexMatrix& w) { return detail::operator_cauchy_exact(w, cy, ly, 1e-10); };
            const auto st = subordination_solve(gx, gy, b, opt, warm);
            g = st.cauchy;
            out.converged = out.converged && st.converged;
            out.iterations += st.iterations;
            out.omega1 = st.omega1;
            warm = st.omega1;
        }
        values.push_back(g(0, 0));
    }
    std::vector<double> e = eps_ladder;
    for (std::size_t k = 1; k < e.size(); ++k)
        for (std::size_t i = e.size() - 1; i >= k; --i)
            values[i] = (e[i - k] * values[i] - e[i] * values[i - 1]) / (e[i - k] - e[i]);
    out.cauchy = values.back();
    return out;
}

struct DensityTable {
    std::vector<double> x;
    std::vector<double> density;
    std::vector<bool> flagged;  // solver failed; value interpolated from neighbours
    std::size_t flagged_count() const { return static_cast<std::size_t>(std::count(flagged.begin(), flagged.end(), true)); }
    /// Trapezoid integral of the density over the grid.
    double mass() const {
        double m = 0.0;
        for (std::size_t i = 1; i < x.size(); ++i) m += 0.5 * (density[i] + density[i - 1]) * (x[i] - x[i - 1]);
        return m;
    }
};

struct PolynomialSpectrumOptions {
    double eta = 1e-3;                 // distance of evaluation points above the real axis
    std::vector<double> eps_ladder{};  // empty: single epsilon equal to eta
    SubordinationOptions solver{1e-10, 200000, 0.5, 0.1, false};
    std::size_t chunks = 8;            // warm-started contiguous grid segments, fixed for determinism
};

inline std::vector<double> uniform_grid(double lo, double hi, std::size_t points) {
    if (points < 2 || !(hi > lo)) throw InputError("uniform_grid: need >= 2 points over a nonempty interval");
    std::vector<double> g(points);
    for (std::size_t i = 0; i < points; ++i)
        g[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(points - 1);
    return g;
}

/// Density of p(X_1, ..., X_k) on a real grid from -(1/pi) Im g_P(x + i eta).
inline DensityTable polynomial_spectrum(const LinearPencil& pencil, const std::vector<LawSpec>& laws,
                                        const std::vector<double>& grid, PolynomialSpectrumOptions opt = {}) {
    if (grid.empty()) throw InputError("polynomial_spectrum: empty grid");
    if (!(opt.eta > 0.0)) throw InputError("polynomial_spectrum: eta must be > 0");
    const std::vector<double> ladder = opt.eps_ladder.empty() ? std::vector<double>{opt.eta} : opt.eps_ladder;
    DensityTable table;
    table.x = grid;
    table.density.assign(grid.size(), 0.0);
    std::vector<char> failed(grid.size(), 0);
    const std::size_t chunks = std::max<std::size_t>(1, std::min(opt.chunks, grid.size()));
    parallel_for(chunks, [&](std::size_t c) {
        const std::size_t begin = c * grid.size() / chunks;
        const std::size_t end = (c + 1) * grid.size() / chunks;
        std::optional<ComplexMatrix> warm;
        for (std::size_t i = begin; i < end; ++i) {
            try {
                const auto r = polynomial_cauchy(pencil, laws, cplx(grid[i], opt.eta), ladder, opt.solver, warm);
                const double d = -r.cauchy.imag() / std::numbers::pi;
                if (!r.converged || !std::isfinite(d) || d < -1e-6) {
                    failed[i] = 1;
                    warm.reset();
                    continue;
                }
                table.density[i] = std::max(d, 0.0);
                warm = r.omega1;
            } catch (const std::exception&) {
                failed[i] = 1;
                warm.reset();
            }
        }
    });
    table.flagged.assign(grid.size(), false);
    for (std::size_t i = 0; i < grid.size(); ++i) table.flagged[i] = failed[i] != 0;
    // Linear interpolation across failed points from the nearest good neighbours.
    for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!failed[i]) continue;
        std::size_t l = i, r = i;
        while (l > 0 && failed[l]) --l;
        while (r + 1 < grid.size() && failed[r]) ++r;
        const bool lok = !failed[l], rok = !failed[r];
        if (lok && rok && r != l) {
            const double w = (grid[i] - grid[l]) / (grid[r] - grid[l]);
            table.density[i] = (1.0 - w) * table.density[l] + w * table.density[r];
        } else if (lok) {
            table.density[i] = table.density[l];
        } else if (rok) {
            table.density[i] = table.density[r];
        }
    }
    return table;
}

/// CDF of a tabulated density by cumulative trapezoid, normalised to end at 1.
inline std::vector<double> cumulative_distribution(const DensityTable& t) {
    std::vector<double> cdf(t.x.size(), 0.0);
    for (std::size_t i = 1; i < t.x.size(); ++i)
        cdf[i] = cdf[i - 1] + 0.5 * (t.density[i] + t.density[i - 1]) * (t.x[i] - t.x[i - 1]);
    const double total = cdf.empty() ? 0.0 : cdf.back();
    if (total > 0.0)
        for (double& v : cdf) v /= total;
    return cdf;
}

/// sup |F_table - F_sample| over the sample jumps and grid nodes, with the
/// table CDF linearly interpolated.
inline double ks_table_vs_sample(const DensityTable& t, std::vector<double> sample) {
    if (sample.empty() || t.x.size() < 2) throw InputError("ks_table_vs_sample: empty input");
    std::sort(sample.begin(), sample.end());
    const auto cdf = cumulative_distribution(t);
    auto table_cdf = [&](double x) {
        if (x <= t.x.front()) return 0.0;
        if (x >= t.x.back()) return 1.0;
        const auto it = std::upper_bound(t.x.begin(), t.x.end(), x);
        const std::size_t r = static_cast<std::size_t>(it - t.x.begin());
        const std::size_t l = r - 1;
        const double w = (x - t.x[l]) / (t.x[r] - t.x[l]);
        return (1.0 - w) * cdf[l] + w * cdf[r];
    };
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double g = table_cdf(sample[i]);
        d = std::max({d, std::abs(static_cast<double>(i + 1) / n - g), std::abs(static_cast<double>(i) / n - g)});
    }
    return d;
}

// ---------------------------------------------------------------------------
// Monte Carlo comparison
// ---------------------------------------------------------------------------

enum class PolynomialKind { anticommutator, anticommutator_plus_square };
enum class InputEnsemble { gaussian, wishart };

inline LinearPencil pencil_for(PolynomialKind kind) {
    return kind == PolynomialKind::anticommutator ? pencil_anticommutator() : pencil_anticommutator_plus_square();
}

/// Scalar law that the given random-matrix input converges to.
inline LawSpec limit_law(InputEnsemble e, double wishart_c = 1.0) {
    return e == InputEnsemble::gaussian ? LawSpec::semicircle() : LawSpec::marchenko_pastur(wishart_c);
}

inline RealMatrix polynomial_matrix(PolynomialKind kind, const RealMatrix& x1, const RealMatrix& x2) {
    if (x1.rows() != x1.cols() || x2.rows() != x1.rows() || x2.cols() != x1.cols())
        throw InputError("polynomial_matrix: inputs must be square and equal in size");
    RealMatrix p = x1 * x2;
    RealMatrix out = p + p.transpose();
    if (kind == PolynomialKind::anticommutator_plus_square) out.noalias() += x1 * x1;
    return hermitian_part(out);
}

struct MonteCarloConfig {
    PolynomialKind polynomial = PolynomialKind::anticommutator;
    std::array<InputEnsemble, 2> ensembles{InputEnsemble::gaussian, InputEnsemble::gaussian};
    std::size_t n = 1000;
    std::size_t repetitions = 10;
    double eta = 1e-3;        // white-noise scale added to Wishart data matrices
    double wishart_c = 1.0;   // n / T for Wishart inputs
    std::uint64_t seed = 0;
};

/// Random input matrix converging to the semicircle (GOE scaled by 1/sqrt(2n))
/// or to the free Poisson law (standardized noisy data V, S = V V^T / T).
inline RealMatrix sample_input(InputEnsemble e, std::size_t n, double eta, double wishart_c, std::uint64_t seed) {
    const auto m = static_cast<Eigen::Index>(n);
    Rng rng(seed);
    if (e == InputEnsemble::gaussian) {
        const RealMatrix a = rng.gaussian_matrix(m, m);
        return (a + a.transpose()) / std::sqrt(2.0 * static_cast<double>(n));
    }
    if (!(wishart_c > 0.0)) throw InputError("sample_input: wishart_c must be > 0");
    const auto t = static_cast<Eigen::Index>(std::llround(static_cast<double>(n) / wishart_c));
    if (t < 2) throw InputError("sample_input: too few Wishart samples");
    RealMatrix v = rng.gaussian_matrix(m, t);
    v += rng.gaussian_matrix(m, t, eta);
    const RealMatrix z = standardize(v, derive_seed(seed, 1)).matrix;
    RealMatrix s = z * z.transpose() / static_cast<double>(t);
    return hermitian_part(s);
}

/// Pooled eigenvalues of p(S_0, S_1) over independent repetitions, sorted.
inline std::vector<double> monte_carlo_spectrum(const MonteCarloConfig& cfg) {
    if (cfg.n < 2 || cfg.repetitions < 1) throw InputError("monte_carlo_spectrum: need n >= 2 and M >= 1");
    std::vector<std::vector<double>> per(cfg.repetitions);
    parallel_for(cfg.repetitions, [&](std::size_t r) {
        const std::uint64_t base = derive_seed(cfg.seed, r);
        const RealMatrix s0 = sample_input(cfg.ensembles[0], cfg.n, cfg.eta, cfg.wishart_c, derive_seed(base, 0));
        const RealMatrix s1 = sample_input(cfg.ensembles[1], cfg.n, cfg.eta, cfg.wishart_c, derive_seed(base, 1));
        per[r] = eig_hermitian(polynomial_matrix(cfg.polynomial, s0, s1)).values;
    });
    std::vector<double> pooled;
    pooled.reserve(cfg.n * cfg.repetitions);
    for (const auto& v : per) pooled.insert(pooled.end(), v.begin(), v.end());
    std::sort(pooled.begin(), pooled.end());
    return pooled;
}

// ---------------------------------------------------------------------------
// Transform laws through subordination
// ---------------------------------------------------------------------------

/// Cauchy transform of the free additive convolution of two scalar laws via
/// 1 x 1 subordination.
inline CauchyEvaluator free_additive_convolution(const CauchyEvaluator& a, const CauchyEvaluator& b,
                                                 SubordinationOptions opt = {1e-14, 100000, 0.5, 0.1, false}) {
    auto wrap = [](const CauchyEvaluator& e) -> OperatorCauchyFn {
        return [e](const ComplexMatrix& w) {
            ComplexMatrix g(1, 1);
            g(0, 0) = e.cauchy(w(0, 0));
            return g;
        };
    };
    OperatorCauchyFn gx = wrap(a);
    OperatorCauchyFn gy = wrap(b);
    auto cauchy = [gx, gy, opt](cplx z) -> cplx {
        if (z.imag() == 0.0) throw InputError("free_additive_convolution: z must be off the real axis");
        // The subordination fixed point lives in the upper half-plane; use conjugate symmetry below it.
        const bool lower = z.imag() < 0.0;
        ComplexMatrix b(1, 1);
        b(0, 0) = lower ? std::conj(z) : z;
        const auto st = subordination_solve(gx, gy, b, opt);
        if (!st.converged && st.residual > 1e-9)
            throw ConvergenceError("free_additive_convolution: subordination did not converge", st.residual);
        return lower ? std::conj(st.cauchy(0, 0)) : st.cauchy(0, 0);
    };
    return CauchyEvaluator::from_cauchy(cauchy, a.mean() + b.mean());
}

struct AdditivityReport {
    std::vector<cplx> points;
    std::vector<cplx> r_sum;         // R_A(w) + R_B(w)
    std::vector<cplx> r_convolved;   // R_{A boxplus B}(w)
    double max_error = 0.0;
};

/// Compares R_A + R_B with the numeric R transform of the subordination-based
/// free additive convolution at each test point.
inline AdditivityReport verify_r_additivity(const CauchyEvaluator& a, const CauchyEvaluator& b,
                                            const std::vector<cplx>& test_points) {
    const CauchyEvaluator sum = free_additive_convolution(a, b);
    AdditivityReport rep;
    InverseOptions loose{1e-11, 100};
    for (const cplx& w : test_points) {
        const cplx lhs = r_transform_numeric(a, w) + r_transform_numeric(b, w);
        const cplx rhs = r_transform_numeric(sum, w, loose);
        rep.points.push_back(w);
        rep.r_sum.push_back(lhs);
        rep.r_convolved.push_back(rhs);
        rep.max_error = std::max(rep.max_error, std::abs(lhs - rhs));
    }
    return rep;
}

inline AdditivityReport verify_r_additivity(const LawSpec& a, const LawSpec& b, const std::vector<cplx>& test_points) {
    return verify_r_additivity(CauchyEvaluator::from_law(a), CauchyEvaluator::from_law(b), test_points);
}

} // namespace rmtgrid
