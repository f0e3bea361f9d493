#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "rmtgrid/core/errors.hpp"
#include "rmtgrid/core/linalg.hpp"
#include "rmtgrid/core/random.hpp"

namespace rmtgrid {

enum class EnsembleKind { gue, lue, ginibre, gaussian_rect };
enum class AtomKind { gaussian, rademacher };

/// Parameters of a seeded ensemble draw. For lue and gaussian_rect `n` is the
/// row count p and `t` the sample count T.
struct EnsembleSpec {
    EnsembleKind kind = EnsembleKind::gue;
    std::size_t n = 1;
    std::size_t t = 0;
    double sigma = 1.0;
    std::uint64_t seed = 0;
    AtomKind atom = AtomKind::gaussian;

    void validate() const {
        if (n < 1) throw InputError("EnsembleSpec: n must be >= 1");
        if ((kind == EnsembleKind::lue || kind == EnsembleKind::gaussian_rect) && t < 1)
            throw InputError("EnsembleSpec: t must be >= 1");
        if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InputError("EnsembleSpec: sigma must be > 0");
    }
};

/// Hermitian Y = (X + X^H)/2 normalised so that off-diagonal entries have
/// Re, Im ~ N(0, sigma^2/2) and diagonal entries are real N(0, sigma^2).
/// With the rademacher atom the matrix is real symmetric with +-sigma
/// off-diagonal entries and zero diagonal.
inline ComplexMatrix sample_gue(const EnsembleSpec& spec) {
    spec.validate();
    if (spec.kind != EnsembleKind::gue) throw ContractViolation("sample_gue: spec kind is not gue");
    const auto n = static_cast<Eigen::Index>(spec.n);
    Rng rng(spec.seed);
    ComplexMatrix y(n, n);
    const double off_sd = spec.sigma / std::sqrt(2.0);
    for (Eigen::Index j = 0; j < n; ++j) {
        if (spec.atom == AtomKind::rademacher) {
            y(j, j) = 0.0;
            for (Eigen::Index i = j + 1; i < n; ++i) {
                y(i, j) = spec.sigma * rng.rademacher();
                y(j, i) = y(i, j);
            }
            continue;
        }
        y(j, j) = cplx(rng.gaussian(spec.sigma), 0.0);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            const double re = rng.gaussian(off_sd);
            const double im = rng.gaussian(off_sd);
            y(i, j) = cplx(re, im);
            y(j, i) = std::conj(y(i, j));
        }
    }
    return y;
}

/// p x T real Gaussian data matrix with N(0, sigma^2) entries.
inline RealMatrix sample_gaussian_rect(const EnsembleSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const auto p = static_cast<Eigen::Index>(spec.n);
    const auto t = static_cast<Eigen::Index>(spec.t);
    if (spec.atom == AtomKind::rademacher) {
        RealMatrix m(p, t);
        for (Eigen::Index j = 0; j < t; ++j)
            for (Eigen::Index i = 0; i < p; ++i) m(i, j) = spec.sigma * rng.rademacher();
        return m;
    }
    return rng.gaussian_matrix(p, t, spec.sigma);
}

/// Complex Wishart (LUE) W = X X^H / T for X p x T with E|x_ij|^2 = sigma^2.
inline ComplexMatrix sample_lue(const EnsembleSpec& spec) {
    spec.validate();
    if (spec.kind != EnsembleKind::lue) throw ContractViolation("sample_lue: spec kind is not lue");
    Rng rng(spec.seed);
    const ComplexMatrix x = rng.complex_gaussian_matrix(static_cast<Eigen::Index>(spec.n),
                                                        static_cast<Eigen::Index>(spec.t),
                                                        spec.sigma * spec.sigma);
    ComplexMatrix w = x * x.adjoint() / static_cast<double>(spec.t);
    return hermitian_part(w);
}

/// Square iid matrix with real N(0, sigma^2) entries.
inline RealMatrix sample_ginibre(const EnsembleSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const auto n = static_cast<Eigen::Index>(spec.n);
    return rng.gaussian_matrix(n, n, spec.sigma);
}

/// Square iid matrix with complex entries, E|x_ij|^2 = sigma^2.
inline ComplexMatrix sample_ginibre_complex(const EnsembleSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    const auto n = static_cast<Eigen::Index>(spec.n);
    return rng.complex_gaussian_matrix(n, n, spec.sigma * spec.sigma);
}

/// Haar-distributed n x n unitary: QR of a complex Ginibre matrix with the
/// phases of diag(R) moved into Q.
inline ComplexMatrix haar_unitary(std::size_t n, std::uint64_t seed) {
    if (n < 1) throw InputError("haar_unitary: n must be >= 1");
    Rng rng(seed);
    const auto m = static_cast<Eigen::Index>(n);
    const ComplexMatrix g = rng.complex_gaussian_matrix(m, m);
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(m, m);
    const ComplexMatrix& r = qr.matrixQR();
    for (Eigen::Index k = 0; k < m; ++k) {
        const cplx d = r(k, k);
        const double mag = std::abs(d);
        q.col(k) *= (mag > 0.0 ? d / mag : cplx(1.0, 0.0));
    }
    return q;
}

struct StandardizedMatrix {
    RealMatrix matrix;
    /// Rows that were constant and got replaced by seeded N(0,1) noise.
    std::vector<std::size_t> replaced_rows;

    bool degenerate() const { return !replaced_rows.empty(); }
};

/// Row-wise standardisation to mean 0 and variance 1, where variance uses the
/// 1/T normalisation so that (1/T) X X^T has unit diagonal exactly. Constant
/// rows are replaced by standardised N(0,1) noise drawn from `seed`.
inline StandardizedMatrix standardize(const RealMatrix& a, std::uint64_t seed = 0) {
    require_finite(a, "standardize");
    if (a.cols() < 2) throw InputError("standardize: need at least two columns");
    StandardizedMatrix out;
    out.matrix.resize(a.rows(), a.cols());
    const double t = static_cast<double>(a.cols());
    auto normalise_row = [&](Eigen::Index i, const RealVector& row) -> bool {
        const double mean = row.mean();
        const RealVector centred = row.array() - mean;
        const double sd = std::sqrt(centred.squaredNorm() / t);
        const double scale = row.cwiseAbs().maxCoeff();
        if (!(sd > 1e-13 * std::max(scale, 1e-300))) return false;
        out.matrix.row(i) = centred.transpose() / sd;
        return true;
    };
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        if (normalise_row(i, a.row(i).transpose())) continue;
        out.replaced_rows.push_back(static_cast<std::size_t>(i));
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
        RealVector noise(a.cols());
        for (Eigen::Index j = 0; j < a.cols(); ++j) noise(j) = rng.gaussian();
        normalise_row(i, noise);
    }
    return out;
}

/// Square matrix sharing the singular values of X / sqrt(T) (up to a global
/// factor) with Haar-random eigenvector structure: X_u = U sqrt(X X^T / T),
/// rescaled so that the mean squared entry equals 1/p.
inline ComplexMatrix singular_value_equivalent(const RealMatrix& x, std::uint64_t seed) {
    require_finite(x, "singular_value_equivalent");
    const auto p = x.rows();
    const auto t = x.cols();
    if (p > t) throw InputError("singular_value_equivalent: rows exceed columns (p > T)");
    RealMatrix cov = x * x.transpose() / static_cast<double>(t);
    cov = hermitian_part(cov);
    const auto eig = eig_hermitian_vectors(cov);
    RealVector root(p);
    for (Eigen::Index k = 0; k < p; ++k) root(k) = std::sqrt(std::max(eig.values[k], 0.0));
    const RealMatrix sqrt_cov = eig.vectors * root.asDiagonal() * eig.vectors.transpose();
    ComplexMatrix xu = haar_unitary(static_cast<std::size_t>(p), seed) * sqrt_cov.cast<cplx>();
    const double frob2 = xu.squaredNorm();
    if (frob2 > 0.0) xu *= std::sqrt(static_cast<double>(p) / frob2);
    return xu;
}

} // namespace rmtgrid
