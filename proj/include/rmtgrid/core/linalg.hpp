#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "rmtgrid/core/errors.hpp"

namespace rmtgrid {

using cplx = std::complex<double>;
using RealMatrix = Eigen::MatrixXd;
using ComplexMatrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;
using ComplexVector = Eigen::VectorXcd;

enum class SpectrumKind { eigen_hermitian, eigen_general, singular };

/// Eigenvalues (or singular values) of one matrix plus the shape it came from.
/// Real spectra live in `values`, sorted ascending. General (non-normal)
/// spectra live in `complex_values`, sorted by real then imaginary part.
struct SpectrumSample {
    SpectrumKind kind = SpectrumKind::eigen_hermitian;
    std::vector<double> values;
    std::vector<cplx> complex_values;
    std::size_t n = 0;
    std::optional<std::size_t> t;

    std::size_t size() const {
        return kind == SpectrumKind::eigen_general ? complex_values.size() : values.size();
    }
    bool is_real() const { return kind != SpectrumKind::eigen_general; }
};

/// Builds a real spectrum from arbitrary values (sorted on the way in).
inline SpectrumSample make_real_spectrum(std::vector<double> values,
                                         SpectrumKind kind = SpectrumKind::eigen_hermitian) {
    std::sort(values.begin(), values.end());
    SpectrumSample s;
    s.kind = kind;
    s.n = values.size();
    s.values = std::move(values);
    return s;
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& a, const char* op) {
    if (!a.allFinite()) {
        throw InputError(std::string(op) + ": matrix has non-finite entries");
    }
}

/// max|A - A^H| / max|A| (0 for the zero matrix).
template <typename Derived>
double hermitian_defect(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() != a.cols()) return INFINITY;
    const double scale = a.cwiseAbs().maxCoeff();
    if (scale == 0.0) return 0.0;
    return (a - a.adjoint()).cwiseAbs().maxCoeff() / scale;
}

template <typename Derived>
bool is_hermitian(const Eigen::MatrixBase<Derived>& a, double tol = 1e-12) {
    return hermitian_defect(a) <= tol;
}

template <typename Derived>
auto hermitian_part(const Eigen::MatrixBase<Derived>& a) {
    using Plain = typename Derived::PlainObject;
    Plain h = (a + a.adjoint()) / 2.0;
    return h;
}

namespace detail {
template <typename Derived>
void check_hermitian_input(const Eigen::MatrixBase<Derived>& a, const char* op) {
    if (a.rows() < 1 || a.cols() < 1) throw InputError(std::string(op) + ": empty matrix");
    require_finite(a, op);
    if (a.rows() != a.cols()) throw ContractViolation(std::string(op) + ": matrix is not square");
    if (!is_hermitian(a)) {
        throw ContractViolation(std::string(op) + ": matrix is not Hermitian (defect " +
                                std::to_string(hermitian_defect(a)) + ")");
    }
}

inline void sort_complex(std::vector<cplx>& v) {
    std::sort(v.begin(), v.end(), [](const cplx& x, const cplx& y) {
        return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
    });
}
} // namespace detail

/// Real eigenvalues of a Hermitian (or real symmetric) matrix, ascending.
template <typename Derived>
SpectrumSample eig_hermitian(const Eigen::MatrixBase<Derived>& a) {
    detail::check_hermitian_input(a, "eig_hermitian");
    using Plain = typename Derived::PlainObject;
    Eigen::SelfAdjointEigenSolver<Plain> solver(a.derived(), Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("eig_hermitian: eigensolver failed", NAN);
    }
    const auto& ev = solver.eigenvalues();
    return make_real_spectrum(std::vector<double>(ev.data(), ev.data() + ev.size()));
}

template <typename Scalar>
struct HermitianEigenpairs {
    std::vector<double> values;
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> vectors;  // columns, same order as values
};

/// Eigenvalues and eigenvectors; A = Q diag(values) Q^H.
template <typename Derived>
HermitianEigenpairs<typename Derived::Scalar> eig_hermitian_vectors(const Eigen::MatrixBase<Derived>& a) {
    detail::check_hermitian_input(a, "eig_hermitian_vectors");
    using Plain = typename Derived::PlainObject;
    Eigen::SelfAdjointEigenSolver<Plain> solver(a.derived(), Eigen::ComputeEigenvectors);
    if (solver.info() != Eigen::Success) {
        throw ConvergenceError("eig_hermitian_vectors: eigensolver failed", NAN);
    }
    HermitianEigenpairs<typename Derived::Scalar> out;
    const auto& ev = solver.eigenvalues();
    out.values.assign(ev.data(), ev.data() + ev.size());
    out.vectors = solver.eigenvectors();
    return out;
}

/// Eigenvalues of a general square matrix (complex in general).
template <typename Derived>
SpectrumSample eig_general(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() != a.cols()) throw InputError("eig_general: matrix is not square");
    if (a.rows() < 1) throw InputError("eig_general: empty matrix");
    require_finite(a, "eig_general");
    using Scalar = typename Derived::Scalar;
    SpectrumSample s;
    s.kind = SpectrumKind::eigen_general;
    s.n = static_cast<std::size_t>(a.rows());
    if constexpr (Eigen::NumTraits<Scalar>::IsComplex) {
        Eigen::ComplexEigenSolver<ComplexMatrix> solver(a.derived(), false);
        if (solver.info() != Eigen::Success) throw ConvergenceError("eig_general: eigensolver failed", NAN);
        const auto& ev = solver.eigenvalues();
        s.complex_values.assign(ev.data(), ev.data() + ev.size());
    } else {
        Eigen::EigenSolver<RealMatrix> solver(a.derived().template cast<double>(), false);
        if (solver.info() != Eigen::Success) throw ConvergenceError("eig_general: eigensolver failed", NAN);
        const auto& ev = solver.eigenvalues();
        s.complex_values.assign(ev.data(), ev.data() + ev.size());
    }
    detail::sort_complex(s.complex_values);
    return s;
}

/// Singular values, sorted ascending in the returned sample.
template <typename Derived>
SpectrumSample svd_values(const Eigen::MatrixBase<Derived>& a) {
    if (a.rows() < 1 || a.cols() < 1) throw InputError("svd_values: empty matrix");
    require_finite(a, "svd_values");
    using Plain = typename Derived::PlainObject;
    Eigen::BDCSVD<Plain> svd(a.derived());
    const auto& sv = svd.singularValues();
    SpectrumSample s = make_real_spectrum(std::vector<double>(sv.data(), sv.data() + sv.size()),
                                          SpectrumKind::singular);
    s.n = static_cast<std::size_t>(a.rows());
    s.t = static_cast<std::size_t>(a.cols());
    return s;
}

/// 2-norm condition number via the singular values.
template <typename Derived>
double condition_number(const Eigen::MatrixBase<Derived>& a) {
    const SpectrumSample s = svd_values(a);
    const double lo = s.values.front();
    return lo > 0.0 ? s.values.back() / lo : INFINITY;
}

} // namespace rmtgrid
