#pragma once
// Free multiplicative convolution of the semicircle square with M-P(c), built
// from the pencil of p = X1 X2 X1 so that only the additive subordination
// solver is exercised. Used as the convolution oracle for S-multiplication.

#include <complex>
#include <vector>

#include "rmtgrid/free_probability.hpp"
#include "rmtgrid/transforms.hpp"

namespace oracle {

/// [[0, 0, X1], [0, X2, -1], [X1, -1, 0]]: the Schur complement of the (1,1)
/// corner is X1 X2 X1.
inline rmtgrid::LinearPencil pencil_sandwich() {
    using rmtgrid::ComplexMatrix;
    rmtgrid::LinearPencil p;
    p.dim_n = 3;
    ComplexMatrix b0 = ComplexMatrix::Zero(3, 3);
    b0(1, 2) = b0(2, 1) = -1.0;
    ComplexMatrix b1 = ComplexMatrix::Zero(3, 3);
    b1(0, 2) = b1(2, 0) = 1.0;
    ComplexMatrix b2 = ComplexMatrix::Zero(3, 3);
    b2(1, 1) = 1.0;
    p.coeffs = {b0, b1, b2};
    return p;
}

/// Law of X1 X2 X1 with X1 semicircular and X2 ~ M-P(c), free. Its S transform
/// is S_{X1^2} S_{X2} = 1 / ((1 + z)(1 + c z)).
inline rmtgrid::CauchyEvaluator sandwich_law(double c, std::vector<double> ladder = {4e-3, 2e-3, 1e-3}) {
    using rmtgrid::cplx;
    const auto pencil = pencil_sandwich();
    const std::vector<rmtgrid::LawSpec> laws{rmtgrid::LawSpec::semicircle(),
                                             rmtgrid::LawSpec::marchenko_pastur(c)};
    rmtgrid::SubordinationOptions opt{1e-14, 200000, 0.5, 0.1, false};
    auto g = [pencil, laws, ladder, opt](cplx z) -> cplx {
        const bool lower = z.imag() < 0.0;
        const cplx zu = lower ? std::conj(z) : z;
        const cplx v = rmtgrid::polynomial_cauchy(pencil, laws, zu, ladder, opt).cauchy;
        return lower ? std::conj(v) : v;
    };
    return rmtgrid::CauchyEvaluator::from_cauchy(g, 1.0);
}

} // namespace oracle
