// Random instances and brute-force oracles shared by the test suites.

#pragma once

#include "comsens/covariance.hpp"
#include "comsens/tensorops.hpp"

#include <random>

namespace comsens::testing {

inline ComplexMatrix random_matrix(Index rows, Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> n;
    ComplexMatrix m(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            m(i, j) = cplx(n(rng), n(rng));
    return m;
}

/// Hermitian positive definite with eigenvalues spread over [floor, 1 + floor] scale.
inline ComplexMatrix random_hpd(Index n, std::mt19937_64& rng, double floor = 0.1)
{
    const ComplexMatrix a = random_matrix(n, n, rng);
    ComplexMatrix h = a * a.adjoint() / static_cast<double>(n);
    h.diagonal().array() += floor;
    return 0.5 * (h + h.adjoint());
}

/// Scenario with unstructured random covariances, unit trace.
inline ChannelScenario random_scenario(Index n_t, Index n_r, Index b, std::mt19937_64& rng)
{
    ChannelScenario s;
    s.n_t = n_t;
    s.n_r = n_r;
    s.b = b;
    s.R = random_hpd(n_t * n_r, rng);
    s.R /= s.R.trace().real();
    s.M = random_hpd(b * n_r, rng);
    s.M /= s.M.trace().real();
    s.gamma = static_cast<double>(b * n_t);
    return s;
}

/// Shift matrix straight from its definition: ones where column - row == lag.
inline RealMatrix shift_oracle(Index b, Index lag)
{
    RealMatrix j = RealMatrix::Zero(b, b);
    for (Index r = 0; r < b; ++r)
        for (Index c = 0; c < b; ++c)
            if (c - r == lag)
                j(r, c) = 1.0;
    return j;
}

/// x^H J y by dense matrix products.
inline cplx dense_correlation(const ComplexVector& x, Index lag, const ComplexVector& y)
{
    return (x.adjoint() * shift_oracle(x.size(), lag).cast<cplx>() * y)(0, 0);
}

inline double relative_error(double a, double b)
{
    return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

} // namespace comsens::testing
