// Lagged correlations between pilot columns.

#pragma once

#include "comsens/tensorops.hpp"

#include <vector>

namespace comsens {

/// How a correlation pairs two complex sequences: a^H J b (default) or the literal a^T J b.
enum class CorrelationConvention { hermitian, literal_transpose };

/// a^H J_lag b (or a^T J_lag b), i.e. sum_i a(i)* b(i + lag).
template <class DerivedA, class DerivedB>
cplx correlate(const Eigen::MatrixBase<DerivedA>& a, Index lag, const Eigen::MatrixBase<DerivedB>& b,
               CorrelationConvention convention = CorrelationConvention::hermitian)
{
    const Index n = a.size();
    if (b.size() != n)
        throw DimensionError("correlate: sequence lengths differ");
    cplx acc{0.0, 0.0};
    for (Index i = 0; i < n; ++i) {
        const Index j = i + lag;
        if (j < 0 || j >= n)
            continue;
        const cplx ai = convention == CorrelationConvention::hermitian ? std::conj(cplx(a(i))) : cplx(a(i));
        acc += ai * cplx(b(j));
    }
    return acc;
}

/// Lags on which the cross-correlation must vanish: 0..k, or 1..k when from_one is set.
inline std::vector<Index> cross_lag_set(Index k, bool from_one)
{
    std::vector<Index> lags;
    for (Index m = from_one ? 1 : 0; m <= k; ++m)
        lags.push_back(m);
    return lags;
}

/// Largest |x_q^H J_m y_l| over all column pairs and the given lags.
inline double max_cross_correlation(const ComplexMatrix& x, const ComplexMatrix& y, const std::vector<Index>& lags,
                                    CorrelationConvention convention)
{
    double worst = 0.0;
    for (Index q = 0; q < x.cols(); ++q)
        for (Index l = 0; l < y.cols(); ++l)
            for (Index m : lags)
                worst = std::max(worst, std::abs(correlate(x.col(q), m, y.col(l), convention)));
    return worst;
}

/// Largest |x_q^H J_m x_q| over columns and lags 1..k.
inline double max_autocorrelation_sidelobe(const ComplexMatrix& x, Index k, CorrelationConvention convention)
{
    double worst = 0.0;
    for (Index q = 0; q < x.cols(); ++q)
        for (Index m = 1; m <= k; ++m)
            worst = std::max(worst, std::abs(correlate(x.col(q), m, x.col(q), convention)));
    return worst;
}

inline double max_column_power(const ComplexMatrix& x)
{
    return x.cols() == 0 ? 0.0 : x.colwise().squaredNorm().maxCoeff();
}

} // namespace comsens
