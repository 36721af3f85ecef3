// Exponential-model, Kronecker-structured channel and noise covariances.

#pragma once

#include "comsens/tensorops.hpp"

#include <numbers>
#include <optional>

namespace comsens {

/// One-parameter correlation profile C(k, l) = rho^(l - k) for k <= l.
struct ExponentialParams {
    Index n = 1;
    cplx rho{0.0, 0.0};
};

inline ComplexMatrix exponential_covariance(const ExponentialParams& params)
{
    if (params.n < 1)
        throw std::invalid_argument("exponential_covariance: dimension must be >= 1");
    if (!(std::abs(params.rho) < 1.0))
        throw std::invalid_argument("exponential_covariance: |rho| must be < 1, got " +
                                    std::to_string(std::abs(params.rho)));
    ComplexMatrix c(params.n, params.n);
    for (Index k = 0; k < params.n; ++k) {
        c(k, k) = 1.0;
        cplx power{1.0, 0.0};
        for (Index l = k + 1; l < params.n; ++l) {
            power *= params.rho;
            c(k, l) = power;
            c(l, k) = std::conj(power);
        }
    }
    return c;
}

/// Generation parameters for a link. Each correlation coefficient is magnitude * exp(-j * phase).
struct CovarianceParams {
    double rho_rt = 0.9;  ///< transmit-side channel correlation magnitude
    double rho_rr = 0.65; ///< receive-side channel correlation magnitude (also the noise receive side)
    double rho_mt = 0.8;  ///< temporal noise correlation magnitude
    double theta_rt = 0.8349 * std::numbers::pi;
    double theta_rr = 0.4289 * std::numbers::pi;
    double theta_mt = 0.5361 * std::numbers::pi;
    std::optional<double> gamma; ///< total training energy; B * n_T when unset

    cplx coefficient_rt() const { return std::polar(rho_rt, -theta_rt); }
    cplx coefficient_rr() const { return std::polar(rho_rr, -theta_rr); }
    cplx coefficient_mt() const { return std::polar(rho_mt, -theta_mt); }

    /// Same magnitudes with phases drawn uniformly from [0, 2 pi).
    static CovarianceParams with_random_phases(std::uint64_t seed)
    {
        std::mt19937_64 rng(seed);
        std::uniform_real_distribution<double> uniform(0.0, 2.0 * std::numbers::pi);
        CovarianceParams p;
        p.theta_rt = uniform(rng);
        p.theta_rr = uniform(rng);
        p.theta_mt = uniform(rng);
        return p;
    }
};

/// Covariances of one link direction. R is (n_t n_r)^2, M is (B n_r)^2.
struct ChannelScenario {
    Index n_t = 1;
    Index n_r = 1;
    Index b = 1;
    ComplexMatrix R;
    ComplexMatrix M;
    double gamma = 1.0;
    CovarianceParams params;

    Index channel_dim() const { return n_t * n_r; }
    Index observation_dim() const { return b * n_r; }
};

namespace detail {

inline ComplexMatrix unit_trace(ComplexMatrix c)
{
    const double tr = c.trace().real();
    if (!(tr > 0.0))
        throw std::invalid_argument("covariance has non-positive trace");
    c /= tr;
    // exact Hermitian symmetry
    ComplexMatrix h = 0.5 * (c + c.adjoint());
    return h;
}

inline void check_magnitude(double mag, const char* name)
{
    if (!(mag >= 0.0 && mag < 1.0))
        throw std::invalid_argument(std::string("correlation magnitude ") + name + " must be in [0, 1), got " +
                                    std::to_string(mag));
}

/// Noise covariance M_T^T ⊗ M_R with M_T the B x B temporal profile and M_R at n_r.
inline ComplexMatrix noise_covariance(Index b, Index n_r, const CovarianceParams& p)
{
    const ComplexMatrix m_t = exponential_covariance({b, p.coefficient_mt()});
    const ComplexMatrix m_r = exponential_covariance({n_r, p.coefficient_rr()});
    return unit_trace(kron(m_t.transpose(), m_r));
}

} // namespace detail

inline ChannelScenario build_scenario(Index n_t, Index n_r, Index b, const CovarianceParams& params = {})
{
    if (n_t < 1 || n_r < 1 || b < 1)
        throw std::invalid_argument("build_scenario: dimensions must be >= 1");
    detail::check_magnitude(params.rho_rt, "rho_rt");
    detail::check_magnitude(params.rho_rr, "rho_rr");
    detail::check_magnitude(params.rho_mt, "rho_mt");
    if (params.gamma && !(*params.gamma > 0.0))
        throw std::invalid_argument("build_scenario: gamma must be > 0");

    ChannelScenario s;
    s.n_t = n_t;
    s.n_r = n_r;
    s.b = b;
    s.params = params;
    const ComplexMatrix r_t = exponential_covariance({n_t, params.coefficient_rt()});
    const ComplexMatrix r_r = exponential_covariance({n_r, params.coefficient_rr()});
    s.R = detail::unit_trace(kron(r_t.transpose(), r_r));
    s.M = detail::noise_covariance(b, n_r, params);
    s.gamma = params.gamma.value_or(static_cast<double>(b * n_t));
    return s;
}

/// Permutation matrix K with vec(H^T) = K vec(H) for H of size rows x cols.
inline RealMatrix commutation_matrix(Index rows, Index cols)
{
    RealMatrix k = RealMatrix::Zero(rows * cols, rows * cols);
    for (Index r = 0; r < rows; ++r)
        for (Index c = 0; c < cols; ++c)
            k(r * cols + c, c * rows + r) = 1.0;
    return k;
}

/// Reverse link of a TDD pair: transmitter and receiver roles swapped.
///
/// The channel covariance follows H -> H^T by permutation congruence. The noise covariance is
/// regenerated from the stored parameters at the swapped receive dimension. gamma becomes
/// B * (new n_t) unless it was set explicitly.
inline ChannelScenario reciprocal_scenario(const ChannelScenario& s)
{
    ChannelScenario u;
    u.n_t = s.n_r;
    u.n_r = s.n_t;
    u.b = s.b;
    u.params = s.params;
    const RealMatrix k = commutation_matrix(s.n_r, s.n_t);
    u.R = k.cast<cplx>() * s.R * k.transpose().cast<cplx>();
    u.M = detail::noise_covariance(u.b, u.n_r, u.params);
    u.gamma = s.params.gamma.value_or(static_cast<double>(u.b * u.n_t));
    return u;
}

} // namespace comsens
