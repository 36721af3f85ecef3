// Channel-estimation MSE and the auxiliary-variable machinery used by the pilot designer.
//
// Training model: Y_rx = H P^T + N, i.e. vec(Y_rx) = (P ⊗ I_{n_r}) vec(H) + vec(N) with
// vec(H) ~ CN(0, R) and vec(N) ~ CN(0, M). The linear MMSE error covariance is
//   theta = (R^-1 + P~^H M^-1 P~)^-1 = R - R P~^H (M + P~ R P~^H)^-1 P~ R,
// and MSE(P) = tr(theta).

#pragma once

#include "comsens/covariance.hpp"
#include "comsens/tensorops.hpp"

namespace comsens {

/// Pilot matrix, one row per training symbol and one column per transmit antenna.
using PilotMatrix = ComplexMatrix;

namespace detail {

inline void check_pilot(const PilotMatrix& p, const ChannelScenario& s)
{
    if (p.rows() != s.b || p.cols() != s.n_t)
        throw DimensionError("pilot is " + dims(p) + " but scenario expects " + std::to_string(s.b) + "x" +
                             std::to_string(s.n_t));
}

/// M + P~ R P~^H
inline ComplexMatrix innovation_covariance(const ComplexMatrix& embedded, const ChannelScenario& s)
{
    ComplexMatrix inner = s.M + embedded * s.R * embedded.adjoint();
    return 0.5 * (inner + inner.adjoint());
}

} // namespace detail

/// MSE from the information form: tr[(R^-1 + P~^H M^-1 P~)^-1]. Cross-check route only.
inline double channel_mse_direct(const PilotMatrix& p, const ChannelScenario& s)
{
    detail::check_pilot(p, s);
    const ComplexMatrix pt = embed_pilot(p, s.n_r);
    const Index n = s.channel_dim();
    const ComplexMatrix r_inv = hermitian_solve(s.R, ComplexMatrix::Identity(n, n));
    ComplexMatrix info = r_inv + pt.adjoint() * hermitian_solve(s.M, pt);
    info = 0.5 * (info + info.adjoint());
    return hermitian_solve(info, ComplexMatrix::Identity(n, n)).trace().real();
}

/// Error covariance theta via the matrix inversion lemma (no inverse of R).
inline ComplexMatrix error_covariance(const PilotMatrix& p, const ChannelScenario& s)
{
    detail::check_pilot(p, s);
    const ComplexMatrix pt = embed_pilot(p, s.n_r);
    const ComplexMatrix cross = pt * s.R; // P~ R
    ComplexMatrix theta = s.R - cross.adjoint() * hermitian_solve(detail::innovation_covariance(pt, s), cross);
    return 0.5 * (theta + theta.adjoint());
}

inline double channel_mse_lemma(const PilotMatrix& p, const ChannelScenario& s)
{
    return error_covariance(p, s).trace().real();
}

/// Q = [[R, R P~^H], [P~ R, M + P~ R P~^H]].
inline ComplexMatrix build_Q(const PilotMatrix& p, const ChannelScenario& s)
{
    detail::check_pilot(p, s);
    const ComplexMatrix pt = embed_pilot(p, s.n_r);
    const Index n = s.channel_dim();
    const Index m = s.observation_dim();
    ComplexMatrix q(n + m, n + m);
    q.topLeftCorner(n, n) = s.R;
    q.bottomLeftCorner(m, n) = pt * s.R;
    q.topRightCorner(n, m) = q.bottomLeftCorner(m, n).adjoint();
    q.bottomRightCorner(m, m) = detail::innovation_covariance(pt, s);
    return q;
}

/// Selector U = [I; 0] of size (B + n_t) n_r x n_t n_r.
inline ComplexMatrix selector_U(const ChannelScenario& s)
{
    const Index n = s.channel_dim();
    ComplexMatrix u = ComplexMatrix::Zero(n + s.observation_dim(), n);
    u.topRows(n).setIdentity();
    return u;
}

/// Auxiliary variable V = [V1; V2], V1 square of size n_t n_r and V2 with B n_r rows.
class AuxiliaryV {
public:
    AuxiliaryV(ComplexMatrix v, Index channel_dim) : v_(std::move(v)), n_(channel_dim)
    {
        if (v_.cols() != n_ || v_.rows() < n_)
            throw DimensionError("AuxiliaryV: expected n x n top block with n = " + std::to_string(n_) + ", got " +
                                 detail::dims(v_));
    }

    const ComplexMatrix& matrix() const { return v_; }
    auto top() const { return v_.topRows(n_); }
    auto bottom() const { return v_.bottomRows(v_.rows() - n_); }
    Index channel_dim() const { return n_; }

private:
    ComplexMatrix v_;
    Index n_;
};

/// Minimizer of F(., P) over V with V1 = I: V* = [I; -(M + P~ R P~^H)^-1 P~ R].
inline AuxiliaryV optimal_V(const PilotMatrix& p, const ChannelScenario& s)
{
    detail::check_pilot(p, s);
    const ComplexMatrix pt = embed_pilot(p, s.n_r);
    const Index n = s.channel_dim();
    ComplexMatrix v(n + s.observation_dim(), n);
    v.topRows(n).setIdentity();
    v.bottomRows(s.observation_dim()) = -hermitian_solve(detail::innovation_covariance(pt, s), pt * s.R);
    return {std::move(v), n};
}

/// F(V, P) = tr(V^H Q V).
inline double surrogate_F(const AuxiliaryV& v, const PilotMatrix& p, const ChannelScenario& s)
{
    const ComplexMatrix q = build_Q(p, s);
    if (v.matrix().rows() != q.rows())
        throw DimensionError("surrogate_F: V has " + std::to_string(v.matrix().rows()) + " rows, Q has " +
                             std::to_string(q.rows()));
    return (v.matrix().adjoint() * q * v.matrix()).trace().real();
}

/// One draw of the training-phase model.
struct TrainingRealization {
    ComplexMatrix H;   ///< n_r x n_t
    ComplexMatrix N;   ///< n_r x B
    ComplexMatrix Yrx; ///< n_r x B, equal to H P^T + N
};

/// Reusable sampler for the training model; the covariance factors are computed once.
class TrainingSimulator {
public:
    explicit TrainingSimulator(const ChannelScenario& s)
        : scenario_(s), channel_factor_(psd_factor(s.R)), noise_factor_(psd_factor(s.M))
    {
    }

    /// Draws H and N; with with_noise = false the noise term is zeroed.
    TrainingRealization draw(const PilotMatrix& p, std::mt19937_64& rng, bool with_noise = true) const
    {
        detail::check_pilot(p, scenario_);
        TrainingRealization out;
        const ComplexVector h = channel_factor_ * standard_normal(scenario_.channel_dim(), rng);
        out.H = h.reshaped(scenario_.n_r, scenario_.n_t);
        const ComplexVector n = noise_factor_ * standard_normal(scenario_.observation_dim(), rng);
        out.N = with_noise ? ComplexMatrix(n.reshaped(scenario_.n_r, scenario_.b))
                           : ComplexMatrix::Zero(scenario_.n_r, scenario_.b);
        out.Yrx = out.H * p.transpose() + out.N;
        return out;
    }

    /// Standard circular complex normal vector: real and imaginary parts N(0, 1/2).
    static ComplexVector standard_normal(Index n, std::mt19937_64& rng)
    {
        std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
        ComplexVector w(n);
        for (Index i = 0; i < n; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            w(i) = cplx(re, im);
        }
        return w;
    }

private:
    ChannelScenario scenario_;
    ComplexMatrix channel_factor_;
    ComplexMatrix noise_factor_;
};

inline TrainingRealization simulate_training(const PilotMatrix& p, const ChannelScenario& s, std::uint64_t seed,
                                             bool with_noise = true)
{
    std::mt19937_64 rng(seed);
    return TrainingSimulator(s).draw(p, rng, with_noise);
}

/// Linear MMSE estimator matrix W with vec(H^) = W vec(Y_rx).
inline ComplexMatrix mmse_gain(const PilotMatrix& p, const ChannelScenario& s)
{
    detail::check_pilot(p, s);
    const ComplexMatrix pt = embed_pilot(p, s.n_r);
    const ComplexMatrix cross = pt * s.R;
    return hermitian_solve(detail::innovation_covariance(pt, s), cross).adjoint();
}

inline ComplexMatrix mmse_estimate(const ComplexMatrix& yrx, const PilotMatrix& p, const ChannelScenario& s)
{
    if (yrx.rows() != s.n_r || yrx.cols() != s.b)
        throw DimensionError("mmse_estimate: observation is " + detail::dims(yrx));
    const ComplexVector h = mmse_gain(p, s) * yrx.reshaped();
    return h.reshaped(s.n_r, s.n_t);
}

} // namespace comsens
