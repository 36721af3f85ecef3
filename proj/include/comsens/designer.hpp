// Cyclic design of paired downlink (X) / uplink (Y) pilot matrices.
//
// Outer loop: for fixed pilots, take the minimizing auxiliary V of F(V, P); with V fixed, F is a
// convex quadratic in P and is replaced by an isotropic majorizer lambda ||P - P_sigma||^2 tight at
// the current pilot. The inner loop then alternates exact constrained projections of X and Y onto
// their targets. Each pass can only lower F(V, .), hence the total MSE.

#pragma once

#include "comsens/correlation.hpp"
#include "comsens/covariance.hpp"
#include "comsens/estimation.hpp"
#include "comsens/projection.hpp"

#include <chrono>
#include <optional>
#include <string>
#include <vector>

namespace comsens {

enum class InitStrategy {
    time_split, ///< Y random on the first floor(B/2) symbols, X random on the rest
    gaussian,   ///< dense Gaussian X and Y, Y then projected against X
};

struct DesignConfig {
    Index k = 4;                       ///< zero-correlation-zone depth in lags
    std::optional<double> p_downlink;  ///< per-column power bound for X; gamma_dl / n_t when unset
    std::optional<double> p_uplink;    ///< per-column power bound for Y; gamma_ul / n_r when unset
    double epsilon = 1e-5;             ///< cross-correlation tolerance checked on exit
    double eta = 1e-5;                 ///< outer stop threshold on |delta MSE|
    int mu = 50;                       ///< max inner X/Y rounds per outer iteration
    int max_outer = 1000;
    double inner_tol = 1e-8;
    std::uint64_t seed = 1;
    bool lags_from_one = false;        ///< constrain cross lags 1..k instead of 0..k
    bool literal_transpose = false;    ///< x^T J y instead of x^H J y
    InitStrategy init = InitStrategy::time_split;
    int max_projection_sweeps = 20000;
    double power_iteration_tol = 1e-6;
    int power_iteration_max = 2000;

    std::vector<Index> cross_lags() const { return cross_lag_set(k, lags_from_one); }

    CorrelationConvention convention() const
    {
        return literal_transpose ? CorrelationConvention::literal_transpose : CorrelationConvention::hermitian;
    }

    void validate(Index b) const
    {
        if (k < 0 || k >= b)
            throw std::invalid_argument("DesignConfig: k = " + std::to_string(k) + " must satisfy 0 <= k < B = " +
                                        std::to_string(b));
        if (p_downlink && !(*p_downlink > 0.0))
            throw std::invalid_argument("DesignConfig: p_downlink must be > 0");
        if (p_uplink && !(*p_uplink > 0.0))
            throw std::invalid_argument("DesignConfig: p_uplink must be > 0");
        if (!(epsilon > 0.0) || !(eta > 0.0) || !(inner_tol > 0.0))
            throw std::invalid_argument("DesignConfig: epsilon, eta and inner_tol must be > 0");
        if (mu < 0 || max_outer < 1)
            throw std::invalid_argument("DesignConfig: mu must be >= 0 and max_outer >= 1");
    }
};

struct PilotPair {
    PilotMatrix X; ///< downlink, B x n_t
    PilotMatrix Y; ///< uplink, B x n_r
};

struct ProjectionStatus {
    int degenerate_columns = 0;
    int unconverged_columns = 0;

    void merge(const ProjectionStatus& other)
    {
        degenerate_columns += other.degenerate_columns;
        unconverged_columns += other.unconverged_columns;
    }
};

struct StepResult {
    PilotMatrix pilot;
    ProjectionStatus status;
};

/// Per-link projection machinery, built once per design.
class PilotProjectors {
public:
    PilotProjectors(Index b, const DesignConfig& cfg, double p_downlink, double p_uplink)
        : cfg_(cfg),
          lags_(cfg.cross_lags()),
          downlink_(b, cfg.k, p_downlink, cfg.inner_tol, cfg.max_projection_sweeps),
          uplink_(b, 0, p_uplink, cfg.inner_tol, cfg.max_projection_sweeps)
    {
    }

    const DesignConfig& config() const { return cfg_; }
    const ColumnProjector& downlink() const { return downlink_; }
    const ColumnProjector& uplink() const { return uplink_; }

    /// Columns x_q nearest the target with x_q^H J_m y_l = 0, ||x_q||^2 <= p and the convexified
    /// autocorrelation bounds.
    StepResult x_step(const PilotMatrix& target, const PilotMatrix& y_fixed) const
    {
        const Index b = downlink_.length();
        check_rows(target, b, "x_step target");
        check_rows(y_fixed, b, "x_step Y");
        // x ⊥ J_m y_l (hermitian) or x ⊥ conj(J_m y_l) (literal)
        ComplexMatrix constraints(b, y_fixed.cols() * static_cast<Index>(lags_.size()));
        Index c = 0;
        for (Index l = 0; l < y_fixed.cols(); ++l)
            for (Index m : lags_) {
                ComplexVector a = shift_matrix(b, m).apply(y_fixed.col(l));
                constraints.col(c++) = cfg_.literal_transpose ? ComplexVector(a.conjugate()) : a;
            }
        const NullspaceProjector subspace(constraints, b);

        StepResult out{PilotMatrix(b, target.cols()), {}};
        for (Index q = 0; q < target.cols(); ++q) {
            ColumnProjection col = downlink_.project(target.col(q), subspace);
            out.pilot.col(q) = col.x;
            out.status.degenerate_columns += col.degenerate ? 1 : 0;
            out.status.unconverged_columns += col.converged ? 0 : 1;
        }
        return out;
    }

    /// Columns y_l nearest the target with x_q^H J_m y_l = 0 and ||y_l||^2 <= p.
    StepResult y_step(const PilotMatrix& target, const PilotMatrix& x_fixed) const
    {
        const Index b = uplink_.length();
        check_rows(target, b, "y_step target");
        check_rows(x_fixed, b, "y_step X");
        // y ⊥ J_m^T x_q (hermitian) or y ⊥ conj(J_m^T x_q) (literal)
        ComplexMatrix constraints(b, x_fixed.cols() * static_cast<Index>(lags_.size()));
        Index c = 0;
        for (Index q = 0; q < x_fixed.cols(); ++q)
            for (Index m : lags_) {
                ComplexVector a = shift_matrix(b, -m).apply(x_fixed.col(q));
                constraints.col(c++) = cfg_.literal_transpose ? ComplexVector(a.conjugate()) : a;
            }
        const NullspaceProjector subspace(constraints, b);

        StepResult out{PilotMatrix(b, target.cols()), {}};
        for (Index l = 0; l < target.cols(); ++l) {
            ColumnProjection col = uplink_.project_without_ellipsoids(target.col(l), subspace);
            out.pilot.col(l) = col.x;
            out.status.degenerate_columns += col.degenerate ? 1 : 0;
        }
        return out;
    }

private:
    static void check_rows(const PilotMatrix& p, Index b, const char* what)
    {
        if (p.rows() != b)
            throw DimensionError(std::string(what) + " has " + std::to_string(p.rows()) + " rows, expected " +
                                 std::to_string(b));
    }

    DesignConfig cfg_;
    std::vector<Index> lags_;
    ColumnProjector downlink_;
    ColumnProjector uplink_;
};

/// Power bounds actually used: explicit values, else gamma / (number of pilot columns).
inline std::pair<double, double> resolve_power_bounds(const DesignConfig& cfg, const ChannelScenario& dl,
                                                      const ChannelScenario& ul)
{
    const double p_dl = cfg.p_downlink.value_or(dl.gamma / static_cast<double>(dl.n_t));
    const double p_ul = cfg.p_uplink.value_or(ul.gamma / static_cast<double>(ul.n_t));
    return {p_dl, p_ul};
}

inline StepResult x_step(const PilotMatrix& x_target, const PilotMatrix& y_fixed, const DesignConfig& cfg,
                         double power)
{
    return PilotProjectors(x_target.rows(), cfg, power, power).x_step(x_target, y_fixed);
}

inline StepResult y_step(const PilotMatrix& y_target, const PilotMatrix& x_fixed, const DesignConfig& cfg,
                         double power)
{
    return PilotProjectors(y_target.rows(), cfg, power, power).y_step(y_target, x_fixed);
}

/// F(V, P) restricted to P for a fixed V:
///   F = c + Re<P, T(P)> + 2 Re<G, P>,
///   T(P) = L*(V2 V2^H L(P) R), G = L*(V2 V1^H R), c = tr(V1^H R V1) + tr(V2^H M V2),
/// with L = embed_pilot and L* = adjoint_embed.
class QuadraticModel {
public:
    QuadraticModel(const AuxiliaryV& v, const ChannelScenario& s)
        : n_r_(s.n_r), b_(s.b), n_t_(s.n_t), weight_(v.bottom() * v.bottom().adjoint()), R_(s.R)
    {
        if (v.matrix().rows() != s.channel_dim() + s.observation_dim() || v.channel_dim() != s.channel_dim())
            throw DimensionError("QuadraticModel: V does not match the scenario");
        linear_ = adjoint_embed(v.bottom() * v.top().adjoint() * s.R, n_r_);
        constant_ = (v.top().adjoint() * s.R * v.top()).trace().real() +
                    (v.bottom().adjoint() * s.M * v.bottom()).trace().real();
    }

    ComplexMatrix apply(const PilotMatrix& p) const
    {
        return adjoint_embed(weight_ * embed_pilot(p, n_r_) * R_, n_r_);
    }

    const ComplexMatrix& linear() const { return linear_; }
    double constant() const { return constant_; }

    double value(const PilotMatrix& p) const { return constant_ + real_inner(p, apply(p)) + 2.0 * real_inner(linear_, p); }

    /// Euclidean gradient in the real sense: 2 (T(P) + G).
    ComplexMatrix gradient(const PilotMatrix& p) const { return 2.0 * (apply(p) + linear_); }

    /// Crude bound lambda_max(T) <= n_r ||V2||_F^2 tr(R).
    double spectral_upper_bound() const { return static_cast<double>(n_r_) * weight_.trace().real() * R_.trace().real(); }

    Index rows() const { return b_; }
    Index cols() const { return n_t_; }

private:
    Index n_r_;
    Index b_;
    Index n_t_;
    ComplexMatrix weight_;
    ComplexMatrix R_;
    ComplexMatrix linear_;
    double constant_ = 0.0;
};

struct SigmaTarget {
    PilotMatrix target;
    double lambda = 0.0;        ///< curvature of the isotropic majorizer
    bool degenerate = false;    ///< F does not depend on P (V2 = 0)
    PowerIterationResult power;
};

/// Nearest-matrix target: P_sigma = P - (T(P) + G) / lambda with lambda >= lambda_max(T).
///
/// lambda ||P' - P_sigma||^2 + const majorizes F(V, P') and touches it at P' = P.
inline SigmaTarget build_sigma_target(const AuxiliaryV& v, const PilotMatrix& current, const ChannelScenario& s,
                                      double power_tol = 1e-6, int power_max_iter = 2000)
{
    detail::check_pilot(current, s);
    const QuadraticModel model(v, s);
    SigmaTarget out;
    out.power = power_iteration_opnorm([&](const ComplexMatrix& p) { return model.apply(p); }, s.b, s.n_t, power_tol,
                                       power_max_iter);
    if (out.power.converged)
        out.lambda = 1.1 * out.power.value;
    else
        out.lambda = model.spectral_upper_bound();
    if (!(out.lambda > 0.0)) {
        out.target = current;
        out.lambda = 0.0;
        out.degenerate = true;
        return out;
    }
    out.target = current - (model.apply(current) + model.linear()) / out.lambda;
    return out;
}

/// Majorizer value at P' built around the current pilot.
inline double majorizer_value(const QuadraticModel& model, const PilotMatrix& current, double lambda,
                              const PilotMatrix& candidate)
{
    const ComplexMatrix delta = candidate - current;
    return model.value(current) + real_inner(model.gradient(current), delta) + lambda * delta.squaredNorm();
}

struct InnerCycleResult {
    PilotPair pair;
    int rounds = 0;
    std::vector<double> objective; ///< G after each round
    ProjectionStatus status;
};

/// G(X, Y) = ||X - X_sigma||_F^2 + ||Y - Y_sigma||_F^2
inline double inner_objective(const PilotPair& pair, const PilotMatrix& x_sigma, const PilotMatrix& y_sigma)
{
    return (pair.X - x_sigma).squaredNorm() + (pair.Y - y_sigma).squaredNorm();
}

/// Alternates the X and Y projections starting from (X0, Y0) for at most mu rounds.
inline InnerCycleResult inner_cycle(const PilotMatrix& x_sigma, const PilotMatrix& y_sigma, const PilotMatrix& x0,
                                    const PilotMatrix& y0, const PilotProjectors& projectors)
{
    const DesignConfig& cfg = projectors.config();
    InnerCycleResult out{{x0, y0}, 0, {}, {}};
    for (int round = 1; round <= cfg.mu; ++round) {
        StepResult xs = projectors.x_step(x_sigma, out.pair.Y);
        StepResult ys = projectors.y_step(y_sigma, xs.pilot);
        const double movement = (xs.pilot - out.pair.X).norm() + (ys.pilot - out.pair.Y).norm();
        out.pair.X = std::move(xs.pilot);
        out.pair.Y = std::move(ys.pilot);
        out.status.merge(xs.status);
        out.status.merge(ys.status);
        out.rounds = round;
        out.objective.push_back(inner_objective(out.pair, x_sigma, y_sigma));
        if (movement <= cfg.inner_tol)
            break;
    }
    return out;
}

struct DesignTrace {
    std::vector<double> mse;          ///< total MSE, entry 0 is the initialization
    std::vector<double> mse_downlink;
    std::vector<double> mse_uplink;
    std::vector<double> max_cross;    ///< max |x_q^H J_m y_l| over the cross lag set
    std::vector<double> max_auto;     ///< max |x_q^H J_m x_q| over lags 1..k
    std::vector<double> max_power;    ///< largest column energy over X and Y
    double wall_time_seconds = 0.0;

    std::size_t size() const { return mse.size(); }
};

struct DesignResult {
    PilotPair pair;
    DesignTrace trace;
    bool converged = false;
    int outer_iterations = 0;
    std::uint64_t seed = 0;
    double p_downlink = 0.0;
    double p_uplink = 0.0;
    ProjectionStatus status;
};

namespace detail {

inline PilotMatrix gaussian_pilot(Index rows, Index cols, std::mt19937_64& rng)
{
    std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
    PilotMatrix p(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            p(i, j) = cplx(re, im);
        }
    return p;
}

inline void record(DesignTrace& trace, const PilotPair& pair, const ChannelScenario& dl, const ChannelScenario& ul,
                   const DesignConfig& cfg)
{
    const double mse_dl = channel_mse_lemma(pair.X, dl);
    const double mse_ul = channel_mse_lemma(pair.Y, ul);
    trace.mse.push_back(mse_dl + mse_ul);
    trace.mse_downlink.push_back(mse_dl);
    trace.mse_uplink.push_back(mse_ul);
    trace.max_cross.push_back(max_cross_correlation(pair.X, pair.Y, cfg.cross_lags(), cfg.convention()));
    trace.max_auto.push_back(max_autocorrelation_sidelobe(pair.X, cfg.k, cfg.convention()));
    trace.max_power.push_back(std::max(max_column_power(pair.X), max_column_power(pair.Y)));
}

inline void check_link_pair(const ChannelScenario& dl, const ChannelScenario& ul)
{
    if (dl.b != ul.b || dl.n_t != ul.n_r || dl.n_r != ul.n_t)
        throw DimensionError("design_pilots: uplink scenario must be the reverse of the downlink (n_t <-> n_r, same B)");
}

} // namespace detail

/// Random feasible starting pair.
inline PilotPair initial_pilots(const ChannelScenario& dl, const ChannelScenario& ul, const PilotProjectors& projectors)
{
    const DesignConfig& cfg = projectors.config();
    std::mt19937_64 rng(cfg.seed);
    PilotMatrix x_raw = detail::gaussian_pilot(dl.b, dl.n_t, rng);
    PilotMatrix y_raw = detail::gaussian_pilot(ul.b, ul.n_t, rng);
    PilotMatrix y_reference = PilotMatrix::Zero(ul.b, ul.n_t);
    if (cfg.init == InitStrategy::time_split) {
        const Index split = dl.b / 2;
        y_raw.bottomRows(dl.b - split).setZero();
        x_raw.topRows(split).setZero();
        y_reference = y_raw;
    }
    PilotPair pair;
    pair.X = projectors.x_step(x_raw, y_reference).pilot;
    pair.Y = projectors.y_step(y_raw, pair.X).pilot;
    return pair;
}

/// Designs (X, Y) minimizing MSE_dl(X) + MSE_ul(Y) under the pilot constraints.
inline DesignResult design_pilots(const ChannelScenario& dl, const ChannelScenario& ul, const DesignConfig& cfg)
{
    const auto started = std::chrono::steady_clock::now();
    detail::check_link_pair(dl, ul);
    cfg.validate(dl.b);

    DesignResult out;
    out.seed = cfg.seed;
    std::tie(out.p_downlink, out.p_uplink) = resolve_power_bounds(cfg, dl, ul);
    const PilotProjectors projectors(dl.b, cfg, out.p_downlink, out.p_uplink);

    PilotPair pair = initial_pilots(dl, ul, projectors);
    detail::record(out.trace, pair, dl, ul, cfg);

    for (int outer = 1; outer <= cfg.max_outer; ++outer) {
        const SigmaTarget x_sigma = build_sigma_target(optimal_V(pair.X, dl), pair.X, dl, cfg.power_iteration_tol,
                                                       cfg.power_iteration_max);
        const SigmaTarget y_sigma = build_sigma_target(optimal_V(pair.Y, ul), pair.Y, ul, cfg.power_iteration_tol,
                                                       cfg.power_iteration_max);
        InnerCycleResult inner = inner_cycle(x_sigma.target, y_sigma.target, pair.X, pair.Y, projectors);
        out.status.merge(inner.status);
        pair = std::move(inner.pair);
        detail::record(out.trace, pair, dl, ul, cfg);
        out.outer_iterations = outer;

        const std::size_t n = out.trace.mse.size();
        if (std::abs(out.trace.mse[n - 1] - out.trace.mse[n - 2]) < cfg.eta) {
            out.converged = true;
            break;
        }
    }
    out.pair = std::move(pair);
    out.trace.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return out;
}

} // namespace comsens
