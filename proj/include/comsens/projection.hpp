// Euclidean projections onto the per-column pilot constraint sets.
//
// For one pilot column x of length B the feasible set is the intersection of
//   - the ball ||x||^2 <= p,
//   - the subspace orthogonal to a set of constraint vectors (zero cross-correlation),
//   - optionally the ellipsoids x^H (J_m^T + J_m + 2I) x <= 2p for m = 1..k.
// Every set contains the origin, so a point that satisfies the subspace and is shrunk toward
// zero stays feasible for the others.

#pragma once

#include "comsens/tensorops.hpp"

#include <vector>

namespace comsens {

struct ColumnProjection {
    ComplexVector x;
    bool converged = true;
    bool degenerate = false; ///< constraint vectors span the whole space, x = 0
    int sweeps = 0;
};

/// Orthogonal projector onto the complement of span(constraints), built by a rank-revealing QR.
class NullspaceProjector {
public:
    NullspaceProjector(const ComplexMatrix& constraints, Index dim) : dim_(dim)
    {
        if (constraints.cols() == 0 || constraints.norm() == 0.0) {
            basis_.resize(dim, 0);
            complement_ = ComplexMatrix::Identity(dim, dim);
            return;
        }
        if (constraints.rows() != dim)
            throw DimensionError("NullspaceProjector: constraint vectors have wrong length");
        Eigen::ColPivHouseholderQR<ComplexMatrix> qr(constraints);
        qr.setThreshold(1e-10);
        const Index rank = qr.rank();
        const ComplexMatrix q = qr.householderQ();
        basis_ = q.leftCols(rank);
        complement_ = q.rightCols(dim - rank);
    }

    Index rank() const { return basis_.cols(); }
    bool spans_all() const { return basis_.cols() >= dim_; }

    /// Orthonormal basis of the allowed subspace, dim x (dim - rank).
    const ComplexMatrix& complement() const { return complement_; }

    ComplexVector apply(const ComplexVector& v) const
    {
        if (basis_.cols() == 0)
            return v;
        return v - basis_ * (basis_.adjoint() * v);
    }

private:
    Index dim_;
    ComplexMatrix basis_;
    ComplexMatrix complement_;
};

/// Ellipsoid {x : x^H A x <= bound} with A real symmetric PSD, stored by its eigendecomposition.
class Ellipsoid {
public:
    Ellipsoid(const RealMatrix& shape, double bound) : bound_(bound)
    {
        Eigen::SelfAdjointEigenSolver<RealMatrix> es(shape);
        vectors_ = es.eigenvectors().cast<cplx>();
        values_ = es.eigenvalues().cwiseMax(0.0);
    }

    double bound() const { return bound_; }

    double value(const ComplexVector& x) const
    {
        const ComplexVector z = vectors_.adjoint() * x;
        return (values_.array() * z.array().abs2()).sum();
    }

    /// Nearest point; the KKT multiplier nu solves sum d |z|^2 / (1 + nu d)^2 = bound by Newton.
    ComplexVector project(const ComplexVector& v) const
    {
        const ComplexVector z = vectors_.adjoint() * v;
        const RealVector w = z.array().abs2().matrix();
        const double start = (values_.array() * w.array()).sum();
        if (start <= bound_)
            return v;
        double nu = 0.0;
        for (int it = 0; it < 100; ++it) {
            const Eigen::ArrayXd denom = 1.0 + nu * values_.array();
            const double phi = (values_.array() * w.array() / denom.square()).sum() - bound_;
            const double dphi = -2.0 * (values_.array().square() * w.array() / denom.cube()).sum();
            if (phi <= 1e-15 * bound_ || dphi == 0.0)
                break;
            const double step = phi / dphi;
            nu -= step;
            if (std::abs(step) <= 1e-16 * std::max(1.0, nu))
                break;
        }
        const Eigen::ArrayXd scale = 1.0 / (1.0 + nu * values_.array());
        return vectors_ * (scale.cast<cplx>() * z.array()).matrix();
    }

private:
    double bound_;
    ComplexMatrix vectors_;
    RealVector values_;
};

namespace detail {

struct DualProjection {
    ComplexVector z;
    RealVector multipliers;
    bool converged = false;
    int iterations = 0;
};

/// Nearest point to w in {z : z^H B_i z <= c_i for all i}, B_i Hermitian PSD and B_0 = I.
///
/// Projected Newton on the Lagrange dual f(nu) = w^H (I + sum nu_i B_i)^-1 w + nu^T c over nu >= 0;
/// the primal point is z(nu) = (I + sum nu_i B_i)^-1 w.
inline DualProjection dual_quadratic_projection(const ComplexVector& w, const std::vector<ComplexMatrix>& shapes,
                                                const RealVector& bounds, double tol, int max_iter)
{
    const Index n = static_cast<Index>(shapes.size());
    const Index d = w.size();
    struct Point {
        RealVector nu;
        ComplexVector z;
        double f = 0.0;
        RealVector grad;
        Eigen::LLT<ComplexMatrix> llt;
        bool ok = false;
    };
    auto evaluate = [&](const RealVector& nu) {
        Point pt;
        pt.nu = nu;
        ComplexMatrix h = ComplexMatrix::Identity(d, d);
        for (Index i = 0; i < n; ++i)
            h += nu(i) * shapes[static_cast<std::size_t>(i)];
        pt.llt.compute(h);
        if (pt.llt.info() != Eigen::Success)
            return pt;
        pt.z = pt.llt.solve(w);
        pt.f = w.dot(pt.z).real() + nu.dot(bounds);
        pt.grad.resize(n);
        for (Index i = 0; i < n; ++i)
            pt.grad(i) = bounds(i) - pt.z.dot(shapes[static_cast<std::size_t>(i)] * pt.z).real();
        pt.ok = true;
        return pt;
    };

    DualProjection out;
    Point cur = evaluate(RealVector::Zero(n));
    const double scale = bounds.cwiseAbs().maxCoeff();
    for (int it = 1; it <= max_iter && cur.ok; ++it) {
        out.iterations = it;
        RealVector projected(n);
        for (Index i = 0; i < n; ++i)
            projected(i) = cur.nu(i) > 0.0 ? cur.grad(i) : std::min(cur.grad(i), 0.0);
        const double pg = projected.cwiseAbs().maxCoeff();
        if (pg <= tol * scale) {
            out.converged = true;
            break;
        }

        // Hessian of f: 2 Re (B_i z)^H H^-1 (B_j z)
        ComplexMatrix bz(d, n);
        for (Index i = 0; i < n; ++i)
            bz.col(i) = shapes[static_cast<std::size_t>(i)] * cur.z;
        const ComplexMatrix hinv_bz = cur.llt.solve(bz);
        RealMatrix hess = 2.0 * (bz.adjoint() * hinv_bz).real();
        hess = 0.5 * (hess + hess.transpose());

        const double eps = std::min(1e-12 * (1.0 + cur.nu.cwiseAbs().maxCoeff()), pg);
        std::vector<Index> free;
        RealVector dir = RealVector::Zero(n);
        for (Index i = 0; i < n; ++i) {
            if (cur.nu(i) <= eps && cur.grad(i) > 0.0)
                dir(i) = -cur.grad(i) / std::max(hess(i, i), 1e-300);
            else
                free.push_back(i);
        }
        if (!free.empty()) {
            const Index nf = static_cast<Index>(free.size());
            RealMatrix hf(nf, nf);
            RealVector gf(nf);
            for (Index a = 0; a < nf; ++a) {
                gf(a) = cur.grad(free[static_cast<std::size_t>(a)]);
                for (Index b = 0; b < nf; ++b)
                    hf(a, b) = hess(free[static_cast<std::size_t>(a)], free[static_cast<std::size_t>(b)]);
            }
            hf.diagonal().array() += 1e-14 * std::max(hf.diagonal().maxCoeff(), 1e-300);
            const RealVector step = hf.ldlt().solve(-gf);
            for (Index a = 0; a < nf; ++a)
                dir(free[static_cast<std::size_t>(a)]) = step(a);
        }

        double alpha = 1.0;
        bool moved = false;
        for (int ls = 0; ls < 60; ++ls, alpha *= 0.5) {
            const RealVector trial = (cur.nu + alpha * dir).cwiseMax(0.0);
            Point next = evaluate(trial);
            if (!next.ok)
                continue;
            // the slack absorbs rounding in f once the decrease drops below machine precision
            const double slack = 8.0 * std::numeric_limits<double>::epsilon() * std::abs(cur.f);
            if (next.f <= cur.f + 1e-4 * cur.grad.dot(trial - cur.nu) + slack) {
                cur = std::move(next);
                moved = true;
                break;
            }
        }
        if (!moved)
            break;
    }
    out.z = cur.z;
    out.multipliers = cur.nu;
    return out;
}

} // namespace detail

/// Projects pilot columns onto ball ∩ subspace ∩ autocorrelation ellipsoids.
///
/// The ellipsoids depend only on (B, k, p) and are factorized once at construction.
class ColumnProjector {
public:
    ColumnProjector(Index length, Index k, double power, double tol, int max_sweeps)
        : length_(length), power_(power), tol_(tol), max_sweeps_(max_sweeps)
    {
        if (!(power > 0.0))
            throw std::invalid_argument("ColumnProjector: power bound must be > 0");
        for (Index m = 1; m <= k; ++m) {
            const RealMatrix j = shift_matrix(length, m).dense();
            RealMatrix shape = j.transpose() + j + 2.0 * RealMatrix::Identity(length, length);
            ellipsoids_.emplace_back(shape, 2.0 * power);
            shapes_.push_back(shape.cast<cplx>());
        }
    }

    Index length() const { return length_; }
    double power() const { return power_; }
    const std::vector<Ellipsoid>& ellipsoids() const { return ellipsoids_; }

    bool feasible(const ComplexVector& x, double slack) const
    {
        if (x.squaredNorm() > power_ + slack)
            return false;
        for (const auto& e : ellipsoids_)
            if (e.value(x) > e.bound() + slack)
                return false;
        return true;
    }

    /// Full projection onto ball ∩ subspace ∩ ellipsoids.
    ///
    /// Solved exactly in subspace coordinates through the Lagrange dual; Dykstra's algorithm is the
    /// fallback when the dual iteration fails.
    ColumnProjection project(const ComplexVector& target, const NullspaceProjector& subspace) const
    {
        ColumnProjection out;
        if (subspace.spans_all()) {
            out.x = ComplexVector::Zero(length_);
            out.degenerate = true;
            return out;
        }

        const ComplexVector base = subspace.apply(target);
        if (feasible(base, 0.0)) {
            out.x = base;
            return out;
        }
        const ComplexVector shrunk = shrink_to_ball(base);
        if (feasible(shrunk, 0.0)) {
            out.x = shrunk;
            return out;
        }

        const ComplexMatrix& basis = subspace.complement();
        std::vector<ComplexMatrix> reduced;
        reduced.push_back(ComplexMatrix::Identity(basis.cols(), basis.cols()));
        for (const auto& a : shapes_)
            reduced.push_back(basis.adjoint() * a * basis);
        RealVector bounds = RealVector::Constant(static_cast<Index>(reduced.size()), 2.0 * power_);
        bounds(0) = power_;
        const detail::DualProjection dual =
            detail::dual_quadratic_projection(basis.adjoint() * target, reduced, bounds, 1e-13, 200);
        if (dual.converged) {
            out.sweeps = dual.iterations;
            out.x = polish(basis * dual.z, subspace);
            return out;
        }
        return project_dykstra(target, subspace);
    }

    /// The same projection by Dykstra's alternating projections only.
    ColumnProjection project_dykstra(const ComplexVector& target, const NullspaceProjector& subspace) const
    {
        ColumnProjection out;
        if (subspace.spans_all()) {
            out.x = ComplexVector::Zero(length_);
            out.degenerate = true;
            return out;
        }
        // Dykstra over (subspace, ball, ellipsoid_1..k); one correction term per set.
        const std::size_t n_sets = 2 + ellipsoids_.size();
        std::vector<ComplexVector> corrections(n_sets, ComplexVector::Zero(length_));
        ComplexVector x = target;
        out.converged = false;
        for (int sweep = 1; sweep <= max_sweeps_; ++sweep) {
            const ComplexVector previous = x;
            for (std::size_t s = 0; s < n_sets; ++s) {
                const ComplexVector y = x + corrections[s];
                if (s == 0)
                    x = subspace.apply(y);
                else if (s == 1)
                    x = shrink_to_ball(y);
                else
                    x = ellipsoids_[s - 2].project(y);
                corrections[s] = y - x;
            }
            out.sweeps = sweep;
            if ((x - previous).norm() <= tol_ && feasible(x, tol_)) {
                out.converged = true;
                break;
            }
        }
        out.x = polish(x, subspace);
        return out;
    }

    /// Projection onto ball ∩ subspace only (no autocorrelation ellipsoids).
    ColumnProjection project_without_ellipsoids(const ComplexVector& target, const NullspaceProjector& subspace) const
    {
        ColumnProjection out;
        if (subspace.spans_all()) {
            out.x = ComplexVector::Zero(length_);
            out.degenerate = true;
            return out;
        }
        out.x = shrink_to_ball(subspace.apply(target));
        return out;
    }

    ComplexVector shrink_to_ball(const ComplexVector& v) const
    {
        const double sq = v.squaredNorm();
        if (sq <= power_)
            return v;
        return v * std::sqrt(power_ / sq);
    }

private:
    // Restores exact subspace membership, then scales toward zero until every quadratic bound holds.
    ComplexVector polish(const ComplexVector& v, const NullspaceProjector& subspace) const
    {
        ComplexVector x = subspace.apply(v);
        double scale = 1.0;
        const double sq = x.squaredNorm();
        if (sq > power_)
            scale = std::sqrt(power_ / sq);
        for (const auto& e : ellipsoids_) {
            const double q = e.value(x);
            if (q * scale * scale > e.bound())
                scale = std::sqrt(e.bound() / q);
        }
        return x * scale;
    }

    Index length_;
    double power_;
    double tol_;
    int max_sweeps_;
    std::vector<Ellipsoid> ellipsoids_;
    std::vector<ComplexMatrix> shapes_;
};

} // namespace comsens
