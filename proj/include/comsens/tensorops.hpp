// Dense complex-matrix kernels shared by the numerical modules.
//
// Storage convention: vec() stacks columns (Eigen's native column-major order), so for a
// channel H of size n_R x n_T the entry H(r, t) sits at vec index t * n_R + r.

#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <utility>

namespace comsens {

using Index = Eigen::Index;
using cplx = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealMatrix = Eigen::MatrixXd;
using RealVector = Eigen::VectorXd;

/// Raised when a Hermitian factorization fails even after diagonal jitter.
class SingularMatrixError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Raised on incompatible operand shapes.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

namespace detail {

inline std::string dims(const ComplexMatrix& a)
{
    return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

} // namespace detail

/// Real inner product Re tr(A^H B) on equally sized matrices.
inline double real_inner(const ComplexMatrix& a, const ComplexMatrix& b)
{
    return (a.conjugate().cwiseProduct(b)).sum().real();
}

/// Complex inner product tr(A^H B).
inline cplx inner(const ComplexMatrix& a, const ComplexMatrix& b)
{
    return (a.conjugate().cwiseProduct(b)).sum();
}

inline bool all_finite(const ComplexMatrix& a)
{
    return a.allFinite();
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b)
{
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

/// P ⊗ I_{n_r}, built directly without a general Kronecker product.
inline ComplexMatrix embed_pilot(const ComplexMatrix& pilot, Index n_r)
{
    if (n_r < 1)
        throw DimensionError("embed_pilot: n_r must be >= 1");
    ComplexMatrix out = ComplexMatrix::Zero(pilot.rows() * n_r, pilot.cols() * n_r);
    for (Index b = 0; b < pilot.rows(); ++b)
        for (Index t = 0; t < pilot.cols(); ++t)
            for (Index r = 0; r < n_r; ++r)
                out(b * n_r + r, t * n_r + r) = pilot(b, t);
    return out;
}

/// Adjoint of embed_pilot under tr(A^H B): sums the diagonals of the n_r x n_r blocks.
inline ComplexMatrix adjoint_embed(const ComplexMatrix& z, Index n_r)
{
    if (n_r < 1 || z.rows() % n_r != 0 || z.cols() % n_r != 0)
        throw DimensionError("adjoint_embed: " + detail::dims(z) + " is not divisible by n_r = " +
                             std::to_string(n_r));
    const Index b_len = z.rows() / n_r;
    const Index n_t = z.cols() / n_r;
    ComplexMatrix out = ComplexMatrix::Zero(b_len, n_t);
    for (Index b = 0; b < b_len; ++b)
        for (Index t = 0; t < n_t; ++t) {
            cplx acc{0.0, 0.0};
            for (Index r = 0; r < n_r; ++r)
                acc += z(b * n_r + r, t * n_r + r);
            out(b, t) = acc;
        }
    return out;
}

/// Binary lag operator J_i of size B: entry (a, b) is one iff b - a == i.
///
/// Applied to a sequence y it advances by i symbols, (J_i y)(a) = y(a + i); negative lags are
/// the transpose of the matching positive lag.
class ShiftMatrix {
public:
    ShiftMatrix(Index size, Index lag) : size_(size), lag_(lag)
    {
        if (size < 1)
            throw std::invalid_argument("shift_matrix: size must be >= 1");
        if (lag <= -size || lag >= size)
            throw std::invalid_argument("shift_matrix: |lag| = " + std::to_string(lag < 0 ? -lag : lag) +
                                        " must be < B = " + std::to_string(size));
    }

    Index size() const { return size_; }
    Index lag() const { return lag_; }

    ShiftMatrix transpose() const { return {size_, -lag_}; }

    RealMatrix dense() const
    {
        RealMatrix out = RealMatrix::Zero(size_, size_);
        for (Index a = 0; a < size_; ++a) {
            const Index b = a + lag_;
            if (b >= 0 && b < size_)
                out(a, b) = 1.0;
        }
        return out;
    }

    template <class Derived>
    ComplexVector apply(const Eigen::MatrixBase<Derived>& y) const
    {
        if (y.size() != size_)
            throw DimensionError("ShiftMatrix::apply: length mismatch");
        ComplexVector out = ComplexVector::Zero(size_);
        for (Index a = 0; a < size_; ++a) {
            const Index b = a + lag_;
            if (b >= 0 && b < size_)
                out(a) = y(b);
        }
        return out;
    }

private:
    Index size_;
    Index lag_;
};

inline ShiftMatrix shift_matrix(Index size, Index lag)
{
    return {size, lag};
}

/// Solves A X = B for Hermitian positive definite A by Cholesky.
///
/// On factorization failure a diagonal jitter of 1e-12 * tr(A) / dim is added once.
inline ComplexMatrix hermitian_solve(const ComplexMatrix& a, const ComplexMatrix& b)
{
    if (a.rows() != a.cols() || a.rows() != b.rows())
        throw DimensionError("hermitian_solve: A is " + detail::dims(a) + ", B is " + detail::dims(b));
    Eigen::LLT<ComplexMatrix> llt(a);
    if (llt.info() != Eigen::Success) {
        const double jitter = 1e-12 * std::abs(a.trace().real()) / static_cast<double>(a.rows());
        ComplexMatrix shifted = a;
        shifted.diagonal().array() += jitter;
        llt.compute(shifted);
        if (llt.info() != Eigen::Success)
            throw SingularMatrixError("hermitian_solve: matrix is not positive definite after jitter");
    }
    ComplexMatrix x = llt.solve(b);
    if (!x.allFinite())
        throw SingularMatrixError("hermitian_solve: non-finite solution");
    return x;
}

/// Hermitian square-root factor F with F F^H = C for a PSD matrix C (negative eigenvalues clipped).
inline ComplexMatrix psd_factor(const ComplexMatrix& c)
{
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> es(c);
    const RealVector root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return es.eigenvectors() * root.asDiagonal();
}

struct PowerIterationResult {
    double value = 0.0;
    bool converged = false;
    int iterations = 0;
    double residual = 0.0;
};

/// Largest eigenvalue of a self-adjoint PSD operator acting on rows x cols matrices.
///
/// Stops when ||T v - lambda v|| <= tol * lambda for the unit iterate v. A non-converged run
/// still returns the best Rayleigh quotient seen, with converged = false.
template <class Operator>
PowerIterationResult power_iteration_opnorm(Operator&& apply, Index rows, Index cols, double tol, int max_iter)
{
    std::mt19937_64 rng(0x5eedULL);
    std::normal_distribution<double> normal;
    ComplexMatrix v(rows, cols);
    for (Index j = 0; j < cols; ++j)
        for (Index i = 0; i < rows; ++i)
            v(i, j) = cplx(normal(rng), normal(rng));
    v /= v.norm();

    PowerIterationResult result;
    for (int it = 1; it <= max_iter; ++it) {
        ComplexMatrix w = apply(v);
        const double lambda = real_inner(v, w);
        const double w_norm = w.norm();
        result.iterations = it;
        result.value = std::max(result.value, lambda);
        if (w_norm == 0.0) {
            result.value = 0.0;
            result.residual = 0.0;
            result.converged = true;
            return result;
        }
        result.residual = (w - lambda * v).norm();
        if (result.residual <= tol * std::abs(lambda)) {
            result.value = lambda;
            result.converged = true;
            return result;
        }
        v = w / w_norm;
    }
    return result;
}

} // namespace comsens
