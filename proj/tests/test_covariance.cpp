#include "comsens/covariance.hpp"
#include "support.hpp"

#include <catch_amalgamated.hpp>

#include <algorithm>

using namespace comsens;
using namespace comsens::testing;
using Catch::Matchers::WithinAbs;

namespace {

RealVector sorted_eigenvalues(const ComplexMatrix& c)
{
    RealVector ev = Eigen::SelfAdjointEigenSolver<ComplexMatrix>(c).eigenvalues();
    std::sort(ev.begin(), ev.end());
    return ev;
}

} // namespace

TEST_CASE("exponential_covariance: small cases")
{
    CHECK(exponential_covariance({3, cplx(0.0, 0.0)}) == ComplexMatrix::Identity(3, 3));

    const ComplexMatrix c = exponential_covariance({2, cplx(0.5, 0.0)});
    CHECK(c(0, 0) == cplx(1.0));
    CHECK(c(0, 1) == cplx(0.5));
    CHECK(c(1, 0) == cplx(0.5));
    CHECK(c(1, 1) == cplx(1.0));

    const ComplexMatrix d = exponential_covariance({3, cplx(0.0, 0.5)});
    CHECK(std::abs(d(0, 1) - cplx(0.0, 0.5)) < 1e-15);
    CHECK(std::abs(d(0, 2) - cplx(-0.25, 0.0)) < 1e-15);
    CHECK(std::abs(d(1, 0) - cplx(0.0, -0.5)) < 1e-15);
}

TEST_CASE("exponential_covariance: 2x2 eigenvalues are 1 +- |rho|")
{
    for (double mag : {0.1, 0.5, 0.9})
        for (double phase : {0.0, 1.0, 2.5}) {
            const RealVector ev = sorted_eigenvalues(exponential_covariance({2, std::polar(mag, phase)}));
            CHECK_THAT(ev(0), WithinAbs(1.0 - mag, 1e-12));
            CHECK_THAT(ev(1), WithinAbs(1.0 + mag, 1e-12));
        }
}

TEST_CASE("exponential_covariance: Hermitian, unit diagonal, positive definite")
{
    for (Index n : {1, 2, 4, 8})
        for (double mag : {0.0, 0.3, 0.9, 0.99}) {
            const ComplexMatrix c = exponential_covariance({n, std::polar(mag, 0.7)});
            CHECK((c - c.adjoint()).norm() == 0.0);
            for (Index i = 0; i < n; ++i)
                CHECK(c(i, i) == cplx(1.0));
            CHECK(sorted_eigenvalues(c)(0) > 0.0);
        }
}

TEST_CASE("exponential_covariance: rejects |rho| >= 1")
{
    CHECK_THROWS_AS(exponential_covariance({3, cplx(1.0, 0.0)}), std::invalid_argument);
    CHECK_THROWS_AS(exponential_covariance({3, std::polar(1.2, 0.3)}), std::invalid_argument);
    CHECK_THROWS_AS(exponential_covariance({0, cplx(0.1, 0.0)}), std::invalid_argument);
}

TEST_CASE("build_scenario: unit trace, dimensions and Kronecker spectrum")
{
    const ChannelScenario s = build_scenario(4, 4, 8);
    REQUIRE(s.R.rows() == 16);
    REQUIRE(s.M.rows() == 32);
    CHECK_THAT(s.R.trace().real(), WithinAbs(1.0, 1e-14));
    CHECK_THAT(s.M.trace().real(), WithinAbs(1.0, 1e-14));
    CHECK((s.R - s.R.adjoint()).norm() == 0.0);
    CHECK((s.M - s.M.adjoint()).norm() == 0.0);
    CHECK(s.gamma == 32.0);

    // eigenvalues of (A^T ⊗ B) / tr are the pairwise products of the factor spectra
    const RealVector ev_t = sorted_eigenvalues(exponential_covariance({4, s.params.coefficient_rt()}));
    const RealVector ev_r = sorted_eigenvalues(exponential_covariance({4, s.params.coefficient_rr()}));
    std::vector<double> products;
    for (double a : ev_t)
        for (double b : ev_r)
            products.push_back(a * b / 16.0);
    std::sort(products.begin(), products.end());
    const RealVector ev = sorted_eigenvalues(s.R);
    for (Index i = 0; i < ev.size(); ++i)
        CHECK_THAT(ev(i), WithinAbs(products[static_cast<std::size_t>(i)], 1e-13));
    CHECK(ev(0) > 0.0);
    CHECK(sorted_eigenvalues(s.M)(0) > 0.0);
}

TEST_CASE("build_scenario: coefficients carry magnitude and negative phase")
{
    CovarianceParams p;
    CHECK_THAT(std::abs(p.coefficient_rt()), WithinAbs(0.9, 1e-15));
    CHECK_THAT(std::arg(p.coefficient_rr()), WithinAbs(-0.4289 * std::numbers::pi, 1e-14));

    // the receive factor is the trailing Kronecker block
    const ChannelScenario s = build_scenario(1, 2, 1);
    CHECK(std::abs(s.R(0, 1) - p.coefficient_rr() / 2.0) < 1e-15);
}

TEST_CASE("build_scenario: explicit gamma and validation")
{
    CovarianceParams p;
    p.gamma = 5.0;
    CHECK(build_scenario(2, 2, 4, p).gamma == 5.0);
    p.gamma = -1.0;
    CHECK_THROWS_AS(build_scenario(2, 2, 4, p), std::invalid_argument);
    CHECK_THROWS_AS(build_scenario(0, 2, 4), std::invalid_argument);
    CovarianceParams bad;
    bad.rho_mt = 1.0;
    CHECK_THROWS_AS(build_scenario(2, 2, 4, bad), std::invalid_argument);
}

TEST_CASE("with_random_phases: reproducible, magnitudes untouched")
{
    const auto a = CovarianceParams::with_random_phases(3);
    const auto b = CovarianceParams::with_random_phases(3);
    const auto c = CovarianceParams::with_random_phases(4);
    CHECK(a.theta_rt == b.theta_rt);
    CHECK(a.theta_mt == b.theta_mt);
    CHECK(a.theta_rr != c.theta_rr);
    CHECK(a.rho_rt == 0.9);
    for (double t : {a.theta_rt, a.theta_rr, a.theta_mt}) {
        CHECK(t >= 0.0);
        CHECK(t < 2.0 * std::numbers::pi);
    }
}

TEST_CASE("commutation_matrix: maps vec(H) to vec(H^T)")
{
    std::mt19937_64 rng(21);
    for (Index rows : {1, 2, 3})
        for (Index cols : {1, 2, 4}) {
            const ComplexMatrix h = random_matrix(rows, cols, rng);
            const ComplexMatrix ht = h.transpose();
            const ComplexVector lhs = commutation_matrix(rows, cols).cast<cplx>() * h.reshaped();
            CHECK((lhs - ht.reshaped()).norm() == 0.0);
        }
}

TEST_CASE("reciprocal_scenario: dimensions, spectrum and involution")
{
    const ChannelScenario dl = build_scenario(2, 3, 6);
    const ChannelScenario ul = reciprocal_scenario(dl);
    CHECK(ul.n_t == 3);
    CHECK(ul.n_r == 2);
    CHECK(ul.b == 6);
    CHECK(ul.gamma == 18.0);
    REQUIRE(ul.M.rows() == 12);
    CHECK_THAT(ul.R.trace().real(), WithinAbs(1.0, 1e-14));
    CHECK_THAT(ul.M.trace().real(), WithinAbs(1.0, 1e-14));

    const RealVector a = sorted_eigenvalues(dl.R);
    const RealVector b = sorted_eigenvalues(ul.R);
    CHECK((a - b).norm() <= 1e-13);

    const ChannelScenario back = reciprocal_scenario(ul);
    CHECK((back.R - dl.R).norm() == 0.0);
    CHECK((back.M - dl.M).norm() <= 1e-15);

    // entry-level check: Cov(H^T)(t + r n_t, t' + r' n_t) = Cov(H)(r + t n_r, r' + t' n_r)
    for (Index r = 0; r < 3; ++r)
        for (Index t = 0; t < 2; ++t)
            for (Index r2 = 0; r2 < 3; ++r2)
                for (Index t2 = 0; t2 < 2; ++t2)
                    CHECK(ul.R(t + r * 2, t2 + r2 * 2) == dl.R(r + t * 3, r2 + t2 * 3));
}

TEST_CASE("reciprocal_scenario: explicit gamma is kept")
{
    CovarianceParams p;
    p.gamma = 7.0;
    CHECK(reciprocal_scenario(build_scenario(2, 3, 4, p)).gamma == 7.0);
}
