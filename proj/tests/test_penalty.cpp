#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>
#include <random>

#include "sgl/penalty.hpp"

#include "oracles.hpp"

using sgl::Index;
using sgl::Vector;

namespace {

Vector vec(std::initializer_list<double> vals)
{
    Vector v(static_cast<Index>(vals.size()));
    Index i = 0;
    for (double x : vals)
        v[i++] = x;
    return v;
}

} // namespace

TEST_CASE("soft thresholding")
{
    const Vector x = vec({1.0, -0.3, 2.0});
    const Vector st = sgl::soft_threshold(x, 0.5);
    CHECK(st[0] == Catch::Approx(0.5));
    CHECK(st[1] == 0.0);
    CHECK(st[2] == Catch::Approx(1.5));

    CHECK(sgl::soft_threshold(x, 0.0) == x);

    // full shrinkage once the level dominates the sup norm
    CHECK(sgl::soft_threshold(x, 2.0).isZero(0.0));
    CHECK(sgl::soft_threshold(x, 5.0).isZero(0.0));
}

TEST_CASE("soft thresholding is 1-Lipschitz")
{
    std::mt19937 rng(71);
    for (int rep = 0; rep < 200; ++rep) {
        const Vector a = oracles::mixed_scale_vector(rng, 12);
        const Vector b = oracles::mixed_scale_vector(rng, 12);
        std::uniform_real_distribution<double> lev(0.0, 5.0);
        const double level = lev(rng);
        const double lhs = (sgl::soft_threshold(a, level) - sgl::soft_threshold(b, level)).norm();
        CHECK(lhs <= (a - b).norm() + 1e-12);
    }
}

TEST_CASE("group soft thresholding")
{
    const Vector x = vec({3.0, 4.0});
    const Vector g1 = sgl::group_soft_threshold(x, 1.0);
    CHECK(g1[0] == Catch::Approx(2.4));
    CHECK(g1[1] == Catch::Approx(3.2));

    CHECK(sgl::group_soft_threshold(x, 6.0).isZero(0.0));
    CHECK(sgl::group_soft_threshold(x, 5.0).isZero(0.0));
    CHECK(sgl::group_soft_threshold(x, 0.0) == x);
    CHECK(sgl::group_soft_threshold(Vector::Zero(3), 0.0).isZero(0.0));
}

TEST_CASE("threshold-scaling root: closed-form branches")
{
    const Vector x = vec({3.0, 4.0});
    CHECK(sgl::generalized_epsilon_norm(x, 0.0, 2.0) == Catch::Approx(2.5));
    CHECK(sgl::generalized_epsilon_norm(x, 0.5, 0.0) == Catch::Approx(8.0));
    CHECK(sgl::generalized_epsilon_norm(vec({2.0}), 0.6, 0.4) == Catch::Approx(2.0));
    CHECK(std::isinf(sgl::generalized_epsilon_norm(x, 0.0, 0.0)));

    // x = 0 forces nu = 0 whenever (alpha, R) != (0, 0)
    CHECK(sgl::generalized_epsilon_norm(Vector::Zero(4), 0.3, 0.7) == 0.0);
    CHECK(sgl::generalized_epsilon_norm(Vector::Zero(4), 0.0, 1.0) == 0.0);
    CHECK(sgl::generalized_epsilon_norm(Vector::Zero(4), 1.0, 0.0) == 0.0);
}

TEST_CASE("threshold-scaling root: degenerate quadratic lead coefficient")
{
    // alpha^2 j0 = R^2 with j0 = 1
    const double v1 = sgl::generalized_epsilon_norm(vec({1.0}), 0.6, 0.6);
    CHECK(v1 == Catch::Approx(oracles::epsilon_norm_root_bisect(vec({1.0}), 0.6, 0.6)).epsilon(1e-10));
    CHECK(v1 == Catch::Approx(1.0 / 1.2));

    // alpha^2 j0 = R^2 with j0 = 2
    const Vector x = vec({5.0, 3.0});
    const double alpha = 0.5;
    const double R = 0.5 * std::sqrt(2.0);
    const double v2 = sgl::generalized_epsilon_norm(x, alpha, R);
    CHECK(v2 == Catch::Approx(oracles::epsilon_norm_root_bisect(x, alpha, R)).epsilon(1e-10));
}

TEST_CASE("threshold-scaling root matches bisection oracle")
{
    std::mt19937 rng(101);
    std::uniform_real_distribution<double> ua(0.0, 1.0);
    std::uniform_real_distribution<double> ur(0.0, 2.0);
    std::uniform_int_distribution<int> ud(1, 50);

    SECTION("spec instance: dimension 20, alpha 0.3, R 0.7")
    {
        for (int rep = 0; rep < 50; ++rep) {
            const Vector x = oracles::gaussian_vector(rng, 20);
            const double nu = sgl::generalized_epsilon_norm(x, 0.3, 0.7);
            const double ref = oracles::epsilon_norm_root_bisect(x, 0.3, 0.7);
            CHECK(nu == Catch::Approx(ref).epsilon(1e-10));
        }
    }

    SECTION("mixed scales, random alpha and R")
    {
        for (int rep = 0; rep < 400; ++rep) {
            const Index d = ud(rng);
            const Vector x = oracles::mixed_scale_vector(rng, d);
            double alpha = ua(rng);
            double R = ur(rng);
            if (alpha == 0.0)
                alpha = 0.5;
            if (R == 0.0)
                R = 0.5;
            const double nu = sgl::generalized_epsilon_norm(x, alpha, R);
            const double ref = oracles::epsilon_norm_root_bisect(x, alpha, R);
            CHECK(nu == Catch::Approx(ref).epsilon(1e-10));
        }
    }

    SECTION("ties between coordinates")
    {
        const Vector x = vec({2.0, 2.0, 2.0, 1.0, 1.0});
        for (double alpha : {0.2, 0.5, 0.9})
            for (double R : {0.1, 0.7, 1.5}) {
                const double nu = sgl::generalized_epsilon_norm(x, alpha, R);
                const double ref = oracles::epsilon_norm_root_bisect(x, alpha, R);
                CHECK(nu == Catch::Approx(ref).epsilon(1e-10));
            }
    }
}

TEST_CASE("threshold-scaling root: homogeneity and monotone residual")
{
    std::mt19937 rng(202);
    std::uniform_real_distribution<double> uc(0.01, 100.0);
    for (int rep = 0; rep < 100; ++rep) {
        const Vector x = oracles::mixed_scale_vector(rng, 15);
        const double alpha = 0.4, R = 0.8;
        const double nu = sgl::generalized_epsilon_norm(x, alpha, R);
        const double c = uc(rng);
        CHECK(sgl::generalized_epsilon_norm(c * x, alpha, R) == Catch::Approx(c * nu).epsilon(1e-11));

        // residual changes sign exactly at the root and decreases through it
        auto resid = [&](double v) {
            return sgl::soft_threshold(x, v * alpha).norm() - v * R;
        };
        CHECK(resid(0.99 * nu) > 0.0);
        CHECK(resid(1.01 * nu) < 0.0);
        CHECK(resid(0.5 * nu) > resid(0.9 * nu));
    }
}

TEST_CASE("threshold-scaling root: computed value lies in the selected interval")
{
    std::mt19937 rng(303);
    for (int rep = 0; rep < 200; ++rep) {
        const Vector x = oracles::mixed_scale_vector(rng, 25);
        const double alpha = 0.35, R = 0.9;
        const auto root = sgl::detail::epsilon_norm_root_sorted(x, alpha, R);

        const double xinf = x.cwiseAbs().maxCoeff();
        const double bound = alpha * xinf / (alpha + R);
        std::vector<double> a;
        for (Index i = 0; i < x.size(); ++i)
            if (std::abs(x[i]) > bound)
                a.push_back(std::abs(x[i]));
        std::sort(a.begin(), a.end(), std::greater<double>());

        const auto j0 = static_cast<std::size_t>(root.support_size);
        REQUIRE(j0 >= 1);
        REQUIRE(j0 <= a.size());
        const double upper = a[j0 - 1] / alpha;
        const double lower = j0 < a.size() ? a[j0] / alpha : 0.0;
        CHECK(root.value <= upper * (1.0 + 1e-12));
        CHECK(root.value > lower * (1.0 - 1e-12));
    }
}

TEST_CASE("epsilon norm endpoints and oracle")
{
    const Vector x = vec({3.0, 4.0});
    CHECK(sgl::epsilon_norm(x, 1.0) == Catch::Approx(5.0));
    CHECK(sgl::epsilon_norm(x, 0.0) == Catch::Approx(4.0));

    std::mt19937 rng(404);
    for (int rep = 0; rep < 100; ++rep) {
        const Vector z = oracles::mixed_scale_vector(rng, 12);
        CHECK(sgl::epsilon_norm(z, 0.4) ==
              Catch::Approx(oracles::epsilon_norm_bisect(z, 0.4)).epsilon(1e-10));
    }
}

TEST_CASE("epsilon dual norm")
{
    const Vector x = vec({3.0, 4.0});
    CHECK(sgl::epsilon_dual_norm(x, 0.5) == Catch::Approx(6.0));
    CHECK(sgl::epsilon_dual_norm(x, 1.0) == Catch::Approx(5.0));

    // pairing inequality  <x, x> <= ||x||_eps ||x||_eps^D
    std::mt19937 rng(505);
    std::uniform_real_distribution<double> ue(0.05, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const Vector z = oracles::gaussian_vector(rng, 10);
        const double eps = ue(rng);
        CHECK(z.squaredNorm() <=
              sgl::epsilon_norm(z, eps) * sgl::epsilon_dual_norm(z, eps) * (1.0 + 1e-12));
    }
}

TEST_CASE("epsilon decomposition")
{
    std::mt19937 rng(606);
    const Vector xi = oracles::gaussian_vector(rng, 9);

    SECTION("endpoints")
    {
        auto [a1, b1] = sgl::epsilon_decomposition(xi, 1.0);
        CHECK(a1 == xi);
        CHECK(b1.isZero(0.0));
        auto [a0, b0] = sgl::epsilon_decomposition(xi, 0.0);
        CHECK(a0.isZero(0.0));
        CHECK(b0 == xi);
    }

    SECTION("norm identities against the bisection oracle")
    {
        for (int rep = 0; rep < 100; ++rep) {
            const Vector z = oracles::mixed_scale_vector(rng, 14);
            const double eps = 0.3;
            auto [ze, zrest] = sgl::epsilon_decomposition(z, eps);
            CHECK((ze + zrest) == z);  // exact reassembly
            const double nu = oracles::epsilon_norm_bisect(z, eps);
            CHECK(ze.norm() == Catch::Approx(eps * nu).margin(1e-10 * nu));
            CHECK(zrest.cwiseAbs().maxCoeff() ==
                  Catch::Approx((1.0 - eps) * nu).margin(1e-10 * nu));
        }
    }
}

TEST_CASE("epsilon norm gradient")
{
    CHECK(sgl::epsilon_norm_gradient(vec({3.0, 4.0}), 1.0) ==
          vec({0.6, 0.8}));

    std::mt19937 rng(707);
    std::uniform_real_distribution<double> ue(0.1, 1.0);

    SECTION("Euler identity")
    {
        for (int rep = 0; rep < 100; ++rep) {
            const Vector xi = oracles::gaussian_vector(rng, 8);
            const double eps = ue(rng);
            const Vector grad = sgl::epsilon_norm_gradient(xi, eps);
            CHECK(grad.dot(xi) ==
                  Catch::Approx(oracles::epsilon_norm_bisect(xi, eps)).epsilon(1e-10));
        }
    }

    SECTION("finite differences")
    {
        for (int rep = 0; rep < 20; ++rep) {
            const Vector xi = oracles::gaussian_vector(rng, 6);
            const double eps = ue(rng);
            const double h = 1e-7 * xi.norm();
            const Vector fd = oracles::epsilon_norm_fd_gradient(xi, eps, h);
            const Vector grad = sgl::epsilon_norm_gradient(xi, eps);
            CHECK((grad - fd).cwiseAbs().maxCoeff() < 1e-6);
        }
    }

    SECTION("domain errors")
    {
        CHECK_THROWS_AS(sgl::epsilon_norm_gradient(Vector::Zero(3), 0.5), std::domain_error);
        CHECK_THROWS_AS(sgl::epsilon_norm_gradient(vec({1.0, 2.0}), 0.0), std::domain_error);
    }
}

TEST_CASE("penalty parameter validation")
{
    CHECK_THROWS_AS(sgl::PenaltyParams(-0.1, Vector::Ones(2)), std::invalid_argument);
    CHECK_THROWS_AS(sgl::PenaltyParams(1.1, Vector::Ones(2)), std::invalid_argument);

    Vector w = Vector::Ones(2);
    w[1] = -1.0;
    CHECK_THROWS_AS(sgl::PenaltyParams(0.5, w), std::invalid_argument);

    w[1] = 0.0;
    CHECK_THROWS_AS(sgl::PenaltyParams(0.0, w), std::invalid_argument);
    CHECK_NOTHROW(sgl::PenaltyParams(0.5, w));

    const sgl::PenaltyParams pen(0.5, w);
    const auto ep = sgl::EpsilonParams::from(pen);
    CHECK(ep.eps[0] == Catch::Approx(0.5 / 1.0));
    CHECK(ep.eps[1] == 0.0);  // zero weight
    CHECK(ep.scale[0] == Catch::Approx(1.0));
    CHECK(ep.scale[1] == Catch::Approx(0.5));

    const auto lasso = sgl::EpsilonParams::from(sgl::PenaltyParams(1.0, Vector::Ones(3)));
    CHECK(lasso.eps.isZero(0.0));
    const auto glasso = sgl::EpsilonParams::from(sgl::PenaltyParams(0.0, Vector::Ones(3)));
    CHECK(glasso.eps.isApproxToConstant(1.0));
}

TEST_CASE("sgl norm")
{
    const sgl::GroupPartition part(3, {{0, 1}, {2}});
    const Vector beta = vec({3.0, 4.0, 0.0});

    CHECK(sgl::sgl_norm(beta, sgl::PenaltyParams(0.5, Vector::Ones(2)), part) ==
          Catch::Approx(6.0));
    CHECK(sgl::sgl_norm(beta, sgl::PenaltyParams(1.0, Vector::Ones(2)), part) ==
          Catch::Approx(beta.lpNorm<1>()));
    CHECK(sgl::sgl_norm(beta, sgl::PenaltyParams(0.0, Vector::Ones(2)), part) ==
          Catch::Approx(5.0));

    CHECK_THROWS_AS(sgl::sgl_norm(vec({1.0}), sgl::PenaltyParams(0.5, Vector::Ones(2)), part),
                    std::invalid_argument);
}

TEST_CASE("sgl dual norm endpoints")
{
    const sgl::GroupPartition part(4, {{0, 1}, {2, 3}});
    std::mt19937 rng(808);
    const Vector xi = oracles::gaussian_vector(rng, 4);

    CHECK(sgl::sgl_dual_norm(xi, sgl::PenaltyParams(1.0, Vector::Ones(2)), part) ==
          Catch::Approx(xi.cwiseAbs().maxCoeff()));

    const double gl = std::max(xi.segment(0, 2).norm(), xi.segment(2, 2).norm());
    CHECK(sgl::sgl_dual_norm(xi, sgl::PenaltyParams(0.0, Vector::Ones(2)), part) ==
          Catch::Approx(gl));
}

TEST_CASE("sgl norm via per-group epsilon dual norms")
{
    // sum_g scale_g * ||beta_g||_{eps_g}^D equals the SGL norm
    std::mt19937 rng(909);
    const sgl::GroupPartition part(10, {{0, 4, 7}, {1, 2}, {3, 5, 6, 8, 9}});
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    std::uniform_real_distribution<double> uw(0.1, 3.0);
    for (int rep = 0; rep < 100; ++rep) {
        Vector w(3);
        for (Index g = 0; g < 3; ++g)
            w[g] = uw(rng);
        const sgl::PenaltyParams pen(ut(rng), w);
        const auto ep = sgl::EpsilonParams::from(pen);
        const Vector beta = oracles::mixed_scale_vector(rng, 10);

        double acc = 0.0;
        Vector buf;
        for (Index g = 0; g < 3; ++g) {
            sgl::gather(beta, part.group(g), buf);
            acc += ep.scale[g] * sgl::epsilon_dual_norm(buf, ep.eps[g]);
        }
        const double direct = sgl::sgl_norm(beta, pen, part);
        CHECK(acc == Catch::Approx(direct).epsilon(1e-12));
    }
}

TEST_CASE("generalized Cauchy-Schwarz for the norm pair")
{
    std::mt19937 rng(1010);
    const sgl::GroupPartition part(8, {{0, 1, 2}, {3, 4}, {5, 6, 7}});
    std::uniform_real_distribution<double> ut(0.0, 1.0);
    for (int rep = 0; rep < 200; ++rep) {
        const sgl::PenaltyParams pen(ut(rng), Vector::Ones(3) * 1.3);
        const Vector beta = oracles::gaussian_vector(rng, 8);
        const Vector xi = oracles::gaussian_vector(rng, 8);
        CHECK(beta.dot(xi) <=
              sgl::sgl_norm(beta, pen, part) * sgl::sgl_dual_norm(xi, pen, part) + 1e-12);
    }
}

TEST_CASE("dual ball membership characterization")
{
    // Omega^D(xi) <= 1 iff every group satisfies ||ST_tau(xi_g)|| <= (1-tau) w_g
    std::mt19937 rng(1111);
    const sgl::GroupPartition part(9, {{0, 1, 2}, {3, 4, 5}, {6, 7, 8}});
    Vector w(3);
    w << 1.0, 0.5, 2.0;

    for (double tau : {0.0, 0.2, 0.5, 0.8, 1.0}) {
        const sgl::PenaltyParams pen(tau, w);
        for (int rep = 0; rep < 50; ++rep) {
            const Vector xi = oracles::gaussian_vector(rng, 9);
            const double dn = sgl::sgl_dual_norm(xi, pen, part);
            REQUIRE(dn > 0.0);

            auto max_violation = [&](const Vector& v) {
                double worst = -std::numeric_limits<double>::infinity();
                Vector buf;
                for (Index g = 0; g < 3; ++g) {
                    sgl::gather(v, part.group(g), buf);
                    const double lhs = sgl::soft_threshold(buf, tau).norm();
                    worst = std::max(worst, lhs - (1.0 - tau) * w[g]);
                }
                return worst;
            };

            // just inside the ball: no group violates the bound
            CHECK(max_violation(xi * (1.0 - 1e-9) / dn) <= 1e-12);
            // just outside: some group must violate it
            CHECK(max_violation(xi * (1.0 + 1e-6) / dn) > 0.0);
        }
    }
}

TEST_CASE("dual norm boundary self-consistency")
{
    std::mt19937 rng(1212);
    const sgl::GroupPartition part(12, {{0, 1, 2, 3}, {4, 5, 6}, {7, 8}, {9, 10, 11}});
    Vector w(4);
    w << 2.0, 1.0, 0.7, 1.5;

    for (double tau : {0.0, 0.2, 0.5, 0.8, 1.0}) {
        const sgl::PenaltyParams pen(tau, w);
        for (int rep = 0; rep < 40; ++rep) {
            const Vector xi = oracles::mixed_scale_vector(rng, 12);
            const double dn = sgl::sgl_dual_norm(xi, pen, part);
            REQUIRE(dn > 0.0);

            double worst = -std::numeric_limits<double>::infinity();
            Vector buf;
            for (Index g = 0; g < 4; ++g) {
                sgl::gather(xi, part.group(g), buf);
                worst = std::max(worst,
                                 sgl::soft_threshold(buf / dn, tau).norm() - (1.0 - tau) * w[g]);
            }
            CHECK(std::abs(worst) <= 1e-8);
            if (tau == 1.0)
                CHECK(xi.cwiseAbs().maxCoeff() / dn == Catch::Approx(1.0).epsilon(1e-8));
        }
    }
}
