#include <ambit/transport.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace ambit;

namespace {

DiscreteDistribution points1d(std::initializer_list<double> xs, std::initializer_list<double> ws) {
    MatrixXd loc(static_cast<Eigen::Index>(xs.size()), 1);
    VectorXd w(static_cast<Eigen::Index>(ws.size()));
    Eigen::Index i = 0;
    for (double x : xs) loc(i++, 0) = x;
    i = 0;
    for (double v : ws) w(i++) = v;
    return DiscreteDistribution(loc, w);
}

void check_plan(const DiscreteDistribution& p, const DiscreteDistribution& q,
                const TransportPlan& plan) {
    VectorXd row = VectorXd::Zero(p.size()), col = VectorXd::Zero(q.size());
    for (const auto& e : plan.entries) {
        CHECK(e.mass >= -1e-12);
        row(e.i) += e.mass;
        col(e.j) += e.mass;
    }
    CHECK((row - p.weights()).cwiseAbs().maxCoeff() < 1e-9);
    CHECK((col - q.weights()).cwiseAbs().maxCoeff() < 1e-9);
}

}  // namespace

TEST_CASE("distance between point masses is the point distance") {
    const DiscreteDistribution a(Eigen::Vector2d(0, 0));
    const DiscreteDistribution b(Eigen::Vector2d(3, 4));
    for (int rho : {1, 2}) {
        const auto [d, plan] = wasserstein_discrete(a, b, rho);
        CHECK(d == Catch::Approx(5.0).epsilon(1e-12));
        CHECK(wasserstein_bruteforce(a, b, rho) == Catch::Approx(5.0).epsilon(1e-12));
        check_plan(a, b, plan);
    }
}

TEST_CASE("distance of a distribution to itself is zero") {
    std::mt19937_64 rng(3);
    for (int it = 0; it < 20; ++it) {
        const DiscreteDistribution p = testing::random_discrete(rng, 2);
        const auto [d, plan] = wasserstein_discrete(p, p, 2);
        CHECK(d < 1e-9);
        check_plan(p, p, plan);
    }
}

TEST_CASE("textbook 1-D instance") {
    const DiscreteDistribution p = points1d({0, 1}, {0.5, 0.5});
    const DiscreteDistribution q = points1d({0, 2}, {0.5, 0.5});
    const auto [d2, plan2] = wasserstein_discrete(p, q, 2);
    CHECK(d2 == Catch::Approx(1.0 / std::sqrt(2.0)).epsilon(1e-10));
    CHECK(wasserstein_bruteforce(p, q, 2) == Catch::Approx(d2).margin(1e-10));
    check_plan(p, q, plan2);

    const auto [d1, plan1] = wasserstein_discrete(p, q, 1);
    CHECK(d1 == Catch::Approx(0.5).epsilon(1e-10));
    check_plan(p, q, plan1);
}

TEST_CASE("simplex agrees with bruteforce on random small instances") {
    std::mt19937_64 rng(7777);
    std::uniform_int_distribution<int> size_dist(1, 4);
    std::uniform_real_distribution<double> unif(-2.0, 2.0), wdist(0.05, 1.0);
    for (int it = 0; it < 120; ++it) {
        const int dim = 1 + (it % 3);
        const int R = size_dist(rng), C = size_dist(rng);
        MatrixXd pl(R, dim), ql(C, dim);
        VectorXd pw(R), qw(C);
        for (int i = 0; i < R; ++i) {
            pw(i) = wdist(rng);
            for (int a = 0; a < dim; ++a) pl(i, a) = unif(rng);
        }
        for (int j = 0; j < C; ++j) {
            qw(j) = wdist(rng);
            for (int a = 0; a < dim; ++a) ql(j, a) = unif(rng);
        }
        pw /= pw.sum();
        pw(R - 1) += 1.0 - pw.sum();
        qw /= qw.sum();
        qw(C - 1) += 1.0 - qw.sum();
        const DiscreteDistribution p(pl, pw), q(ql, qw);
        for (int rho : {1, 2}) {
            const auto [d, plan] = wasserstein_discrete(p, q, rho);
            const double ref = wasserstein_bruteforce(p, q, rho);
            INFO("it=" << it << " rho=" << rho << " R=" << R << " C=" << C);
            CHECK(std::abs(d - ref) < 1e-7);
            check_plan(p, q, plan);
        }
    }
}

TEST_CASE("bruteforce rejects oversized instances") {
    std::mt19937_64 rng(1);
    const DiscreteDistribution p = testing::random_discrete(rng, 1, 6);
    MatrixXd loc(20, 1);
    for (int i = 0; i < 20; ++i) loc(i, 0) = i;
    const DiscreteDistribution q(loc, VectorXd::Constant(20, 0.05));
    CHECK_THROWS_AS(wasserstein_bruteforce(q, q, 2), std::invalid_argument);
}

TEST_CASE("metric axioms hold on random triples") {
    std::mt19937_64 rng(424242);
    for (int it = 0; it < 60; ++it) {
        const int dim = 1 + (it % 2);
        const DiscreteDistribution p = testing::random_discrete(rng, dim);
        const DiscreteDistribution q = testing::random_discrete(rng, dim);
        const DiscreteDistribution r = testing::random_discrete(rng, dim);
        for (int rho : {1, 2}) {
            const double dpq = wasserstein_discrete(p, q, rho).first;
            const double dqp = wasserstein_discrete(q, p, rho).first;
            const double dpr = wasserstein_discrete(p, r, rho).first;
            const double dqr = wasserstein_discrete(q, r, rho).first;
            CHECK(std::abs(dpq - dqp) < 1e-9);
            CHECK(dpr <= dpq + dqr + 1e-9);
            CHECK(wasserstein_discrete(p, p, rho).first < 1e-9);
        }
    }
}

TEST_CASE("distance dominates the mean gap") {
    std::mt19937_64 rng(515151);
    for (int it = 0; it < 40; ++it) {
        const int dim = 1 + (it % 3);
        const DiscreteDistribution p = testing::random_discrete(rng, dim);
        const DiscreteDistribution q = testing::random_discrete(rng, dim);
        for (int rho : {1, 2}) {
            const double d = wasserstein_discrete(p, q, rho).first;
            CHECK(d >= (p.mean() - q.mean()).norm() - 1e-9);
        }
    }
}

TEST_CASE("translation moves the distance by the shift norm") {
    std::mt19937_64 rng(99);
    for (int it = 0; it < 20; ++it) {
        const int dim = 1 + (it % 3);
        const DiscreteDistribution p = testing::random_discrete(rng, dim);
        VectorXd v(dim);
        std::uniform_real_distribution<double> unif(-2.0, 2.0);
        for (int a = 0; a < dim; ++a) v(a) = unif(rng);
        MatrixXd shifted = p.locations();
        shifted.rowwise() += v.transpose();
        const DiscreteDistribution q(shifted, p.weights());
        for (int rho : {1, 2}) {
            const double d = wasserstein_discrete(p, q, rho).first;
            CHECK(d == Catch::Approx(v.norm()).margin(1e-9));
        }
    }
}

TEST_CASE("dimension mismatch is rejected") {
    const DiscreteDistribution a(Eigen::Vector2d(0, 0));
    const DiscreteDistribution b(VectorXd::Zero(3));
    CHECK_THROWS_AS(wasserstein_discrete(a, b, 2), std::invalid_argument);
}

TEST_CASE("moderate rectangular instances stay exact") {
    // sanity beyond the bruteforce size range: compare against a uniform
    // 1-D instance whose optimal value is known in closed form (sorted
    // monotone coupling)
    const int n = 50;
    MatrixXd xs(n, 1), ys(n, 1);
    for (int i = 0; i < n; ++i) {
        xs(i, 0) = i;
        ys(i, 0) = i + 0.5;  // uniform shift: optimal moves each atom by 0.5
    }
    const DiscreteDistribution p(xs, VectorXd::Constant(n, 1.0 / n));
    const DiscreteDistribution q(ys, VectorXd::Constant(n, 1.0 / n));
    const auto [d, plan] = wasserstein_discrete(p, q, 2);
    CHECK(d == Catch::Approx(0.5).epsilon(1e-9));
    check_plan(p, q, plan);
}
