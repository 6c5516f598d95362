#include <ambit/distributions.hpp>

#include <catch2/catch_amalgamated.hpp>

#include "test_helpers.hpp"

using namespace ambit;

namespace {

MatrixXd rows2(std::initializer_list<std::initializer_list<double>> rows) {
    MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
    Eigen::Index i = 0;
    for (const auto& r : rows) {
        Eigen::Index j = 0;
        for (double v : r) m(i, j++) = v;
        ++i;
    }
    return m;
}

VectorXd vec(std::initializer_list<double> v) {
    VectorXd out(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double x : v) out(i++) = x;
    return out;
}

}  // namespace

TEST_CASE("mixture construction validates invariants") {
    const MatrixXd eye = MatrixXd::Identity(2, 2);
    CHECK_THROWS_AS(GaussianMixture(vec({0.5, 0.4}), rows2({{0, 0}, {1, 0}}), eye), std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture(vec({-0.1, 1.1}), rows2({{0, 0}, {1, 0}}), eye), std::invalid_argument);
    CHECK_THROWS_AS(GaussianMixture(vec({1.0}), rows2({{0, 0}}), rows2({{1, 0.5}, {0.4, 1}})), std::invalid_argument);
    // indefinite covariance: eigenvalues 3 and -1
    CHECK_THROWS_AS(GaussianMixture(vec({1.0}), rows2({{0, 0}}), rows2({{1, 2}, {2, 1}})), std::invalid_argument);

    const GaussianMixture g(vec({0.25, 0.75}), rows2({{0, 1}, {2, 3}}), eye);
    CHECK(g.size() == 2);
    CHECK(g.dim() == 2);
    const MatrixXd recon = g.eigenvectors() * g.eigenvalues().asDiagonal() * g.eigenvectors().transpose();
    CHECK((recon - g.covariance()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("degenerate covariance is accepted and sampled as a point mass") {
    const GaussianMixture g(vec({0.0, 0.0}), MatrixXd::Zero(2, 2));
    CHECK(g.eigenvalues().minCoeff() == 0.0);
    const MatrixXd s = sample(g, 3, 7);
    CHECK(s.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("mixture_moments on a single component is the identity") {
    const VectorXd m = vec({1.5, -2.0});
    const MatrixXd cov = rows2({{2.0, 0.3}, {0.3, 1.0}});
    const auto [mu, c] = mixture_moments(GaussianMixture(m, cov));
    CHECK((mu - m).norm() == 0.0);
    CHECK((c - cov).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("mixture_moments on a symmetric two-component mixture") {
    const GaussianMixture g(vec({0.5, 0.5}), rows2({{-1, 0}, {1, 0}}), MatrixXd::Identity(2, 2));
    const auto [mu, c] = mixture_moments(g);
    CHECK(mu.cwiseAbs().maxCoeff() < 1e-15);
    CHECK((c - rows2({{2, 0}, {0, 1}})).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("mixture_moments match Monte Carlo moments of a random 3-component mixture") {
    const VectorXd w = vec({0.2, 0.5, 0.3});
    const MatrixXd means = rows2({{-1.0, 0.5}, {0.8, -0.2}, {2.0, 1.0}});
    const MatrixXd cov = rows2({{0.7, 0.2}, {0.2, 0.4}});
    const GaussianMixture g(w, means, cov);
    const auto [mu, c] = mixture_moments(g);

    const Eigen::Index n = 1000000;
    const MatrixXd s = sample(g, n, 20240917ULL);
    const VectorXd smu = s.colwise().mean().transpose();
    MatrixXd scov = MatrixXd::Zero(2, 2);
    for (Eigen::Index i = 0; i < n; ++i) {
        const VectorXd d = s.row(i).transpose() - smu;
        scov += d * d.transpose();
    }
    scov /= static_cast<double>(n - 1);

    for (int a = 0; a < 2; ++a) {
        const double se = std::sqrt(c(a, a) / static_cast<double>(n));
        CHECK(std::abs(mu(a) - smu(a)) < 3.0 * se);
    }
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) {
            const double se = std::sqrt((c(a, a) * c(b, b) + c(a, b) * c(a, b)) / static_cast<double>(n));
            CHECK(std::abs(c(a, b) - scov(a, b)) < 3.0 * se);
        }
    }
}

TEST_CASE("convolve shifts a Gaussian by each discrete location") {
    const DiscreteDistribution d(rows2({{0, 0}, {1, 0}}), vec({0.3, 0.7}));
    const GaussianMixture noise(vec({0, 0}), MatrixXd::Identity(2, 2));
    const GaussianMixture out = convolve(d, noise);
    REQUIRE(out.size() == 2);
    CHECK(out.weights()(0) == Catch::Approx(0.3).margin(1e-15));
    CHECK(out.weights()(1) == Catch::Approx(0.7).margin(1e-15));
    CHECK((out.means() - d.locations()).cwiseAbs().maxCoeff() == 0.0);
    CHECK((out.covariance() - noise.covariance()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("convolve with a point mass at zero is the identity") {
    std::mt19937_64 rng(5);
    const GaussianMixture g = testing::random_mixture(rng, 2);
    const DiscreteDistribution delta0(VectorXd::Zero(2));
    const GaussianMixture out = convolve(delta0, g);
    CHECK((out.weights() - g.weights()).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((out.means() - g.means()).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("convolve with a two-component noise mixture gives the product structure") {
    // Quadruple-tank style noise: 0.5 N(mu, S) + 0.5 N(-mu, S).
    const VectorXd mu = vec({0.01, 0.01});
    MatrixXd means(2, 2);
    means.row(0) = mu.transpose();
    means.row(1) = -mu.transpose();
    const GaussianMixture noise(vec({0.5, 0.5}), means, 0.0001 * MatrixXd::Identity(2, 2));
    const DiscreteDistribution d(rows2({{0, 0}, {1, 1}}), vec({0.5, 0.5}));
    const GaussianMixture out = convolve(d, noise);
    REQUIRE(out.size() == 4);
    for (int k = 0; k < 4; ++k) CHECK(out.weights()(k) == Catch::Approx(0.25).margin(1e-15));
    CHECK((out.mean(0) - mu).norm() < 1e-15);
    CHECK((out.mean(1) + mu).norm() < 1e-15);
}

TEST_CASE("convolve dimension mismatch is rejected") {
    const DiscreteDistribution d(VectorXd::Zero(3));
    const GaussianMixture g(VectorXd::Zero(2), MatrixXd::Identity(2, 2));
    CHECK_THROWS_AS(convolve(d, g), std::invalid_argument);
}

TEST_CASE("convolve mean additivity and weight conservation on random inputs") {
    std::mt19937_64 rng(99);
    for (int it = 0; it < 50; ++it) {
        const int dim = 1 + static_cast<int>(rng() % 3);
        const DiscreteDistribution d = testing::random_discrete(rng, dim);
        const GaussianMixture g = testing::random_mixture(rng, dim);
        const GaussianMixture out = convolve(d, g);
        const auto [mu_out, cov_out] = mixture_moments(out);
        const auto [mu_g, cov_g] = mixture_moments(g);
        CHECK((mu_out - (d.mean() + mu_g)).norm() < 1e-9);
        CHECK(std::abs(out.weights().sum() - 1.0) <= 1e-12);

        Eigen::SelfAdjointEigenSolver<MatrixXd> es(cov_out);
        CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    }
}

TEST_CASE("sampling is deterministic for a fixed seed") {
    std::mt19937_64 rng(11);
    const GaussianMixture g = testing::random_mixture(rng, 3);
    const MatrixXd a = sample(g, 64, 1234);
    const MatrixXd b = sample(g, 64, 1234);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    const DiscreteDistribution d = testing::random_discrete(rng, 3);
    const MatrixXd c = sample(d, 64, 77);
    const MatrixXd e = sample(d, 64, 77);
    CHECK((c - e).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("sampling a point mass copies the location") {
    const VectorXd c = vec({1.0, -2.0});
    const DiscreteDistribution d(c);
    const MatrixXd s = sample(d, 5, 3);
    for (int i = 0; i < 5; ++i) CHECK((s.row(i).transpose() - c).norm() == 0.0);
}

TEST_CASE("1-D standard normal sample mean obeys the CLT bound") {
    const GaussianMixture g(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    const MatrixXd s = sample(g, 1000000, 31337);
    CHECK(std::abs(s.col(0).mean()) < 0.004);
}

TEST_CASE("ambiguity ball validates radius and order") {
    const GaussianMixture g(VectorXd::Zero(1), MatrixXd::Identity(1, 1));
    CHECK_THROWS_AS(AmbiguityBall(g, -0.1, 2), std::invalid_argument);
    CHECK_THROWS_AS(AmbiguityBall(g, 0.1, 0), std::invalid_argument);
    const AmbiguityBall b(g, 0.0, 1);
    CHECK(b.radius == 0.0);
}
