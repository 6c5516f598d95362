#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>
#include <vector>

namespace ambit {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace detail {

inline void require(bool cond, const char* msg) {
    if (!cond) throw std::invalid_argument(msg);
}

inline bool all_finite(const MatrixXd& m) { return m.allFinite(); }

}  // namespace detail

/// ||d||_2^rho, the transport cost of a displacement d. rho = 2 avoids the
/// square root entirely, the general case takes it once.
inline double norm_pow(const VectorXd& d, int rho) {
    if (rho == 2) return d.squaredNorm();
    if (rho == 1) return d.norm();
    return std::pow(d.norm(), static_cast<double>(rho));
}

/// Gaussian mixture whose components all share a single covariance matrix.
/// The shared covariance is a structural requirement: it keeps quantization
/// of the mixture closed-form (one eigenbasis serves every component) and is
/// preserved by the convolution used to build new centers.
///
/// The eigendecomposition of the covariance is computed once here and cached;
/// eigenvalues may be zero (degenerate axes are treated as point masses).
class GaussianMixture {
public:
    /// means is M x n (one component mean per row).
    GaussianMixture(VectorXd weights, MatrixXd means, MatrixXd covariance)
        : weights_(std::move(weights)), means_(std::move(means)), covariance_(std::move(covariance)) {
        const auto m = weights_.size();
        detail::require(m >= 1, "mixture needs at least one component");
        detail::require(means_.rows() == m, "weights/means size mismatch");
        const auto n = means_.cols();
        detail::require(n >= 1, "mixture dimension must be at least 1");
        detail::require(covariance_.rows() == n && covariance_.cols() == n,
                        "covariance dimension mismatch");
        detail::require(detail::all_finite(means_) && detail::all_finite(covariance_) &&
                            weights_.allFinite(),
                        "mixture parameters must be finite");
        detail::require((weights_.array() >= 0.0).all(), "mixture weights must be nonnegative");
        detail::require(std::abs(weights_.sum() - 1.0) <= 1e-12, "mixture weights must sum to 1");
        detail::require((covariance_ - covariance_.transpose()).cwiseAbs().maxCoeff() <= 1e-12,
                        "covariance must be symmetric");

        Eigen::SelfAdjointEigenSolver<MatrixXd> es(covariance_);
        detail::require(es.info() == Eigen::Success, "covariance eigendecomposition failed");
        eigenvalues_ = es.eigenvalues();
        eigenvectors_ = es.eigenvectors();
        const double scale = std::max(1.0, eigenvalues_.cwiseAbs().maxCoeff());
        detail::require(eigenvalues_.minCoeff() >= -1e-9 * scale,
                        "covariance must be positive semidefinite");
        eigenvalues_ = eigenvalues_.cwiseMax(0.0);
        sigmas_ = eigenvalues_.cwiseSqrt();
    }

    /// Single Gaussian N(mean, covariance).
    GaussianMixture(const VectorXd& mean, MatrixXd covariance)
        : GaussianMixture(VectorXd::Ones(1), mean.transpose(), std::move(covariance)) {}

    Eigen::Index size() const { return weights_.size(); }
    Eigen::Index dim() const { return means_.cols(); }

    const VectorXd& weights() const { return weights_; }
    const MatrixXd& means() const { return means_; }
    VectorXd mean(Eigen::Index i) const { return means_.row(i).transpose(); }
    const MatrixXd& covariance() const { return covariance_; }

    /// Cached orthonormal eigenvectors Q with covariance = Q diag(eigenvalues) Q^T.
    const MatrixXd& eigenvectors() const { return eigenvectors_; }
    const VectorXd& eigenvalues() const { return eigenvalues_; }
    /// Per-axis standard deviations in the eigenbasis (sqrt of eigenvalues).
    const VectorXd& axis_sigmas() const { return sigmas_; }

private:
    VectorXd weights_;
    MatrixXd means_;
    MatrixXd covariance_;
    MatrixXd eigenvectors_;
    VectorXd eigenvalues_;
    VectorXd sigmas_;
};

/// Finitely supported distribution: weighted point masses.
class DiscreteDistribution {
public:
    /// locations is N x n (one support point per row).
    DiscreteDistribution(MatrixXd locations, VectorXd weights)
        : locations_(std::move(locations)), weights_(std::move(weights)) {
        detail::require(weights_.size() >= 1, "discrete distribution needs support");
        detail::require(locations_.rows() == weights_.size(), "locations/weights size mismatch");
        detail::require(locations_.cols() >= 1, "locations must have dimension at least 1");
        detail::require(detail::all_finite(locations_), "locations must be finite");
        detail::require(weights_.allFinite(), "weights must be finite");
        detail::require((weights_.array() >= 0.0).all(), "weights must be nonnegative");
        detail::require(std::abs(weights_.sum() - 1.0) <= 1e-12, "weights must sum to 1");
    }

    /// Point mass at c.
    explicit DiscreteDistribution(const VectorXd& c)
        : DiscreteDistribution(c.transpose(), VectorXd::Ones(1)) {}

    Eigen::Index size() const { return weights_.size(); }
    Eigen::Index dim() const { return locations_.cols(); }

    const MatrixXd& locations() const { return locations_; }
    VectorXd location(Eigen::Index i) const { return locations_.row(i).transpose(); }
    const VectorXd& weights() const { return weights_; }

    VectorXd mean() const { return locations_.transpose() * weights_; }

private:
    MatrixXd locations_;
    VectorXd weights_;
};

/// rho-Wasserstein ambiguity ball: every distribution within `radius` of
/// `center` in the order-`order` Wasserstein distance.
struct AmbiguityBall {
    GaussianMixture center;
    double radius = 0.0;
    int order = 2;

    AmbiguityBall(GaussianMixture c, double r, int rho) : center(std::move(c)), radius(r), order(rho) {
        detail::require(radius >= 0.0 && std::isfinite(radius), "ball radius must be nonnegative");
        detail::require(order >= 1, "ball order must be at least 1");
    }
};

/// Mean and covariance of a mixture: mean = sum w_i m_i,
/// covariance = shared + sum w_i (m_i - mean)(m_i - mean)^T.
inline std::pair<VectorXd, MatrixXd> mixture_moments(const GaussianMixture& gmm) {
    const VectorXd mu = gmm.means().transpose() * gmm.weights();
    MatrixXd cov = gmm.covariance();
    for (Eigen::Index i = 0; i < gmm.size(); ++i) {
        const VectorXd d = gmm.mean(i) - mu;
        cov.noalias() += gmm.weights()(i) * d * d.transpose();
    }
    cov = 0.5 * (cov + cov.transpose());
    return {mu, cov};
}

/// Mean and covariance of a discrete distribution.
inline std::pair<VectorXd, MatrixXd> discrete_moments(const DiscreteDistribution& d) {
    const VectorXd mu = d.mean();
    MatrixXd cov = MatrixXd::Zero(d.dim(), d.dim());
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        const VectorXd v = d.location(i) - mu;
        cov.noalias() += d.weights()(i) * v * v.transpose();
    }
    cov = 0.5 * (cov + cov.transpose());
    return {mu, cov};
}

/// Convolution of a discrete distribution with a Gaussian mixture:
/// sum_i w_i delta_{c_i} * sum_j v_j N(m_j, S) = sum_ij w_i v_j N(c_i + m_j, S).
/// Component order is i-major (discrete index outer, mixture index inner).
inline GaussianMixture convolve(const DiscreteDistribution& d, const GaussianMixture& noise) {
    detail::require(d.dim() == noise.dim(), "convolve: dimension mismatch");
    const Eigen::Index n = d.size() * noise.size();
    VectorXd w(n);
    MatrixXd means(n, d.dim());
    Eigen::Index k = 0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
        for (Eigen::Index j = 0; j < noise.size(); ++j, ++k) {
            w(k) = d.weights()(i) * noise.weights()(j);
            means.row(k) = d.locations().row(i) + noise.means().row(j);
        }
    }
    w /= w.sum();
    return GaussianMixture(std::move(w), std::move(means), noise.covariance());
}

namespace detail {

inline Eigen::Index draw_index(const VectorXd& weights, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double u = unif(rng) * weights.sum();
    double acc = 0.0;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
        acc += weights(i);
        if (u <= acc) return i;
    }
    return weights.size() - 1;
}

}  // namespace detail

/// Draw n samples (rows) from the mixture. Deterministic for a fixed seed:
/// component index first, then the Gaussian draw in the eigenbasis.
inline MatrixXd sample(const GaussianMixture& gmm, Eigen::Index n, std::uint64_t seed) {
    detail::require(n >= 1, "sample: need n >= 1");
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    MatrixXd out(n, gmm.dim());
    VectorXd z(gmm.dim());
    for (Eigen::Index s = 0; s < n; ++s) {
        const Eigen::Index i = detail::draw_index(gmm.weights(), rng);
        for (Eigen::Index a = 0; a < gmm.dim(); ++a) z(a) = gauss(rng) * gmm.axis_sigmas()(a);
        out.row(s) = (gmm.mean(i) + gmm.eigenvectors() * z).transpose();
    }
    return out;
}

/// Draw n samples (rows) from a discrete distribution.
inline MatrixXd sample(const DiscreteDistribution& d, Eigen::Index n, std::uint64_t seed) {
    detail::require(n >= 1, "sample: need n >= 1");
    std::mt19937_64 rng(seed);
    MatrixXd out(n, d.dim());
    for (Eigen::Index s = 0; s < n; ++s) out.row(s) = d.locations().row(detail::draw_index(d.weights(), rng));
    return out;
}

}  // namespace ambit
