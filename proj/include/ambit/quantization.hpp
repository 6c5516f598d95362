#pragma once

#include <ambit/distributions.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <vector>

namespace ambit {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Standard normal CDF, accurate in both tails.
inline double norm_cdf(double x) { return 0.5 * std::erfc(-x * M_SQRT1_2); }

/// Standard normal density.
inline double norm_pdf(double x) {
    static const double inv_sqrt_2pi = 0.3989422804014326779;
    return inv_sqrt_2pi * std::exp(-0.5 * x * x);
}

/// Gaussian mass of N(mean, sigma^2) on the half-open interval (a, b].
/// sigma = 0 degenerates to the point-mass indicator.
inline double truncated_mass(double mean, double sigma, double a, double b) {
    if (sigma == 0.0) return (mean > a && mean <= b) ? 1.0 : 0.0;
    const double za = (a == -kInf) ? 0.0 : norm_cdf((a - mean) / sigma);
    const double zb = (b == kInf) ? 1.0 : norm_cdf((b - mean) / sigma);
    return std::max(0.0, zb - za);
}

/// Integral of (x - center)^2 over (a, b] against the N(mean, variance)
/// density, in closed form via standard truncated-moment algebra.
inline double truncated_second_moment(double mean, double variance, double a, double b,
                                      double center) {
    detail::require(a < b, "truncated_second_moment: need a < b");
    detail::require(variance >= 0.0, "truncated_second_moment: negative variance");
    if (variance == 0.0) {
        return (mean > a && mean <= b) ? (mean - center) * (mean - center) : 0.0;
    }
    const double sigma = std::sqrt(variance);
    const double alpha = (a == -kInf) ? -kInf : (a - mean) / sigma;
    const double beta = (b == kInf) ? kInf : (b - mean) / sigma;
    const double za = (alpha == -kInf) ? 0.0 : norm_cdf(alpha);
    const double zb = (beta == kInf) ? 1.0 : norm_cdf(beta);
    const double pa = (alpha == -kInf) ? 0.0 : norm_pdf(alpha);
    const double pb = (beta == kInf) ? 0.0 : norm_pdf(beta);
    const double apa = (alpha == -kInf) ? 0.0 : alpha * pa;
    const double bpb = (beta == kInf) ? 0.0 : beta * pb;
    const double dm = mean - center;
    const double value =
        (variance + dm * dm) * (zb - za) - variance * (bpb - apa) - 2.0 * dm * sigma * (pb - pa);
    return std::max(0.0, value);
}

/// Rectangular partition of R^n aligned with a covariance eigenbasis.
///
/// Cells are half-open boxes in rotated coordinates y = Q^T x; per axis the
/// breakpoints split the line into (-inf, b_0], (b_0, b_1], ..., (b_last, inf),
/// so the partition covers all of R^n and points exactly on a breakpoint fall
/// into the lower cell. One representative location per cell, stored in the
/// original coordinates. Flat cell ids are row-major with axis 0 slowest.
class Quantizer {
public:
    Quantizer(MatrixXd rotation, std::vector<std::vector<double>> breakpoints, MatrixXd locations,
              double coverage)
        : rotation_(std::move(rotation)),
          breakpoints_(std::move(breakpoints)),
          locations_(std::move(locations)),
          coverage_(coverage) {
        const Eigen::Index n = rotation_.rows();
        detail::require(rotation_.cols() == n, "rotation must be square");
        detail::require((rotation_ * rotation_.transpose() - MatrixXd::Identity(n, n))
                                .cwiseAbs()
                                .maxCoeff() <= 1e-9,
                        "rotation must be orthonormal");
        detail::require(static_cast<Eigen::Index>(breakpoints_.size()) == n,
                        "one breakpoint list per axis required");
        axis_cells_.resize(breakpoints_.size());
        std::int64_t total = 1;
        for (std::size_t a = 0; a < breakpoints_.size(); ++a) {
            const auto& b = breakpoints_[a];
            for (std::size_t j = 1; j < b.size(); ++j)
                detail::require(b[j] > b[j - 1], "breakpoints must be strictly increasing");
            axis_cells_[a] = static_cast<int>(b.size()) + 1;
            total *= axis_cells_[a];
        }
        detail::require(locations_.rows() == total, "one location per cell required");
        detail::require(locations_.cols() == n, "location dimension mismatch");
        strides_.assign(breakpoints_.size(), 1);
        for (int a = static_cast<int>(breakpoints_.size()) - 2; a >= 0; --a)
            strides_[static_cast<std::size_t>(a)] = strides_[static_cast<std::size_t>(a) + 1] *
                                                    axis_cells_[static_cast<std::size_t>(a) + 1];
        // every location must lie inside its own cell
        for (std::int64_t id = 0; id < total; ++id) {
            const VectorXd y = rotation_.transpose() * locations_.row(id).transpose();
            detail::require(locate_rotated(y) == id, "location outside its cell");
        }
    }

    Eigen::Index dim() const { return rotation_.rows(); }
    std::int64_t cell_count() const { return locations_.rows(); }
    const MatrixXd& rotation() const { return rotation_; }
    const std::vector<std::vector<double>>& breakpoints() const { return breakpoints_; }
    const MatrixXd& locations() const { return locations_; }
    const std::vector<int>& axis_cells() const { return axis_cells_; }
    double coverage() const { return coverage_; }

    /// Axis-interval index of coordinate y on axis a (half-open cells (lo, hi]).
    int axis_interval(std::size_t a, double y) const {
        const auto& b = breakpoints_[a];
        return static_cast<int>(std::lower_bound(b.begin(), b.end(), y) - b.begin());
    }

    /// Bounds of interval j on axis a; outer intervals extend to +-infinity.
    std::pair<double, double> axis_bounds(std::size_t a, int j) const {
        const auto& b = breakpoints_[a];
        const double lo = (j == 0) ? -kInf : b[static_cast<std::size_t>(j) - 1];
        const double hi = (j == static_cast<int>(b.size())) ? kInf : b[static_cast<std::size_t>(j)];
        return {lo, hi};
    }

    /// Multi-index of a flat cell id.
    std::vector<int> multi_index(std::int64_t id) const {
        std::vector<int> multi(strides_.size());
        for (std::size_t a = 0; a < strides_.size(); ++a) {
            multi[a] = static_cast<int>(id / strides_[a]);
            id %= strides_[a];
        }
        return multi;
    }

    std::int64_t flat_index(const std::vector<int>& multi) const {
        std::int64_t id = 0;
        for (std::size_t a = 0; a < multi.size(); ++a) id += strides_[a] * multi[a];
        return id;
    }

    std::int64_t locate_rotated(const VectorXd& y) const {
        std::int64_t id = 0;
        for (Eigen::Index a = 0; a < y.size(); ++a)
            id += strides_[static_cast<std::size_t>(a)] *
                  axis_interval(static_cast<std::size_t>(a), y(a));
        return id;
    }

    /// Flat id of the cell containing x (original coordinates).
    std::int64_t locate(const VectorXd& x) const { return locate_rotated(rotation_.transpose() * x); }

private:
    MatrixXd rotation_;
    std::vector<std::vector<double>> breakpoints_;
    MatrixXd locations_;
    double coverage_;
    std::vector<int> axis_cells_;
    std::vector<std::int64_t> strides_;
};

/// Uniform grid in the eigenbasis of gmm with the given per-axis cell counts.
/// Axis a spans [lo_a - coverage*sigma_a, hi_a + coverage*sigma_a] where
/// lo/hi bound the rotated component means; locations sit at the centers of
/// the nominal (bounded) grid boxes.
inline Quantizer make_uniform_quantizer(const GaussianMixture& gmm, const std::vector<int>& axis_cells,
                                        double coverage) {
    const Eigen::Index n = gmm.dim();
    detail::require(static_cast<Eigen::Index>(axis_cells.size()) == n, "one cell count per axis");
    detail::require(coverage > 0.0, "coverage must be positive");
    const MatrixXd rot_means = gmm.means() * gmm.eigenvectors();  // row i = rotated mean of comp i

    std::vector<std::vector<double>> breaks(static_cast<std::size_t>(n));
    std::vector<std::vector<double>> centers(static_cast<std::size_t>(n));
    for (Eigen::Index a = 0; a < n; ++a) {
        const std::size_t ai = static_cast<std::size_t>(a);
        const int cells = axis_cells[ai];
        detail::require(cells >= 1, "axis cell count must be at least 1");
        const double sigma = gmm.axis_sigmas()(a);
        const double lo = rot_means.col(a).minCoeff() - coverage * sigma;
        const double hi = rot_means.col(a).maxCoeff() + coverage * sigma;
        detail::require(cells == 1 || hi > lo, "cannot split a zero-spread axis");
        const double h = (hi - lo) / cells;
        for (int j = 1; j < cells; ++j) breaks[ai].push_back(lo + h * j);
        for (int j = 0; j < cells; ++j) centers[ai].push_back(lo + h * (j + 0.5));
        if (cells == 1) centers[ai][0] = 0.5 * (lo + hi);
    }

    std::int64_t total = 1;
    for (int c : axis_cells) total *= c;
    MatrixXd locations(total, n);
    std::vector<int> multi(static_cast<std::size_t>(n), 0);
    for (std::int64_t id = 0; id < total; ++id) {
        VectorXd y(n);
        for (Eigen::Index a = 0; a < n; ++a)
            y(a) = centers[static_cast<std::size_t>(a)]
                          [static_cast<std::size_t>(multi[static_cast<std::size_t>(a)])];
        locations.row(id) = (gmm.eigenvectors() * y).transpose();
        for (Eigen::Index a = n - 1; a >= 0; --a) {
            if (++multi[static_cast<std::size_t>(a)] < axis_cells[static_cast<std::size_t>(a)]) break;
            multi[static_cast<std::size_t>(a)] = 0;
        }
    }
    return Quantizer(gmm.eigenvectors(), std::move(breaks), std::move(locations), coverage);
}

/// Choose per-axis cell counts proportional to axis spread
/// (2*coverage*sigma_a + mean range) with the product capped by `budget`,
/// then build the uniform grid. Zero-variance axes get exactly one cell.
inline Quantizer build_grid(const GaussianMixture& gmm, std::int64_t budget, double coverage = 4.0) {
    detail::require(budget >= 1, "grid budget must be at least 1");
    detail::require(coverage > 0.0, "coverage must be positive");
    const Eigen::Index n = gmm.dim();
    const MatrixXd rot_means = gmm.means() * gmm.eigenvectors();

    std::vector<double> spread(static_cast<std::size_t>(n), 0.0);
    std::vector<int> cells(static_cast<std::size_t>(n), 1);
    std::vector<std::size_t> candidates;
    for (Eigen::Index a = 0; a < n; ++a) {
        const double sigma = gmm.axis_sigmas()(a);
        const double range = rot_means.col(a).maxCoeff() - rot_means.col(a).minCoeff();
        spread[static_cast<std::size_t>(a)] = 2.0 * coverage * sigma + range;
        if (sigma > 0.0) candidates.push_back(static_cast<std::size_t>(a));
    }

    std::int64_t product = 1;
    while (!candidates.empty()) {
        std::size_t best = candidates[0];
        double best_ratio = -1.0;
        for (std::size_t a : candidates) {
            const double ratio = spread[a] / cells[a];
            if (ratio > best_ratio) {
                best_ratio = ratio;
                best = a;
            }
        }
        const std::int64_t trial = product / cells[best] * (cells[best] + 1);
        if (trial <= budget) {
            product = trial;
            ++cells[best];
        } else {
            candidates.erase(std::find(candidates.begin(), candidates.end(), best));
        }
    }
    return make_uniform_quantizer(gmm, cells, coverage);
}

/// Quantization of a mixture plus the penalty theta_delta it certifies.
struct QuantizationResult {
    DiscreteDistribution discrete;
    double theta_delta = 0.0;
    std::vector<std::int64_t> cell_ids;  // kept cells, flat ids ascending
    std::vector<double> cell_costs;      // per kept cell: integral of ||x - c||^rho
    double dropped_mass = 0.0;
};

namespace detail {

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1],
/// computed once by Newton iteration on the Legendre recurrence.
inline const std::pair<std::vector<double>, std::vector<double>>& gauss_legendre(int order) {
    static std::vector<std::pair<std::vector<double>, std::vector<double>>> cache(64);
    auto& entry = cache[static_cast<std::size_t>(order)];
    if (entry.first.empty()) {
        std::vector<double> x(static_cast<std::size_t>(order)), w(static_cast<std::size_t>(order));
        for (int i = 0; i < order; ++i) {
            double t = std::cos(M_PI * (i + 0.75) / (order + 0.5));
            double p0 = 0.0, dp = 0.0;
            for (int it = 0; it < 100; ++it) {
                p0 = 1.0;
                double p1 = 0.0;
                for (int j = 0; j < order; ++j) {
                    const double p2 = p1;
                    p1 = p0;
                    p0 = ((2.0 * j + 1.0) * t * p1 - j * p2) / (j + 1.0);
                }
                dp = order * (t * p0 - p1) / (t * t - 1.0);
                const double step = p0 / dp;
                t -= step;
                if (std::abs(step) < 1e-15) break;
            }
            x[static_cast<std::size_t>(i)] = t;
            w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
        }
        entry = {std::move(x), std::move(w)};
    }
    return entry;
}

/// Per-axis quadrature grid over (lo, hi) against N(mean, sigma^2), clipped to
/// +-8.5 sigma and split at the kink coordinate; the returned weights include
/// the Gaussian density factor.
inline void axis_quadrature(double lo, double hi, double mean, double sigma, double kink,
                            std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.clear();
    weights.clear();
    const double a = std::max(lo, mean - 8.5 * sigma);
    const double b = std::min(hi, mean + 8.5 * sigma);
    if (!(b > a)) return;
    std::vector<double> edges{a, b};
    if (kink > a && kink < b) edges.insert(edges.begin() + 1, kink);
    const auto& [gx, gw] = gauss_legendre(12);
    for (std::size_t e = 0; e + 1 < edges.size(); ++e) {
        const double span = edges[e + 1] - edges[e];
        const int panels = std::max(1, static_cast<int>(std::ceil(span / (0.75 * sigma))));
        const double pw = span / panels;
        for (int p = 0; p < panels; ++p) {
            const double p0 = edges[e] + p * pw;
            for (std::size_t i = 0; i < gx.size(); ++i) {
                const double t = p0 + 0.5 * pw * (gx[i] + 1.0);
                nodes.push_back(t);
                weights.push_back(0.5 * pw * gw[i] / sigma * norm_pdf((t - mean) / sigma));
            }
        }
    }
}

/// Numeric per-cell integral of ||y - c||_2^rho for one Gaussian component in
/// rotated coordinates (used for rho = 1; rho = 2 has a closed form).
inline double cell_cost_quadrature(const std::vector<std::pair<double, double>>& bounds,
                                   const VectorXd& mean_rot, const VectorXd& sigmas,
                                   const VectorXd& loc_rot, int rho) {
    const std::size_t n = bounds.size();
    std::vector<std::vector<double>> nodes(n), weights(n);
    double fixed_sq = 0.0;  // squared offsets of degenerate (sigma = 0) axes
    std::vector<std::size_t> free_axes;
    for (std::size_t a = 0; a < n; ++a) {
        const auto [lo, hi] = bounds[a];
        const auto ai = static_cast<Eigen::Index>(a);
        if (sigmas(ai) == 0.0) {
            if (!(mean_rot(ai) > lo && mean_rot(ai) <= hi)) return 0.0;
            const double d = mean_rot(ai) - loc_rot(ai);
            fixed_sq += d * d;
            continue;
        }
        axis_quadrature(lo, hi, mean_rot(ai), sigmas(ai), loc_rot(ai), nodes[a], weights[a]);
        if (nodes[a].empty()) return 0.0;
        free_axes.push_back(a);
    }
    std::int64_t total_nodes = 1;
    for (std::size_t a : free_axes) total_nodes *= static_cast<std::int64_t>(nodes[a].size());
    require(total_nodes <= 10000000, "quantize: rho != 2 cell quadrature too large");
    if (free_axes.empty()) return std::pow(fixed_sq, 0.5 * rho);

    std::vector<std::size_t> idx(free_axes.size(), 0);
    double acc = 0.0;
    while (true) {
        double w = 1.0;
        double sq = fixed_sq;
        for (std::size_t k = 0; k < free_axes.size(); ++k) {
            const std::size_t a = free_axes[k];
            w *= weights[a][idx[k]];
            const double d = nodes[a][idx[k]] - loc_rot(static_cast<Eigen::Index>(a));
            sq += d * d;
        }
        acc += w * std::pow(sq, 0.5 * rho);
        std::size_t k = 0;
        while (k < idx.size() && ++idx[k] == nodes[free_axes[k]].size()) idx[k++] = 0;
        if (k == idx.size()) break;
    }
    return acc;
}

}  // namespace detail

/// Quantize a mixture on the given grid. Cell masses are exact products of
/// 1-D Gaussian interval masses in the eigenbasis; theta_delta evaluates the
/// quantization penalty integral, closed-form for rho = 2 and by per-cell
/// quadrature for rho = 1. Cells with mass below mass_floor are dropped, the
/// remaining masses renormalized, and the dropped mass charged to theta_delta
/// through a worst-case distance bound clipped at coverage + 6 sigma.
inline QuantizationResult quantize(const GaussianMixture& gmm, const Quantizer& q, int rho = 2,
                                   double mass_floor = 1e-12) {
    detail::require(rho == 1 || rho == 2, "quantize: rho must be 1 or 2");
    detail::require(gmm.dim() == q.dim(), "quantize: dimension mismatch");
    detail::require((q.rotation() - gmm.eigenvectors()).cwiseAbs().maxCoeff() <= 1e-9,
                    "quantize: grid eigenbasis does not match the mixture");

    const Eigen::Index n = gmm.dim();
    const Eigen::Index m = gmm.size();
    const MatrixXd rot_means = gmm.means() * gmm.eigenvectors();
    const MatrixXd rot_locs = q.locations() * q.rotation();
    const VectorXd& sig = gmm.axis_sigmas();

    // Interval masses depend only on (axis, interval, component); cache them.
    std::vector<std::vector<std::vector<double>>> mass(static_cast<std::size_t>(n));
    for (Eigen::Index a = 0; a < n; ++a) {
        const std::size_t ai = static_cast<std::size_t>(a);
        mass[ai].assign(static_cast<std::size_t>(q.axis_cells()[ai]),
                        std::vector<double>(static_cast<std::size_t>(m)));
        for (int j = 0; j < q.axis_cells()[ai]; ++j) {
            const auto [lo, hi] = q.axis_bounds(ai, j);
            for (Eigen::Index i = 0; i < m; ++i)
                mass[ai][static_cast<std::size_t>(j)][static_cast<std::size_t>(i)] =
                    truncated_mass(rot_means(i, a), sig(a), lo, hi);
        }
    }

    std::vector<double> cell_mass(static_cast<std::size_t>(q.cell_count()), 0.0);
    std::vector<double> cell_cost(static_cast<std::size_t>(q.cell_count()), 0.0);
    std::vector<int> multi(static_cast<std::size_t>(n), 0);
    std::vector<double> mfac(static_cast<std::size_t>(n));
    std::vector<std::pair<double, double>> bounds(static_cast<std::size_t>(n));
    for (std::int64_t id = 0; id < q.cell_count(); ++id) {
        for (Eigen::Index a = 0; a < n; ++a)
            bounds[static_cast<std::size_t>(a)] =
                q.axis_bounds(static_cast<std::size_t>(a), multi[static_cast<std::size_t>(a)]);
        double cmass = 0.0, ccost = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            double prod = 1.0;
            for (Eigen::Index a = 0; a < n; ++a) {
                const std::size_t ai = static_cast<std::size_t>(a);
                mfac[ai] = mass[ai][static_cast<std::size_t>(multi[ai])][static_cast<std::size_t>(i)];
                prod *= mfac[ai];
            }
            cmass += gmm.weights()(i) * prod;
            if (prod <= 0.0) continue;
            if (rho == 2) {
                // integral of ||y - c||^2 over the box splits per axis into a
                // truncated second moment times the other axes' masses
                double cost_i = 0.0;
                for (Eigen::Index a = 0; a < n; ++a) {
                    double others = 1.0;
                    for (Eigen::Index b = 0; b < n; ++b)
                        if (b != a) others *= mfac[static_cast<std::size_t>(b)];
                    if (others == 0.0) continue;
                    const auto [lo, hi] = bounds[static_cast<std::size_t>(a)];
                    cost_i += others * truncated_second_moment(rot_means(i, a), sig(a) * sig(a), lo,
                                                               hi, rot_locs(id, a));
                }
                ccost += gmm.weights()(i) * cost_i;
            } else {
                ccost += gmm.weights()(i) *
                         detail::cell_cost_quadrature(bounds, rot_means.row(i).transpose(), sig,
                                                      rot_locs.row(id).transpose(), rho);
            }
        }
        cell_mass[static_cast<std::size_t>(id)] = cmass;
        cell_cost[static_cast<std::size_t>(id)] = ccost;
        for (Eigen::Index a = n - 1; a >= 0; --a) {
            if (++multi[static_cast<std::size_t>(a)] < q.axis_cells()[static_cast<std::size_t>(a)]) break;
            multi[static_cast<std::size_t>(a)] = 0;
        }
    }

    // Split cells into kept and dropped; fixed ascending-id order keeps the
    // floating-point sums bit-stable.
    std::vector<std::int64_t> kept;
    double kept_cost = 0.0, dropped = 0.0, dmax = 0.0;
    const double gamma_tail = q.coverage() + 6.0;
    for (std::int64_t id = 0; id < q.cell_count(); ++id) {
        if (cell_mass[static_cast<std::size_t>(id)] >= mass_floor || mass_floor <= 0.0) {
            kept.push_back(id);
            kept_cost += cell_cost[static_cast<std::size_t>(id)];
        } else {
            dropped += cell_mass[static_cast<std::size_t>(id)];
            // worst-case distance from the dropped cell to its own location,
            // with infinite bounds clipped at the coverage tail
            const std::vector<int> mi = q.multi_index(id);
            double far_sq = 0.0;
            for (Eigen::Index a = 0; a < n; ++a) {
                auto [lo, hi] = q.axis_bounds(static_cast<std::size_t>(a), mi[static_cast<std::size_t>(a)]);
                lo = std::max(lo, rot_means.col(a).minCoeff() - gamma_tail * sig(a));
                hi = std::min(hi, rot_means.col(a).maxCoeff() + gamma_tail * sig(a));
                const double c = rot_locs(id, a);
                const double d = std::max(std::abs(lo - c), std::abs(hi - c));
                far_sq += d * d;
            }
            dmax = std::max(dmax, std::sqrt(far_sq));
        }
    }
    detail::require(!kept.empty(), "quantize: every cell fell below the mass floor");

    MatrixXd kept_locs(static_cast<Eigen::Index>(kept.size()), n);
    VectorXd kept_w(static_cast<Eigen::Index>(kept.size()));
    std::vector<double> kept_costs(kept.size());
    double kept_mass = 0.0;
    for (std::int64_t id : kept) kept_mass += cell_mass[static_cast<std::size_t>(id)];
    for (std::size_t k = 0; k < kept.size(); ++k) {
        kept_locs.row(static_cast<Eigen::Index>(k)) = q.locations().row(kept[k]);
        kept_w(static_cast<Eigen::Index>(k)) = cell_mass[static_cast<std::size_t>(kept[k])] / kept_mass;
        kept_costs[k] = cell_cost[static_cast<std::size_t>(kept[k])];
    }
    kept_w /= kept_w.sum();

    return QuantizationResult{DiscreteDistribution(std::move(kept_locs), std::move(kept_w)),
                              std::pow(kept_cost, 1.0 / rho) + std::pow(dropped, 1.0 / rho) * dmax,
                              std::move(kept), std::move(kept_costs), dropped};
}

}  // namespace ambit
