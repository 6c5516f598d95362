#pragma once

#include <ambit/distributions.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

namespace ambit {

/// Coupling between two discrete distributions, stored as nonzero entries.
/// Row sums match the source weights and column sums the target weights.
struct TransportPlan {
    struct Entry {
        Eigen::Index i;
        Eigen::Index j;
        double mass;
    };
    Eigen::Index rows = 0;
    Eigen::Index cols = 0;
    std::vector<Entry> entries;
    double cost = 0.0;  // sum of mass * ||c_i - c_j||^rho

    MatrixXd dense() const {
        MatrixXd m = MatrixXd::Zero(rows, cols);
        for (const auto& e : entries) m(e.i, e.j) += e.mass;
        return m;
    }
};

namespace detail {

/// Basis tree of the transportation simplex: basic cells (i, j) form a
/// spanning tree of the bipartite source/sink graph.
struct BasisTree {
    // adjacency as (other side node, arc id); arcs indexed into flow/row/col
    std::vector<std::vector<std::pair<int, int>>> row_adj, col_adj;
    std::vector<int> arc_row, arc_col;
    std::vector<double> flow;
    std::vector<bool> arc_alive;

    int add_arc(int i, int j, double f) {
        const int id = static_cast<int>(arc_row.size());
        arc_row.push_back(i);
        arc_col.push_back(j);
        flow.push_back(f);
        arc_alive.push_back(true);
        row_adj[static_cast<std::size_t>(i)].push_back({j, id});
        col_adj[static_cast<std::size_t>(j)].push_back({i, id});
        return id;
    }

    void remove_arc(int id) {
        arc_alive[static_cast<std::size_t>(id)] = false;
        auto scrub = [id](std::vector<std::pair<int, int>>& v) {
            v.erase(std::remove_if(v.begin(), v.end(), [id](auto& p) { return p.second == id; }),
                    v.end());
        };
        scrub(row_adj[static_cast<std::size_t>(arc_row[static_cast<std::size_t>(id)])]);
        scrub(col_adj[static_cast<std::size_t>(arc_col[static_cast<std::size_t>(id)])]);
    }
};

}  // namespace detail

/// Exact rho-Wasserstein distance between discrete distributions via the
/// transportation simplex. Demands are perturbed lexicographically to keep
/// the basis nondegenerate; the perturbation is removed from the reported
/// plan by re-solving the final basis tree against the original weights.
inline std::pair<double, TransportPlan> wasserstein_discrete(const DiscreteDistribution& p,
                                                             const DiscreteDistribution& q,
                                                             int rho) {
    detail::require(p.dim() == q.dim(), "wasserstein: dimension mismatch");
    detail::require(rho >= 1, "wasserstein: rho must be at least 1");
    const int R = static_cast<int>(p.size());
    const int C = static_cast<int>(q.size());

    // cost matrix of rho-powered distances
    MatrixXd cost(R, C);
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j)
            cost(i, j) = norm_pow(p.location(i) - q.location(j), rho);

    // lexicographic perturbation of demands, balanced on the last supply
    double min_w = std::numeric_limits<double>::infinity();
    for (int i = 0; i < R; ++i)
        if (p.weights()(i) > 0) min_w = std::min(min_w, p.weights()(i));
    for (int j = 0; j < C; ++j)
        if (q.weights()(j) > 0) min_w = std::min(min_w, q.weights()(j));
    const double eps = 1e-13 * min_w;
    std::vector<double> supply(static_cast<std::size_t>(R)), demand(static_cast<std::size_t>(C));
    double extra = 0.0;
    for (int j = 0; j < C; ++j) {
        demand[static_cast<std::size_t>(j)] = q.weights()(j) + eps * (j + 1);
        extra += eps * (j + 1);
    }
    for (int i = 0; i < R; ++i) supply[static_cast<std::size_t>(i)] = p.weights()(i);
    supply[static_cast<std::size_t>(R - 1)] += extra;
    // remove any rounding imbalance
    double s_sum = 0.0, d_sum = 0.0;
    for (double s : supply) s_sum += s;
    for (double d : demand) d_sum += d;
    supply[static_cast<std::size_t>(R - 1)] += d_sum - s_sum;

    // north-west corner initial basis
    detail::BasisTree tree;
    tree.row_adj.resize(static_cast<std::size_t>(R));
    tree.col_adj.resize(static_cast<std::size_t>(C));
    {
        std::vector<double> s = supply, d = demand;
        int i = 0, j = 0;
        while (true) {
            const double f = std::min(s[static_cast<std::size_t>(i)], d[static_cast<std::size_t>(j)]);
            tree.add_arc(i, j, f);
            s[static_cast<std::size_t>(i)] -= f;
            d[static_cast<std::size_t>(j)] -= f;
            if (i == R - 1 && j == C - 1) break;
            if (j < C - 1 && (d[static_cast<std::size_t>(j)] <= 0.0 || i == R - 1))
                ++j;
            else
                ++i;
        }
    }

    std::vector<double> u(static_cast<std::size_t>(R)), v(static_cast<std::size_t>(C));
    std::vector<int> row_seen(static_cast<std::size_t>(R)), col_seen(static_cast<std::size_t>(C));
    std::vector<int> stack;
    int epoch = 0;

    auto compute_duals = [&]() {
        ++epoch;
        // tree is connected, root at row 0 with u = 0
        stack.clear();
        stack.push_back(0);  // encode rows as i, cols as R + j
        u[0] = 0.0;
        row_seen[0] = epoch;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            if (node < R) {
                for (const auto& [j, arc] : tree.row_adj[static_cast<std::size_t>(node)]) {
                    if (col_seen[static_cast<std::size_t>(j)] == epoch) continue;
                    col_seen[static_cast<std::size_t>(j)] = epoch;
                    v[static_cast<std::size_t>(j)] = cost(node, j) - u[static_cast<std::size_t>(node)];
                    stack.push_back(R + j);
                }
            } else {
                const int j = node - R;
                for (const auto& [i, arc] : tree.col_adj[static_cast<std::size_t>(j)]) {
                    if (row_seen[static_cast<std::size_t>(i)] == epoch) continue;
                    row_seen[static_cast<std::size_t>(i)] = epoch;
                    u[static_cast<std::size_t>(i)] = cost(i, j) - v[static_cast<std::size_t>(j)];
                    stack.push_back(i);
                }
            }
        }
    };

    // shift duals on the subtree hanging off `start` (the side of the cut
    // that was re-hooked through the entering arc): rows -= delta, cols +=
    // delta keeps every internal tree arc tight
    auto shift_duals = [&](int start, double delta) {
        ++epoch;
        stack.clear();
        stack.push_back(start);
        if (start < R)
            row_seen[static_cast<std::size_t>(start)] = epoch;
        else
            col_seen[static_cast<std::size_t>(start - R)] = epoch;
        while (!stack.empty()) {
            const int node = stack.back();
            stack.pop_back();
            if (node < R) {
                u[static_cast<std::size_t>(node)] -= delta;
                for (const auto& [j, arc] : tree.row_adj[static_cast<std::size_t>(node)]) {
                    if (col_seen[static_cast<std::size_t>(j)] == epoch) continue;
                    col_seen[static_cast<std::size_t>(j)] = epoch;
                    stack.push_back(R + j);
                }
            } else {
                const int j = node - R;
                v[static_cast<std::size_t>(j)] += delta;
                for (const auto& [i, arc] : tree.col_adj[static_cast<std::size_t>(j)]) {
                    if (row_seen[static_cast<std::size_t>(i)] == epoch) continue;
                    row_seen[static_cast<std::size_t>(i)] = epoch;
                    stack.push_back(i);
                }
            }
        }
    };

    // find the tree path from row i0 to col j0; returns arc ids alternating
    std::vector<int> parent_arc(static_cast<std::size_t>(R + C));
    std::vector<int> parent_node(static_cast<std::size_t>(R + C));
    auto tree_path = [&](int i0, int j0, std::vector<int>& arcs) {
        ++epoch;
        stack.clear();
        stack.push_back(i0);
        row_seen[static_cast<std::size_t>(i0)] = epoch;
        parent_node[static_cast<std::size_t>(i0)] = -1;
        bool found = false;
        while (!stack.empty() && !found) {
            const int node = stack.back();
            stack.pop_back();
            if (node < R) {
                for (const auto& [j, arc] : tree.row_adj[static_cast<std::size_t>(node)]) {
                    if (col_seen[static_cast<std::size_t>(j)] == epoch) continue;
                    col_seen[static_cast<std::size_t>(j)] = epoch;
                    parent_node[static_cast<std::size_t>(R + j)] = node;
                    parent_arc[static_cast<std::size_t>(R + j)] = arc;
                    if (j == j0) {
                        found = true;
                        break;
                    }
                    stack.push_back(R + j);
                }
            } else {
                const int j = node - R;
                for (const auto& [i, arc] : tree.col_adj[static_cast<std::size_t>(j)]) {
                    if (row_seen[static_cast<std::size_t>(i)] == epoch) continue;
                    row_seen[static_cast<std::size_t>(i)] = epoch;
                    parent_node[static_cast<std::size_t>(i)] = R + j;
                    parent_arc[static_cast<std::size_t>(i)] = arc;
                    stack.push_back(i);
                }
            }
        }
        arcs.clear();
        int node = R + j0;
        while (parent_node[static_cast<std::size_t>(node)] != -1) {
            arcs.push_back(parent_arc[static_cast<std::size_t>(node)]);
            node = parent_node[static_cast<std::size_t>(node)];
        }
    };

    // entering-arc search: block pricing with a persistent cursor
    const std::int64_t total = static_cast<std::int64_t>(R) * C;
    const std::int64_t block = std::min<std::int64_t>(total, 8192);
    std::int64_t cursor = 0;
    const double opt_tol = 1e-13 * std::max(1.0, cost.maxCoeff());

    std::vector<int> cycle;
    const std::int64_t max_pivots = 2000 + 200 * static_cast<std::int64_t>(R + C);
    for (std::int64_t pivot = 0;; ++pivot) {
        detail::require(pivot < max_pivots, "wasserstein: pivot limit exceeded");
        compute_duals();
        // scan blocks until a sufficiently negative reduced cost appears
        int best_i = -1, best_j = -1;
        double best_red = -opt_tol;
        std::int64_t scanned = 0;
        while (scanned < total) {
            const std::int64_t stop = std::min(total, cursor + block);
            for (std::int64_t k = cursor; k < stop; ++k) {
                const int i = static_cast<int>(k / C);
                const int j = static_cast<int>(k % C);
                const double red = cost(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)];
                if (red < best_red) {
                    best_red = red;
                    best_i = i;
                    best_j = j;
                }
            }
            scanned += stop - cursor;
            cursor = (stop == total) ? 0 : stop;
            if (best_i >= 0) break;
        }
        if (best_i < 0) break;  // optimal: no reduced cost below -tol

        // cycle = entering arc + tree path between its endpoints;
        // arcs at odd positions along the path lose flow
        tree_path(best_i, best_j, cycle);
        double step = std::numeric_limits<double>::infinity();
        int leaving = -1;
        // walk from the entering column end back toward the row: the path
        // alternates col<-row<-col...; reverse arcs are those traversed
        // against the flow direction (even index from the entering side)
        for (std::size_t k = 0; k < cycle.size(); k += 2) {
            const int arc = cycle[k];
            if (tree.flow[static_cast<std::size_t>(arc)] < step) {
                step = tree.flow[static_cast<std::size_t>(arc)];
                leaving = arc;
            }
        }
        detail::require(leaving >= 0, "wasserstein: malformed pivot cycle");
        for (std::size_t k = 0; k < cycle.size(); ++k) {
            const int arc = cycle[k];
            tree.flow[static_cast<std::size_t>(arc)] += (k % 2 == 0) ? -step : step;
        }
        tree.remove_arc(leaving);
        tree.add_arc(best_i, best_j, step);
    }

    // re-solve the final tree against the unperturbed weights by peeling
    // leaves; degenerate arcs come out as zero
    std::vector<double> res_s(static_cast<std::size_t>(R)), res_d(static_cast<std::size_t>(C));
    for (int i = 0; i < R; ++i) res_s[static_cast<std::size_t>(i)] = p.weights()(i);
    for (int j = 0; j < C; ++j) res_d[static_cast<std::size_t>(j)] = q.weights()(j);
    std::vector<int> degree(static_cast<std::size_t>(R + C), 0);
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(R + C));
    for (std::size_t arc = 0; arc < tree.arc_row.size(); ++arc) {
        if (!tree.arc_alive[arc]) continue;
        const int i = tree.arc_row[arc];
        const int j = R + tree.arc_col[arc];
        adj[static_cast<std::size_t>(i)].push_back({j, static_cast<int>(arc)});
        adj[static_cast<std::size_t>(j)].push_back({i, static_cast<int>(arc)});
        ++degree[static_cast<std::size_t>(i)];
        ++degree[static_cast<std::size_t>(j)];
    }
    std::vector<double> final_flow(tree.arc_row.size(), 0.0);
    std::vector<bool> arc_done(tree.arc_row.size(), false);
    std::vector<int> leaves;
    for (int node = 0; node < R + C; ++node)
        if (degree[static_cast<std::size_t>(node)] == 1) leaves.push_back(node);
    while (!leaves.empty()) {
        const int node = leaves.back();
        leaves.pop_back();
        int arc = -1, other = -1;
        for (const auto& [nb, a] : adj[static_cast<std::size_t>(node)]) {
            if (!arc_done[static_cast<std::size_t>(a)]) {
                arc = a;
                other = nb;
                break;
            }
        }
        if (arc < 0) continue;
        const double f = (node < R) ? res_s[static_cast<std::size_t>(node)]
                                    : res_d[static_cast<std::size_t>(node - R)];
        final_flow[static_cast<std::size_t>(arc)] = f;
        arc_done[static_cast<std::size_t>(arc)] = true;
        if (node < R)
            res_s[static_cast<std::size_t>(node)] = 0.0;
        else
            res_d[static_cast<std::size_t>(node - R)] = 0.0;
        if (other < R)
            res_s[static_cast<std::size_t>(other)] -= f;
        else
            res_d[static_cast<std::size_t>(other - R)] -= f;
        if (--degree[static_cast<std::size_t>(other)] == 1) leaves.push_back(other);
        --degree[static_cast<std::size_t>(node)];
    }

    TransportPlan plan;
    plan.rows = R;
    plan.cols = C;
    double total_cost = 0.0;
    for (std::size_t arc = 0; arc < tree.arc_row.size(); ++arc) {
        if (!tree.arc_alive[arc]) continue;
        double f = final_flow[arc];
        detail::require(f >= -1e-9, "wasserstein: negative flow after cleanup");
        if (f < 0.0) f = 0.0;
        if (f == 0.0) continue;
        plan.entries.push_back({tree.arc_row[arc], tree.arc_col[arc], f});
        total_cost += f * cost(tree.arc_row[arc], tree.arc_col[arc]);
    }
    plan.cost = total_cost;
    return {std::pow(std::max(0.0, total_cost), 1.0 / rho), plan};
}

/// Brute-force oracle: enumerate every spanning-tree basis of the
/// transportation polytope, solve each tree for its unique flows, and keep
/// the cheapest feasible one. Exponential, so only small instances are
/// accepted; kept deliberately independent of the simplex implementation.
inline double wasserstein_bruteforce(const DiscreteDistribution& p, const DiscreteDistribution& q,
                                     int rho) {
    detail::require(p.dim() == q.dim(), "wasserstein: dimension mismatch");
    const int R = static_cast<int>(p.size());
    const int C = static_cast<int>(q.size());
    detail::require(static_cast<std::int64_t>(R) * C <= 64, "bruteforce: instance too large");
    const int cells = R * C;
    const int basics = R + C - 1;

    // number of candidate bases = C(cells, basics); refuse absurd blowups
    double combos = 1.0;
    for (int k = 0; k < basics; ++k) combos *= static_cast<double>(cells - k) / (k + 1);
    detail::require(combos <= 2e6, "bruteforce: instance too large");

    MatrixXd cost(R, C);
    for (int i = 0; i < R; ++i)
        for (int j = 0; j < C; ++j)
            cost(i, j) = norm_pow(p.location(i) - q.location(j), rho);

    std::vector<int> pick(static_cast<std::size_t>(basics));
    for (int k = 0; k < basics; ++k) pick[static_cast<std::size_t>(k)] = k;
    double best = std::numeric_limits<double>::infinity();

    std::vector<int> degree(static_cast<std::size_t>(R + C));
    std::vector<std::vector<std::pair<int, int>>> adj(static_cast<std::size_t>(R + C));
    std::vector<double> res_s(static_cast<std::size_t>(R)), res_d(static_cast<std::size_t>(C));

    while (true) {
        // try current subset as a basis
        for (auto& a : adj) a.clear();
        std::fill(degree.begin(), degree.end(), 0);
        for (int k = 0; k < basics; ++k) {
            const int cell = pick[static_cast<std::size_t>(k)];
            const int i = cell / C, j = R + cell % C;
            adj[static_cast<std::size_t>(i)].push_back({j, k});
            adj[static_cast<std::size_t>(j)].push_back({i, k});
            ++degree[static_cast<std::size_t>(i)];
            ++degree[static_cast<std::size_t>(j)];
        }
        // a spanning tree on R + C nodes with R + C - 1 edges = all connected
        bool tree_ok = true;
        for (int node = 0; node < R + C && tree_ok; ++node)
            if (degree[static_cast<std::size_t>(node)] == 0) tree_ok = false;
        if (tree_ok) {
            // peel leaves to solve flows; detect disconnection (cycle) by
            // leftover arcs
            for (int i = 0; i < R; ++i) res_s[static_cast<std::size_t>(i)] = p.weights()(i);
            for (int j = 0; j < C; ++j) res_d[static_cast<std::size_t>(j)] = q.weights()(j);
            std::vector<double> flow(static_cast<std::size_t>(basics), 0.0);
            std::vector<bool> done(static_cast<std::size_t>(basics), false);
            std::vector<int> deg = degree;
            std::vector<int> leaves;
            for (int node = 0; node < R + C; ++node)
                if (deg[static_cast<std::size_t>(node)] == 1) leaves.push_back(node);
            int solved = 0;
            while (!leaves.empty()) {
                const int node = leaves.back();
                leaves.pop_back();
                int arc = -1, other = -1;
                for (const auto& [nb, a] : adj[static_cast<std::size_t>(node)])
                    if (!done[static_cast<std::size_t>(a)]) {
                        arc = a;
                        other = nb;
                        break;
                    }
                if (arc < 0) continue;
                const double f = (node < R) ? res_s[static_cast<std::size_t>(node)]
                                            : res_d[static_cast<std::size_t>(node - R)];
                flow[static_cast<std::size_t>(arc)] = f;
                done[static_cast<std::size_t>(arc)] = true;
                ++solved;
                if (node < R)
                    res_s[static_cast<std::size_t>(node)] = 0.0;
                else
                    res_d[static_cast<std::size_t>(node - R)] = 0.0;
                if (other < R)
                    res_s[static_cast<std::size_t>(other)] -= f;
                else
                    res_d[static_cast<std::size_t>(other - R)] -= f;
                if (--deg[static_cast<std::size_t>(other)] == 1) leaves.push_back(other);
                --deg[static_cast<std::size_t>(node)];
            }
            if (solved == basics) {
                bool feasible = true;
                double c = 0.0;
                for (int k = 0; k < basics && feasible; ++k) {
                    if (flow[static_cast<std::size_t>(k)] < -1e-12) feasible = false;
                    const int cell = pick[static_cast<std::size_t>(k)];
                    c += std::max(0.0, flow[static_cast<std::size_t>(k)]) * cost(cell / C, cell % C);
                }
                if (feasible) best = std::min(best, c);
            }
        }
        // next combination
        int k = basics - 1;
        while (k >= 0 && pick[static_cast<std::size_t>(k)] == cells - basics + k) --k;
        if (k < 0) break;
        ++pick[static_cast<std::size_t>(k)];
        for (int k2 = k + 1; k2 < basics; ++k2)
            pick[static_cast<std::size_t>(k2)] = pick[static_cast<std::size_t>(k2) - 1] + 1;
    }
    detail::require(std::isfinite(best), "bruteforce: no feasible basis found");
    return std::pow(std::max(0.0, best), 1.0 / rho);
}

/// Empirical distribution with uniform weights on the given points (rows).
inline DiscreteDistribution empirical(const MatrixXd& points) {
    VectorXd w = VectorXd::Constant(points.rows(), 1.0 / static_cast<double>(points.rows()));
    w(points.rows() - 1) += 1.0 - w.sum();
    return DiscreteDistribution(points, w);
}

}  // namespace ambit
