#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "graphconf/errors.hpp"
#include "graphconf/graph.hpp"

namespace graphconf {

// A transport plan; row sums must equal the source marginal and column sums
// the target marginal (tolerance 1e-9), entries nonnegative.
using Coupling = Matrix;

inline void validate_coupling(const Coupling& pi, const Vector& a, const Vector& b,
                              double tol = 1e-9) {
    require(pi.rows() == a.size() && pi.cols() == b.size(), errc::dimension_mismatch,
            "coupling shape must match marginal lengths");
    require(pi.allFinite(), errc::non_finite, "coupling has non-finite entries");
    require(pi.minCoeff() >= -tol, errc::marginal_mismatch, "coupling entries must be nonnegative");
    const Vector rows = pi.rowwise().sum();
    const Vector cols = pi.colwise().sum();
    for (int i = 0; i < a.size(); ++i)
        require(std::abs(rows(i) - a(i)) <= tol, errc::marginal_mismatch,
                "coupling row sums must match source marginal");
    for (int j = 0; j < b.size(); ++j)
        require(std::abs(cols(j) - b(j)) <= tol, errc::marginal_mismatch,
                "coupling column sums must match target marginal");
}

struct OtResult {
    Coupling plan;
    double cost = 0.0;
};

// Exact linear OT via the transportation simplex (MODI). Deterministic for a
// fixed input ordering: Bland-style entering rule (lowest row, then column,
// with a negative reduced cost), and leaving-variable ties broken the same
// way. Degeneracy is avoided by an index-scaled epsilon perturbation of the
// marginals (1e-12 * index); the perturbation only selects the basis — the
// returned flows are re-solved on that basis with the original marginals, so
// no trace of it survives in the output.
inline OtResult solve_exact_ot(const Matrix& cost, const Vector& a, const Vector& b) {
    const int n = static_cast<int>(a.size());
    const int m = static_cast<int>(b.size());
    require(cost.rows() == n && cost.cols() == m, errc::dimension_mismatch,
            "cost matrix shape must match marginal lengths");
    require(cost.allFinite(), errc::non_finite, "cost matrix has non-finite entries");
    require(a.allFinite() && b.allFinite(), errc::non_finite, "marginals must be finite");
    require(a.minCoeff() >= 0.0 && b.minCoeff() >= 0.0, errc::marginal_mismatch,
            "marginals must be nonnegative");
    require(std::abs(a.sum() - b.sum()) <= 1e-9, errc::marginal_mismatch,
            "marginal sums differ by more than 1e-9");

    // Index-scaled perturbation; the column side uses different index weights
    // (2j+1, rescaled to balance totals) so that equal uniform marginals do
    // not receive identical perturbations on both sides.
    constexpr double kDelta = 1e-12;
    std::vector<double> ap(static_cast<std::size_t>(n)), bp(static_cast<std::size_t>(m));
    double extra_a = 0.0, col_units = 0.0;
    for (int j = 0; j < m; ++j) col_units += static_cast<double>(2 * j + 1);
    for (int i = 0; i < n; ++i) extra_a += kDelta * static_cast<double>(i + 1);
    const double col_delta = extra_a / col_units;
    for (int i = 0; i < n; ++i) ap[static_cast<std::size_t>(i)] = a(i) + kDelta * static_cast<double>(i + 1);
    for (int j = 0; j < m; ++j) bp[static_cast<std::size_t>(j)] = b(j) + col_delta * static_cast<double>(2 * j + 1);

    const int n_basic = n + m - 1;
    std::vector<int> cell_row, cell_col;         // basis cells
    std::vector<double> cell_flow;               // perturbed flows
    cell_row.reserve(static_cast<std::size_t>(n_basic));
    cell_col.reserve(static_cast<std::size_t>(n_basic));
    cell_flow.reserve(static_cast<std::size_t>(n_basic));
    std::vector<int> basic_at(static_cast<std::size_t>(n) * static_cast<std::size_t>(m), -1);
    const auto at = [m](int i, int j) { return static_cast<std::size_t>(i) * static_cast<std::size_t>(m) + static_cast<std::size_t>(j); };

    // Northwest-corner start: exactly n+m-1 cells, forming a spanning tree of
    // the bipartite row/column graph.
    {
        std::vector<double> r = ap, c = bp;
        int i = 0, j = 0;
        for (int step = 0; step < n_basic; ++step) {
            const double f = std::min(r[static_cast<std::size_t>(i)], c[static_cast<std::size_t>(j)]);
            basic_at[at(i, j)] = static_cast<int>(cell_row.size());
            cell_row.push_back(i);
            cell_col.push_back(j);
            cell_flow.push_back(f);
            r[static_cast<std::size_t>(i)] -= f;
            c[static_cast<std::size_t>(j)] -= f;
            if (i == n - 1) ++j;
            else if (j == m - 1) ++i;
            else if (r[static_cast<std::size_t>(i)] <= c[static_cast<std::size_t>(j)]) ++i;
            else ++j;
        }
    }

    std::vector<std::vector<int>> row_cells(static_cast<std::size_t>(n)), col_cells(static_cast<std::size_t>(m));
    const auto rebuild_incidence = [&] {
        for (auto& v : row_cells) v.clear();
        for (auto& v : col_cells) v.clear();
        for (int k = 0; k < n_basic; ++k) {
            row_cells[static_cast<std::size_t>(cell_row[static_cast<std::size_t>(k)])].push_back(k);
            col_cells[static_cast<std::size_t>(cell_col[static_cast<std::size_t>(k)])].push_back(k);
        }
    };
    rebuild_incidence();

    std::vector<double> u(static_cast<std::size_t>(n)), v(static_cast<std::size_t>(m));
    std::vector<char> u_set(static_cast<std::size_t>(n)), v_set(static_cast<std::size_t>(m));
    // Tree nodes: rows are 0..n-1, columns are n..n+m-1.
    std::vector<int> parent_cell(static_cast<std::size_t>(n + m));
    std::vector<int> bfs(static_cast<std::size_t>(n + m));

    const double enter_tol = 1e-12 * (1.0 + cost.cwiseAbs().maxCoeff());
    const long max_pivots = 2000L + 64L * static_cast<long>(n) * static_cast<long>(m);

    for (long pivot = 0;; ++pivot) {
        require(pivot < max_pivots, errc::internal, "transportation simplex failed to terminate");

        // Duals over the basis tree.
        std::fill(u_set.begin(), u_set.end(), 0);
        std::fill(v_set.begin(), v_set.end(), 0);
        u[0] = 0.0;
        u_set[0] = 1;
        int head = 0, tail = 0;
        bfs[tail++] = 0;
        while (head < tail) {
            const int node = bfs[head++];
            if (node < n) {
                for (int k : row_cells[static_cast<std::size_t>(node)]) {
                    const int j = cell_col[static_cast<std::size_t>(k)];
                    if (!v_set[static_cast<std::size_t>(j)]) {
                        v[static_cast<std::size_t>(j)] = cost(node, j) - u[static_cast<std::size_t>(node)];
                        v_set[static_cast<std::size_t>(j)] = 1;
                        bfs[tail++] = n + j;
                    }
                }
            } else {
                const int j = node - n;
                for (int k : col_cells[static_cast<std::size_t>(j)]) {
                    const int i = cell_row[static_cast<std::size_t>(k)];
                    if (!u_set[static_cast<std::size_t>(i)]) {
                        u[static_cast<std::size_t>(i)] = cost(i, j) - v[static_cast<std::size_t>(j)];
                        u_set[static_cast<std::size_t>(i)] = 1;
                        bfs[tail++] = i;
                    }
                }
            }
        }
        require(tail == n + m, errc::internal, "basis lost tree connectivity");

        // Entering cell: first (row-major) strictly improving reduced cost.
        int ei = -1, ej = -1;
        for (int i = 0; i < n && ei < 0; ++i)
            for (int j = 0; j < m; ++j) {
                if (basic_at[at(i, j)] >= 0) continue;
                if (cost(i, j) - u[static_cast<std::size_t>(i)] - v[static_cast<std::size_t>(j)] < -enter_tol) {
                    ei = i;
                    ej = j;
                    break;
                }
            }
        if (ei < 0) break;  // optimal

        // Unique tree path from row ei to column ej; BFS with parent edges.
        std::fill(parent_cell.begin(), parent_cell.end(), -2);
        parent_cell[static_cast<std::size_t>(ei)] = -1;
        head = 0;
        tail = 0;
        bfs[tail++] = ei;
        while (head < tail && parent_cell[static_cast<std::size_t>(n + ej)] == -2) {
            const int node = bfs[head++];
            if (node < n) {
                for (int k : row_cells[static_cast<std::size_t>(node)]) {
                    const int t = n + cell_col[static_cast<std::size_t>(k)];
                    if (parent_cell[static_cast<std::size_t>(t)] == -2) {
                        parent_cell[static_cast<std::size_t>(t)] = k;
                        bfs[tail++] = t;
                    }
                }
            } else {
                for (int k : col_cells[static_cast<std::size_t>(node - n)]) {
                    const int t = cell_row[static_cast<std::size_t>(k)];
                    if (parent_cell[static_cast<std::size_t>(t)] == -2) {
                        parent_cell[static_cast<std::size_t>(t)] = k;
                        bfs[tail++] = t;
                    }
                }
            }
        }
        require(parent_cell[static_cast<std::size_t>(n + ej)] != -2, errc::internal,
                "no basis path for entering cell");

        // Walk back from ej to ei. The entering cell takes +theta; cells along
        // the path alternate -,+,-,... starting from the column end.
        std::vector<int> minus_cells, plus_cells;
        int node = n + ej;
        bool minus = true;
        while (parent_cell[static_cast<std::size_t>(node)] >= 0) {
            const int k = parent_cell[static_cast<std::size_t>(node)];
            (minus ? minus_cells : plus_cells).push_back(k);
            node = (node >= n) ? cell_row[static_cast<std::size_t>(k)] : n + cell_col[static_cast<std::size_t>(k)];
            minus = !minus;
        }

        // Leaving cell: smallest flow among the decreasing cells, ties by
        // lowest (row, column).
        int leave = -1;
        double theta = std::numeric_limits<double>::infinity();
        for (int k : minus_cells) {
            const double f = cell_flow[static_cast<std::size_t>(k)];
            const bool better =
                f < theta ||
                (f == theta && leave >= 0 &&
                 (cell_row[static_cast<std::size_t>(k)] < cell_row[static_cast<std::size_t>(leave)] ||
                  (cell_row[static_cast<std::size_t>(k)] == cell_row[static_cast<std::size_t>(leave)] &&
                   cell_col[static_cast<std::size_t>(k)] < cell_col[static_cast<std::size_t>(leave)])));
            if (better) {
                theta = f;
                leave = k;
            }
        }
        require(leave >= 0, errc::internal, "degenerate pivot cycle");

        for (int k : plus_cells) cell_flow[static_cast<std::size_t>(k)] += theta;
        for (int k : minus_cells) cell_flow[static_cast<std::size_t>(k)] -= theta;

        // Replace the leaving cell with the entering one.
        basic_at[at(cell_row[static_cast<std::size_t>(leave)], cell_col[static_cast<std::size_t>(leave)])] = -1;
        basic_at[at(ei, ej)] = leave;
        cell_row[static_cast<std::size_t>(leave)] = ei;
        cell_col[static_cast<std::size_t>(leave)] = ej;
        cell_flow[static_cast<std::size_t>(leave)] = theta;
        rebuild_incidence();
    }

    // Strip the perturbation: re-solve the tree flows against the original
    // marginals by leaf elimination. The basis stays optimal (duals depend
    // only on costs); only the flows move, by at most the perturbation mass.
    {
        std::vector<double> residual(static_cast<std::size_t>(n + m));
        for (int i = 0; i < n; ++i) residual[static_cast<std::size_t>(i)] = a(i);
        for (int j = 0; j < m; ++j) residual[static_cast<std::size_t>(n + j)] = b(j);
        std::vector<int> degree(static_cast<std::size_t>(n + m), 0);
        std::vector<char> cell_done(static_cast<std::size_t>(n_basic), 0);
        for (int k = 0; k < n_basic; ++k) {
            ++degree[static_cast<std::size_t>(cell_row[static_cast<std::size_t>(k)])];
            ++degree[static_cast<std::size_t>(n + cell_col[static_cast<std::size_t>(k)])];
        }
        std::vector<int> leaves;
        for (int t = 0; t < n + m; ++t)
            if (degree[static_cast<std::size_t>(t)] == 1) leaves.push_back(t);
        int processed = 0;
        while (processed < n_basic) {
            require(!leaves.empty(), errc::internal, "basis tree leaf elimination stalled");
            const int node = leaves.back();
            leaves.pop_back();
            int cell = -1;
            const auto& inc = node < n ? row_cells[static_cast<std::size_t>(node)]
                                       : col_cells[static_cast<std::size_t>(node - n)];
            for (int k : inc)
                if (!cell_done[static_cast<std::size_t>(k)]) cell = k;
            if (cell < 0) continue;  // node already exhausted from the other side
            const double f = residual[static_cast<std::size_t>(node)];
            cell_flow[static_cast<std::size_t>(cell)] = f;
            cell_done[static_cast<std::size_t>(cell)] = 1;
            ++processed;
            const int other = node < n ? n + cell_col[static_cast<std::size_t>(cell)]
                                       : cell_row[static_cast<std::size_t>(cell)];
            residual[static_cast<std::size_t>(node)] = 0.0;
            residual[static_cast<std::size_t>(other)] -= f;
            --degree[static_cast<std::size_t>(node)];
            if (--degree[static_cast<std::size_t>(other)] == 1) leaves.push_back(other);
        }
    }

    OtResult result;
    result.plan = Matrix::Zero(n, m);
    for (int k = 0; k < n_basic; ++k) {
        double f = cell_flow[static_cast<std::size_t>(k)];
        require(f > -1e-8, errc::internal, "negative flow after perturbation removal");
        if (f < 0.0) f = 0.0;
        result.plan(cell_row[static_cast<std::size_t>(k)], cell_col[static_cast<std::size_t>(k)]) = f;
        result.cost += f * cost(cell_row[static_cast<std::size_t>(k)], cell_col[static_cast<std::size_t>(k)]);
    }
    return result;
}

// Cap on brute-force permutation enumeration (7! = 5040 evaluations).
inline constexpr int kOracleNodeCap = 7;

// Minimum of <cost, P/n> over all n x n permutation matrices P, by
// enumeration in lexicographic order. Returns the value and the first
// (lexicographically lowest) minimizer.
inline double brute_force_assignment_value(const Matrix& cost, std::vector<int>* best_perm = nullptr) {
    const int n = static_cast<int>(cost.rows());
    require(cost.cols() == n, errc::dimension_mismatch, "assignment needs a square cost matrix");
    require(n >= 1, errc::dimension_mismatch, "assignment needs at least one node");
    require(n <= kOracleNodeCap, errc::too_large,
            "brute-force assignment capped at " + std::to_string(kOracleNodeCap) + " nodes");
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    double best = std::numeric_limits<double>::infinity();
    do {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += cost(i, perm[static_cast<std::size_t>(i)]);
        if (s < best) {
            best = s;
            if (best_perm != nullptr) *best_perm = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best / static_cast<double>(n);
}

// For equal-size uniform problems the OT polytope's vertices are the scaled
// permutation matrices, so the solver's optimum can never beat enumeration by
// more than roundoff. Used as a cheap certificate in tests and oracle checks.
inline bool assignment_lower_bound_check(const Matrix& cost, double ot_value) {
    return ot_value <= brute_force_assignment_value(cost) + 1e-9;
}

}  // namespace graphconf
