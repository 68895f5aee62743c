#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "graphconf/errors.hpp"
#include "graphconf/exact_ot.hpp"
#include "graphconf/graph.hpp"
#include "graphconf/rng.hpp"

namespace graphconf {

// Initial coupling for the solver. The feature-distance family augments node
// features with one diffusion step of a fixed operator (adjacency, Laplacian,
// or symmetric normalized Laplacian of the raw graph) and takes the exact OT
// plan on squared distances between the augmented rows.
enum class InitKind { uniform, identity, fd, lfd, lfd_sym };

inline const char* init_kind_name(InitKind k) {
    switch (k) {
        case InitKind::uniform:  return "uniform";
        case InitKind::identity: return "identity";
        case InitKind::fd:       return "fd";
        case InitKind::lfd:      return "lfd";
        case InitKind::lfd_sym:  return "lfd_sym";
    }
    return "?";
}

// Everything that defines one distance: which structure matrix to compare,
// how to transform it, the convex term weights (node features get 1-beta-gamma,
// structure beta, edge features gamma; squared losses, squared objective, no
// root), and solver/oracle knobs.
struct DistanceConfig {
    StructureKind structure = StructureKind::adjacency;
    CostTransform transform;
    double beta = 0.5;
    double gamma = 0.0;
    InitKind init = InitKind::fd;
    int max_iters = 200;
    double tol = 1e-9;       // relative objective decrease stopping rule
    bool oracle_mode = false;
    int oracle_limit = 7;
};

inline void validate_distance_config(const DistanceConfig& cfg) {
    require(std::isfinite(cfg.beta) && std::isfinite(cfg.gamma), errc::non_finite,
            "term weights must be finite");
    require(cfg.beta >= 0.0 && cfg.gamma >= 0.0 && cfg.beta + cfg.gamma <= 1.0 + 1e-12,
            errc::range_error, "term weights must be nonnegative with beta+gamma <= 1");
    require(cfg.max_iters >= 1, errc::range_error, "max_iters must be >= 1");
    require(cfg.tol > 0.0, errc::range_error, "tol must be positive");
    require(cfg.oracle_limit >= 1 && cfg.oracle_limit <= 9, errc::range_error,
            "oracle_limit must be in [1, 9]");
}

namespace detail {

// One graph with its structure cost transformed per the config and features
// possibly diffused; the solver works only on this view.
struct PreparedGraph {
    Matrix cost;       // transformed structure matrix
    Matrix features;   // possibly diffused
    Vector weights;
    const EdgeFeatures* edges;  // borrowed from the source graph
};

inline PreparedGraph prepare(const Graph& g, const DistanceConfig& cfg) {
    validate_graph(g);
    TransformedCosts tc = apply_transform(structure_cost(g, cfg.structure), g.features, cfg.transform);
    PreparedGraph p;
    p.cost = std::move(tc.cost);
    p.features = std::move(tc.features);
    p.weights = g.weights;
    p.edges = &g.edge_features;
    return p;
}

// Entrywise squared distances between feature rows; computed term by term
// (not via the expanded norm identity) so identical rows give exactly zero.
inline Matrix feature_cost_matrix(const Matrix& f1, const Matrix& f2) {
    require(f1.cols() == f2.cols(), errc::dimension_mismatch,
            "node feature dimensions must match across graphs");
    const int n1 = static_cast<int>(f1.rows());
    const int n2 = static_cast<int>(f2.rows());
    Matrix m = Matrix::Zero(n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int k = 0; k < n2; ++k) {
            double s = 0.0;
            for (int d = 0; d < f1.cols(); ++d) {
                const double diff = f1(i, d) - f2(k, d);
                s += diff * diff;
            }
            m(i, k) = s;
        }
    return m;
}

inline void check_edge_features(const PreparedGraph& p1, const PreparedGraph& p2) {
    require(!p1.edges->empty() && !p2.edges->empty(), errc::missing_edge_features,
            "edge-feature weight is positive but a graph has no edge features");
    require(p1.edges->size() == p2.edges->size(), errc::dimension_mismatch,
            "edge feature dimensions must match across graphs");
}

// Quadratic-term machinery shared by the objective and the solver. For the
// squared loss, sum_{ijkl} (R1_ij - R2_kl)^2 pi_ik pi_jl factors into
//   <const, pi> - 2 <R1 pi R2^T, pi>,
// with const_ik = (R1.^2 a)_i + (R2.^2 b)_k, valid whenever pi has marginals
// (a, b). Its gradient on the polytope is 2*const - 4 R1 pi R2^T.
struct QuadTerm {
    Matrix r1, r2;
    Vector const_row, const_col;  // (R1.^2) a and (R2.^2) b
    double weight = 0.0;

    QuadTerm(Matrix r1_in, Matrix r2_in, const Vector& a, const Vector& b, double w)
        : r1(std::move(r1_in)), r2(std::move(r2_in)), weight(w) {
        const_row = r1.cwiseProduct(r1) * a;
        const_col = r2.cwiseProduct(r2) * b;
    }

    double value(const Matrix& pi, const Vector& a, const Vector& b) const {
        const double c = const_row.dot(a) + const_col.dot(b);
        const double cross = (r1 * pi * r2.transpose()).cwiseProduct(pi).sum();
        return weight * (c - 2.0 * cross);
    }

    void add_gradient(const Matrix& pi, Matrix& g) const {
        Matrix cross = r1 * pi * r2.transpose();
        for (int i = 0; i < g.rows(); ++i)
            for (int k = 0; k < g.cols(); ++k)
                g(i, k) += weight * (2.0 * (const_row(i) + const_col(k)) - 4.0 * cross(i, k));
    }

    // Coefficient of t^2 along pi + t D for a zero-marginal direction D.
    double curvature(const Matrix& d) const {
        return weight * (-2.0 * (r1 * d * r2.transpose()).cwiseProduct(d).sum());
    }
};

struct ObjectiveParts {
    double w_feat = 0.0;
    Matrix feat_cost;             // set iff w_feat > 0
    std::vector<QuadTerm> quads;  // structure term, then one per edge channel
    Vector a, b;

    double value(const Matrix& pi) const {
        double v = 0.0;
        if (w_feat > 0.0) v += w_feat * feat_cost.cwiseProduct(pi).sum();
        for (const QuadTerm& q : quads) v += q.value(pi, a, b);
        return v;
    }

    Matrix gradient(const Matrix& pi) const {
        Matrix g = Matrix::Zero(pi.rows(), pi.cols());
        if (w_feat > 0.0) g += w_feat * feat_cost;
        for (const QuadTerm& q : quads) q.add_gradient(pi, g);
        return g;
    }

    double curvature(const Matrix& d) const {
        double c = 0.0;
        for (const QuadTerm& q : quads) c += q.curvature(d);
        return c;
    }
};

// Zero-weight terms are skipped entirely, never multiplied by zero, so a
// config with gamma = 0 is bit-identical to one evaluated without edge
// features, and (beta, gamma) = (1, 0) to a pure structure comparison.
inline ObjectiveParts build_objective(const PreparedGraph& p1, const PreparedGraph& p2,
                                      const DistanceConfig& cfg) {
    ObjectiveParts parts;
    parts.a = p1.weights;
    parts.b = p2.weights;
    const double w_feat = 1.0 - cfg.beta - cfg.gamma;
    if (w_feat > 0.0) {
        parts.w_feat = w_feat;
        parts.feat_cost = feature_cost_matrix(p1.features, p2.features);
    }
    if (cfg.beta > 0.0)
        parts.quads.emplace_back(p1.cost, p2.cost, parts.a, parts.b, cfg.beta);
    if (cfg.gamma > 0.0) {
        check_edge_features(p1, p2);
        for (std::size_t c = 0; c < p1.edges->size(); ++c)
            parts.quads.emplace_back((*p1.edges)[c], (*p2.edges)[c], parts.a, parts.b, cfg.gamma);
    }
    return parts;
}

}  // namespace detail

// Objective value at a given coupling: the squared fused objective
//   (1-beta-gamma) sum_ik |F1_i - F2_k|^2 pi_ik
//   + beta  sum_ijkl (C1_ij - C2_kl)^2 pi_ik pi_jl
//   + gamma sum_ijkl |X1_ij - X2_kl|^2 pi_ik pi_jl
// with structure costs transformed per the config. No halving, no root.
inline double fgw_objective(const Graph& g1, const Graph& g2, const Coupling& pi,
                            const DistanceConfig& cfg) {
    validate_distance_config(cfg);
    detail::PreparedGraph p1 = detail::prepare(g1, cfg);
    detail::PreparedGraph p2 = detail::prepare(g2, cfg);
    validate_coupling(pi, p1.weights, p2.weights);
    require(pi.allFinite(), errc::non_finite, "coupling has non-finite entries");
    return detail::build_objective(p1, p2, cfg).value(pi);
}

inline Coupling initial_coupling(const Graph& g1, const Graph& g2, const DistanceConfig& cfg) {
    validate_distance_config(cfg);
    validate_graph(g1);
    validate_graph(g2);
    const int n1 = g1.n();
    const int n2 = g2.n();
    const Vector& a = g1.weights;
    const Vector& b = g2.weights;
    switch (cfg.init) {
        case InitKind::uniform:
            return a * b.transpose();
        case InitKind::identity:
            if (n1 != n2) return a * b.transpose();  // no identity across sizes
            return Matrix::Identity(n1, n1) / static_cast<double>(n1);
        case InitKind::fd:
        case InitKind::lfd:
        case InitKind::lfd_sym: {
            const StructureKind op = cfg.init == InitKind::fd    ? StructureKind::adjacency
                                   : cfg.init == InitKind::lfd   ? StructureKind::laplacian
                                                                 : StructureKind::sym_norm_laplacian;
            const auto augment = [op](const Graph& g) {
                Matrix diff = structure_cost(g, op) * g.features;
                Matrix aug(g.n(), 2 * g.features.cols());
                aug << g.features, diff;
                return aug;
            };
            Matrix cost = detail::feature_cost_matrix(augment(g1), augment(g2));
            return solve_exact_ot(cost, a, b).plan;
        }
    }
    fail(errc::internal, "unknown init kind");
}

struct SolveResult {
    double value = 0.0;
    Coupling coupling;
    int iterations = 0;
    bool converged = false;
    // Objective after initialization and after every accepted step; used by
    // descent diagnostics. Non-increasing up to roundoff by construction.
    std::vector<double> objective_trace;
};

namespace detail {

inline std::uint64_t hash_mix(std::uint64_t h, std::uint64_t v) {
    return rng::splitmix64(h ^ rng::splitmix64(v));
}

inline std::uint64_t hash_double(double v) { return std::bit_cast<std::uint64_t>(v); }

// Which stored channels the solve will actually read: the objective terms
// with positive weight, the structure behind feature diffusion, and (unless
// the caller hands in an explicit starting coupling) whatever the configured
// initialization consumes. Everything else must stay invisible so that a
// zero-weight term cannot influence even tie-breaking.
struct CanonChannels {
    bool features = false;
    bool structure = false;
    bool edges = false;
};

inline CanonChannels canon_channels(const DistanceConfig& cfg, bool has_explicit_init) {
    const double feature_weight = 1.0 - cfg.beta - cfg.gamma;
    const bool init_reads = !has_explicit_init &&
                            (cfg.init == InitKind::fd || cfg.init == InitKind::lfd ||
                             cfg.init == InitKind::lfd_sym);
    CanonChannels ch;
    ch.features = feature_weight > 0.0 || init_reads;
    ch.structure = cfg.beta > 0.0 || init_reads ||
                   (feature_weight > 0.0 && cfg.transform.feature_diffusion);
    ch.edges = cfg.gamma > 0.0;
    return ch;
}

// One round of neighborhood refinement on raw stored bytes. A relabeling
// only moves those bytes around, never recomputes them, so the resulting
// keys are exactly relabel-covariant.
inline void refine_keys(const Graph& g, const CanonChannels& ch,
                        std::vector<std::uint64_t>& key) {
    const int n = g.n();
    const bool edges = ch.edges && !g.edge_features.empty();
    if (!ch.structure && !edges) return;
    const auto distinct = [&] {
        std::vector<std::uint64_t> s = key;
        std::sort(s.begin(), s.end());
        return std::unique(s.begin(), s.end()) - s.begin();
    };
    std::vector<std::uint64_t> next(key.size());
    std::vector<std::uint64_t> neighborhood;
    long seen = distinct();
    for (int round = 0; round < n; ++round) {
        for (int i = 0; i < n; ++i) {
            neighborhood.clear();
            for (int j = 0; j < n; ++j) {
                if (j == i) continue;
                std::uint64_t e = key[static_cast<std::size_t>(j)];
                if (ch.structure) e = hash_mix(e, hash_double(g.adjacency(i, j)));
                if (edges)
                    for (const Matrix& x : g.edge_features) e = hash_mix(e, hash_double(x(i, j)));
                neighborhood.push_back(e);
            }
            std::sort(neighborhood.begin(), neighborhood.end());
            std::uint64_t h = key[static_cast<std::size_t>(i)];
            for (std::uint64_t e : neighborhood) h = hash_mix(h, e);
            next[static_cast<std::size_t>(i)] = h;
        }
        key.swap(next);
        const long now = distinct();
        if (now == seen) break;  // partition stable; further rounds cannot split
        seen = now;
    }
}

inline std::vector<std::uint64_t> initial_keys(const Graph& g, const CanonChannels& ch) {
    std::vector<std::uint64_t> key(static_cast<std::size_t>(g.n()), 0x9e3779b97f4a7c15ULL);
    if (ch.features)
        for (int i = 0; i < g.n(); ++i)
            for (int c = 0; c < g.features.cols(); ++c)
                key[static_cast<std::size_t>(i)] =
                    hash_mix(key[static_cast<std::size_t>(i)], hash_double(g.features(i, c)));
    return key;
}

inline void append_double_bytes(std::vector<std::uint8_t>& out, double v) {
    const std::uint64_t b = std::bit_cast<std::uint64_t>(v);
    for (int s = 0; s < 64; s += 8) out.push_back(static_cast<std::uint8_t>(b >> s));
}

// Serialization of the read channels under a candidate order; the
// lexicographically smallest serialization defines the canonical labeling.
inline std::vector<std::uint8_t> canon_form(const Graph& g, const CanonChannels& ch,
                                            const std::vector<int>& order) {
    const int n = g.n();
    std::vector<std::uint8_t> out;
    if (ch.features)
        for (int k = 0; k < n; ++k)
            for (int c = 0; c < g.features.cols(); ++c)
                append_double_bytes(out, g.features(order[static_cast<std::size_t>(k)], c));
    if (ch.structure)
        for (int k = 0; k < n; ++k)
            for (int l = 0; l < n; ++l)
                append_double_bytes(out, g.adjacency(order[static_cast<std::size_t>(k)],
                                                     order[static_cast<std::size_t>(l)]));
    if (ch.edges)
        for (const Matrix& x : g.edge_features)
            for (int k = 0; k < n; ++k)
                for (int l = 0; l < n; ++l)
                    append_double_bytes(out, x(order[static_cast<std::size_t>(k)],
                                               order[static_cast<std::size_t>(l)]));
    return out;
}

struct CanonBest {
    std::vector<std::uint8_t> form;
    std::vector<int> order;
    bool set = false;
};

// Individualization-refinement search. Refine; if ties remain, branch on
// every member of the first tied cell (an invariant choice), individualize
// it, and recurse. All branches are explored within the search budget, so the
// minimum does not depend on caller numbering; the budget only binds on
// graphs more symmetric than anything this library targets, where most
// orders serialize identically anyway.
inline void canon_search(const Graph& g, const CanonChannels& ch, std::vector<std::uint64_t> key,
                         long& budget, CanonBest& best) {
    if (budget <= 0) return;
    --budget;  // every visit costs one refinement, not just leaves
    refine_keys(g, ch, key);
    const int n = g.n();

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
    });

    // first cell (smallest key) still holding ties, if any
    int cell_lo = -1, cell_hi = -1;
    for (int k = 0; k + 1 < n; ++k) {
        if (key[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] ==
            key[static_cast<std::size_t>(order[static_cast<std::size_t>(k + 1)])]) {
            cell_lo = k;
            cell_hi = k + 1;
            while (cell_hi + 1 < n &&
                   key[static_cast<std::size_t>(order[static_cast<std::size_t>(cell_hi + 1)])] ==
                       key[static_cast<std::size_t>(order[static_cast<std::size_t>(cell_lo)])])
                ++cell_hi;
            break;
        }
    }

    if (cell_lo < 0) {  // discrete partition: a leaf
        std::vector<std::uint8_t> form = canon_form(g, ch, order);
        if (!best.set || form < best.form) {
            best.form = std::move(form);
            best.order = order;
            best.set = true;
        }
        return;
    }

    static constexpr std::uint64_t kIndividualize = 0x6a09e667f3bcc909ULL;
    for (int k = cell_lo; k <= cell_hi; ++k) {
        std::vector<std::uint64_t> child = key;
        const std::size_t v = static_cast<std::size_t>(order[static_cast<std::size_t>(k)]);
        child[v] = hash_mix(child[v], kIndividualize);
        canon_search(g, ch, std::move(child), budget, best);
        if (budget <= 0) return;
    }
}

inline std::vector<int> canonical_order_for(const Graph& g, const CanonChannels& ch) {
    const int n = g.n();
    std::vector<std::uint64_t> key = initial_keys(g, ch);
    refine_keys(g, ch, key);

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return key[static_cast<std::size_t>(a)] < key[static_cast<std::size_t>(b)];
    });

    bool discrete = true;
    for (int k = 0; k + 1 < n; ++k)
        if (key[static_cast<std::size_t>(order[static_cast<std::size_t>(k)])] ==
            key[static_cast<std::size_t>(order[static_cast<std::size_t>(k + 1)])])
            discrete = false;
    if (discrete) return order;  // common case: refinement separated everything

    // Ties with no pairwise channel in play mean the tied nodes' read bytes
    // are identical, so any order among them serializes the same; otherwise
    // run the individualization search.
    if (!ch.structure && !(ch.edges && !g.edge_features.empty())) return order;

    CanonBest best;
    long budget = 4096;
    canon_search(g, ch, initial_keys(g, ch), budget, best);
    return best.set ? best.order : order;
}

}  // namespace detail

// Relabel-invariant node ordering derived only from the channels the solve
// reads under this configuration (see canon_channels): iterated neighborhood
// refinement on raw bytes, completed by an individualization search when
// refinement alone cannot separate nodes. Two relabelings of one graph map
// to bit-identical internal problems.
inline std::vector<int> canonical_node_order(const Graph& g, const DistanceConfig& cfg) {
    return detail::canonical_order_for(g, detail::canon_channels(cfg, false));
}

namespace detail {

// Frank-Wolfe (conditional gradient) on the coupling polytope: linearize at
// the current plan, take the exact OT vertex of the gradient as direction,
// and move by the closed-form minimizer of the (exactly quadratic) objective
// restricted to the segment. Failure to converge within max_iters is an
// answer, not an error.
inline SolveResult solve_fgw_core(const Graph& g1, const Graph& g2, const DistanceConfig& cfg,
                                  const std::optional<Coupling>& initial) {
    detail::PreparedGraph p1 = detail::prepare(g1, cfg);
    detail::PreparedGraph p2 = detail::prepare(g2, cfg);
    detail::ObjectiveParts obj = detail::build_objective(p1, p2, cfg);

    Coupling pi;
    if (initial.has_value()) {
        validate_coupling(*initial, p1.weights, p2.weights);
        pi = *initial;
    } else {
        pi = initial_coupling(g1, g2, cfg);
    }

    SolveResult res;
    double value = obj.value(pi);
    res.objective_trace.push_back(value);

    for (int iter = 1; iter <= cfg.max_iters; ++iter) {
        const Matrix grad = obj.gradient(pi);
        const Matrix vertex = solve_exact_ot(grad, obj.a, obj.b).plan;
        const Matrix dir = vertex - pi;
        const double slope = grad.cwiseProduct(dir).sum();
        if (slope >= 0.0) {  // no descent direction left: stationary
            res.converged = true;
            break;
        }
        const double curv = obj.curvature(dir);
        double step;
        if (curv > 0.0) {
            step = std::clamp(-slope / (2.0 * curv), 0.0, 1.0);
        } else {
            // Concave or linear along the segment; an endpoint wins, and with
            // slope < 0 that endpoint is t = 1.
            step = 1.0;
        }
        if (step <= 0.0) {
            res.converged = true;
            break;
        }
        pi += step * dir;
        const double next = obj.value(pi);
        res.objective_trace.push_back(next);
        res.iterations = iter;
        const double decrease = value - next;
        value = next;
        if (decrease <= cfg.tol * std::max(std::abs(value), 1e-30)) {
            res.converged = true;
            break;
        }
    }

    res.value = value;
    res.coupling = std::move(pi);
    return res;
}

}  // namespace detail

// Solve after internally renumbering both graphs into canonical node order,
// so the solver's tie-breaking (vertex choice in degenerate linear programs)
// cannot depend on the caller's node numbering: two relabelings of the same
// pair produce bit-identical internal problems and therefore equal values.
// The returned coupling is mapped back to caller order.
inline SolveResult solve_fgw(const Graph& g1, const Graph& g2, const DistanceConfig& cfg,
                             const std::optional<Coupling>& initial = std::nullopt) {
    validate_distance_config(cfg);
    const detail::CanonChannels channels = detail::canon_channels(cfg, initial.has_value());
    const std::vector<int> order1 = detail::canonical_order_for(g1, channels);
    const std::vector<int> order2 = detail::canonical_order_for(g2, channels);
    const auto is_identity = [](const std::vector<int>& o) {
        for (std::size_t k = 0; k < o.size(); ++k)
            if (o[k] != static_cast<int>(k)) return false;
        return true;
    };
    if (is_identity(order1) && is_identity(order2))
        return detail::solve_fgw_core(g1, g2, cfg, initial);

    const int n1 = g1.n(), n2 = g2.n();
    // position[e] = canonical slot of caller node e (inverse of order)
    std::vector<int> pos1(static_cast<std::size_t>(n1)), pos2(static_cast<std::size_t>(n2));
    for (int k = 0; k < n1; ++k) pos1[static_cast<std::size_t>(order1[static_cast<std::size_t>(k)])] = k;
    for (int k = 0; k < n2; ++k) pos2[static_cast<std::size_t>(order2[static_cast<std::size_t>(k)])] = k;

    const Graph c1 = apply_permutation(g1, Permutation::validated(pos1));
    const Graph c2 = apply_permutation(g2, Permutation::validated(pos2));
    std::optional<Coupling> canon_init;
    if (initial.has_value()) {
        require(initial->rows() == n1 && initial->cols() == n2, errc::dimension_mismatch,
                "initial coupling shape does not match the graphs");
        Coupling ci(n1, n2);
        for (int k = 0; k < n1; ++k)
            for (int l = 0; l < n2; ++l)
                ci(k, l) = (*initial)(order1[static_cast<std::size_t>(k)],
                                      order2[static_cast<std::size_t>(l)]);
        canon_init = std::move(ci);
    }

    SolveResult res = detail::solve_fgw_core(c1, c2, cfg, canon_init);
    Coupling back(n1, n2);
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j)
            back(i, j) = res.coupling(pos1[static_cast<std::size_t>(i)],
                                      pos2[static_cast<std::size_t>(j)]);
    res.coupling = std::move(back);
    return res;
}

struct OracleResult {
    double value = 0.0;
    std::vector<int> permutation;  // node i of g1 matched to permutation[i] of g2
    long evaluations = 0;
};

inline Coupling coupling_from_permutation(const std::vector<int>& perm) {
    const int n = static_cast<int>(perm.size());
    Matrix pi = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) pi(i, perm[static_cast<std::size_t>(i)]) = 1.0 / static_cast<double>(n);
    return pi;
}

// Global minimum of the objective over all permutation couplings P/n by full
// enumeration; ties resolved to the lexicographically lowest permutation.
// Equal orders only, and only up to cfg.oracle_limit nodes.
inline OracleResult permutation_oracle(const Graph& g1, const Graph& g2, const DistanceConfig& cfg) {
    validate_distance_config(cfg);
    detail::PreparedGraph p1 = detail::prepare(g1, cfg);
    detail::PreparedGraph p2 = detail::prepare(g2, cfg);
    const int n = g1.n();
    require(n == g2.n(), errc::size_mismatch, "permutation oracle needs equal node counts");
    require(n <= cfg.oracle_limit, errc::too_large,
            "permutation oracle capped at " + std::to_string(cfg.oracle_limit) + " nodes");

    const double w_feat = 1.0 - cfg.beta - cfg.gamma;
    Matrix feat_cost;
    if (w_feat > 0.0) feat_cost = detail::feature_cost_matrix(p1.features, p2.features);

    // Pairwise quadratic costs flattened to (ij, kl) so each permutation is a
    // plain O(n^2) table walk. Mathematically identical to fgw_objective at
    // the coupling P/n (summation order aside).
    Matrix quad;
    const bool has_quad = cfg.beta > 0.0 || cfg.gamma > 0.0;
    if (has_quad) {
        if (cfg.gamma > 0.0) detail::check_edge_features(p1, p2);
        quad = Matrix::Zero(n * n, n * n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k)
                    for (int l = 0; l < n; ++l) {
                        double q = 0.0;
                        if (cfg.beta > 0.0) {
                            const double d = p1.cost(i, j) - p2.cost(k, l);
                            q += cfg.beta * d * d;
                        }
                        if (cfg.gamma > 0.0)
                            for (std::size_t c = 0; c < p1.edges->size(); ++c) {
                                const double d = (*p1.edges)[c](i, j) - (*p2.edges)[c](k, l);
                                q += cfg.gamma * d * d;
                            }
                        quad(i * n + j, k * n + l) = q;
                    }
    }

    const double inv_n = 1.0 / static_cast<double>(n);
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    OracleResult res;
    res.value = std::numeric_limits<double>::infinity();
    do {
        double v = 0.0;
        if (w_feat > 0.0) {
            double lin = 0.0;
            for (int i = 0; i < n; ++i) lin += feat_cost(i, perm[static_cast<std::size_t>(i)]);
            v += w_feat * lin * inv_n;
        }
        if (has_quad) {
            double q = 0.0;
            for (int i = 0; i < n; ++i) {
                const int pi_base = perm[static_cast<std::size_t>(i)] * n;
                for (int j = 0; j < n; ++j)
                    q += quad(i * n + j, pi_base + perm[static_cast<std::size_t>(j)]);
            }
            v += q * inv_n * inv_n;
        }
        ++res.evaluations;
        if (v < res.value) {
            res.value = v;
            res.permutation = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return res;
}

// Nonconformity score between a predicted graph and a candidate: the oracle
// value when the config requests it and the pair is eligible (equal orders,
// small enough), otherwise the solver value.
inline double score(const Graph& g1, const Graph& g2, const DistanceConfig& cfg) {
    if (cfg.oracle_mode && g1.n() == g2.n() && g1.n() <= cfg.oracle_limit)
        return permutation_oracle(g1, g2, cfg).value;
    return solve_fgw(g1, g2, cfg).value;
}

}  // namespace graphconf
