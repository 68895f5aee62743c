#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <deque>
#include <string>
#include <vector>

#include "graphconf/errors.hpp"

namespace graphconf {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Per-channel n x n slices, each symmetric; channel c holds feature c of every
// node pair.
using EdgeFeatures = std::vector<Matrix>;

// Hard cap on graph order; everything downstream assumes small dense graphs.
inline constexpr int kMaxNodes = 64;

// An attributed graph as used throughout: symmetric zero-diagonal adjacency,
// one feature row per node, optional edge features, and uniform node weights.
// Weights are stored explicitly so couplings can be validated against them,
// but only the uniform vector 1/n is legal.
struct Graph {
    Matrix adjacency;       // n x n
    Matrix features;        // n x d
    EdgeFeatures edge_features;  // m slices of n x n, possibly empty
    Vector weights;         // n, each 1/n

    int n() const { return static_cast<int>(adjacency.rows()); }
    int feature_dim() const { return static_cast<int>(features.cols()); }
    int edge_feature_dim() const { return static_cast<int>(edge_features.size()); }
    bool has_edge_features() const { return !edge_features.empty(); }
};

inline Vector uniform_weights(int n) { return Vector::Constant(n, 1.0 / static_cast<double>(n)); }

inline Graph make_graph(Matrix adjacency, Matrix features, EdgeFeatures edge_features = {}) {
    Graph g;
    g.weights = uniform_weights(static_cast<int>(adjacency.rows()));
    g.adjacency = std::move(adjacency);
    g.features = std::move(features);
    g.edge_features = std::move(edge_features);
    return g;
}

inline const Graph& validate_graph(const Graph& g) {
    const int n = g.n();
    require(n >= 1, errc::dimension_mismatch, "graph must have at least one node");
    require(n <= kMaxNodes, errc::too_large,
            "graph has " + std::to_string(n) + " nodes, cap is " + std::to_string(kMaxNodes));
    require(g.adjacency.cols() == n, errc::dimension_mismatch, "adjacency must be square");
    require(g.adjacency.allFinite(), errc::non_finite, "adjacency has non-finite entries");
    for (int i = 0; i < n; ++i) {
        require(g.adjacency(i, i) == 0.0, errc::asymmetric_structure, "adjacency diagonal must be zero");
        for (int j = i + 1; j < n; ++j)
            require(g.adjacency(i, j) == g.adjacency(j, i), errc::asymmetric_structure,
                    "adjacency must be symmetric");
    }
    require(g.features.rows() == n, errc::dimension_mismatch,
            "feature matrix must have one row per node");
    require(g.features.allFinite(), errc::non_finite, "features have non-finite entries");
    require(g.weights.size() == n, errc::dimension_mismatch, "weight vector length must equal n");
    const double w = 1.0 / static_cast<double>(n);
    for (int i = 0; i < n; ++i)
        require(std::abs(g.weights(i) - w) <= 1e-12, errc::non_uniform_weights,
                "node weights must be uniform 1/n");
    for (const Matrix& slice : g.edge_features) {
        require(slice.rows() == n && slice.cols() == n, errc::dimension_mismatch,
                "edge feature slices must be n x n");
        require(slice.allFinite(), errc::non_finite, "edge features have non-finite entries");
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                require(slice(i, j) == slice(j, i), errc::asymmetric_structure,
                        "edge feature slices must be symmetric");
    }
    return g;
}

// -------------------------------------------------------------------------
// Node relabeling.

// perm[i] = new position of node i; validated to be a bijection on 0..n-1.
struct Permutation {
    std::vector<int> map;

    int size() const { return static_cast<int>(map.size()); }

    static Permutation identity(int n) {
        Permutation p;
        p.map.resize(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) p.map[static_cast<std::size_t>(i)] = i;
        return p;
    }

    static Permutation validated(std::vector<int> map) {
        const int n = static_cast<int>(map.size());
        std::vector<char> seen(static_cast<std::size_t>(n), 0);
        for (int v : map) {
            require(v >= 0 && v < n, errc::range_error, "permutation entry out of range");
            require(!seen[static_cast<std::size_t>(v)], errc::range_error,
                    "permutation entry repeated");
            seen[static_cast<std::size_t>(v)] = 1;
        }
        Permutation p;
        p.map = std::move(map);
        return p;
    }
};

// Relabels nodes: row/col i of the output is row/col perm[i]^-1 of the input,
// i.e. out(perm[i], perm[j]) = in(i, j). Exact (pure data movement).
inline Graph apply_permutation(const Graph& g, const Permutation& p) {
    const int n = g.n();
    require(p.size() == n, errc::length_mismatch, "permutation length must equal node count");
    Permutation::validated(p.map);  // reject non-bijections
    Graph out;
    out.adjacency = Matrix::Zero(n, n);
    out.features = Matrix::Zero(n, g.features.cols());
    out.weights = g.weights;
    for (int i = 0; i < n; ++i) {
        out.features.row(p.map[static_cast<std::size_t>(i)]) = g.features.row(i);
        for (int j = 0; j < n; ++j)
            out.adjacency(p.map[static_cast<std::size_t>(i)], p.map[static_cast<std::size_t>(j)]) =
                g.adjacency(i, j);
    }
    out.edge_features.reserve(g.edge_features.size());
    for (const Matrix& slice : g.edge_features) {
        Matrix s = Matrix::Zero(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                s(p.map[static_cast<std::size_t>(i)], p.map[static_cast<std::size_t>(j)]) = slice(i, j);
        out.edge_features.push_back(std::move(s));
    }
    return out;
}

// -------------------------------------------------------------------------
// Structure costs.

enum class StructureKind {
    adjacency,
    laplacian,            // D - A
    sym_norm_laplacian,   // I - D^-1/2 A D^-1/2, isolated nodes get diag 1
    shortest_path,        // BFS hop counts, unreachable pairs = n
};

inline const char* structure_kind_name(StructureKind k) {
    switch (k) {
        case StructureKind::adjacency:          return "adjacency";
        case StructureKind::laplacian:          return "laplacian";
        case StructureKind::sym_norm_laplacian: return "sym_norm_laplacian";
        case StructureKind::shortest_path:      return "shortest_path";
    }
    return "?";
}

inline Matrix structure_cost(const Graph& g, StructureKind kind) {
    const int n = g.n();
    const Matrix& a = g.adjacency;
    switch (kind) {
        case StructureKind::adjacency:
            return a;
        case StructureKind::laplacian: {
            Matrix l = -a;
            for (int i = 0; i < n; ++i) l(i, i) = a.row(i).sum();
            return l;
        }
        case StructureKind::sym_norm_laplacian: {
            Vector s(n);
            for (int i = 0; i < n; ++i) {
                const double deg = a.row(i).sum();
                s(i) = deg > 0.0 ? 1.0 / std::sqrt(deg) : 0.0;
            }
            Matrix l = Matrix::Identity(n, n) - s.asDiagonal() * a * s.asDiagonal();
            for (int i = 0; i < n; ++i) l(i, i) = 1.0;  // isolated nodes included
            return l;
        }
        case StructureKind::shortest_path: {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    require(a(i, j) == 0.0 || a(i, j) == 1.0, errc::non_binary_structure,
                            "shortest-path structure requires binary adjacency");
            const double unreachable = static_cast<double>(n);
            Matrix d = Matrix::Constant(n, n, unreachable);
            for (int src = 0; src < n; ++src) {
                d(src, src) = 0.0;
                std::deque<int> queue{src};
                while (!queue.empty()) {
                    const int u = queue.front();
                    queue.pop_front();
                    for (int v = 0; v < n; ++v) {
                        if (a(u, v) != 0.0 && d(src, v) == unreachable) {
                            d(src, v) = d(src, u) + 1.0;
                            queue.push_back(v);
                        }
                    }
                }
            }
            return d;
        }
    }
    fail(errc::internal, "unknown structure kind");
}

// -------------------------------------------------------------------------
// Cost transforms.

enum class TransformKind { none, power, truncated_exp };

struct CostTransform {
    TransformKind kind = TransformKind::none;
    int k = 1;             // power exponent, >= 1
    double lambda = 1.0;   // truncated-exp rate
    int order = 5;         // truncated-exp order, >= 1
    // sum_{i=0..order} (-lambda)^i M^i / i!; include_identity=false drops the
    // i=0 term (an alternate convention seen in the wild for Laplacian kernels).
    bool include_identity = true;
    // After the matrix transform, additionally replace F with M_transformed * F.
    bool feature_diffusion = false;
};

struct TransformedCosts {
    Matrix cost;      // transformed structure matrix
    Matrix features;  // possibly diffused node features
};

inline TransformedCosts apply_transform(const Matrix& m, const Matrix& features,
                                        const CostTransform& t) {
    require(m.rows() == m.cols(), errc::dimension_mismatch, "structure matrix must be square");
    const int n = static_cast<int>(m.rows());
    Matrix out;
    switch (t.kind) {
        case TransformKind::none:
            out = m;
            break;
        case TransformKind::power: {
            require(t.k >= 1, errc::range_error, "power transform needs k >= 1");
            out = m;
            for (int i = 1; i < t.k; ++i) out = (out * m).eval();
            break;
        }
        case TransformKind::truncated_exp: {
            require(t.order >= 1, errc::range_error, "truncated-exp transform needs order >= 1");
            Matrix term = Matrix::Identity(n, n);
            out = t.include_identity ? term : Matrix::Zero(n, n);
            for (int i = 1; i <= t.order; ++i) {
                term = (term * m * (-t.lambda / static_cast<double>(i))).eval();
                out += term;
            }
            break;
        }
    }
    TransformedCosts result;
    result.features = t.feature_diffusion ? Matrix(out * features) : features;
    result.cost = std::move(out);
    return result;
}

// -------------------------------------------------------------------------
// Color histograms (candidate-library keys).

// Features must be exactly one-hot; returns per-category counts over the
// palette given by the feature dimension.
inline std::vector<int> color_histogram(const Graph& g) {
    const int n = g.n();
    const int c = g.feature_dim();
    std::vector<int> hist(static_cast<std::size_t>(c), 0);
    for (int i = 0; i < n; ++i) {
        int hot = -1;
        for (int j = 0; j < c; ++j) {
            const double v = g.features(i, j);
            require(v == 0.0 || v == 1.0, errc::not_one_hot, "feature rows must be one-hot");
            if (v == 1.0) {
                require(hot < 0, errc::not_one_hot, "feature rows must have exactly one 1");
                hot = j;
            }
        }
        require(hot >= 0, errc::not_one_hot, "feature rows must have exactly one 1");
        ++hist[static_cast<std::size_t>(hot)];
    }
    return hist;
}

}  // namespace graphconf
