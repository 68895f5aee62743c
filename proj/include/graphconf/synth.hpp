#pragma once

#include <algorithm>
#include <cstdio>
#include <string>
#include <utility>
#include <vector>

#include "graphconf/errors.hpp"
#include "graphconf/graph.hpp"
#include "graphconf/rng.hpp"

namespace graphconf {

// Synthetic colored-graph benchmark. Truth graphs are connected Erdos-Renyi
// draws with uniform one-hot colors; predictions are noisy relabeled copies;
// candidate libraries collect every pool graph with the truth's exact color
// histogram. In heteroscedastic mode the prediction noise scales with the
// library size, giving size-conditional methods a real signal.
struct SynthConfig {
    int n_nodes_min = 4;
    int n_nodes_max = 6;
    int n_colors = 4;
    double edge_prob = 0.4;
    int n_train = 0;
    int n_cal = 200;
    int n_test = 500;
    double predictor_accuracy = 0.82;  // chance of an exact (relabeled) copy
    double edge_flip_rate = 0.1;
    double color_swap_rate = 0.1;
    bool heteroscedastic = false;
    double hetero_scale = 8.0;  // library size at which noise saturates
    int library_cap = 256;
    std::uint64_t seed = 0;
};

inline void validate_synth_config(const SynthConfig& cfg) {
    require(cfg.n_nodes_min >= 2, errc::generation_failure, "n_nodes_min must be >= 2");
    require(cfg.n_nodes_max >= cfg.n_nodes_min, errc::generation_failure,
            "n_nodes_max must be >= n_nodes_min");
    require(cfg.n_nodes_max <= kMaxNodes, errc::generation_failure,
            "n_nodes_max exceeds the node cap");
    require(cfg.n_colors >= 1, errc::generation_failure, "n_colors must be >= 1");
    for (double p : {cfg.edge_prob, cfg.predictor_accuracy, cfg.edge_flip_rate, cfg.color_swap_rate})
        require(p >= 0.0 && p <= 1.0, errc::generation_failure,
                "probabilities must lie in [0, 1]");
    require(cfg.n_train >= 0 && cfg.n_cal >= 0 && cfg.n_test >= 0, errc::generation_failure,
            "split sizes must be nonnegative");
    require(cfg.n_train + cfg.n_cal + cfg.n_test >= 1, errc::generation_failure,
            "dataset must contain at least one example");
    require(cfg.hetero_scale > 0.0, errc::generation_failure, "hetero_scale must be positive");
    require(cfg.library_cap >= 1, errc::generation_failure, "library_cap must be >= 1");
}

namespace detail {

inline bool is_connected(const Matrix& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<char> seen(static_cast<std::size_t>(n), 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        const int u = stack.back();
        stack.pop_back();
        for (int v = 0; v < n; ++v)
            if (a(u, v) != 0.0 && !seen[static_cast<std::size_t>(v)]) {
                seen[static_cast<std::size_t>(v)] = 1;
                ++count;
                stack.push_back(v);
            }
    }
    return count == n;
}

inline std::vector<int> component_labels(const Matrix& a) {
    const int n = static_cast<int>(a.rows());
    std::vector<int> label(static_cast<std::size_t>(n), -1);
    int next = 0;
    for (int s = 0; s < n; ++s) {
        if (label[static_cast<std::size_t>(s)] >= 0) continue;
        std::vector<int> stack{s};
        label[static_cast<std::size_t>(s)] = next;
        while (!stack.empty()) {
            const int u = stack.back();
            stack.pop_back();
            for (int v = 0; v < n; ++v)
                if (a(u, v) != 0.0 && label[static_cast<std::size_t>(v)] < 0) {
                    label[static_cast<std::size_t>(v)] = next;
                    stack.push_back(v);
                }
        }
        ++next;
    }
    return label;
}

inline Matrix one_hot(const std::vector<int>& colors, int n_colors) {
    Matrix f = Matrix::Zero(static_cast<int>(colors.size()), n_colors);
    for (std::size_t i = 0; i < colors.size(); ++i) f(static_cast<int>(i), colors[i]) = 1.0;
    return f;
}

}  // namespace detail

// One connected Erdos-Renyi graph with uniform one-hot colors. Connectivity
// is enforced by rejection (up to 1000 draws) and then, as a last resort, by
// stitching the components of the final draw together with random edges.
inline Graph gen_graph(rng& gen, const SynthConfig& cfg) {
    validate_synth_config(cfg);
    const int n = static_cast<int>(gen.next_int(cfg.n_nodes_min, cfg.n_nodes_max));
    Matrix a = Matrix::Zero(n, n);
    for (int attempt = 0; attempt < 1000; ++attempt) {
        a.setZero();
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (gen.next_bernoulli(cfg.edge_prob)) a(i, j) = a(j, i) = 1.0;
        if (detail::is_connected(a)) break;
    }
    if (!detail::is_connected(a)) {
        // Spanning-tree repair: attach each later component to a random node
        // seen so far.
        const std::vector<int> label = detail::component_labels(a);
        const int n_comp = 1 + *std::max_element(label.begin(), label.end());
        std::vector<int> absorbed;  // nodes of already-connected components
        for (int i = 0; i < n; ++i)
            if (label[static_cast<std::size_t>(i)] == 0) absorbed.push_back(i);
        for (int c = 1; c < n_comp; ++c) {
            std::vector<int> members;
            for (int i = 0; i < n; ++i)
                if (label[static_cast<std::size_t>(i)] == c) members.push_back(i);
            const int u = members[static_cast<std::size_t>(gen.next_below(members.size()))];
            const int v = absorbed[static_cast<std::size_t>(gen.next_below(absorbed.size()))];
            a(u, v) = a(v, u) = 1.0;
            absorbed.insert(absorbed.end(), members.begin(), members.end());
        }
    }
    std::vector<int> colors(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i)
        colors[static_cast<std::size_t>(i)] = static_cast<int>(gen.next_below(static_cast<std::uint64_t>(cfg.n_colors)));
    return make_graph(std::move(a), detail::one_hot(colors, cfg.n_colors));
}

// Simulated structured predictor. With the (noise-scaled) accuracy the output
// is an exact random relabeling of the truth; otherwise node-pair edges flip
// and node colors are redrawn independently before the relabeling.
// noise_scale in [0, 1] interpolates between a perfect predictor (0) and the
// configured noise level (1); heteroscedastic datasets key it to library size.
inline Graph simulate_predictor(const Graph& truth, rng& gen, const SynthConfig& cfg,
                                double noise_scale = 1.0) {
    validate_synth_config(cfg);
    require(noise_scale >= 0.0 && noise_scale <= 1.0, errc::range_error,
            "noise_scale must lie in [0, 1]");
    const int n = truth.n();
    const double accuracy = 1.0 - (1.0 - cfg.predictor_accuracy) * noise_scale;
    Graph pred = truth;
    if (!gen.next_bernoulli(accuracy)) {
        const double flip = cfg.edge_flip_rate * noise_scale;
        const double swap = cfg.color_swap_rate * noise_scale;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                if (gen.next_bernoulli(flip)) {
                    pred.adjacency(i, j) = 1.0 - pred.adjacency(i, j);
                    pred.adjacency(j, i) = pred.adjacency(i, j);
                }
        const int palette = static_cast<int>(truth.feature_dim());
        for (int i = 0; i < n; ++i)
            if (gen.next_bernoulli(swap)) {
                pred.features.row(i).setZero();
                pred.features(i, static_cast<int>(gen.next_below(static_cast<std::uint64_t>(palette)))) = 1.0;
            }
    }
    std::vector<int> perm_map(static_cast<std::size_t>(n));
    const std::vector<std::size_t> p = gen.next_permutation_of(static_cast<std::size_t>(n));
    for (std::size_t i = 0; i < p.size(); ++i) perm_map[i] = static_cast<int>(p[i]);
    return apply_permutation(pred, Permutation::validated(std::move(perm_map)));
}

// Candidate ids for one truth: the truth first, then every other pool graph
// with the same color histogram in pool order, truncated to the cap.
inline std::vector<std::string> build_candidate_library(
    const std::vector<std::pair<std::string, std::vector<int>>>& pool_histograms,
    const std::string& truth_id, const std::vector<int>& truth_histogram, int cap) {
    require(cap >= 1, errc::range_error, "library cap must be >= 1");
    bool truth_seen = false;
    std::vector<std::string> ids{truth_id};
    for (const auto& [id, hist] : pool_histograms) {
        if (id == truth_id) {
            require(hist == truth_histogram, errc::truth_missing,
                    "pool entry for the truth id has a different histogram");
            truth_seen = true;
            continue;
        }
        if (hist == truth_histogram && static_cast<int>(ids.size()) < cap) ids.push_back(id);
    }
    require(truth_seen, errc::truth_missing, "truth id not present in the candidate pool");
    return ids;
}

enum class Split { train, cal, test };

inline const char* split_name(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::cal:   return "cal";
        case Split::test:  return "test";
    }
    return "?";
}

struct DatasetExample {
    std::string id;
    std::string truth_id;
    std::string prediction_id;
    std::vector<std::string> candidate_ids;
    Split split = Split::train;
};

struct GraphRecord {
    std::string id;
    Graph graph;
};

struct Dataset {
    SynthConfig config;
    std::vector<GraphRecord> graphs;     // all truths, then all predictions
    std::vector<DatasetExample> examples;  // train block, cal block, test block
};

namespace detail {

inline std::string padded_id(const char* prefix, int i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s-%06d", prefix, i);
    return buf;
}

}  // namespace detail

// Deterministic end-to-end generation: graph draws and predictor noise come
// from independent named substreams of the config seed, so the truth corpus
// is identical whether or not predictions are regenerated. Candidate
// libraries are built against the pool of all truths (every split), keeping
// library sizes exchangeable across calibration and test examples.
inline Dataset generate_dataset(const SynthConfig& cfg) {
    validate_synth_config(cfg);
    const int total = cfg.n_train + cfg.n_cal + cfg.n_test;
    Dataset ds;
    ds.config = cfg;

    rng gen(cfg.seed, "gen");
    std::vector<std::vector<int>> histograms;
    histograms.reserve(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i) {
        GraphRecord rec;
        rec.id = detail::padded_id("t", i);
        rec.graph = gen_graph(gen, cfg);
        histograms.push_back(color_histogram(rec.graph));
        ds.graphs.push_back(std::move(rec));
    }

    std::vector<std::pair<std::string, std::vector<int>>> pool;
    pool.reserve(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i)
        pool.emplace_back(ds.graphs[static_cast<std::size_t>(i)].id, histograms[static_cast<std::size_t>(i)]);

    rng predictor(cfg.seed, "predictor");
    for (int i = 0; i < total; ++i) {
        DatasetExample ex;
        ex.split = i < cfg.n_train            ? Split::train
                 : i < cfg.n_train + cfg.n_cal ? Split::cal
                                               : Split::test;
        const int local = ex.split == Split::train ? i
                        : ex.split == Split::cal   ? i - cfg.n_train
                                                   : i - cfg.n_train - cfg.n_cal;
        ex.id = detail::padded_id(ex.split == Split::train ? "ex-train"
                                  : ex.split == Split::cal ? "ex-cal"
                                                           : "ex-test",
                                  local);
        ex.truth_id = ds.graphs[static_cast<std::size_t>(i)].id;
        ex.candidate_ids = build_candidate_library(pool, ex.truth_id,
                                                   histograms[static_cast<std::size_t>(i)], cfg.library_cap);
        const double noise_scale =
            cfg.heteroscedastic
                ? std::min(1.0, static_cast<double>(ex.candidate_ids.size()) / cfg.hetero_scale)
                : 1.0;
        GraphRecord pred;
        pred.id = detail::padded_id("p", i);
        pred.graph = simulate_predictor(ds.graphs[static_cast<std::size_t>(i)].graph, predictor, cfg, noise_scale);
        ex.prediction_id = pred.id;
        ds.graphs.push_back(std::move(pred));
        ds.examples.push_back(std::move(ex));
    }

    // Keep all truths ahead of all predictions in the serialized corpus.
    std::stable_partition(ds.graphs.begin(), ds.graphs.end(),
                          [](const GraphRecord& r) { return r.id[0] == 't'; });
    return ds;
}

}  // namespace graphconf
