#include <catch2/catch_amalgamated.hpp>

#include <map>
#include <set>

#include <graphconf/fgw.hpp>
#include <graphconf/io.hpp>
#include <graphconf/synth.hpp>

namespace gc = graphconf;

TEST_CASE("generated graphs are connected, sized, and one-hot colored") {
    gc::SynthConfig cfg;
    cfg.n_nodes_min = 3;
    cfg.n_nodes_max = 7;
    cfg.n_colors = 3;
    cfg.edge_prob = 0.3;
    gc::rng gen(0, "gen-props");
    for (int t = 0; t < 200; ++t) {
        const gc::Graph g = gc::gen_graph(gen, cfg);
        REQUIRE(g.n() >= 3);
        REQUIRE(g.n() <= 7);
        REQUIRE_NOTHROW(gc::validate_graph(g));
        // Connectivity: shortest-path costs stay below the unreachable mark.
        const gc::Matrix sp = gc::structure_cost(g, gc::StructureKind::shortest_path);
        REQUIRE(sp.maxCoeff() < static_cast<double>(g.n()));
        int total = 0;
        for (int c : gc::color_histogram(g)) total += c;
        REQUIRE(total == g.n());
    }
}

TEST_CASE("two-node graphs must carry the single connecting edge") {
    gc::SynthConfig cfg;
    cfg.n_nodes_min = 2;
    cfg.n_nodes_max = 2;
    cfg.edge_prob = 0.05;  // rejection or repair must still connect the pair
    gc::rng gen(1, "two-node");
    for (int t = 0; t < 50; ++t) {
        const gc::Graph g = gc::gen_graph(gen, cfg);
        REQUIRE(g.adjacency(0, 1) == 1.0);
    }
}

TEST_CASE("edge probability one yields complete graphs") {
    gc::SynthConfig cfg;
    cfg.n_nodes_min = 5;
    cfg.n_nodes_max = 5;
    cfg.edge_prob = 1.0;
    gc::rng gen(2, "complete");
    const gc::Graph g = gc::gen_graph(gen, cfg);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 5; ++j)
            REQUIRE(g.adjacency(i, j) == (i == j ? 0.0 : 1.0));
}

TEST_CASE("single color collapses features to one column of ones") {
    gc::SynthConfig cfg;
    cfg.n_colors = 1;
    gc::rng gen(3, "mono");
    const gc::Graph g = gc::gen_graph(gen, cfg);
    REQUIRE(g.feature_dim() == 1);
    REQUIRE(g.features.minCoeff() == 1.0);
}

TEST_CASE("a perfectly accurate predictor emits an exact relabeled copy") {
    gc::SynthConfig cfg;
    cfg.predictor_accuracy = 1.0;
    gc::rng gen(5, "exact-pred");
    gc::DistanceConfig dist;
    dist.beta = 0.5;
    dist.oracle_mode = true;
    for (int t = 0; t < 20; ++t) {
        const gc::Graph truth = gc::gen_graph(gen, cfg);
        const gc::Graph pred = gc::simulate_predictor(truth, gen, cfg);
        REQUIRE(gc::color_histogram(pred) == gc::color_histogram(truth));
        REQUIRE(gc::score(pred, truth, dist) <= 1e-12);
    }
}

TEST_CASE("zero noise scale silences even an inaccurate predictor") {
    gc::SynthConfig cfg;
    cfg.predictor_accuracy = 0.0;
    cfg.edge_flip_rate = 1.0;
    cfg.color_swap_rate = 1.0;
    gc::rng gen(7, "clamped-noise");
    gc::DistanceConfig dist;
    dist.beta = 0.5;
    dist.oracle_mode = true;
    const gc::Graph truth = gc::gen_graph(gen, cfg);
    const gc::Graph pred = gc::simulate_predictor(truth, gen, cfg, 0.0);
    REQUIRE(gc::score(pred, truth, dist) <= 1e-12);
}

TEST_CASE("candidate library puts the truth first and respects the cap") {
    const std::vector<std::pair<std::string, std::vector<int>>> pool{
        {"a", {2, 1}}, {"b", {1, 2}}, {"c", {2, 1}}, {"d", {2, 1}}, {"e", {2, 1}},
    };
    const std::vector<std::string> lib = gc::build_candidate_library(pool, "c", {2, 1}, 3);
    REQUIRE(lib == std::vector<std::string>{"c", "a", "d"});
    // Without the cap, all histogram matches appear in pool order.
    const std::vector<std::string> full = gc::build_candidate_library(pool, "c", {2, 1}, 100);
    REQUIRE(full == std::vector<std::string>{"c", "a", "d", "e"});
    // The truth must be a pool member.
    REQUIRE_THROWS_MATCHES(gc::build_candidate_library(pool, "zz", {2, 1}, 3), gc::error,
                           Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
                               return e.code() == gc::errc::truth_missing;
                           }));
}

TEST_CASE("dataset generation is deterministic and well-formed") {
    gc::SynthConfig cfg;
    cfg.n_train = 5;
    cfg.n_cal = 20;
    cfg.n_test = 15;
    cfg.seed = 42;
    cfg.library_cap = 8;
    const gc::Dataset a = gc::generate_dataset(cfg);
    const gc::Dataset b = gc::generate_dataset(cfg);

    REQUIRE(a.examples.size() == 40);
    REQUIRE(a.graphs.size() == 80);  // one truth + one prediction per example

    // Bitwise reproducibility via the serialized form.
    std::string sa, sb;
    for (const gc::GraphRecord& g : a.graphs) sa += gc::graph_to_json(g.id, g.graph).dump();
    for (const gc::GraphRecord& g : b.graphs) sb += gc::graph_to_json(g.id, g.graph).dump();
    REQUIRE(sa == sb);
    for (std::size_t i = 0; i < a.examples.size(); ++i) {
        REQUIRE(a.examples[i].candidate_ids == b.examples[i].candidate_ids);
        REQUIRE(a.examples[i].id == b.examples[i].id);
    }

    std::set<std::string> ids;
    for (const gc::GraphRecord& g : a.graphs) ids.insert(g.id);
    REQUIRE(ids.size() == a.graphs.size());

    int split_counts[3] = {0, 0, 0};
    for (const gc::DatasetExample& ex : a.examples) {
        split_counts[static_cast<int>(ex.split)]++;
        REQUIRE(static_cast<int>(ex.candidate_ids.size()) <= cfg.library_cap);
        REQUIRE(ex.candidate_ids.front() == ex.truth_id);
        REQUIRE(ids.count(ex.truth_id) == 1);
        REQUIRE(ids.count(ex.prediction_id) == 1);
        REQUIRE(ex.prediction_id[0] == 'p');
        for (const std::string& cid : ex.candidate_ids) REQUIRE(cid[0] == 't');
    }
    REQUIRE(split_counts[0] == 5);
    REQUIRE(split_counts[1] == 20);
    REQUIRE(split_counts[2] == 15);

    // Truths precede predictions in the serialized corpus.
    bool seen_prediction = false;
    for (const gc::GraphRecord& g : a.graphs) {
        if (g.id[0] == 'p') seen_prediction = true;
        if (seen_prediction) REQUIRE(g.id[0] == 'p');
    }
}

TEST_CASE("library members share the truth's color histogram") {
    gc::SynthConfig cfg;
    cfg.n_cal = 30;
    cfg.n_test = 30;
    cfg.seed = 9;
    const gc::Dataset ds = gc::generate_dataset(cfg);
    std::map<std::string, const gc::Graph*> by_id;
    for (const gc::GraphRecord& g : ds.graphs) by_id[g.id] = &g.graph;
    for (const gc::DatasetExample& ex : ds.examples) {
        const std::vector<int> hist = gc::color_histogram(*by_id.at(ex.truth_id));
        for (const std::string& cid : ex.candidate_ids)
            REQUIRE(gc::color_histogram(*by_id.at(cid)) == hist);
    }
}

TEST_CASE("heteroscedastic mode ties truth scores to library size") {
    gc::SynthConfig cfg;
    cfg.n_cal = 150;
    cfg.n_test = 150;
    cfg.heteroscedastic = true;
    cfg.hetero_scale = 6.0;
    cfg.predictor_accuracy = 0.5;
    cfg.seed = 77;
    const gc::Dataset ds = gc::generate_dataset(cfg);
    std::map<std::string, const gc::Graph*> by_id;
    for (const gc::GraphRecord& g : ds.graphs) by_id[g.id] = &g.graph;
    gc::DistanceConfig dist;
    dist.beta = 0.5;
    dist.oracle_mode = true;
    dist.oracle_limit = 6;
    double small_sum = 0.0, large_sum = 0.0;
    int small_n = 0, large_n = 0;
    for (const gc::DatasetExample& ex : ds.examples) {
        const double s = gc::score(*by_id.at(ex.prediction_id), *by_id.at(ex.truth_id), dist);
        if (static_cast<int>(ex.candidate_ids.size()) <= 2) {
            small_sum += s;
            ++small_n;
        } else if (static_cast<int>(ex.candidate_ids.size()) >= 6) {
            large_sum += s;
            ++large_n;
        }
    }
    REQUIRE(small_n > 0);
    REQUIRE(large_n > 0);
    REQUIRE(large_sum / large_n > small_sum / small_n);
}

TEST_CASE("config validation names the failing constraint") {
    gc::SynthConfig bad;
    bad.n_nodes_min = 5;
    bad.n_nodes_max = 3;
    REQUIRE_THROWS_MATCHES(gc::validate_synth_config(bad), gc::error,
                           Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
                               return e.code() == gc::errc::generation_failure;
                           }));
    gc::SynthConfig p;
    p.edge_prob = 1.5;
    REQUIRE_THROWS_AS(gc::validate_synth_config(p), gc::error);
    gc::SynthConfig zero;
    zero.n_train = zero.n_cal = zero.n_test = 0;
    REQUIRE_THROWS_AS(gc::validate_synth_config(zero), gc::error);
}
