#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include <graphconf/graph.hpp>
#include <graphconf/rng.hpp>

namespace gc = graphconf;

namespace {

gc::Graph path3() {
    gc::Matrix a(3, 3);
    a << 0, 1, 0,
         1, 0, 1,
         0, 1, 0;
    gc::Matrix f(3, 2);
    f << 1, 0,
         0, 1,
         1, 0;
    return gc::make_graph(a, f);
}

gc::Graph random_graph(gc::rng& gen, int n, int colors = 3) {
    gc::Matrix a = gc::Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = i + 1; j < n; ++j)
            if (gen.next_bernoulli(0.5)) a(i, j) = a(j, i) = 1.0;
    gc::Matrix f = gc::Matrix::Zero(n, colors);
    for (int i = 0; i < n; ++i) f(i, static_cast<int>(gen.next_below(colors))) = 1.0;
    return gc::make_graph(a, f);
}

}  // namespace

TEST_CASE("combinatorial Laplacian of the 3-path") {
    const gc::Matrix lap = gc::structure_cost(path3(), gc::StructureKind::laplacian);
    gc::Matrix expected(3, 3);
    expected << 1, -1, 0,
                -1, 2, -1,
                0, -1, 1;
    REQUIRE((lap - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("Laplacian rows sum to zero on random graphs") {
    gc::rng gen(11, "laplacian-rows");
    for (int t = 0; t < 25; ++t) {
        const gc::Graph g = random_graph(gen, 2 + static_cast<int>(gen.next_below(7)));
        const gc::Matrix lap = gc::structure_cost(g, gc::StructureKind::laplacian);
        REQUIRE(lap.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
        const gc::Matrix sym = gc::structure_cost(g, gc::StructureKind::sym_norm_laplacian);
        REQUIRE(((sym - sym.transpose()).cwiseAbs().maxCoeff()) <= 1e-12);
    }
}

TEST_CASE("normalized Laplacian of the 3-path") {
    const gc::Matrix sym = gc::structure_cost(path3(), gc::StructureKind::sym_norm_laplacian);
    const double s = 1.0 / std::sqrt(2.0);
    gc::Matrix expected(3, 3);
    expected << 1, -s, 0,
                -s, 1, -s,
                0, -s, 1;
    REQUIRE((sym - expected).cwiseAbs().maxCoeff() <= 1e-15);
}

TEST_CASE("shortest-path hops on the 3-path") {
    const gc::Matrix sp = gc::structure_cost(path3(), gc::StructureKind::shortest_path);
    gc::Matrix expected(3, 3);
    expected << 0, 1, 2,
                1, 0, 1,
                2, 1, 0;
    REQUIRE((sp - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("shortest-path marks unreachable nodes with n") {
    gc::Matrix a = gc::Matrix::Zero(3, 3);
    a(0, 1) = a(1, 0) = 1.0;  // node 2 isolated
    const gc::Graph g = gc::make_graph(a, gc::Matrix::Ones(3, 1));
    const gc::Matrix sp = gc::structure_cost(g, gc::StructureKind::shortest_path);
    REQUIRE(sp(0, 2) == 3.0);
    REQUIRE(sp(2, 1) == 3.0);
    REQUIRE(sp(0, 1) == 1.0);
}

TEST_CASE("shortest-path rejects weighted adjacency") {
    gc::Matrix a = gc::Matrix::Zero(2, 2);
    a(0, 1) = a(1, 0) = 0.5;
    const gc::Graph g = gc::make_graph(a, gc::Matrix::Ones(2, 1));
    REQUIRE_THROWS_MATCHES(gc::structure_cost(g, gc::StructureKind::shortest_path), gc::error,
                           Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
                               return e.code() == gc::errc::non_binary_structure;
                           }));
}

TEST_CASE("power transform squares the structure matrix") {
    const gc::Graph g = path3();
    gc::CostTransform t;
    t.kind = gc::TransformKind::power;
    t.k = 2;
    const gc::TransformedCosts out =
        gc::apply_transform(gc::structure_cost(g, gc::StructureKind::adjacency), g.features, t);
    gc::Matrix expected(3, 3);
    expected << 1, 0, 1,
                0, 2, 0,
                1, 0, 1;
    REQUIRE((out.cost - expected).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("truncated heat kernel matches the closed form on one edge") {
    // On K2 the Laplacian satisfies L^k = 2^{k-1} L, so the truncated series
    // collapses to I + (sum_{k=1}^m (-2*lambda)^k / k!) / 2 * L.
    gc::Matrix a(2, 2);
    a << 0, 1,
         1, 0;
    const gc::Graph g = gc::make_graph(a, gc::Matrix::Ones(2, 1));
    const gc::Matrix lap = gc::structure_cost(g, gc::StructureKind::laplacian);
    for (const double lambda : {0.25, 0.5, 1.0}) {
        for (const int order : {1, 3, 5, 9}) {
            gc::CostTransform t;
            t.kind = gc::TransformKind::truncated_exp;
            t.lambda = lambda;
            t.order = order;
            const gc::Matrix got = gc::apply_transform(lap, g.features, t).cost;
            double series = 0.0, term = 1.0;
            for (int k = 1; k <= order; ++k) {
                term *= -2.0 * lambda / k;
                series += term;
            }
            const gc::Matrix expected = gc::Matrix::Identity(2, 2) + 0.5 * series * lap;
            REQUIRE((got - expected).cwiseAbs().maxCoeff() <= 1e-13);
        }
    }
}

TEST_CASE("truncated heat kernel converges to the true exponential") {
    gc::rng gen(5, "heat");
    const gc::Graph g = random_graph(gen, 5);
    const gc::Matrix lap = gc::structure_cost(g, gc::StructureKind::laplacian);
    gc::CostTransform t;
    t.kind = gc::TransformKind::truncated_exp;
    t.lambda = 0.3;
    t.order = 40;
    const gc::Matrix got = gc::apply_transform(lap, g.features, t).cost;
    // Independent route: exponentiate the spectrum of the symmetric Laplacian.
    Eigen::SelfAdjointEigenSolver<gc::Matrix> eig(-0.3 * lap);
    const gc::Matrix expected = eig.eigenvectors() *
                                eig.eigenvalues().array().exp().matrix().asDiagonal() *
                                eig.eigenvectors().transpose();
    REQUIRE((got - expected).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("dropping the identity term removes exactly I") {
    const gc::Graph g = path3();
    const gc::Matrix lap = gc::structure_cost(g, gc::StructureKind::laplacian);
    gc::CostTransform with, without;
    with.kind = without.kind = gc::TransformKind::truncated_exp;
    with.lambda = without.lambda = 0.5;
    with.order = without.order = 6;
    without.include_identity = false;
    const gc::Matrix a = gc::apply_transform(lap, g.features, with).cost;
    const gc::Matrix b = gc::apply_transform(lap, g.features, without).cost;
    REQUIRE((a - b - gc::Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("feature diffusion multiplies features by the transformed matrix") {
    const gc::Graph g = path3();
    gc::Matrix f(3, 1);
    f << 1, 0, 0;
    gc::CostTransform t;  // kind none: diffusion operator is the structure itself
    t.feature_diffusion = true;
    const gc::TransformedCosts out =
        gc::apply_transform(gc::structure_cost(g, gc::StructureKind::adjacency), f, t);
    gc::Matrix expected(3, 1);
    expected << 0, 1, 0;
    REQUIRE((out.features - expected).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("permutation round-trips bitwise") {
    gc::rng gen(7, "perm");
    for (int t = 0; t < 20; ++t) {
        const int n = 2 + static_cast<int>(gen.next_below(6));
        gc::Graph g = random_graph(gen, n);
        g.edge_features.push_back(g.adjacency * 0.5);
        const std::vector<std::size_t> p = gen.next_permutation_of(static_cast<std::size_t>(n));
        std::vector<int> fwd(p.begin(), p.end());
        std::vector<int> inv(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) inv[static_cast<std::size_t>(fwd[static_cast<std::size_t>(i)])] = i;
        const gc::Graph round = gc::apply_permutation(
            gc::apply_permutation(g, gc::Permutation::validated(fwd)),
            gc::Permutation::validated(inv));
        REQUIRE(round.adjacency == g.adjacency);
        REQUIRE(round.features == g.features);
        REQUIRE(round.edge_features[0] == g.edge_features[0]);
    }
}

TEST_CASE("structure costs commute with relabeling") {
    gc::rng gen(13, "commute");
    for (const gc::StructureKind kind :
         {gc::StructureKind::adjacency, gc::StructureKind::laplacian,
          gc::StructureKind::sym_norm_laplacian, gc::StructureKind::shortest_path}) {
        for (int t = 0; t < 10; ++t) {
            const int n = 3 + static_cast<int>(gen.next_below(4));
            const gc::Graph g = random_graph(gen, n);
            const std::vector<std::size_t> p = gen.next_permutation_of(static_cast<std::size_t>(n));
            std::vector<int> map(p.begin(), p.end());
            const gc::Graph h = gc::apply_permutation(g, gc::Permutation::validated(map));
            const gc::Matrix cg = gc::structure_cost(g, kind);
            const gc::Matrix ch = gc::structure_cost(h, kind);
            gc::Matrix expected = gc::Matrix::Zero(n, n);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    expected(map[static_cast<std::size_t>(i)], map[static_cast<std::size_t>(j)]) = cg(i, j);
            REQUIRE((ch - expected).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }
}

TEST_CASE("color histogram is invariant under relabeling") {
    gc::rng gen(17, "hist");
    const gc::Graph g = random_graph(gen, 6, 4);
    const std::vector<std::size_t> p = gen.next_permutation_of(6);
    std::vector<int> map(p.begin(), p.end());
    const gc::Graph h = gc::apply_permutation(g, gc::Permutation::validated(map));
    REQUIRE(gc::color_histogram(g) == gc::color_histogram(h));
}

TEST_CASE("color histogram rejects non one-hot rows") {
    gc::Matrix f(2, 2);
    f << 0.5, 0.5,
         1.0, 0.0;
    const gc::Graph g = gc::make_graph(gc::Matrix::Zero(2, 2), f);
    REQUIRE_THROWS_MATCHES(gc::color_histogram(g), gc::error,
                           Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
                               return e.code() == gc::errc::not_one_hot;
                           }));
}

TEST_CASE("validation rejects malformed graphs") {
    gc::Matrix asym = gc::Matrix::Zero(2, 2);
    asym(0, 1) = 1.0;  // missing the mirrored entry
    REQUIRE_THROWS_AS(gc::validate_graph(gc::make_graph(asym, gc::Matrix::Ones(2, 1))), gc::error);

    gc::Graph g = path3();
    g.weights = gc::Vector::Constant(3, 0.5);  // not uniform 1/n
    REQUIRE_THROWS_MATCHES(gc::validate_graph(g), gc::error,
                           Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
                               return e.code() == gc::errc::non_uniform_weights;
                           }));

    const int n = gc::kMaxNodes + 1;
    REQUIRE_THROWS_MATCHES(
        gc::validate_graph(gc::make_graph(gc::Matrix::Zero(n, n), gc::Matrix::Ones(n, 1))),
        gc::error, Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
            return e.code() == gc::errc::too_large;
        }));

    gc::Graph bad_feat = path3();
    bad_feat.features(0, 0) = std::nan("");
    REQUIRE_THROWS_MATCHES(gc::validate_graph(bad_feat), gc::error,
                           Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
                               return e.code() == gc::errc::non_finite;
                           }));
}
