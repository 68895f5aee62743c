#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <limits>

#include <graphconf/metrics.hpp>

namespace gc = graphconf;

namespace {

gc::EvalRow row(int set_size, int candidate_size, bool covered) {
    gc::EvalRow r;
    r.example_id = "x";
    r.threshold = 1.0;
    r.set_size = set_size;
    r.candidate_size = candidate_size;
    r.contains_truth = covered;
    return r;
}

}  // namespace

TEST_CASE("summary statistics on a worked example") {
    // Covered sets of size 2 and 4 out of 10 candidates, one empty miss:
    // coverage 2/3, sizes over covered rows only, reductions 80% and 60%.
    const std::vector<gc::EvalRow> rows{row(2, 10, true), row(4, 10, true), row(0, 10, false)};
    const gc::EvalSummary s = gc::evaluate(rows);
    REQUIRE(s.n_examples == 3);
    REQUIRE(s.coverage == Catch::Approx(2.0 / 3.0));
    REQUIRE(s.mean_size.value() == Catch::Approx(3.0));
    REQUIRE(s.median_size.value() == 2.0);  // lower median of {2, 4}
    REQUIRE(s.mean_reduction_pct.value() == Catch::Approx(70.0));
    REQUIRE(s.median_reduction_pct.value() == 60.0);
    REQUIRE(s.empty_rate_pct == Catch::Approx(100.0 / 3.0));
}

TEST_CASE("all-miss evaluation leaves size fields absent") {
    const std::vector<gc::EvalRow> rows{row(0, 5, false), row(3, 5, false)};
    const gc::EvalSummary s = gc::evaluate(rows);
    REQUIRE(s.coverage == 0.0);
    REQUIRE_FALSE(s.mean_size.has_value());
    REQUIRE_FALSE(s.median_reduction_pct.has_value());
    // CSV row still renders, with empty cells for the absent values.
    const std::string csv = gc::summary_csv_row(s);
    REQUIRE(csv.find(",,") != std::string::npos);
}

TEST_CASE("infinite threshold keeps everything and reduces nothing") {
    gc::EvalRow r = row(7, 7, true);
    r.threshold = std::numeric_limits<double>::infinity();
    const gc::EvalSummary s = gc::evaluate({r});
    REQUIRE(s.coverage == 1.0);
    REQUIRE(s.mean_reduction_pct.value() == 0.0);
}

TEST_CASE("evaluation rejects inconsistent rows") {
    REQUIRE_THROWS_AS(gc::evaluate({}), gc::error);
    REQUIRE_THROWS_AS(gc::evaluate({row(3, 2, true)}), gc::error);   // set > candidates
    REQUIRE_THROWS_AS(gc::evaluate({row(0, 0, false)}), gc::error);  // empty library
}

TEST_CASE("smallest sufficient retrieval depth on a worked example") {
    // Ranks {1,1,2,3,9} with m = 10, alpha = 0.2: depth 3 first reaches 4/5.
    const std::vector<int> ranks{1, 1, 2, 3, 9};
    REQUIRE(gc::top_k_star(ranks, 0.2, 10) == 3);
    // All at depth 1.
    REQUIRE(gc::top_k_star({1, 1, 1}, 0.1, 4) == 1);
    // Unreachable within the library: the sentinel is m + 1.
    REQUIRE(gc::top_k_star({11, 11}, 0.1, 10) == 11);
}

TEST_CASE("set-to-depth misalignment floor") {
    // Mean set 38 against depth 5 of 256: (38 - 5) / (256 - 5).
    REQUIRE(gc::misalignment_lower_bound(38.0, 5, 256) ==
            Catch::Approx(33.0 / 251.0).epsilon(1e-12));
    // Smaller sets than the depth clamp at zero.
    REQUIRE(gc::misalignment_lower_bound(3.0, 5, 256) == 0.0);
    // Depth swallowing the library is degenerate.
    REQUIRE_THROWS_MATCHES(gc::misalignment_lower_bound(3.0, 10, 10), gc::error,
                           Catch::Matchers::Predicate<gc::error>([](const gc::error& e) {
                               return e.code() == gc::errc::degenerate_denominator;
                           }));
}

TEST_CASE("coverage bins partition by library size and drop empty bins") {
    std::vector<gc::EvalRow> rows;
    for (int i = 0; i < 6; ++i) rows.push_back(row(1, 2, i % 2 == 0));   // small libraries
    for (int i = 0; i < 4; ++i) rows.push_back(row(5, 20, true));        // large libraries
    const std::vector<gc::CoverageBin> bins = gc::binned_coverage(rows, 6);
    int total = 0;
    for (const gc::CoverageBin& b : bins) {
        total += b.count;
        REQUIRE(b.lo <= b.hi);
        REQUIRE(b.coverage >= 0.0);
        REQUIRE(b.coverage <= 1.0);
    }
    REQUIRE(total == 10);
    REQUIRE(bins.front().coverage == Catch::Approx(0.5));
    REQUIRE(bins.back().coverage == 1.0);
    // A single library size still produces one sane bin.
    const std::vector<gc::CoverageBin> single =
        gc::binned_coverage({row(1, 4, true), row(2, 4, false)}, 8);
    REQUIRE(single.size() == 1);
    REQUIRE(single.front().count == 2);
}

TEST_CASE("summary table renders absent fields as dashes") {
    const gc::EvalSummary s = gc::evaluate({row(0, 5, false)});
    const std::string table = gc::summary_table(s);
    REQUIRE(table.find('-') != std::string::npos);
    REQUIRE(table.find("coverage") != std::string::npos);
}
