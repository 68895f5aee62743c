#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include "graphconf/errors.hpp"

namespace graphconf {

// One evaluated prediction set, as read back from a prediction-set file.
struct EvalRow {
    std::string example_id;
    double threshold = 0.0;
    int set_size = 0;
    int candidate_size = 0;
    bool contains_truth = false;
};

// Coverage and the empty rate are over all rows; set sizes and reductions are
// over covered rows only (a set that misses the truth has no meaningful
// size), hence optional. Median of an even count is the lower middle.
struct EvalSummary {
    int n_examples = 0;
    double coverage = 0.0;
    std::optional<double> mean_size;
    std::optional<double> median_size;
    std::optional<double> mean_reduction_pct;
    std::optional<double> median_reduction_pct;
    double empty_rate_pct = 0.0;
};

namespace detail {

inline double lower_median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    return v[(v.size() - 1) / 2];
}

}  // namespace detail

inline double empirical_coverage(const std::vector<EvalRow>& rows) {
    require(!rows.empty(), errc::empty_results, "evaluation needs at least one row");
    long covered = 0;
    for (const EvalRow& r : rows) covered += r.contains_truth ? 1 : 0;
    return static_cast<double>(covered) / static_cast<double>(rows.size());
}

inline EvalSummary evaluate(const std::vector<EvalRow>& rows) {
    require(!rows.empty(), errc::empty_results, "evaluation needs at least one row");
    EvalSummary s;
    s.n_examples = static_cast<int>(rows.size());
    long covered = 0, empty = 0;
    std::vector<double> sizes, reductions;
    for (const EvalRow& r : rows) {
        require(r.candidate_size >= 1, errc::range_error, "candidate_size must be >= 1");
        require(r.set_size >= 0 && r.set_size <= r.candidate_size, errc::range_error,
                "set_size must lie in [0, candidate_size]");
        if (r.set_size == 0) ++empty;
        if (!r.contains_truth) continue;
        ++covered;
        sizes.push_back(static_cast<double>(r.set_size));
        reductions.push_back(100.0 * static_cast<double>(r.candidate_size - r.set_size) /
                             static_cast<double>(r.candidate_size));
    }
    s.coverage = static_cast<double>(covered) / static_cast<double>(rows.size());
    s.empty_rate_pct = 100.0 * static_cast<double>(empty) / static_cast<double>(rows.size());
    if (!sizes.empty()) {
        double mean_size = 0.0, mean_red = 0.0;
        for (double v : sizes) mean_size += v;
        for (double v : reductions) mean_red += v;
        s.mean_size = mean_size / static_cast<double>(sizes.size());
        s.mean_reduction_pct = mean_red / static_cast<double>(reductions.size());
        s.median_size = detail::lower_median(sizes);
        s.median_reduction_pct = detail::lower_median(reductions);
    }
    return s;
}

// Smallest k whose top-k hit rate reaches 1-alpha. Ranks are 1-based; a miss
// is encoded as rank m+1. Returns the sentinel m+1 when no k in 1..m works.
inline int top_k_star(const std::vector<int>& ranks, double alpha, int m) {
    require(!ranks.empty(), errc::empty_results, "top-k analysis needs at least one rank");
    require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, errc::alpha_out_of_range,
            "alpha must lie in (0, 1)");
    require(m >= 1, errc::range_error, "m must be >= 1");
    for (int r : ranks)
        require(r >= 1 && r <= m + 1, errc::range_error, "ranks must lie in [1, m+1]");
    const double n = static_cast<double>(ranks.size());
    for (int k = 1; k <= m; ++k) {
        long hits = 0;
        for (int r : ranks) hits += r <= k ? 1 : 0;
        if (static_cast<double>(hits) / n >= (1.0 - alpha) - 1e-12) return k;
    }
    return m + 1;
}

// How far conformal set membership can disagree with a fixed top-k* ranking:
// a lower bound on the misalignment mass, max(0, (E[K] - k*) / (m - k*)).
inline double misalignment_lower_bound(double mean_set_size, int k_star, int m) {
    require(std::isfinite(mean_set_size) && mean_set_size >= 0.0, errc::range_error,
            "mean set size must be finite and nonnegative");
    require(k_star >= 0, errc::range_error, "k_star must be nonnegative");
    require(m > k_star, errc::degenerate_denominator,
            "misalignment bound needs m > k_star");
    return std::max(0.0, (mean_set_size - static_cast<double>(k_star)) /
                             static_cast<double>(m - k_star));
}

// Coverage stratified by candidate-library size (equal-width bins over the
// observed range; empty bins are dropped).
struct CoverageBin {
    double lo = 0.0, hi = 0.0;
    double coverage = 0.0;
    int count = 0;
};

inline std::vector<CoverageBin> binned_coverage(const std::vector<EvalRow>& rows, int n_bins = 8) {
    require(!rows.empty(), errc::empty_results, "evaluation needs at least one row");
    require(n_bins >= 1, errc::range_error, "bin count must be >= 1");
    double lo = rows.front().candidate_size, hi = lo;
    for (const EvalRow& r : rows) {
        lo = std::min(lo, static_cast<double>(r.candidate_size));
        hi = std::max(hi, static_cast<double>(r.candidate_size));
    }
    if (hi == lo) hi = lo + 1.0;
    const double width = (hi - lo) / static_cast<double>(n_bins);
    std::vector<long> covered(static_cast<std::size_t>(n_bins), 0), total(static_cast<std::size_t>(n_bins), 0);
    for (const EvalRow& r : rows) {
        int bin = static_cast<int>((static_cast<double>(r.candidate_size) - lo) / width);
        bin = std::clamp(bin, 0, n_bins - 1);
        ++total[static_cast<std::size_t>(bin)];
        if (r.contains_truth) ++covered[static_cast<std::size_t>(bin)];
    }
    std::vector<CoverageBin> bins;
    for (int i = 0; i < n_bins; ++i) {
        if (total[static_cast<std::size_t>(i)] == 0) continue;
        CoverageBin b;
        b.lo = lo + width * static_cast<double>(i);
        b.hi = lo + width * static_cast<double>(i + 1);
        b.count = static_cast<int>(total[static_cast<std::size_t>(i)]);
        b.coverage = static_cast<double>(covered[static_cast<std::size_t>(i)]) /
                     static_cast<double>(total[static_cast<std::size_t>(i)]);
        bins.push_back(b);
    }
    return bins;
}

// -------------------------------------------------------------------------
// Rendering.

namespace detail {

inline std::string fmt_fixed(double v, int places) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", places, v);
    return buf;
}

inline std::string fmt_opt(const std::optional<double>& v, int places) {
    return v.has_value() ? fmt_fixed(*v, places) : std::string("-");
}

}  // namespace detail

inline std::string summary_csv_header() {
    return "coverage,mean_size,median_size,mean_reduction_pct,median_reduction_pct,empty_rate_pct,"
           "n_examples";
}

inline std::string summary_csv_row(const EvalSummary& s) {
    const auto opt = [](const std::optional<double>& v) {
        return v.has_value() ? detail::fmt_fixed(*v, 6) : std::string();
    };
    return detail::fmt_fixed(s.coverage, 6) + "," + opt(s.mean_size) + "," + opt(s.median_size) +
           "," + opt(s.mean_reduction_pct) + "," + opt(s.median_reduction_pct) + "," +
           detail::fmt_fixed(s.empty_rate_pct, 6) + "," + std::to_string(s.n_examples);
}

inline std::string summary_table(const EvalSummary& s) {
    struct Line {
        const char* label;
        std::string value;
    };
    const Line lines[] = {
        {"Empirical coverage", detail::fmt_fixed(s.coverage, 3)},
        {"Mean set size", detail::fmt_opt(s.mean_size, 2)},
        {"Median set size", detail::fmt_opt(s.median_size, 2)},
        {"Mean reduction %", detail::fmt_opt(s.mean_reduction_pct, 1)},
        {"Median reduction %", detail::fmt_opt(s.median_reduction_pct, 1)},
        {"Empty rate %", detail::fmt_fixed(s.empty_rate_pct, 1)},
        {"Examples", std::to_string(s.n_examples)},
    };
    std::size_t width = 0;
    for (const Line& l : lines) width = std::max(width, std::string(l.label).size());
    std::string out;
    for (const Line& l : lines) {
        std::string label = l.label;
        label.resize(width, ' ');
        out += label + "  " + l.value + "\n";
    }
    return out;
}

}  // namespace graphconf
