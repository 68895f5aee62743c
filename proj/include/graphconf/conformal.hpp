#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "graphconf/errors.hpp"
#include "graphconf/fgw.hpp"

namespace graphconf {

// One calibration example: its nonconformity score, the size of its candidate
// library, and the regression feature vector used by conditional methods.
struct CalibrationRecord {
    std::string id;
    double score = 0.0;
    int candidate_size = 0;
    Vector feature;
};

// The split-conformal quantile: the k-th smallest of the scores with
// k = ceil((n+1)(1-alpha)), or +inf when k exceeds n (too few scores to
// certify the level). Ties are kept; inputs may be any finite reals.
inline double conformal_quantile(const std::vector<double>& scores, double alpha) {
    require(!scores.empty(), errc::empty_scores, "conformal quantile needs at least one score");
    require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, errc::alpha_out_of_range,
            "alpha must lie in (0, 1)");
    for (double s : scores)
        require(std::isfinite(s), errc::non_finite, "scores must be finite");
    const auto n = static_cast<long>(scores.size());
    // Guard the ceiling against roundoff: (n+1)(1-alpha) representing an
    // integer must not tip over to the next rank.
    const double target = static_cast<double>(n + 1) * (1.0 - alpha);
    long k = static_cast<long>(std::ceil(target - 1e-9));
    if (k < 1) k = 1;
    if (k > n) return std::numeric_limits<double>::infinity();
    std::vector<double> sorted = scores;
    std::nth_element(sorted.begin(), sorted.begin() + (k - 1), sorted.end());
    return sorted[static_cast<std::size_t>(k - 1)];
}

// Global split-conformal threshold from calibration records.
inline double calibrate_cp(const std::vector<CalibrationRecord>& records, double alpha) {
    require(!records.empty(), errc::empty_scores, "calibration needs at least one record");
    std::vector<double> scores;
    scores.reserve(records.size());
    for (const CalibrationRecord& r : records) {
        require(std::isfinite(r.score) && r.score >= 0.0, errc::range_error,
                "calibration scores must be finite and nonnegative");
        scores.push_back(r.score);
    }
    return conformal_quantile(scores, alpha);
}

struct PredictionSet {
    std::string example_id;
    double threshold = 0.0;
    std::vector<std::string> member_ids;  // in candidate order
    int candidate_size = 0;
    std::optional<bool> contains_truth;   // set iff the truth id was supplied

    int set_size() const { return static_cast<int>(member_ids.size()); }
};

// Scores the prediction against every library candidate and keeps those at or
// below the threshold (ties included). The threshold is the caller's per-input
// value: the global quantile for plain CP, psi(omega(x)) + q-hat for SCQR. A
// negative threshold yields an empty set; +inf keeps the whole library.
inline PredictionSet predict_set(const Graph& prediction,
                                 const std::vector<std::pair<std::string, Graph>>& library,
                                 double threshold, const DistanceConfig& cfg,
                                 const std::optional<std::string>& truth_id = std::nullopt) {
    require(!library.empty(), errc::empty_results, "candidate library must be nonempty");
    require(!std::isnan(threshold), errc::non_finite, "threshold must not be NaN");
    PredictionSet out;
    out.threshold = threshold;
    out.candidate_size = static_cast<int>(library.size());
    for (const auto& [id, candidate] : library) {
        if (score(prediction, candidate, cfg) <= threshold) out.member_ids.push_back(id);
    }
    if (truth_id.has_value()) {
        out.contains_truth =
            std::find(out.member_ids.begin(), out.member_ids.end(), *truth_id) != out.member_ids.end();
    }
    return out;
}

// When the library is built by retrieval it may miss the truth entirely; the
// usual 1-alpha guarantee then degrades by exactly that miss probability.
inline double coverage_bound_under_incomplete_library(double alpha, double miss_probability) {
    require(std::isfinite(alpha) && alpha > 0.0 && alpha < 1.0, errc::alpha_out_of_range,
            "alpha must lie in (0, 1)");
    require(std::isfinite(miss_probability) && miss_probability >= 0.0 && miss_probability <= 1.0,
            errc::range_error, "miss probability must lie in [0, 1]");
    return std::max(0.0, (1.0 - alpha) - miss_probability);
}

}  // namespace graphconf
