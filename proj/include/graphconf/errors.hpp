#pragma once

#include <stdexcept>
#include <string>

namespace graphconf {

// Every failure mode surfaced by the library. Codes are stable: the CLI maps
// them onto exit codes and tests assert on them rather than on message text.
enum class errc {
    dimension_mismatch,
    asymmetric_structure,
    non_uniform_weights,
    length_mismatch,
    not_one_hot,
    non_binary_structure,
    marginal_mismatch,
    non_finite,
    too_large,
    size_mismatch,
    missing_edge_features,
    empty_scores,
    alpha_out_of_range,
    tau_out_of_range,
    dim_mismatch,
    range_error,
    degenerate_denominator,
    degenerate_data,
    empty_results,
    truth_missing,
    generation_failure,
    config_parse,
    io_error,
    internal,
};

inline const char* errc_name(errc c) {
    switch (c) {
        case errc::dimension_mismatch:      return "DimensionMismatch";
        case errc::asymmetric_structure:    return "AsymmetricStructure";
        case errc::non_uniform_weights:     return "NonUniformWeights";
        case errc::length_mismatch:         return "LengthMismatch";
        case errc::not_one_hot:             return "NotOneHot";
        case errc::non_binary_structure:    return "NonBinaryStructure";
        case errc::marginal_mismatch:       return "MarginalMismatch";
        case errc::non_finite:              return "NonFinite";
        case errc::too_large:               return "TooLarge";
        case errc::size_mismatch:           return "SizeMismatch";
        case errc::missing_edge_features:   return "MissingEdgeFeatures";
        case errc::empty_scores:            return "EmptyScores";
        case errc::alpha_out_of_range:      return "AlphaOutOfRange";
        case errc::tau_out_of_range:        return "TauOutOfRange";
        case errc::dim_mismatch:            return "DimMismatch";
        case errc::range_error:             return "RangeError";
        case errc::degenerate_denominator:  return "DegenerateDenominator";
        case errc::degenerate_data:         return "DegenerateData";
        case errc::empty_results:           return "EmptyResults";
        case errc::truth_missing:           return "TruthMissing";
        case errc::generation_failure:      return "GenerationFailure";
        case errc::config_parse:            return "ConfigParse";
        case errc::io_error:                return "IoError";
        case errc::internal:                return "Internal";
    }
    return "Unknown";
}

class error : public std::runtime_error {
  public:
    error(errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    errc code() const noexcept { return code_; }

  private:
    errc code_;
};

[[noreturn]] inline void fail(errc code, const std::string& what) { throw error(code, what); }

inline void require(bool ok, errc code, const std::string& what) {
    if (!ok) fail(code, what);
}

}  // namespace graphconf
