#pragma once

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "graphconf/conformal.hpp"
#include "graphconf/errors.hpp"
#include "graphconf/fgw.hpp"
#include "graphconf/metrics.hpp"
#include "graphconf/scqr.hpp"
#include "graphconf/synth.hpp"

namespace graphconf {

using json = nlohmann::json;

// -------------------------------------------------------------------------
// Formatting primitives. All data files use round-trip float formatting so
// equal runs produce byte-identical output.

inline std::string fmt_double(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse_double(const std::string& s, const char* what) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        require(used == s.size(), errc::config_parse, std::string("trailing junk in ") + what);
        return v;
    } catch (const std::exception&) {
        fail(errc::config_parse, std::string("cannot parse ") + what + " from '" + s + "'");
    }
}

// JSON cannot hold infinities; they travel as the strings "inf"/"-inf".
inline json double_to_json(double v) {
    if (std::isinf(v)) return v > 0 ? json("inf") : json("-inf");
    require(!std::isnan(v), errc::non_finite, "cannot serialize NaN");
    return json(v);
}

inline double double_from_json(const json& j, const char* what) {
    if (j.is_string()) return parse_double(j.get<std::string>(), what);
    require(j.is_number(), errc::config_parse, std::string(what) + " must be a number");
    return j.get<double>();
}

namespace detail {

inline std::ifstream open_in(const std::filesystem::path& path) {
    std::ifstream in(path);
    require(in.good(), errc::io_error, "cannot open " + path.string() + " for reading");
    return in;
}

inline std::ofstream open_out(const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::trunc);
    require(out.good(), errc::io_error, "cannot open " + path.string() + " for writing");
    return out;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline void check_plain_token(const std::string& s) {
    for (char c : s)
        require(c != ',' && c != ';' && c != '\n' && c != '\r', errc::range_error,
                "identifiers must not contain separators");
}

template <typename T>
T get_field(const json& j, const char* key) {
    require(j.contains(key), errc::config_parse, std::string("missing field '") + key + "'");
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(errc::config_parse, std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
T get_field_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        fail(errc::config_parse, std::string("field '") + key + "' has the wrong type");
    }
}

}  // namespace detail

// -------------------------------------------------------------------------
// Graph corpus (JSONL, one graph per line). Node weights are always the
// uniform vector and are never serialized.

inline json graph_to_json(const std::string& id, const Graph& g) {
    json j;
    j["id"] = id;
    j["n"] = g.n();
    json adj = json::array();
    for (int i = 0; i < g.n(); ++i) {
        json row = json::array();
        for (int k = 0; k < g.n(); ++k) row.push_back(g.adjacency(i, k));
        adj.push_back(std::move(row));
    }
    j["adjacency"] = std::move(adj);
    json feats = json::array();
    for (int i = 0; i < g.n(); ++i) {
        json row = json::array();
        for (int d = 0; d < g.feature_dim(); ++d) row.push_back(g.features(i, d));
        feats.push_back(std::move(row));
    }
    j["features"] = std::move(feats);
    if (g.has_edge_features()) {
        json ef = json::array();
        for (int i = 0; i < g.n(); ++i) {
            json row = json::array();
            for (int k = 0; k < g.n(); ++k) {
                json cell = json::array();
                for (const Matrix& slice : g.edge_features) cell.push_back(slice(i, k));
                row.push_back(std::move(cell));
            }
            ef.push_back(std::move(row));
        }
        j["edge_features"] = std::move(ef);
    }
    return j;
}

inline GraphRecord graph_from_json(const json& j) {
    GraphRecord rec;
    rec.id = detail::get_field<std::string>(j, "id");
    const int n = detail::get_field<int>(j, "n");
    require(n >= 1 && n <= kMaxNodes, errc::config_parse, "graph 'n' out of range");
    const json& adj = j.contains("adjacency") ? j.at("adjacency") : json();
    require(adj.is_array() && static_cast<int>(adj.size()) == n, errc::config_parse,
            "'adjacency' must be an n x n array");
    Matrix a(n, n);
    for (int i = 0; i < n; ++i) {
        require(adj[static_cast<std::size_t>(i)].is_array() &&
                    static_cast<int>(adj[static_cast<std::size_t>(i)].size()) == n,
                errc::config_parse, "'adjacency' must be an n x n array");
        for (int k = 0; k < n; ++k)
            a(i, k) = double_from_json(adj[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                                       "adjacency entry");
    }
    const json& feats = j.contains("features") ? j.at("features") : json();
    require(feats.is_array() && static_cast<int>(feats.size()) == n, errc::config_parse,
            "'features' must have one row per node");
    const int d = feats.empty() ? 0 : static_cast<int>(feats[0].size());
    Matrix f(n, d);
    for (int i = 0; i < n; ++i) {
        require(feats[static_cast<std::size_t>(i)].is_array() &&
                    static_cast<int>(feats[static_cast<std::size_t>(i)].size()) == d,
                errc::config_parse, "'features' rows must share one length");
        for (int k = 0; k < d; ++k)
            f(i, k) = double_from_json(feats[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)],
                                       "feature entry");
    }
    EdgeFeatures ef;
    if (j.contains("edge_features") && !j.at("edge_features").is_null()) {
        const json& tensor = j.at("edge_features");
        require(tensor.is_array() && static_cast<int>(tensor.size()) == n, errc::config_parse,
                "'edge_features' must be n x n x m");
        const int m = static_cast<int>(tensor[0][0].size());
        ef.assign(static_cast<std::size_t>(m), Matrix::Zero(n, n));
        for (int i = 0; i < n; ++i)
            for (int k = 0; k < n; ++k) {
                const json& cell = tensor[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
                require(cell.is_array() && static_cast<int>(cell.size()) == m, errc::config_parse,
                        "'edge_features' cells must share one channel count");
                for (int c = 0; c < m; ++c)
                    ef[static_cast<std::size_t>(c)](i, k) =
                        double_from_json(cell[static_cast<std::size_t>(c)], "edge feature entry");
            }
    }
    rec.graph = make_graph(std::move(a), std::move(f), std::move(ef));
    validate_graph(rec.graph);
    return rec;
}

inline void write_graphs_jsonl(const std::filesystem::path& path,
                               const std::vector<GraphRecord>& graphs) {
    std::ofstream out = detail::open_out(path);
    for (const GraphRecord& rec : graphs) out << graph_to_json(rec.id, rec.graph).dump() << "\n";
    require(out.good(), errc::io_error, "failed writing " + path.string());
}

inline std::vector<GraphRecord> read_graphs_jsonl(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    std::vector<GraphRecord> graphs;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(errc::config_parse, "bad JSONL line in " + path.string() + ": " + e.what());
        }
        graphs.push_back(graph_from_json(j));
    }
    return graphs;
}

// -------------------------------------------------------------------------
// Examples (JSONL). Split membership is positional: the first n_train rows
// are train, then n_cal calibration, then n_test test, per the dataset's
// config.json.

inline json example_to_json(const DatasetExample& ex) {
    json j;
    j["id"] = ex.id;
    j["truth_id"] = ex.truth_id;
    j["prediction_id"] = ex.prediction_id;
    j["candidate_ids"] = ex.candidate_ids;
    return j;
}

inline DatasetExample example_from_json(const json& j) {
    DatasetExample ex;
    ex.id = detail::get_field<std::string>(j, "id");
    ex.truth_id = detail::get_field<std::string>(j, "truth_id");
    ex.prediction_id = detail::get_field<std::string>(j, "prediction_id");
    ex.candidate_ids = detail::get_field<std::vector<std::string>>(j, "candidate_ids");
    require(!ex.candidate_ids.empty(), errc::config_parse, "'candidate_ids' must be nonempty");
    return ex;
}

inline void write_examples_jsonl(const std::filesystem::path& path,
                                 const std::vector<DatasetExample>& examples) {
    std::ofstream out = detail::open_out(path);
    for (const DatasetExample& ex : examples) out << example_to_json(ex).dump() << "\n";
    require(out.good(), errc::io_error, "failed writing " + path.string());
}

inline std::vector<DatasetExample> read_examples_jsonl(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    std::vector<DatasetExample> examples;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            fail(errc::config_parse, "bad JSONL line in " + path.string() + ": " + e.what());
        }
        examples.push_back(example_from_json(j));
    }
    return examples;
}

// -------------------------------------------------------------------------
// Configs.

inline json synth_config_to_json(const SynthConfig& cfg) {
    json j;
    j["n_nodes_min"] = cfg.n_nodes_min;
    j["n_nodes_max"] = cfg.n_nodes_max;
    j["n_colors"] = cfg.n_colors;
    j["edge_prob"] = cfg.edge_prob;
    j["n_train"] = cfg.n_train;
    j["n_cal"] = cfg.n_cal;
    j["n_test"] = cfg.n_test;
    j["predictor_accuracy"] = cfg.predictor_accuracy;
    j["edge_flip_rate"] = cfg.edge_flip_rate;
    j["color_swap_rate"] = cfg.color_swap_rate;
    j["heteroscedastic"] = cfg.heteroscedastic;
    j["hetero_scale"] = cfg.hetero_scale;
    j["library_cap"] = cfg.library_cap;
    j["seed"] = cfg.seed;
    return j;
}

// seed_warning, when given, is set if the seed field was absent (defaulted 0).
inline SynthConfig synth_config_from_json(const json& j, bool* seed_warning = nullptr) {
    SynthConfig cfg;
    cfg.n_nodes_min = detail::get_field_or(j, "n_nodes_min", cfg.n_nodes_min);
    cfg.n_nodes_max = detail::get_field_or(j, "n_nodes_max", cfg.n_nodes_max);
    cfg.n_colors = detail::get_field_or(j, "n_colors", cfg.n_colors);
    cfg.edge_prob = detail::get_field_or(j, "edge_prob", cfg.edge_prob);
    require(cfg.edge_prob >= 0.0, errc::config_parse, "field 'edge_prob' must be nonnegative");
    require(cfg.edge_prob <= 1.0, errc::config_parse, "field 'edge_prob' must be <= 1");
    cfg.n_train = detail::get_field_or(j, "n_train", cfg.n_train);
    cfg.n_cal = detail::get_field_or(j, "n_cal", cfg.n_cal);
    cfg.n_test = detail::get_field_or(j, "n_test", cfg.n_test);
    cfg.predictor_accuracy = detail::get_field_or(j, "predictor_accuracy", cfg.predictor_accuracy);
    cfg.edge_flip_rate = detail::get_field_or(j, "edge_flip_rate", cfg.edge_flip_rate);
    cfg.color_swap_rate = detail::get_field_or(j, "color_swap_rate", cfg.color_swap_rate);
    cfg.heteroscedastic = detail::get_field_or(j, "heteroscedastic", cfg.heteroscedastic);
    cfg.hetero_scale = detail::get_field_or(j, "hetero_scale", cfg.hetero_scale);
    cfg.library_cap = detail::get_field_or(j, "library_cap", cfg.library_cap);
    if (seed_warning != nullptr) *seed_warning = !j.contains("seed");
    cfg.seed = detail::get_field_or<std::uint64_t>(j, "seed", 0);
    return cfg;
}

inline StructureKind structure_kind_from_name(const std::string& s) {
    if (s == "adjacency") return StructureKind::adjacency;
    if (s == "laplacian") return StructureKind::laplacian;
    if (s == "sym_norm_laplacian") return StructureKind::sym_norm_laplacian;
    if (s == "shortest_path") return StructureKind::shortest_path;
    fail(errc::config_parse, "unknown structure kind '" + s + "'");
}

inline InitKind init_kind_from_name(const std::string& s) {
    if (s == "uniform") return InitKind::uniform;
    if (s == "identity") return InitKind::identity;
    if (s == "fd") return InitKind::fd;
    if (s == "lfd") return InitKind::lfd;
    if (s == "lfd_sym") return InitKind::lfd_sym;
    fail(errc::config_parse, "unknown init kind '" + s + "'");
}

inline json distance_config_to_json(const DistanceConfig& cfg) {
    json t;
    t["kind"] = cfg.transform.kind == TransformKind::none    ? "none"
              : cfg.transform.kind == TransformKind::power   ? "power"
                                                             : "truncated_exp";
    t["k"] = cfg.transform.k;
    t["lambda"] = cfg.transform.lambda;
    t["order"] = cfg.transform.order;
    t["include_identity"] = cfg.transform.include_identity;
    json j;
    j["structure"] = structure_kind_name(cfg.structure);
    j["transform"] = std::move(t);
    j["feature_diffusion"] = cfg.transform.feature_diffusion;
    j["beta"] = cfg.beta;
    j["gamma"] = cfg.gamma;
    j["init"] = init_kind_name(cfg.init);
    j["max_iters"] = cfg.max_iters;
    j["tol"] = cfg.tol;
    j["oracle_mode"] = cfg.oracle_mode;
    j["oracle_limit"] = cfg.oracle_limit;
    return j;
}

inline DistanceConfig distance_config_from_json(const json& j) {
    DistanceConfig cfg;
    if (j.contains("structure"))
        cfg.structure = structure_kind_from_name(detail::get_field<std::string>(j, "structure"));
    if (j.contains("transform")) {
        const json& t = j.at("transform");
        const std::string kind = detail::get_field_or<std::string>(t, "kind", "none");
        if (kind == "none") cfg.transform.kind = TransformKind::none;
        else if (kind == "power") cfg.transform.kind = TransformKind::power;
        else if (kind == "truncated_exp") cfg.transform.kind = TransformKind::truncated_exp;
        else fail(errc::config_parse, "unknown transform kind '" + kind + "'");
        cfg.transform.k = detail::get_field_or(t, "k", cfg.transform.k);
        cfg.transform.lambda = detail::get_field_or(t, "lambda", cfg.transform.lambda);
        cfg.transform.order = detail::get_field_or(t, "order", cfg.transform.order);
        cfg.transform.include_identity =
            detail::get_field_or(t, "include_identity", cfg.transform.include_identity);
    }
    cfg.transform.feature_diffusion =
        detail::get_field_or(j, "feature_diffusion", cfg.transform.feature_diffusion);
    cfg.beta = detail::get_field_or(j, "beta", cfg.beta);
    cfg.gamma = detail::get_field_or(j, "gamma", cfg.gamma);
    if (j.contains("init")) cfg.init = init_kind_from_name(detail::get_field<std::string>(j, "init"));
    cfg.max_iters = detail::get_field_or(j, "max_iters", cfg.max_iters);
    cfg.tol = detail::get_field_or(j, "tol", cfg.tol);
    cfg.oracle_mode = detail::get_field_or(j, "oracle_mode", cfg.oracle_mode);
    cfg.oracle_limit = detail::get_field_or(j, "oracle_limit", cfg.oracle_limit);
    try {
        validate_distance_config(cfg);
    } catch (const error& e) {
        fail(errc::config_parse, std::string("invalid distance config: ") + e.what());
    }
    return cfg;
}

// -------------------------------------------------------------------------
// Models.

inline void write_cp_model(const std::filesystem::path& path, double alpha, double threshold) {
    json j;
    j["alpha"] = alpha;
    j["threshold"] = double_to_json(threshold);
    std::ofstream out = detail::open_out(path);
    out << j.dump(2) << "\n";
    require(out.good(), errc::io_error, "failed writing " + path.string());
}

struct CpModel {
    double alpha = 0.1;
    double threshold = 0.0;
};

inline CpModel read_cp_model(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(errc::config_parse, "bad model file " + path.string() + ": " + e.what());
    }
    CpModel m;
    m.alpha = detail::get_field<double>(j, "alpha");
    require(j.contains("threshold"), errc::config_parse, "missing field 'threshold'");
    m.threshold = double_from_json(j.at("threshold"), "threshold");
    return m;
}

inline json scqr_model_to_json(const ScqrModel& m) {
    json j;
    j["kind"] = m.psi.kind == RegressorKind::linear ? "linear" : "one_hidden_layer";
    j["tau"] = m.psi.tau;
    j["input_dim"] = m.psi.input_dim;
    json weights = json::array();
    if (m.psi.kind == RegressorKind::linear) {
        json w = json::array();
        for (int i = 0; i < m.psi.w.size(); ++i) w.push_back(m.psi.w(i));
        weights.push_back(std::move(w));
        weights.push_back(json::array({m.psi.b}));
    } else {
        json w1 = json::array();
        for (int i = 0; i < m.psi.w1.rows(); ++i) {
            json row = json::array();
            for (int k = 0; k < m.psi.w1.cols(); ++k) row.push_back(m.psi.w1(i, k));
            w1.push_back(std::move(row));
        }
        json b1 = json::array(), w2 = json::array();
        for (int i = 0; i < m.psi.b1.size(); ++i) b1.push_back(m.psi.b1(i));
        for (int i = 0; i < m.psi.w2.size(); ++i) w2.push_back(m.psi.w2(i));
        weights.push_back(std::move(w1));
        weights.push_back(std::move(b1));
        weights.push_back(std::move(w2));
        weights.push_back(json::array({m.psi.b2}));
    }
    j["weights"] = std::move(weights);
    j["residual_quantile"] = double_to_json(m.residual_quantile);
    j["alpha"] = m.alpha;
    return j;
}

inline void write_scqr_model(const std::filesystem::path& path, const ScqrModel& m) {
    std::ofstream out = detail::open_out(path);
    out << scqr_model_to_json(m).dump(2) << "\n";
    require(out.good(), errc::io_error, "failed writing " + path.string());
}

inline ScqrModel scqr_model_from_json(const json& j) {
    ScqrModel m;
    m.alpha = detail::get_field<double>(j, "alpha");
    require(j.contains("residual_quantile"), errc::config_parse,
            "missing field 'residual_quantile'");
    m.residual_quantile = double_from_json(j.at("residual_quantile"), "residual_quantile");
    const std::string kind = detail::get_field<std::string>(j, "kind");
    m.psi.tau = detail::get_field<double>(j, "tau");
    m.psi.input_dim = detail::get_field<int>(j, "input_dim");
    const json& w = j.contains("weights") ? j.at("weights") : json();
    require(w.is_array(), errc::config_parse, "field 'weights' must be an array");
    if (kind == "linear") {
        m.psi.kind = RegressorKind::linear;
        require(w.size() == 2 && w[0].is_array() && w[1].is_array() && w[1].size() == 1,
                errc::config_parse, "linear weights must be [[w...], [b]]");
        m.psi.w = Vector::Zero(static_cast<int>(w[0].size()));
        for (int i = 0; i < m.psi.w.size(); ++i)
            m.psi.w(i) = double_from_json(w[0][static_cast<std::size_t>(i)], "weight");
        m.psi.b = double_from_json(w[1][0], "bias");
        require(m.psi.w.size() == m.psi.input_dim, errc::config_parse,
                "weight length must equal input_dim");
    } else if (kind == "one_hidden_layer") {
        m.psi.kind = RegressorKind::one_hidden_layer;
        require(w.size() == 4, errc::config_parse,
                "one_hidden_layer weights must be [W1, b1, w2, [b2]]");
        const int h = static_cast<int>(w[0].size());
        require(h >= 1, errc::config_parse, "hidden layer must be nonempty");
        const int d = static_cast<int>(w[0][0].size());
        require(d == m.psi.input_dim, errc::config_parse, "W1 width must equal input_dim");
        m.psi.w1 = Matrix::Zero(h, d);
        for (int i = 0; i < h; ++i) {
            require(static_cast<int>(w[0][static_cast<std::size_t>(i)].size()) == d,
                    errc::config_parse, "W1 rows must share one length");
            for (int k = 0; k < d; ++k)
                m.psi.w1(i, k) = double_from_json(w[0][static_cast<std::size_t>(i)][static_cast<std::size_t>(k)], "weight");
        }
        require(static_cast<int>(w[1].size()) == h && static_cast<int>(w[2].size()) == h &&
                    w[3].is_array() && w[3].size() == 1,
                errc::config_parse, "b1/w2/b2 shapes must match the hidden width");
        m.psi.b1 = Vector::Zero(h);
        m.psi.w2 = Vector::Zero(h);
        for (int i = 0; i < h; ++i) {
            m.psi.b1(i) = double_from_json(w[1][static_cast<std::size_t>(i)], "bias");
            m.psi.w2(i) = double_from_json(w[2][static_cast<std::size_t>(i)], "weight");
        }
        m.psi.b2 = double_from_json(w[3][0], "bias");
    } else {
        fail(errc::config_parse, "unknown regressor kind '" + kind + "'");
    }
    return m;
}

inline ScqrModel read_scqr_model(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(errc::config_parse, "bad model file " + path.string() + ": " + e.what());
    }
    return scqr_model_from_json(j);
}

// -------------------------------------------------------------------------
// Calibration records CSV: id,score,candidate_size,feature_0..feature_{d-1}.

inline void write_calibration_records_csv(const std::filesystem::path& path,
                                          const std::vector<CalibrationRecord>& records) {
    require(!records.empty(), errc::empty_results, "no calibration records to write");
    const int d = static_cast<int>(records.front().feature.size());
    std::ofstream out = detail::open_out(path);
    out << "id,score,candidate_size";
    for (int i = 0; i < d; ++i) out << ",feature_" << i;
    out << "\n";
    for (const CalibrationRecord& r : records) {
        detail::check_plain_token(r.id);
        require(r.feature.size() == d, errc::dim_mismatch,
                "all records must share one feature dimension");
        out << r.id << "," << fmt_double(r.score) << "," << r.candidate_size;
        for (int i = 0; i < d; ++i) out << "," << fmt_double(r.feature(i));
        out << "\n";
    }
    require(out.good(), errc::io_error, "failed writing " + path.string());
}

inline std::vector<CalibrationRecord> read_calibration_records_csv(
    const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), errc::io_error,
            "empty records file " + path.string());
    const std::vector<std::string> header = detail::split_csv_line(line);
    require(header.size() >= 3 && header[0] == "id" && header[1] == "score" &&
                header[2] == "candidate_size",
            errc::config_parse, "unexpected records header in " + path.string());
    const std::size_t d = header.size() - 3;
    std::vector<CalibrationRecord> records;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        require(f.size() == header.size(), errc::config_parse,
                "ragged records row in " + path.string());
        CalibrationRecord r;
        r.id = f[0];
        r.score = parse_double(f[1], "score");
        r.candidate_size = static_cast<int>(parse_double(f[2], "candidate_size"));
        r.feature = Vector::Zero(static_cast<int>(d));
        for (std::size_t i = 0; i < d; ++i)
            r.feature(static_cast<int>(i)) = parse_double(f[3 + i], "feature");
        records.push_back(std::move(r));
    }
    return records;
}

// -------------------------------------------------------------------------
// Scores CSV: one row per scored (example, candidate) pair. Calibration and
// train examples carry their truth row only; test examples carry every
// candidate.

struct ScoreRow {
    std::string example_id;
    std::string candidate_id;
    double score = 0.0;
    bool is_truth = false;
    Split split = Split::test;
    int candidate_size = 0;
};

inline void write_scores_csv(const std::filesystem::path& path, const std::vector<ScoreRow>& rows) {
    std::ofstream out = detail::open_out(path);
    out << "example_id,candidate_id,score,is_truth,split,candidate_size\n";
    for (const ScoreRow& r : rows) {
        detail::check_plain_token(r.example_id);
        detail::check_plain_token(r.candidate_id);
        out << r.example_id << "," << r.candidate_id << "," << fmt_double(r.score) << ","
            << (r.is_truth ? 1 : 0) << "," << split_name(r.split) << "," << r.candidate_size << "\n";
    }
    require(out.good(), errc::io_error, "failed writing " + path.string());
}

inline std::vector<ScoreRow> read_scores_csv(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), errc::io_error,
            "empty scores file " + path.string());
    require(line == "example_id,candidate_id,score,is_truth,split,candidate_size",
            errc::config_parse, "unexpected scores header in " + path.string());
    std::vector<ScoreRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        require(f.size() == 6, errc::config_parse, "ragged scores row in " + path.string());
        ScoreRow r;
        r.example_id = f[0];
        r.candidate_id = f[1];
        r.score = parse_double(f[2], "score");
        r.is_truth = f[3] == "1";
        if (f[4] == "train") r.split = Split::train;
        else if (f[4] == "cal") r.split = Split::cal;
        else if (f[4] == "test") r.split = Split::test;
        else fail(errc::config_parse, "unknown split '" + f[4] + "'");
        r.candidate_size = static_cast<int>(parse_double(f[5], "candidate_size"));
        rows.push_back(std::move(r));
    }
    return rows;
}

// -------------------------------------------------------------------------
// Prediction sets CSV:
// example_id,threshold,set_size,candidate_size,contains_truth,member_ids
// (member ids joined by ';').

struct PredictionSetRow {
    std::string example_id;
    double threshold = 0.0;
    int candidate_size = 0;
    bool contains_truth = false;
    std::vector<std::string> member_ids;
};

inline void write_sets_csv(const std::filesystem::path& path,
                           const std::vector<PredictionSetRow>& rows) {
    std::ofstream out = detail::open_out(path);
    out << "example_id,threshold,set_size,candidate_size,contains_truth,member_ids\n";
    for (const PredictionSetRow& r : rows) {
        detail::check_plain_token(r.example_id);
        std::string members;
        for (std::size_t i = 0; i < r.member_ids.size(); ++i) {
            detail::check_plain_token(r.member_ids[i]);
            if (i > 0) members += ';';
            members += r.member_ids[i];
        }
        out << r.example_id << "," << fmt_double(r.threshold) << "," << r.member_ids.size() << ","
            << r.candidate_size << "," << (r.contains_truth ? "true" : "false") << "," << members
            << "\n";
    }
    require(out.good(), errc::io_error, "failed writing " + path.string());
}

inline std::vector<PredictionSetRow> read_sets_csv(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), errc::io_error,
            "empty prediction-set file " + path.string());
    require(line == "example_id,threshold,set_size,candidate_size,contains_truth,member_ids",
            errc::config_parse, "unexpected prediction-set header in " + path.string());
    std::vector<PredictionSetRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const std::vector<std::string> f = detail::split_csv_line(line);
        require(f.size() == 6, errc::config_parse, "ragged prediction-set row in " + path.string());
        PredictionSetRow r;
        r.example_id = f[0];
        r.threshold = parse_double(f[1], "threshold");
        const int set_size = static_cast<int>(parse_double(f[2], "set_size"));
        r.candidate_size = static_cast<int>(parse_double(f[3], "candidate_size"));
        require(f[4] == "true" || f[4] == "false", errc::config_parse,
                "contains_truth must be true/false");
        r.contains_truth = f[4] == "true";
        if (!f[5].empty()) {
            std::string cur;
            for (char c : f[5]) {
                if (c == ';') {
                    r.member_ids.push_back(cur);
                    cur.clear();
                } else {
                    cur += c;
                }
            }
            r.member_ids.push_back(cur);
        }
        require(static_cast<int>(r.member_ids.size()) == set_size, errc::config_parse,
                "set_size does not match member list length");
        rows.push_back(std::move(r));
    }
    return rows;
}

// -------------------------------------------------------------------------
// Evaluation outputs.

inline void write_summary_csv(const std::filesystem::path& path, const EvalSummary& s) {
    std::ofstream out = detail::open_out(path);
    out << summary_csv_header() << "\n" << summary_csv_row(s) << "\n";
    require(out.good(), errc::io_error, "failed writing " + path.string());
}

inline void write_coverage_bins_csv(const std::filesystem::path& path,
                                    const std::vector<CoverageBin>& bins) {
    std::ofstream out = detail::open_out(path);
    out << "bin_lo,bin_hi,coverage,count\n";
    for (const CoverageBin& b : bins)
        out << fmt_double(b.lo) << "," << fmt_double(b.hi) << "," << fmt_double(b.coverage) << ","
            << b.count << "\n";
    require(out.good(), errc::io_error, "failed writing " + path.string());
}

}  // namespace graphconf
