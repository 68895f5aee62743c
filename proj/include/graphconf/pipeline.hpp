#pragma once

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "graphconf/io.hpp"

namespace graphconf {

enum class Method { cp, scqr };

inline const char* method_name(Method m) { return m == Method::cp ? "cp" : "scqr"; }

inline Method method_from_name(const std::string& s) {
    if (s == "cp") return Method::cp;
    if (s == "scqr") return Method::scqr;
    fail(errc::config_parse, "unknown method '" + s + "' (expected cp or scqr)");
}

struct ScqrOptions {
    RegressorKind regressor = RegressorKind::linear;
    bool force_zero_psi = false;
    TrainConfig train;
};

struct RunConfig {
    std::uint64_t seed = 0;
    bool seed_missing = false;  // true when the file omitted "seed"
    double alpha = 0.1;
    Method method = Method::cp;
    DistanceConfig distance;
    ScqrOptions scqr;
    SynthConfig synth;
    std::string data_dir;  // default for --data
    std::string out_dir;   // default for --out
};

inline RunConfig run_config_from_json(const json& j) {
    RunConfig cfg;
    cfg.seed_missing = !j.contains("seed");
    cfg.seed = detail::get_field_or<std::uint64_t>(j, "seed", 0);
    cfg.alpha = detail::get_field_or(j, "alpha", cfg.alpha);
    require(cfg.alpha > 0.0 && cfg.alpha < 1.0, errc::config_parse,
            "field 'alpha' must lie in (0, 1)");
    if (j.contains("method"))
        cfg.method = method_from_name(detail::get_field<std::string>(j, "method"));
    if (j.contains("distance")) cfg.distance = distance_config_from_json(j.at("distance"));
    if (j.contains("scqr")) {
        const json& s = j.at("scqr");
        const std::string kind = detail::get_field_or<std::string>(s, "regressor", "linear");
        if (kind == "linear") cfg.scqr.regressor = RegressorKind::linear;
        else if (kind == "one_hidden_layer") cfg.scqr.regressor = RegressorKind::one_hidden_layer;
        else fail(errc::config_parse, "unknown regressor '" + kind + "'");
        cfg.scqr.force_zero_psi =
            detail::get_field_or(s, "force_zero_psi", cfg.scqr.force_zero_psi);
        cfg.scqr.train.lr = detail::get_field_or(s, "lr", cfg.scqr.train.lr);
        cfg.scqr.train.epochs = detail::get_field_or(s, "epochs", cfg.scqr.train.epochs);
        cfg.scqr.train.adam_lr = detail::get_field_or(s, "adam_lr", cfg.scqr.train.adam_lr);
        cfg.scqr.train.batch_size =
            detail::get_field_or(s, "batch_size", cfg.scqr.train.batch_size);
        cfg.scqr.train.patience = detail::get_field_or(s, "patience", cfg.scqr.train.patience);
        cfg.scqr.train.min_improvement =
            detail::get_field_or(s, "min_improvement", cfg.scqr.train.min_improvement);
        cfg.scqr.train.hidden_width =
            detail::get_field_or(s, "hidden_width", cfg.scqr.train.hidden_width);
    }
    if (j.contains("synth")) {
        bool synth_seed_missing = false;
        cfg.synth = synth_config_from_json(j.at("synth"), &synth_seed_missing);
        if (synth_seed_missing) cfg.synth.seed = cfg.seed;
    } else {
        cfg.synth.seed = cfg.seed;
    }
    cfg.scqr.train.seed = cfg.seed;
    if (j.contains("paths")) {
        const json& p = j.at("paths");
        cfg.data_dir = detail::get_field_or<std::string>(p, "data", "");
        cfg.out_dir = detail::get_field_or<std::string>(p, "out", "");
    }
    return cfg;
}

inline RunConfig read_run_config(const std::filesystem::path& path) {
    std::ifstream in = detail::open_in(path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(errc::config_parse, "bad config file " + path.string() + ": " + e.what());
    }
    require(j.is_object(), errc::config_parse, "config root must be a JSON object");
    return run_config_from_json(j);
}

// -------------------------------------------------------------------------
// Scoring. GRAPHCONF_THREADS caps the worker fan-out; output order never
// depends on the thread count because rows are written by example index.

inline int resolve_threads(int requested = 0) {
    int n = requested;
    if (n <= 0) {
        const unsigned hw = std::thread::hardware_concurrency();
        n = hw == 0 ? 1 : static_cast<int>(hw);
    }
    if (const char* env = std::getenv("GRAPHCONF_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < n) n = cap;
        if (cap >= 1 && requested <= 0) n = cap;
    }
    if (n < 1) n = 1;
    if (n > 256) n = 256;
    return n;
}

struct ScoreTable {
    std::vector<ScoreRow> rows;                    // train/cal truth rows + all test rows
    std::vector<CalibrationRecord> cal_records;    // one per calibration example
};

inline ScoreTable score_dataset(const Dataset& ds, const DistanceConfig& cfg, int threads = 0) {
    validate_distance_config(cfg);
    std::unordered_map<std::string, const Graph*> by_id;
    by_id.reserve(ds.graphs.size());
    for (const GraphRecord& g : ds.graphs) by_id[g.id] = &g.graph;
    const auto lookup = [&](const std::string& id) -> const Graph& {
        const auto it = by_id.find(id);
        require(it != by_id.end(), errc::truth_missing, "graph id '" + id + "' not in corpus");
        return *it->second;
    };

    const std::size_t n_examples = ds.examples.size();
    std::vector<std::vector<ScoreRow>> per_example(n_examples);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::string first_error;
    std::mutex error_mu;

    const auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_examples || failed.load()) break;
            const DatasetExample& ex = ds.examples[i];
            try {
                const Graph& pred = lookup(ex.prediction_id);
                const int lib_size = static_cast<int>(ex.candidate_ids.size());
                std::vector<ScoreRow>& out = per_example[i];
                if (ex.split == Split::test) {
                    out.reserve(ex.candidate_ids.size());
                    for (const std::string& cid : ex.candidate_ids) {
                        ScoreRow r;
                        r.example_id = ex.id;
                        r.candidate_id = cid;
                        r.score = std::max(0.0, score(pred, lookup(cid), cfg));
                        r.is_truth = cid == ex.truth_id;
                        r.split = ex.split;
                        r.candidate_size = lib_size;
                        out.push_back(std::move(r));
                    }
                } else {
                    ScoreRow r;
                    r.example_id = ex.id;
                    r.candidate_id = ex.truth_id;
                    r.score = std::max(0.0, score(pred, lookup(ex.truth_id), cfg));
                    r.is_truth = true;
                    r.split = ex.split;
                    r.candidate_size = lib_size;
                    out.push_back(std::move(r));
                }
            } catch (const std::exception& e) {
                std::lock_guard<std::mutex> lock(error_mu);
                if (!failed.exchange(true)) first_error = e.what();
            }
        }
    };

    const int n_threads = std::min<int>(resolve_threads(threads),
                                        std::max<std::size_t>(n_examples, 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_threads));
        for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
    }
    require(!failed.load(), errc::internal, "scoring failed: " + first_error);

    ScoreTable table;
    for (std::size_t i = 0; i < n_examples; ++i) {
        for (ScoreRow& r : per_example[i]) {
            if (r.split == Split::cal && r.is_truth) {
                CalibrationRecord rec;
                rec.id = r.example_id;
                rec.score = r.score;
                rec.candidate_size = r.candidate_size;
                rec.feature = Vector::Constant(1, static_cast<double>(r.candidate_size));
                table.cal_records.push_back(std::move(rec));
            }
            table.rows.push_back(std::move(r));
        }
    }
    return table;
}

// -------------------------------------------------------------------------
// Calibration on records.

inline double calibrate_threshold_cp(const std::vector<CalibrationRecord>& records, double alpha) {
    return calibrate_cp(records, alpha);
}

inline ScqrModel calibrate_threshold_scqr(const std::vector<CalibrationRecord>& records,
                                          double alpha, const ScqrOptions& opts,
                                          std::uint64_t seed) {
    require(!records.empty(), errc::empty_scores, "no calibration records");
    const int input_dim = static_cast<int>(records.front().feature.size());
    if (opts.force_zero_psi) return calibrate_scqr_zero(records, alpha, input_dim);
    rng split_rng(seed, "split");
    std::vector<std::size_t> order(records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    split_rng.shuffle(order);
    const std::size_t n_fit = records.size() / 2;
    std::vector<CalibrationRecord> fit_half, resid_half;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_fit ? fit_half : resid_half).push_back(records[order[i]]);
    return calibrate_scqr(fit_half, resid_half, alpha, opts.regressor, opts.train);
}

// -------------------------------------------------------------------------
// Prediction from a score table. Test rows are grouped by example in first-
// appearance order; members keep candidate order.

template <typename ThresholdFn>
std::vector<PredictionSetRow> predict_sets_from_scores(const std::vector<ScoreRow>& rows,
                                                       ThresholdFn&& threshold_of) {
    std::vector<PredictionSetRow> sets;
    std::unordered_map<std::string, std::size_t> index;
    for (const ScoreRow& r : rows) {
        if (r.split != Split::test) continue;
        auto [it, inserted] = index.emplace(r.example_id, sets.size());
        if (inserted) {
            PredictionSetRow s;
            s.example_id = r.example_id;
            s.candidate_size = r.candidate_size;
            s.threshold = threshold_of(r);
            sets.push_back(std::move(s));
        }
        PredictionSetRow& s = sets[it->second];
        require(!std::isnan(s.threshold), errc::non_finite, "threshold is NaN");
        if (r.score <= s.threshold) {
            s.member_ids.push_back(r.candidate_id);
            if (r.is_truth) s.contains_truth = true;
        }
    }
    require(!sets.empty(), errc::empty_results, "no test rows to predict on");
    return sets;
}

inline std::vector<EvalRow> eval_rows_from_sets(const std::vector<PredictionSetRow>& sets) {
    std::vector<EvalRow> rows;
    rows.reserve(sets.size());
    for (const PredictionSetRow& s : sets)
        rows.push_back(EvalRow{s.example_id, s.threshold, static_cast<int>(s.member_ids.size()),
                               s.candidate_size, s.contains_truth});
    return rows;
}

// -------------------------------------------------------------------------
// In-memory experiment: generate -> score -> calibrate -> predict -> evaluate.

struct ExperimentOutcome {
    double cp_threshold = 0.0;      // set when method == cp
    ScqrModel scqr_model;           // set when method == scqr
    std::vector<PredictionSetRow> sets;
    EvalSummary summary;
};

inline ExperimentOutcome run_experiment(const SynthConfig& synth, const DistanceConfig& distance,
                                        double alpha, Method method,
                                        const ScqrOptions& scqr_opts = {}, int threads = 0) {
    const Dataset ds = generate_dataset(synth);
    const ScoreTable table = score_dataset(ds, distance, threads);
    ExperimentOutcome out;
    if (method == Method::cp) {
        out.cp_threshold = calibrate_threshold_cp(table.cal_records, alpha);
        out.sets = predict_sets_from_scores(
            table.rows, [&](const ScoreRow&) { return out.cp_threshold; });
    } else {
        out.scqr_model = calibrate_threshold_scqr(table.cal_records, alpha, scqr_opts, synth.seed);
        out.sets = predict_sets_from_scores(table.rows, [&](const ScoreRow& r) {
            return scqr_threshold(out.scqr_model,
                                  Vector::Constant(1, static_cast<double>(r.candidate_size)));
        });
    }
    out.summary = evaluate(eval_rows_from_sets(out.sets));
    return out;
}

// -------------------------------------------------------------------------
// Oracle self-check: exhaustive values vs relabeling and vs the iterative
// solver, over every (prediction, truth) pair the oracle can handle.

struct OracleCheckReport {
    int pairs_checked = 0;
    int pairs_skipped = 0;
    double max_invariance_gap = 0.0;  // |value - value after relabeling|
    double max_descent_gap = 0.0;     // max(0, solver value - oracle value)
    bool ok(double invariance_tol = 1e-9, double descent_tol = 1e-10) const {
        return max_invariance_gap <= invariance_tol && max_descent_gap <= descent_tol;
    }
};

inline OracleCheckReport oracle_check(const Dataset& ds, DistanceConfig cfg) {
    cfg.oracle_mode = true;
    validate_distance_config(cfg);
    std::unordered_map<std::string, const Graph*> by_id;
    for (const GraphRecord& g : ds.graphs) by_id[g.id] = &g.graph;
    rng perm_rng(ds.config.seed, "oracle-check");
    OracleCheckReport report;
    for (const DatasetExample& ex : ds.examples) {
        const auto pit = by_id.find(ex.prediction_id);
        const auto tit = by_id.find(ex.truth_id);
        require(pit != by_id.end() && tit != by_id.end(), errc::truth_missing,
                "example references a missing graph");
        const Graph& pred = *pit->second;
        const Graph& truth = *tit->second;
        if (pred.n() != truth.n() || pred.n() > cfg.oracle_limit) {
            ++report.pairs_skipped;
            continue;
        }
        const OracleResult oracle = permutation_oracle(pred, truth, cfg);

        const std::vector<std::size_t> p =
            perm_rng.next_permutation_of(static_cast<std::size_t>(truth.n()));
        std::vector<int> perm_map(p.size());
        for (std::size_t k = 0; k < p.size(); ++k) perm_map[k] = static_cast<int>(p[k]);
        const Graph relabeled = apply_permutation(truth, Permutation::validated(std::move(perm_map)));
        const OracleResult oracle_relabeled = permutation_oracle(pred, relabeled, cfg);
        report.max_invariance_gap = std::max(report.max_invariance_gap,
                                             std::abs(oracle.value - oracle_relabeled.value));

        const SolveResult solved =
            solve_fgw(pred, truth, cfg, coupling_from_permutation(oracle.permutation));
        report.max_descent_gap =
            std::max(report.max_descent_gap, solved.value - oracle.value);
        ++report.pairs_checked;
    }
    report.max_descent_gap = std::max(0.0, report.max_descent_gap);
    return report;
}

inline std::string oracle_check_text(const OracleCheckReport& r) {
    std::string out;
    out += "pairs checked:       " + std::to_string(r.pairs_checked) + "\n";
    out += "pairs skipped:       " + std::to_string(r.pairs_skipped) + "\n";
    if (r.pairs_checked == 0) {
        out += "0 pairs checked — every pair exceeded the oracle size limit or mixed sizes\n";
        return out;
    }
    out += "max invariance gap:  " + fmt_double(r.max_invariance_gap) + "\n";
    out += "max descent gap:     " + fmt_double(r.max_descent_gap) + "\n";
    out += std::string("verdict:             ") + (r.ok() ? "OK" : "VIOLATION") + "\n";
    return out;
}

// -------------------------------------------------------------------------
// File-based commands (the CLI wraps these 1:1).

namespace fs = std::filesystem;

inline void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    require(!ec, errc::io_error, "cannot create directory " + dir.string());
}

// gen: synthesize a dataset into data_dir (graphs.jsonl, examples.jsonl,
// config.json). Returns whether the seed had to be defaulted.
inline bool cmd_gen(const fs::path& config_path, const fs::path& data_dir) {
    std::ifstream in = detail::open_in(config_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(errc::config_parse, "bad config file " + config_path.string() + ": " + e.what());
    }
    bool seed_missing = false;
    SynthConfig cfg;
    // A config holding any run-level key is a run config even without a
    // "synth" block, so its fields get validated instead of silently ignored.
    const bool run_shape = j.contains("synth") || j.contains("alpha") || j.contains("method") ||
                           j.contains("distance") || j.contains("scqr") || j.contains("paths");
    if (run_shape) {
        RunConfig run = run_config_from_json(j);
        cfg = run.synth;
        seed_missing = run.seed_missing && !(j.contains("synth") && j.at("synth").contains("seed"));
    } else {
        cfg = synth_config_from_json(j, &seed_missing);
    }
    const Dataset ds = generate_dataset(cfg);
    ensure_dir(data_dir);
    write_graphs_jsonl(data_dir / "graphs.jsonl", ds.graphs);
    write_examples_jsonl(data_dir / "examples.jsonl", ds.examples);
    std::ofstream cfg_out = detail::open_out(data_dir / "config.json");
    cfg_out << synth_config_to_json(ds.config).dump(2) << "\n";
    require(cfg_out.good(), errc::io_error, "failed writing dataset config");
    return seed_missing;
}

inline Dataset read_dataset(const fs::path& data_dir) {
    Dataset ds;
    std::ifstream cfg_in = detail::open_in(data_dir / "config.json");
    json j;
    try {
        cfg_in >> j;
    } catch (const json::exception& e) {
        fail(errc::config_parse, "bad dataset config: " + std::string(e.what()));
    }
    ds.config = synth_config_from_json(j);
    ds.graphs = read_graphs_jsonl(data_dir / "graphs.jsonl");
    ds.examples = read_examples_jsonl(data_dir / "examples.jsonl");
    const std::size_t expected = static_cast<std::size_t>(ds.config.n_train) +
                                 static_cast<std::size_t>(ds.config.n_cal) +
                                 static_cast<std::size_t>(ds.config.n_test);
    require(ds.examples.size() == expected, errc::config_parse,
            "example count does not match the dataset config");
    std::size_t k = 0;
    for (DatasetExample& ex : ds.examples) {
        ex.split = k < static_cast<std::size_t>(ds.config.n_train)              ? Split::train
                 : k < static_cast<std::size_t>(ds.config.n_train + ds.config.n_cal) ? Split::cal
                                                                                     : Split::test;
        ++k;
    }
    return ds;
}

inline void cmd_score(const RunConfig& cfg, const fs::path& data_dir, const fs::path& out_dir,
                      bool force_oracle) {
    Dataset ds = read_dataset(data_dir);
    DistanceConfig dist = cfg.distance;
    if (force_oracle) dist.oracle_mode = true;
    const ScoreTable table = score_dataset(ds, dist);
    ensure_dir(out_dir);
    write_scores_csv(out_dir / "scores.csv", table.rows);
    write_calibration_records_csv(out_dir / "calibration_records.csv", table.cal_records);
}

inline void cmd_calibrate(const RunConfig& cfg, const fs::path& out_dir) {
    const std::vector<CalibrationRecord> records =
        read_calibration_records_csv(out_dir / "calibration_records.csv");
    ensure_dir(out_dir);
    if (cfg.method == Method::cp) {
        write_cp_model(out_dir / "model.json", cfg.alpha,
                       calibrate_threshold_cp(records, cfg.alpha));
    } else {
        write_scqr_model(out_dir / "model.json",
                         calibrate_threshold_scqr(records, cfg.alpha, cfg.scqr, cfg.seed));
    }
}

inline void cmd_predict(const RunConfig& cfg, const fs::path& out_dir) {
    const std::vector<ScoreRow> rows = read_scores_csv(out_dir / "scores.csv");
    std::ifstream in = detail::open_in(out_dir / "model.json");
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        fail(errc::config_parse, "bad model file: " + std::string(e.what()));
    }
    std::vector<PredictionSetRow> sets;
    if (j.contains("kind")) {
        const ScqrModel model = scqr_model_from_json(j);
        sets = predict_sets_from_scores(rows, [&](const ScoreRow& r) {
            return scqr_threshold(model,
                                  Vector::Constant(1, static_cast<double>(r.candidate_size)));
        });
    } else {
        const CpModel model = [&] {
            CpModel m;
            m.alpha = detail::get_field<double>(j, "alpha");
            require(j.contains("threshold"), errc::config_parse, "missing field 'threshold'");
            m.threshold = double_from_json(j.at("threshold"), "threshold");
            return m;
        }();
        sets = predict_sets_from_scores(rows,
                                        [&](const ScoreRow&) { return model.threshold; });
    }
    (void)cfg;
    write_sets_csv(out_dir / "sets.csv", sets);
}

struct EvalArtifacts {
    EvalSummary summary;
    std::vector<CoverageBin> bins;
};

inline EvalArtifacts cmd_eval(const fs::path& out_dir) {
    const std::vector<PredictionSetRow> sets = read_sets_csv(out_dir / "sets.csv");
    const std::vector<EvalRow> rows = eval_rows_from_sets(sets);
    EvalArtifacts art;
    art.summary = evaluate(rows);
    art.bins = binned_coverage(rows);
    write_summary_csv(out_dir / "summary.csv", art.summary);
    write_coverage_bins_csv(out_dir / "coverage_bins.csv", art.bins);
    return art;
}

inline OracleCheckReport cmd_oracle_check(const RunConfig& cfg, const fs::path& data_dir) {
    const Dataset ds = read_dataset(data_dir);
    return oracle_check(ds, cfg.distance);
}

}  // namespace graphconf
