// Command-line front end: gen -> score -> calibrate -> predict -> eval, plus
// an oracle self-check. Every command is deterministic given its config.

#include <cstdio>
#include <filesystem>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include <graphconf/graphconf.hpp>

namespace {

namespace gc = graphconf;
namespace fs = std::filesystem;

// Exit codes: 0 success, 2 bad config/usage, 3 I/O failure, 4 domain or
// validation failure (including an oracle-check violation), 5 internal.
int exit_code_for(gc::errc code) {
    switch (code) {
        case gc::errc::config_parse: return 2;
        case gc::errc::io_error: return 3;
        case gc::errc::internal: return 5;
        default: return 4;
    }
}

struct CommonArgs {
    std::string config_path;
    std::string data_dir;
    std::string out_dir;
    std::optional<double> alpha;
    std::optional<std::string> method;
    bool force_oracle = false;
};

gc::RunConfig load_config(const CommonArgs& args, bool warn_seed) {
    gc::RunConfig cfg;
    if (!args.config_path.empty()) cfg = gc::read_run_config(args.config_path);
    if (args.alpha) {
        gc::require(*args.alpha > 0.0 && *args.alpha < 1.0, gc::errc::alpha_out_of_range,
                    "--alpha must lie in (0, 1)");
        cfg.alpha = *args.alpha;
    }
    if (args.method) cfg.method = gc::method_from_name(*args.method);
    if (warn_seed && !args.config_path.empty() && cfg.seed_missing)
        std::fprintf(stderr, "warning: config has no 'seed' field; defaulting to 0\n");
    return cfg;
}

fs::path resolve_data(const CommonArgs& args, const gc::RunConfig& cfg) {
    if (!args.data_dir.empty()) return args.data_dir;
    if (!cfg.data_dir.empty()) return cfg.data_dir;
    return "data";
}

fs::path resolve_out(const CommonArgs& args, const gc::RunConfig& cfg) {
    if (!args.out_dir.empty()) return args.out_dir;
    if (!cfg.out_dir.empty()) return cfg.out_dir;
    return "out";
}

void add_common(CLI::App* cmd, CommonArgs& args, bool with_config, bool with_data,
                bool with_out) {
    if (with_config)
        cmd->add_option("--config", args.config_path, "JSON config file");
    if (with_data)
        cmd->add_option("--data", args.data_dir, "dataset directory (default: config paths.data)");
    if (with_out)
        cmd->add_option("--out", args.out_dir, "output directory (default: config paths.out)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conformal prediction over graph-valued outputs"};
    app.require_subcommand(1);

    CommonArgs gen_args, score_args, cal_args, pred_args, eval_args, oc_args;

    CLI::App* gen = app.add_subcommand("gen", "synthesize a dataset");
    add_common(gen, gen_args, true, true, false);
    gen->get_option("--config")->required();

    CLI::App* score = app.add_subcommand("score", "score candidates against predictions");
    add_common(score, score_args, true, true, true);
    score->add_flag("--oracle", score_args.force_oracle,
                    "force exhaustive small-graph scoring regardless of config");

    CLI::App* calibrate = app.add_subcommand("calibrate", "fit the set-valued predictor");
    add_common(calibrate, cal_args, true, false, true);
    calibrate->add_option("--alpha", [&cal_args](const std::vector<std::string>& v) {
        cal_args.alpha = std::stod(v.back());
        return true;
    }, "miscoverage level in (0, 1)");
    calibrate->add_option("--method", [&cal_args](const std::vector<std::string>& v) {
        cal_args.method = v.back();
        return true;
    }, "cp or scqr");

    CLI::App* predict = app.add_subcommand("predict", "emit prediction sets");
    add_common(predict, pred_args, true, false, true);
    predict->add_option("--method", [&pred_args](const std::vector<std::string>& v) {
        pred_args.method = v.back();
        return true;
    }, "cp or scqr (must match the calibrated model)");

    CLI::App* eval = app.add_subcommand("eval", "summarize prediction sets");
    add_common(eval, eval_args, false, false, true);

    CLI::App* oracle_check =
        app.add_subcommand("oracle-check", "verify exhaustive scores against the solver");
    add_common(oracle_check, oc_args, true, true, false);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        if (gen->parsed()) {
            const fs::path dir = [&] {
                if (!gen_args.data_dir.empty()) return fs::path(gen_args.data_dir);
                const gc::RunConfig cfg = gc::read_run_config(gen_args.config_path);
                return fs::path(cfg.data_dir.empty() ? "data" : cfg.data_dir);
            }();
            const bool seed_missing = gc::cmd_gen(gen_args.config_path, dir);
            if (seed_missing)
                std::fprintf(stderr, "warning: config has no 'seed' field; defaulting to 0\n");
            const gc::Dataset ds = gc::read_dataset(dir);
            std::printf("wrote %zu graphs, %zu examples to %s\n", ds.graphs.size(),
                        ds.examples.size(), dir.string().c_str());
        } else if (score->parsed()) {
            const gc::RunConfig cfg = load_config(score_args, false);
            const fs::path data = resolve_data(score_args, cfg);
            const fs::path out = resolve_out(score_args, cfg);
            gc::cmd_score(cfg, data, out, score_args.force_oracle);
            std::printf("wrote %s and %s\n", (out / "scores.csv").string().c_str(),
                        (out / "calibration_records.csv").string().c_str());
        } else if (calibrate->parsed()) {
            const gc::RunConfig cfg = load_config(cal_args, true);
            const fs::path out = resolve_out(cal_args, cfg);
            gc::cmd_calibrate(cfg, out);
            if (cfg.method == gc::Method::cp) {
                const gc::CpModel m = gc::read_cp_model(out / "model.json");
                std::printf("calibrated cp threshold %s at alpha %s\n",
                            gc::fmt_double(m.threshold).c_str(),
                            gc::fmt_double(m.alpha).c_str());
            } else {
                const gc::ScqrModel m = gc::read_scqr_model(out / "model.json");
                std::printf("calibrated scqr (%s) residual quantile %s at alpha %s\n",
                            m.psi.kind == gc::RegressorKind::linear ? "linear"
                                                                    : "one_hidden_layer",
                            gc::fmt_double(m.residual_quantile).c_str(),
                            gc::fmt_double(m.alpha).c_str());
            }
        } else if (predict->parsed()) {
            const gc::RunConfig cfg = load_config(pred_args, false);
            const fs::path out = resolve_out(pred_args, cfg);
            if (pred_args.method) {
                std::ifstream in(out / "model.json");
                gc::require(in.good(), gc::errc::io_error, "cannot open model.json");
                gc::json j;
                in >> j;
                const bool is_scqr = j.contains("kind");
                gc::require((*pred_args.method == "scqr") == is_scqr, gc::errc::config_parse,
                            "--method does not match the calibrated model");
            }
            gc::cmd_predict(cfg, out);
            const auto sets = gc::read_sets_csv(out / "sets.csv");
            std::printf("wrote %zu prediction sets to %s\n", sets.size(),
                        (out / "sets.csv").string().c_str());
        } else if (eval->parsed()) {
            const gc::RunConfig cfg;
            const fs::path out = resolve_out(eval_args, cfg);
            const gc::EvalArtifacts art = gc::cmd_eval(out);
            std::fputs(gc::summary_table(art.summary).c_str(), stdout);
            std::printf("wrote %s and %s\n", (out / "summary.csv").string().c_str(),
                        (out / "coverage_bins.csv").string().c_str());
        } else if (oracle_check->parsed()) {
            const gc::RunConfig cfg = load_config(oc_args, false);
            const fs::path data = resolve_data(oc_args, cfg);
            const gc::OracleCheckReport report = gc::cmd_oracle_check(cfg, data);
            std::fputs(gc::oracle_check_text(report).c_str(), stdout);
            if (report.pairs_checked > 0 && !report.ok()) return 4;
        }
    } catch (const gc::error& e) {
        std::fprintf(stderr, "error [%s]: %s\n", gc::errc_name(e.code()), e.what());
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 5;
    }
    return 0;
}
