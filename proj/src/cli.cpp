#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "nlar/commands.hpp"

namespace nlar {

namespace {

void emit_error(std::ostream& err, std::string_view kind, const std::string& message) {
    nlohmann::ordered_json j;
    j["error"] = std::string(kind);
    j["message"] = message;
    err << j.dump() << '\n';
}

struct RawFlags {
    std::string family;
    int order = 0;
    std::string regime_lags;
    bool intercept = false;
    int degree = 0;
    std::string theta, theta_lower, theta_upper;
    std::string variance_family;
    std::string theta2, theta2_lower, theta2_upper;
    std::string methods;
    std::uint64_t seed = 0;
};

RunConfig assemble(const RawFlags& raw, RunConfig cfg, bool seed_given) {
    if (seed_given) cfg.seed = raw.seed;
    if (!raw.methods.empty()) {
        std::string item;
        std::istringstream in(raw.methods);
        while (std::getline(in, item, ','))
            if (!item.empty()) cfg.methods.push_back(item);
    }
    cfg.order = raw.order;
    if (!raw.family.empty()) {
        CustomModelSpec c;
        c.family = raw.family;
        c.order = raw.order == 0 ? 1 : raw.order;
        c.regime_lags = parse_int_list(raw.regime_lags);
        c.intercept = raw.intercept;
        c.degree = raw.degree;
        c.theta = parse_real_list(raw.theta);
        c.theta_lower = parse_real_list(raw.theta_lower);
        c.theta_upper = parse_real_list(raw.theta_upper);
        c.variance_family = raw.variance_family;
        c.theta2 = parse_real_list(raw.theta2);
        c.theta2_lower = parse_real_list(raw.theta2_lower);
        c.theta2_upper = parse_real_list(raw.theta2_upper);
        cfg.custom = c;
    }
    return cfg;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-step prediction and prediction intervals for non-linear autoregressions", "nlar"};
    app.set_config("--config", "", "Flat key = value file mirroring the long flags");
    app.require_subcommand(1, 1);

    RunConfig cfg;
    RawFlags raw;
    app.add_option("--model", cfg.model, "Zoo model: 1..7")->capture_default_str();
    app.add_option("--data", cfg.data_path, "Single-column CSV of observations");
    app.add_option("--order", raw.order, "Autoregressive order (checked against the model)");
    app.add_option("--horizon", cfg.horizon, "Largest prediction horizon")->capture_default_str();
    app.add_option("--loss", cfg.loss, "L1, L2 or both")->capture_default_str();
    app.add_option("--alpha", cfg.alpha, "Interval miscoverage level")->capture_default_str();
    app.add_option("--residuals", cfg.residuals, "fitted or predictive")->capture_default_str();
    app.add_option("--method", raw.methods,
                   "predict: boot|sim; interval: QPI|PPI; experiment: comma-separated method names");
    app.add_option("--T", cfg.T, "Series length when simulating")->capture_default_str();
    app.add_option("--N", cfg.N, "Experiment replications")->capture_default_str();
    app.add_option("--M", cfg.M, "Ensemble size")->capture_default_str();
    app.add_option("--K", cfg.K, "Bootstrap replicates for PPI")->capture_default_str();
    app.add_option("--burn-in", cfg.burn_in, "Discarded simulation prefix")->capture_default_str();
    auto* seed_opt = app.add_option("--seed", raw.seed, "Master seed (drawn from entropy when absent)");
    app.add_option("--workers", cfg.workers, "Worker threads")->capture_default_str();
    app.add_option("--out", cfg.out_path, "Output file");
    app.add_option("--innovation", cfg.innovation, "normal | chisq-centered:<df> | chisq:<df> | point:<v>")
        ->capture_default_str();
    app.add_flag("--multistart-refit", cfg.multistart_refit, "Full multistart refits inside PPI replicates");

    app.add_option("--family", raw.family,
                   "Custom mean family: threshold-linear | log-abs | log-square | log-exp-sum | linear | polynomial");
    app.add_option("--regime-lags", raw.regime_lags, "threshold-linear: q1,q2");
    app.add_flag("--intercept", raw.intercept, "linear / log-exp-sum: include a constant");
    app.add_option("--degree", raw.degree, "polynomial degree");
    app.add_option("--theta", raw.theta, "Mean coefficients, comma-separated");
    app.add_option("--theta-lower", raw.theta_lower, "Lower bounds of the mean parameter box");
    app.add_option("--theta-upper", raw.theta_upper, "Upper bounds of the mean parameter box");
    app.add_option("--variance-family", raw.variance_family, "constant | exp-decay");
    app.add_option("--theta2", raw.theta2, "Variance coefficient");
    app.add_option("--theta2-lower", raw.theta2_lower, "Lower bound of the variance parameter");
    app.add_option("--theta2-upper", raw.theta2_upper, "Upper bound of the variance parameter");

    for (Command c : {Command::Simulate, Command::Fit, Command::Predict, Command::Interval, Command::Experiment}) {
        auto* sub = app.add_subcommand(std::string(to_string(c)));
        sub->fallthrough();
        sub->callback([&cfg, c] { cfg.command = c; });
    }
    app.get_subcommand("simulate")->description("Simulate a path and write it as CSV");
    app.get_subcommand("fit")->description("Two-stage least-squares fit");
    app.get_subcommand("predict")->description("Point predictions and quantile intervals for horizons 1..h");
    app.get_subcommand("interval")->description("Quantile or pertinent prediction intervals");
    app.get_subcommand("experiment")->description("Replicated experiment; writes a metrics CSV and a manifest");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        emit_error(err, "parse", e.what());
        return 2;
    }

    try {
        const RunConfig run = assemble(raw, cfg, seed_opt->count() > 0);
        return run_command(run, out);
    } catch (const Error& e) {
        emit_error(err, to_string(e.kind()), e.what());
        return exit_code(e.kind());
    } catch (const std::exception& e) {
        emit_error(err, "internal", e.what());
        return 1;
    }
}

}  // namespace nlar
