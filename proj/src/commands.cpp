#include "nlar/commands.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "nlar/estimation.hpp"
#include "nlar/harness.hpp"
#include "nlar/intervals.hpp"
#include "nlar/prediction.hpp"

namespace nlar {

namespace {

using Json = nlohmann::ordered_json;

double round6(double x) { return std::round(x * 1e6) / 1e6; }

Json rounded(const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) a.push_back(round6(x));
    return a;
}

std::vector<Loss> losses_of(const RunConfig& cfg) {
    if (cfg.loss == "L1") return {Loss::L1};
    if (cfg.loss == "L2") return {Loss::L2};
    return {Loss::L2, Loss::L1};
}

ResidualKind kind_of(const RunConfig& cfg) {
    return cfg.residuals == "predictive" ? ResidualKind::Predictive : ResidualKind::Fitted;
}

struct Session {
    BuiltinModel model;
    std::uint64_t seed;
    RngStream root;
};

Session open_session(const RunConfig& cfg) {
    cfg.validate();
    const std::uint64_t seed = cfg.seed ? *cfg.seed : entropy_seed();
    return {cfg.resolve_model(), seed, RngStream(seed)};
}

TimeSeries load_or_simulate(const RunConfig& cfg, Session& s) {
    if (!cfg.data_path.empty()) return read_series_csv(cfg.data_path, s.model.spec.order);
    RngStream rng = s.root.child("data");
    return simulate_path(s.model.spec, s.model.truth, InnovationDistribution::parse(cfg.innovation), cfg.T,
                         cfg.burn_in, rng);
}

Json header(const RunConfig& cfg, const Session& s) {
    Json j;
    j["command"] = std::string(to_string(cfg.command));
    j["model"] = s.model.spec.label;
    j["seed"] = s.seed;
    return j;
}

void put_fit(Json& j, const FitResult& fit) {
    j["theta_hat"] = rounded(fit.theta1_hat);
    if (fit.theta2_hat) j["theta2_hat"] = rounded(*fit.theta2_hat);
}

std::string sibling(const std::string& path, const std::string& suffix) {
    const auto dot = path.rfind('.');
    const auto slash = path.rfind('/');
    const bool has_ext = dot != std::string::npos && (slash == std::string::npos || dot > slash);
    return (has_ext ? path.substr(0, dot) : path) + suffix;
}

}  // namespace

TimeSeries read_series_csv(const std::string& path, int order) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    std::vector<double> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::size_t used = 0;
        double v = 0.0;
        try {
            v = std::stod(line, &used);
        } catch (const std::exception&) {
            if (line_no == 1 && values.empty()) continue;  // header
            throw ParseError(path + ":" + std::to_string(line_no) + ": not a number");
        }
        if (line.find_first_not_of(" \t", used) != std::string::npos)
            throw ParseError(path + ":" + std::to_string(line_no) + ": expected a single column");
        if (!std::isfinite(v)) throw ParseError(path + ":" + std::to_string(line_no) + ": non-finite value");
        values.push_back(v);
    }
    if (values.size() < static_cast<std::size_t>(order) + 1)
        throw ParseError(path + ": need at least " + std::to_string(order + 1) + " observations");
    return TimeSeries(order, std::move(values));
}

void write_series_csv(const TimeSeries& series, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "x\n" << std::setprecision(17);
    for (double v : series.values()) out << v << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

int cmd_simulate(const RunConfig& cfg, std::ostream& out) {
    Session s = open_session(cfg);
    RngStream rng = s.root.child("data");
    const TimeSeries series = simulate_path(s.model.spec, s.model.truth, InnovationDistribution::parse(cfg.innovation),
                                            cfg.T, cfg.burn_in, rng);
    Json j = header(cfg, s);
    j["T"] = cfg.T;
    j["burn_in"] = cfg.burn_in;
    j["innovation"] = cfg.innovation;
    if (cfg.out_path.empty()) {
        j["series"] = std::vector<double>(series.values().begin(), series.values().end());
    } else {
        write_series_csv(series, cfg.out_path);
        j["out"] = cfg.out_path;
    }
    out << j.dump(2) << '\n';
    return 0;
}

int cmd_fit(const RunConfig& cfg, std::ostream& out) {
    Session s = open_session(cfg);
    const TimeSeries series = load_or_simulate(cfg, s);
    RngStream fit_rng = s.root.child("fit");
    const FitOptions opts;
    const FitResult fit = fit_model(series, s.model.spec, opts, fit_rng);
    Json j = header(cfg, s);
    j["T"] = series.T();
    put_fit(j, fit);
    j["loss_mean"] = fit.loss_mean;
    if (fit.loss_var) j["loss_var"] = *fit.loss_var;
    j["converged"] = fit.converged;
    j["evaluations"] = fit.evaluations;
    if (!cfg.out_path.empty()) {
        const ResidualSet r = kind_of(cfg) == ResidualKind::Fitted
                                  ? fitted_residuals(series, s.model.spec, fit.parameters())
                                  : predictive_residuals(series, s.model.spec, fit, opts);
        write_residuals_csv(r, cfg.out_path);
        j["residuals"] = cfg.residuals;
        j["out"] = cfg.out_path;
    }
    out << j.dump(2) << '\n';
    return 0;
}

int cmd_predict(const RunConfig& cfg, std::ostream& out) {
    Session s = open_session(cfg);
    const TimeSeries series = load_or_simulate(cfg, s);
    const bool oracle = !cfg.methods.empty() && cfg.methods.front() == "sim";
    Json j = header(cfg, s);
    j["T"] = series.T();
    j["method"] = oracle ? "sim" : "boot";

    RngStream ens_rng = s.root.child("ensemble");
    std::optional<PredictiveEnsemble> ens;
    if (oracle) {
        ens = simulate_future(s.model.spec, s.model.truth, series.conditioning_lags(),
                              InnovationDistribution::parse(cfg.innovation), cfg.horizon, cfg.M, ens_rng);
    } else {
        const FitOptions opts;
        const BootstrapModel bm = prepare_bootstrap(series, s.model.spec, kind_of(cfg), opts, s.root);
        j["residuals"] = cfg.residuals;
        put_fit(j, bm.fit);
        ens = bootstrap_ensemble(series, s.model.spec, bm, cfg.horizon, cfg.M, ens_rng);
    }
    j["M"] = cfg.M;
    j["level"] = 1.0 - cfg.alpha;
    Json rows = Json::array();
    for (int h = 1; h <= cfg.horizon; ++h) {
        Json row;
        row["horizon"] = h;
        for (Loss loss : losses_of(cfg)) row[std::string(to_string(loss))] = round6(point_predict(*ens, loss, h).value);
        const QuantileInterval qi = qpi(*ens, cfg.alpha, h);
        row["qpi_lower"] = round6(qi.lower);
        row["qpi_upper"] = round6(qi.upper);
        rows.push_back(row);
    }
    j["predictions"] = rows;
    if (!cfg.out_path.empty()) {
        ens->write_csv(cfg.out_path);
        j["out"] = cfg.out_path;
    }
    out << j.dump(2) << '\n';
    return 0;
}

int cmd_interval(const RunConfig& cfg, std::ostream& out) {
    Session s = open_session(cfg);
    const TimeSeries series = load_or_simulate(cfg, s);
    const bool pertinent = cfg.methods.empty() || cfg.methods.front() == "PPI";
    const FitOptions fit_opts;
    const BootstrapModel bm = prepare_bootstrap(series, s.model.spec, kind_of(cfg), fit_opts, s.root);
    RngStream ens_rng = s.root.child("ensemble");
    const PredictiveEnsemble ens = bootstrap_ensemble(series, s.model.spec, bm, cfg.horizon, cfg.M, ens_rng);

    Json j = header(cfg, s);
    j["T"] = series.T();
    j["method"] = pertinent ? "PPI" : "QPI";
    j["residuals"] = cfg.residuals;
    put_fit(j, bm.fit);
    j["level"] = 1.0 - cfg.alpha;
    j["M"] = cfg.M;
    Json rows = Json::array();
    if (pertinent) {
        j["K"] = cfg.K;
        PpiOptions opts;
        opts.multistart_refit = cfg.multistart_refit;
        opts.workers = cfg.workers;
        const RootSet roots =
            bootstrap_roots(series, s.model.spec, bm, cfg.horizon, cfg.M, cfg.K, fit_opts, opts, s.root.child("roots"));
        for (int h = 1; h <= cfg.horizon; ++h) {
            for (Loss loss : losses_of(cfg)) {
                const double center = point_value(ens.column(h), loss);
                const PertinentInterval pi = assemble_ppi(center, roots.roots(loss, h), cfg.alpha, loss, h);
                Json row;
                row["horizon"] = h;
                row["loss"] = std::string(to_string(loss));
                row["center"] = round6(pi.center);
                row["lower"] = round6(pi.lower);
                row["upper"] = round6(pi.upper);
                row["q_low"] = round6(pi.q_low);
                row["q_high"] = round6(pi.q_high);
                rows.push_back(row);
                if (!cfg.out_path.empty())
                    write_roots_csv(roots.roots(loss, h),
                                    sibling(cfg.out_path, ".h" + std::to_string(h) + "." +
                                                              std::string(to_string(loss)) + ".csv"));
            }
        }
    } else {
        for (int h = 1; h <= cfg.horizon; ++h) {
            const QuantileInterval qi = qpi(ens, cfg.alpha, h);
            Json row;
            row["horizon"] = h;
            row["lower"] = round6(qi.lower);
            row["upper"] = round6(qi.upper);
            rows.push_back(row);
        }
    }
    j["intervals"] = rows;
    out << j.dump(2) << '\n';
    return 0;
}

int cmd_experiment(const RunConfig& cfg, std::ostream& out) {
    cfg.validate();
    const std::uint64_t seed = cfg.seed ? *cfg.seed : entropy_seed();
    const ExperimentConfig ecfg = cfg.to_experiment(seed);
    const ExperimentResult result = run_experiment(ecfg);

    const std::string table_path = cfg.out_path.empty() ? "experiment.csv" : cfg.out_path;
    const std::string manifest_path = sibling(table_path, ".manifest.json");
    auto kv = cfg.to_key_values();
    kv["seed"] = std::to_string(seed);
    kv["command"] = "experiment";
    kv["out"] = table_path;
    write_experiment_outputs(ecfg, result, table_path, manifest_path, Json(kv).dump());

    for (const auto& [key, row] : result.table.rows()) {
        auto cell = [](const std::optional<double>& v) {
            if (!v) return std::string("-");
            std::ostringstream os;
            os << std::fixed << std::setprecision(6) << *v;
            return os.str();
        };
        out << key.first << " h=" << key.second << " msd=" << cell(row.msd) << " mspe=" << cell(row.mspe)
            << " cvr=" << cell(row.cvr) << " len=" << cell(row.len) << " n=" << row.n_effective << '\n';
    }
    if (result.n_effective == 0) throw FitError("every replication failed");
    return 0;
}

int run_command(const RunConfig& cfg, std::ostream& out) {
    switch (cfg.command) {
    case Command::Simulate: return cmd_simulate(cfg, out);
    case Command::Fit: return cmd_fit(cfg, out);
    case Command::Predict: return cmd_predict(cfg, out);
    case Command::Interval: return cmd_interval(cfg, out);
    case Command::Experiment: return cmd_experiment(cfg, out);
    }
    return 1;
}

int exit_code(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::Domain:
    case ErrorKind::Parse: return 2;
    case ErrorKind::Fit: return 3;
    case ErrorKind::Explosion: return 4;
    case ErrorKind::Io: return 5;
    }
    return 1;
}

}  // namespace nlar
