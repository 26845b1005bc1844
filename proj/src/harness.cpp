#include "nlar/harness.hpp"

#include <algorithm>
#include <array>
#include <chrono>
#include <fstream>
#include <optional>

#include <json.hpp>

#include "nlar/errors.hpp"
#include "nlar/parallel.hpp"
#include "nlar/prediction.hpp"

namespace nlar {

namespace {

struct MethodInfo {
    Method method;
    std::string_view name;
    bool interval;
};

constexpr std::array<MethodInfo, 13> kMethods{{
    {Method::SPI, "SPI", true},
    {Method::QpiF, "QPI-f", true},
    {Method::QpiP, "QPI-p", true},
    {Method::L2PpiF, "L2-PPI-f", true},
    {Method::L2PpiP, "L2-PPI-p", true},
    {Method::L1PpiF, "L1-PPI-f", true},
    {Method::L1PpiP, "L1-PPI-p", true},
    {Method::L2Sim, "L2-Sim", false},
    {Method::L1Sim, "L1-Sim", false},
    {Method::L2Boot, "L2-Boot", false},
    {Method::L1Boot, "L1-Boot", false},
    {Method::TrueNaive, "TrueNaive", false},
    {Method::EstNaive, "EstNaive", false},
}};

const MethodInfo& info(Method m) {
    for (const auto& i : kMethods)
        if (i.method == m) return i;
    throw DomainError("unknown method");
}

/// Per-replication values, laid out [method slot][horizon − 1].
struct Outcome {
    bool ok = false;
    std::vector<double> point;
    std::vector<double> lower;
    std::vector<double> upper;
    std::vector<double> truth;
};

/// Lazily built pieces of one replication. Each piece draws from its own
/// tagged sub-stream so that requesting more methods never changes the draws
/// of the others.
class Replication {
public:
    Replication(const ExperimentConfig& cfg, const BuiltinModel& model, const RngStream& stream)
        : cfg_(cfg), model_(model), stream_(stream), H_(cfg.max_horizon()) {
        RngStream path_rng = stream_.child("path");
        series_ = simulate_path(model_.spec, model_.truth, cfg_.innovation, cfg_.T, cfg_.burn_in, path_rng);
        future_ = continue_path(model_.spec, model_.truth, cfg_.innovation, series_.conditioning_lags(), H_, path_rng);
    }

    const std::vector<double>& future() const { return future_; }

    /// Fills point[h−1] or lower/upper[h−1] for every horizon 1..H.
    void evaluate(Method m, std::span<double> point, std::span<double> lower, std::span<double> upper) {
        const auto lags = series_.conditioning_lags();
        switch (m) {
        case Method::L2Sim:
        case Method::L1Sim:
            for_points(sim(), m == Method::L2Sim ? Loss::L2 : Loss::L1, point);
            return;
        case Method::L2Boot:
        case Method::L1Boot:
            for_points(boot(ResidualKind::Fitted), m == Method::L2Boot ? Loss::L2 : Loss::L1, point);
            return;
        case Method::TrueNaive: {
            const auto path = naive_path(model_.spec, model_.truth.mean, lags, H_);
            std::copy(path.begin(), path.end(), point.begin());
            return;
        }
        case Method::EstNaive: {
            const auto path = naive_path(model_.spec, fit().theta1_hat, lags, H_);
            std::copy(path.begin(), path.end(), point.begin());
            return;
        }
        case Method::SPI:
            for_quantiles(sim(), lower, upper);
            return;
        case Method::QpiF:
            for_quantiles(boot(ResidualKind::Fitted), lower, upper);
            return;
        case Method::QpiP:
            for_quantiles(boot(ResidualKind::Predictive), lower, upper);
            return;
        case Method::L2PpiF:
        case Method::L1PpiF:
        case Method::L2PpiP:
        case Method::L1PpiP: {
            const bool fitted = m == Method::L2PpiF || m == Method::L1PpiF;
            const Loss loss = (m == Method::L2PpiF || m == Method::L2PpiP) ? Loss::L2 : Loss::L1;
            const ResidualKind kind = fitted ? ResidualKind::Fitted : ResidualKind::Predictive;
            const PredictiveEnsemble& center_ens = boot(kind);
            const RootSet& roots = ppi_roots(kind);
            for (int h = 1; h <= H_; ++h) {
                const double center = point_value(center_ens.column(h), loss);
                const PertinentInterval pi = assemble_ppi(center, roots.roots(loss, h), cfg_.alpha, loss, h);
                lower[h - 1] = pi.lower;
                upper[h - 1] = pi.upper;
            }
            return;
        }
        }
    }

private:
    static void for_points(const PredictiveEnsemble& ens, Loss loss, std::span<double> point) {
        for (int h = 1; h <= ens.horizon(); ++h) point[h - 1] = point_value(ens.column(h), loss);
    }

    void for_quantiles(const PredictiveEnsemble& ens, std::span<double> lower, std::span<double> upper) const {
        for (int h = 1; h <= ens.horizon(); ++h) {
            const QuantileInterval qi = qpi(ens, cfg_.alpha, h);
            lower[h - 1] = qi.lower;
            upper[h - 1] = qi.upper;
        }
    }

    const FitResult& fit() {
        if (!fit_) {
            RngStream rng = stream_.child("fit");
            fit_ = fit_model(series_, model_.spec, cfg_.fit, rng);
        }
        return *fit_;
    }

    const BootstrapModel& bootstrap_model(ResidualKind kind) {
        auto& slot = kind == ResidualKind::Fitted ? model_f_ : model_p_;
        if (!slot) slot = prepare_bootstrap(series_, model_.spec, fit(), kind, cfg_.fit);
        return *slot;
    }

    const PredictiveEnsemble& sim() {
        if (!sim_) {
            RngStream rng = stream_.child("sim");
            sim_ = simulate_future(model_.spec, model_.truth, series_.conditioning_lags(), cfg_.innovation, H_,
                                   cfg_.M, rng, EnsembleSource::Oracle);
        }
        return *sim_;
    }

    const PredictiveEnsemble& boot(ResidualKind kind) {
        auto& slot = kind == ResidualKind::Fitted ? boot_f_ : boot_p_;
        if (!slot) {
            RngStream rng = stream_.child(kind == ResidualKind::Fitted ? "boot-f" : "boot-p");
            slot = bootstrap_ensemble(series_, model_.spec, bootstrap_model(kind), H_, cfg_.M, rng);
        }
        return *slot;
    }

    const RootSet& ppi_roots(ResidualKind kind) {
        auto& slot = kind == ResidualKind::Fitted ? roots_f_ : roots_p_;
        if (!slot) {
            PpiOptions opts = cfg_.ppi;
            opts.workers = 1;
            slot = bootstrap_roots(series_, model_.spec, bootstrap_model(kind), H_, cfg_.M, cfg_.K, cfg_.fit, opts,
                                   stream_.child(kind == ResidualKind::Fitted ? "ppi-f" : "ppi-p"));
        }
        return *slot;
    }

    const ExperimentConfig& cfg_;
    const BuiltinModel& model_;
    RngStream stream_;
    int H_;
    TimeSeries series_;
    std::vector<double> future_;
    std::optional<FitResult> fit_;
    std::optional<BootstrapModel> model_f_, model_p_;
    std::optional<PredictiveEnsemble> sim_, boot_f_, boot_p_;
    std::optional<RootSet> roots_f_, roots_p_;
};

struct Accumulator {
    double sq_error = 0.0;
    double sq_diff = 0.0;
    double covered = 0.0;
    double width = 0.0;
};

}  // namespace

std::string_view method_name(Method m) { return info(m).name; }

Method parse_method(std::string_view name) {
    for (const auto& i : kMethods)
        if (i.name == name) return i.method;
    throw ParseError("unknown method '" + std::string(name) + "'");
}

const std::vector<Method>& all_methods() {
    static const std::vector<Method> methods = [] {
        std::vector<Method> v;
        for (const auto& i : kMethods) v.push_back(i.method);
        return v;
    }();
    return methods;
}

bool is_interval_method(Method m) { return info(m).interval; }

void ExperimentConfig::validate() const {
    if (N < 1) throw DomainError("experiment needs N >= 1");
    if (T < 1) throw DomainError("experiment needs T >= 1");
    if (M < 2) throw DomainError("experiment needs M >= 2");
    if (horizons.empty()) throw DomainError("experiment needs at least one horizon");
    if (methods.empty()) throw DomainError("experiment needs at least one method");
    for (int h : horizons)
        if (h < 1) throw DomainError("horizons must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const bool needs_roots = std::any_of(methods.begin(), methods.end(), [](Method m) {
        return m == Method::L2PpiF || m == Method::L2PpiP || m == Method::L1PpiF || m == Method::L1PpiP;
    });
    if (needs_roots && K < 2) throw DomainError("PPI methods need K >= 2");
    resolve_model().spec.validate();
}

BuiltinModel ExperimentConfig::resolve_model() const { return custom_model ? *custom_model : builtin_model(model_id); }

int ExperimentConfig::max_horizon() const { return *std::max_element(horizons.begin(), horizons.end()); }

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    const auto started = std::chrono::steady_clock::now();
    const BuiltinModel model = cfg.resolve_model();
    const int H = cfg.max_horizon();
    const std::size_t n_methods = cfg.methods.size();
    const auto cells = n_methods * static_cast<std::size_t>(H);

    std::vector<Outcome> outcomes(cfg.N);
    const RngStream master(cfg.master_seed);
    parallel_for(cfg.N, cfg.workers, [&](std::size_t n) {
        Outcome& out = outcomes[n];
        try {
            Replication rep(cfg, model, master.child(static_cast<std::uint64_t>(n)));
            out.point.assign(cells, 0.0);
            out.lower.assign(cells, 0.0);
            out.upper.assign(cells, 0.0);
            for (std::size_t i = 0; i < n_methods; ++i) {
                const auto at = i * static_cast<std::size_t>(H);
                rep.evaluate(cfg.methods[i], std::span(out.point).subspan(at, H),
                             std::span(out.lower).subspan(at, H), std::span(out.upper).subspan(at, H));
            }
            out.truth = rep.future();
            out.ok = true;
        } catch (const Error&) {
            out = Outcome{};
        }
    });

    auto slot_of = [&](Method m) -> std::optional<std::size_t> {
        const auto it = std::find(cfg.methods.begin(), cfg.methods.end(), m);
        if (it == cfg.methods.end()) return std::nullopt;
        return static_cast<std::size_t>(it - cfg.methods.begin());
    };
    const auto l2_sim = slot_of(Method::L2Sim);
    const auto l1_sim = slot_of(Method::L1Sim);

    std::vector<Accumulator> acc(cells);
    ExperimentResult result;
    for (const Outcome& out : outcomes) {
        if (!out.ok) {
            ++result.n_failed;
            continue;
        }
        ++result.n_effective;
        for (std::size_t i = 0; i < n_methods; ++i) {
            const Method m = cfg.methods[i];
            std::optional<std::size_t> partner;
            if (m == Method::L2Boot) partner = l2_sim;
            if (m == Method::L1Boot) partner = l1_sim;
            for (int h = 1; h <= H; ++h) {
                const std::size_t c = i * static_cast<std::size_t>(H) + static_cast<std::size_t>(h - 1);
                const double x = out.truth[h - 1];
                Accumulator& a = acc[c];
                if (is_interval_method(m)) {
                    a.covered += (out.lower[c] <= x && x <= out.upper[c]) ? 1.0 : 0.0;
                    a.width += out.upper[c] - out.lower[c];
                } else {
                    const double e = x - out.point[c];
                    a.sq_error += e * e;
                    if (partner) {
                        const double d =
                            out.point[*partner * static_cast<std::size_t>(H) + static_cast<std::size_t>(h - 1)] -
                            out.point[c];
                        a.sq_diff += d * d;
                    }
                }
            }
        }
    }

    const double n = static_cast<double>(result.n_effective);
    for (std::size_t i = 0; i < n_methods; ++i) {
        const Method m = cfg.methods[i];
        const bool paired = (m == Method::L2Boot && l2_sim) || (m == Method::L1Boot && l1_sim);
        for (int h : cfg.horizons) {
            MetricsRow& row = result.table.at(std::string(method_name(m)), h);
            row.n_effective = result.n_effective;
            if (result.n_effective == 0) continue;
            const Accumulator& a = acc[i * static_cast<std::size_t>(H) + static_cast<std::size_t>(h - 1)];
            if (is_interval_method(m)) {
                row.cvr = a.covered / n;
                row.len = a.width / n;
            } else {
                row.mspe = a.sq_error / n;
                if (paired) row.msd = a.sq_diff / n;
            }
        }
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

namespace {

ExperimentConfig restricted(const ExperimentConfig& cfg, bool intervals) {
    ExperimentConfig out = cfg;
    out.methods.clear();
    for (Method m : cfg.methods)
        if (is_interval_method(m) == intervals) out.methods.push_back(m);
    if (out.methods.empty())
        throw DomainError(intervals ? "no interval methods requested" : "no point-prediction methods requested");
    return out;
}

}  // namespace

MetricsTable run_point_experiment(const ExperimentConfig& cfg) { return run_experiment(restricted(cfg, false)).table; }

MetricsTable run_coverage_experiment(const ExperimentConfig& cfg) {
    return run_experiment(restricted(cfg, true)).table;
}

std::string config_to_json(const ExperimentConfig& cfg) {
    nlohmann::ordered_json j;
    j["model"] = cfg.custom_model ? cfg.custom_model->spec.label : cfg.model_id;
    j["T"] = cfg.T;
    j["N"] = cfg.N;
    j["M"] = cfg.M;
    j["K"] = cfg.K;
    j["horizons"] = cfg.horizons;
    j["alpha"] = cfg.alpha;
    j["innovation"] = cfg.innovation.describe();
    std::vector<std::string> methods;
    for (Method m : cfg.methods) methods.emplace_back(method_name(m));
    j["methods"] = methods;
    j["burn_in"] = cfg.burn_in;
    j["seed"] = cfg.master_seed;
    j["workers"] = cfg.workers;
    return j.dump();
}

void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                              const std::string& table_path, const std::string& manifest_path,
                              const std::string& config_echo) {
    export_table(result.table, table_path);
    nlohmann::ordered_json manifest;
    try {
        manifest["config"] = nlohmann::ordered_json::parse(config_echo.empty() ? config_to_json(cfg) : config_echo);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("config echo is not valid JSON: ") + e.what());
    }
    manifest["table"] = table_path;
    manifest["n_effective"] = result.n_effective;
    manifest["n_failed"] = result.n_failed;
    manifest["wall_seconds"] = result.wall_seconds;
    std::ofstream out(manifest_path, std::ios::binary);
    if (!out) throw IoError("cannot open '" + manifest_path + "' for writing");
    out << manifest.dump(2) << '\n';
    if (!out) throw IoError("failed writing '" + manifest_path + "'");
}

}  // namespace nlar
