#include "nlar/intervals.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <optional>

#include "nlar/errors.hpp"
#include "nlar/parallel.hpp"

namespace nlar {

namespace {

std::size_t loss_slot(Loss loss) { return loss == Loss::L1 ? 0 : 1; }

double max_abs(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::fabs(x));
    return m;
}

bool abnormal(std::span<const double> v, double bound) {
    return std::any_of(v.begin(), v.end(), [bound](double x) { return !(std::fabs(x) <= bound); });
}

/// One attempt; returns nullopt when the draw is abnormal.
std::optional<ReplicateDraw> attempt_replicate(const TimeSeries& series, const ModelSpec& spec,
                                               const BootstrapModel& model, int H, std::size_t M,
                                               const FitOptions& fit_opts, const PpiOptions& opts, double bound,
                                               RngStream& rng) {
    const ModelParameters theta_hat = model.fit.parameters();
    try {
        RngStream pseudo_rng = rng.child("pseudo");
        TimeSeries pseudo = generate_pseudo_series(series, spec, theta_hat, model.residuals, pseudo_rng);
        if (abnormal(pseudo.values(), bound)) return std::nullopt;

        FitResult refit;
        if (opts.multistart_refit) {
            RngStream refit_rng = rng.child("refit");
            refit = fit_model(pseudo, spec, fit_opts, refit_rng);
        } else {
            refit = refit_warm(pseudo, spec, theta_hat, opts.refit_max_evaluations, fit_opts.warm_initial_step);
        }

        auto& values = pseudo.mutable_values();
        const auto obs = series.values();
        const std::size_t p = static_cast<std::size_t>(spec.order);
        std::copy(obs.end() - static_cast<std::ptrdiff_t>(p), obs.end(), values.end() - static_cast<std::ptrdiff_t>(p));

        ReplicateDraw draw;
        draw.theta_star = refit.parameters();
        const InnovationDistribution innov = model.innovations();
        const std::vector<double> lags = pseudo.conditioning_lags();

        RngStream future_rng = rng.child("future");
        draw.future = continue_path(spec, theta_hat, innov, lags, H, future_rng);
        if (abnormal(draw.future, bound)) return std::nullopt;

        RngStream inner_rng = rng.child("inner");
        const PredictiveEnsemble ens =
            simulate_future(spec, draw.theta_star, lags, innov, H, M, inner_rng, EnsembleSource::BootstrapFitted);
        for (Loss loss : {Loss::L1, Loss::L2}) {
            auto& inner = draw.inner[loss_slot(loss)];
            inner.resize(static_cast<std::size_t>(H));
            for (int h = 1; h <= H; ++h) inner[h - 1] = point_value(ens.column(h), loss);
            if (abnormal(inner, bound)) return std::nullopt;
        }
        draw.pseudo_series = std::move(pseudo);
        return draw;
    } catch (const FitError&) {
        return std::nullopt;
    } catch (const ExplosionError&) {
        return std::nullopt;
    } catch (const DomainError&) {
        return std::nullopt;
    }
}

}  // namespace

BootstrapReplicate ReplicateDraw::at(int h, Loss loss) const {
    if (h < 1 || h > static_cast<int>(future.size())) throw DomainError("horizon index out of range");
    BootstrapReplicate r;
    r.pseudo_series = pseudo_series;
    r.theta_star = theta_star;
    r.future_value = future[h - 1];
    r.inner_prediction = inner[loss_slot(loss)][h - 1];
    r.root = r.future_value - r.inner_prediction;
    return r;
}

long sample_start_index(std::size_t T, int order, RngStream& rng) {
    std::uniform_int_distribution<long> pick(-order + 1, static_cast<long>(T) - order + 1);
    return pick(rng.engine());
}

TimeSeries generate_pseudo_series(const TimeSeries& series, const ModelSpec& spec, const ModelParameters& theta_hat,
                                  const ResidualSet& residuals, RngStream& rng) {
    if (series.order() != spec.order) throw DomainError("series order does not match model order");
    if (residuals.values.empty()) throw DomainError("empty residual set");
    const std::size_t T = series.T();
    const int p = spec.order;
    const long I = sample_start_index(T, p, rng);
    const auto start = static_cast<std::size_t>(I + p - 1);
    const auto obs = series.values();

    std::vector<double> block(obs.begin() + static_cast<std::ptrdiff_t>(start),
                              obs.begin() + static_cast<std::ptrdiff_t>(start) + p);
    std::vector<double> lags(block.rbegin(), block.rend());
    const InnovationDistribution innov = InnovationDistribution::empirical(residuals.values);
    std::vector<double> tail = continue_path(spec, theta_hat, innov, lags, static_cast<int>(T), rng);
    block.insert(block.end(), tail.begin(), tail.end());
    return TimeSeries(p, std::move(block));
}

double inner_predict(const TimeSeries& aligned, const ModelSpec& spec, const ModelParameters& theta_star,
                     const ResidualSet& residuals, int h, std::size_t M, Loss loss, RngStream& rng) {
    const InnovationDistribution innov = InnovationDistribution::empirical(residuals.values);
    const PredictiveEnsemble ens = simulate_future(spec, theta_star, aligned.conditioning_lags(), innov, h, M, rng,
                                                   EnsembleSource::BootstrapFitted);
    return point_predict(ens, loss, h).value;
}

ReplicateDraw draw_replicate(const TimeSeries& series, const ModelSpec& spec, const BootstrapModel& model,
                             int max_horizon, std::size_t M, const FitOptions& fit_opts, const PpiOptions& opts,
                             const RngStream& rng) {
    if (max_horizon < 1) throw DomainError("horizon must be >= 1");
    const double bound = opts.abnormal_factor * (1.0 + max_abs(series.values()));
    for (int attempt = 0; attempt <= opts.max_retries; ++attempt) {
        RngStream stream = attempt == 0 ? rng : rng.child(static_cast<std::uint64_t>(attempt));
        auto draw = attempt_replicate(series, spec, model, max_horizon, M, fit_opts, opts, bound, stream);
        if (draw) {
            draw->attempts = attempt + 1;
            return std::move(*draw);
        }
    }
    throw FitError("bootstrap replicate stayed abnormal after " + std::to_string(opts.max_retries) + " retries");
}

RootSet::RootSet(int max_horizon, std::size_t K)
    : max_horizon_(max_horizon), K_(K), data_(2 * static_cast<std::size_t>(max_horizon) * K, 0.0) {
    if (max_horizon < 1) throw DomainError("horizon must be >= 1");
}

std::span<const double> RootSet::roots(Loss loss, int h) const {
    if (h < 1 || h > max_horizon_) throw DomainError("horizon index out of range");
    const std::size_t block = loss_slot(loss) * static_cast<std::size_t>(max_horizon_) + static_cast<std::size_t>(h - 1);
    return std::span<const double>(data_).subspan(block * K_, K_);
}

std::span<double> RootSet::roots(Loss loss, int h) {
    if (h < 1 || h > max_horizon_) throw DomainError("horizon index out of range");
    const std::size_t block = loss_slot(loss) * static_cast<std::size_t>(max_horizon_) + static_cast<std::size_t>(h - 1);
    return std::span<double>(data_).subspan(block * K_, K_);
}

RootSet bootstrap_roots(const TimeSeries& series, const ModelSpec& spec, const BootstrapModel& model, int max_horizon,
                        std::size_t M, std::size_t K, const FitOptions& fit_opts, const PpiOptions& opts,
                        const RngStream& rng) {
    if (K < 2) throw DomainError("PPI needs K >= 2 replicates");
    RootSet out(max_horizon, K);
    parallel_for(K, opts.workers, [&](std::size_t k) {
        const ReplicateDraw draw = draw_replicate(series, spec, model, max_horizon, M, fit_opts, opts,
                                                  rng.child(static_cast<std::uint64_t>(k)));
        for (Loss loss : {Loss::L1, Loss::L2})
            for (int h = 1; h <= max_horizon; ++h)
                out.roots(loss, h)[k] = draw.future[h - 1] - draw.inner[loss_slot(loss)][h - 1];
    });
    return out;
}

PertinentInterval assemble_ppi(double center, std::span<const double> roots, double alpha, Loss loss, int h) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    std::vector<double> sorted(roots.begin(), roots.end());
    std::sort(sorted.begin(), sorted.end());
    PertinentInterval pi;
    pi.center = center;
    pi.q_low = order_statistic_quantile(sorted, alpha / 2.0);
    pi.q_high = order_statistic_quantile(sorted, 1.0 - alpha / 2.0);
    pi.lower = center + pi.q_low;
    pi.upper = center + pi.q_high;
    pi.level = 1.0 - alpha;
    pi.loss = loss;
    pi.K = sorted.size();
    pi.horizon = h;
    return pi;
}

PertinentInterval ppi(const TimeSeries& series, const ModelSpec& spec, ResidualKind kind, int h, double alpha,
                      Loss loss, std::size_t M, std::size_t K, const FitOptions& fit_opts, RngStream& rng,
                      const PpiOptions& opts) {
    const BootstrapModel model = prepare_bootstrap(series, spec, kind, fit_opts, rng);
    RngStream center_rng = rng.child("center");
    const PredictiveEnsemble ens = bootstrap_ensemble(series, spec, model, h, M, center_rng);
    const double center = point_predict(ens, loss, h).value;
    const RootSet roots = bootstrap_roots(series, spec, model, h, M, K, fit_opts, opts, rng.child("roots"));
    return assemble_ppi(center, roots.roots(loss, h), alpha, loss, h);
}

void write_roots_csv(std::span<const double> roots, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "root\n" << std::setprecision(17);
    for (double r : roots) out << r << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace nlar
