#include "nlar/prediction.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "nlar/errors.hpp"
#include "nlar/kernels/kernels.hpp"
#include "nlar/kernels/reference.hpp"

namespace nlar {

std::string_view to_string(Loss loss) { return loss == Loss::L1 ? "L1" : "L2"; }

std::string_view to_string(EnsembleSource source) {
    switch (source) {
    case EnsembleSource::Oracle: return "oracle";
    case EnsembleSource::BootstrapFitted: return "bootstrap-fitted";
    case EnsembleSource::BootstrapPredictive: return "bootstrap-predictive";
    }
    return "unknown";
}

Loss parse_loss(const std::string& text) {
    if (text == "L1" || text == "l1") return Loss::L1;
    if (text == "L2" || text == "l2") return Loss::L2;
    throw ParseError("unknown loss '" + text + "' (expected L1 or L2)");
}

PredictiveEnsemble::PredictiveEnsemble(int horizon, std::size_t rows, std::vector<double> conditioning_lags,
                                       EnsembleSource source)
    : horizon_(horizon), rows_(rows), lags_(std::move(conditioning_lags)), source_(source),
      data_(static_cast<std::size_t>(horizon) * rows, 0.0) {
    if (horizon < 1) throw DomainError("ensemble horizon must be >= 1");
    if (rows < 1) throw DomainError("ensemble needs at least one row");
}

std::span<const double> PredictiveEnsemble::column(int k) const {
    if (k < 1 || k > horizon_) throw DomainError("horizon index out of range");
    return std::span<const double>(data_).subspan(static_cast<std::size_t>(k - 1) * rows_, rows_);
}

std::span<double> PredictiveEnsemble::column(int k) {
    if (k < 1 || k > horizon_) throw DomainError("horizon index out of range");
    return std::span<double>(data_).subspan(static_cast<std::size_t>(k - 1) * rows_, rows_);
}

std::vector<double> PredictiveEnsemble::row(std::size_t m) const {
    std::vector<double> r(static_cast<std::size_t>(horizon_));
    for (int k = 1; k <= horizon_; ++k) r[k - 1] = column(k)[m];
    return r;
}

void PredictiveEnsemble::write_csv(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    for (int k = 1; k <= horizon_; ++k) out << (k > 1 ? "," : "") << "h" << k;
    out << '\n' << std::setprecision(17);
    for (std::size_t m = 0; m < rows_; ++m) {
        for (int k = 1; k <= horizon_; ++k) out << (k > 1 ? "," : "") << column(k)[m];
        out << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

PredictiveEnsemble simulate_future(const ModelSpec& spec, const ModelParameters& theta, std::span<const double> lags,
                                   const InnovationDistribution& innov, int h, std::size_t M, RngStream& rng,
                                   EnsembleSource source) {
    if (h < 1) throw DomainError("horizon must be >= 1");
    if (M < 1) throw DomainError("ensemble size must be >= 1");
    if (lags.size() != static_cast<std::size_t>(spec.order)) throw DomainError("lag vector length must equal order");

    PredictiveEnsemble ens(h, M, std::vector<double>(lags.begin(), lags.end()), source);
    const auto hs = static_cast<std::size_t>(h);
    std::vector<double> eps(hs * M);
    innov.fill(rng.engine(), eps);

    const int p = spec.order;
    std::vector<std::vector<double>> constant_cols(static_cast<std::size_t>(p));
    std::vector<double> sigma(spec.heteroscedastic() ? M : 0);

    for (int k = 1; k <= h; ++k) {
        kernels::LagColumns cols;
        cols.order = p;
        cols.size = M;
        for (int j = 1; j <= p; ++j) {
            if (k - j >= 1) {
                cols.cols[j - 1] = ens.column(k - j).data();
            } else {
                auto& c = constant_cols[static_cast<std::size_t>(j - k)];
                if (c.empty()) c.assign(M, lags[static_cast<std::size_t>(j - k)]);
                cols.cols[j - 1] = c.data();
            }
        }
        std::span<double> out = ens.column(k);
        kernels::mean_batch(spec.mean, theta.mean, cols, out);
        if (spec.heteroscedastic()) {
            kernels::scale_batch(*spec.variance, theta.variance, cols, sigma);
            for (std::size_t m = 0; m < M; ++m) out[m] = out[m] + sigma[m] * eps[m * hs + (k - 1)];
        } else {
            for (std::size_t m = 0; m < M; ++m) out[m] = out[m] + eps[m * hs + (k - 1)];
        }
        for (std::size_t m = 0; m < M; ++m)
            if (!(std::fabs(out[m]) <= kExplosionBound)) throw ExplosionError(static_cast<std::size_t>(k), out[m]);
    }
    return ens;
}

double point_value(std::span<const double> sample, Loss loss) {
    if (sample.empty()) throw DomainError("empty sample");
    if (loss == Loss::L2) {
        // Shifted by the first draw so a constant sample returns that value exactly.
        const double pivot = sample.front();
        double s = 0.0;
        for (double v : sample) s += v - pivot;
        return pivot + s / static_cast<double>(sample.size());
    }
    std::vector<double> v(sample.begin(), sample.end());
    const std::size_t n = v.size();
    const std::size_t mid = n / 2;
    std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
    if (n % 2 == 1) return v[mid];
    const double upper = v[mid];
    const double lower = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
    return 0.5 * (lower + upper);
}

PointPrediction point_predict(const PredictiveEnsemble& ens, Loss loss, int horizon) {
    return {point_value(ens.column(horizon), loss), loss, horizon};
}

PointPrediction point_predict(const PredictiveEnsemble& ens, Loss loss, int horizon,
                              const std::function<double(double)>& f) {
    const auto col = ens.column(horizon);
    std::vector<double> mapped(col.size());
    std::transform(col.begin(), col.end(), mapped.begin(), f);
    return {point_value(mapped, loss), loss, horizon};
}

double order_statistic_quantile(std::span<const double> sorted, double q) {
    if (sorted.empty()) throw DomainError("empty sample");
    const double n = static_cast<double>(sorted.size());
    // The small offset keeps ranks like 0.05·100 = 5.000000000000001 at 5.
    double rank = std::ceil(q * n - 1e-9);
    rank = std::clamp(rank, 1.0, n);
    return sorted[static_cast<std::size_t>(rank) - 1];
}

QuantileInterval qpi(const PredictiveEnsemble& ens, double alpha, int horizon) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (ens.rows() < 2) throw DomainError("a quantile interval needs at least 2 ensemble rows");
    const auto col = ens.column(horizon);
    std::vector<double> sorted(col.begin(), col.end());
    std::sort(sorted.begin(), sorted.end());
    QuantileInterval qi;
    qi.lower = order_statistic_quantile(sorted, alpha / 2.0);
    qi.upper = order_statistic_quantile(sorted, 1.0 - alpha / 2.0);
    qi.level = 1.0 - alpha;
    qi.horizon = horizon;
    return qi;
}

std::vector<double> naive_path(const ModelSpec& spec, std::span<const double> theta1, std::span<const double> lags,
                               int h) {
    if (h < 1) throw DomainError("horizon must be >= 1");
    if (lags.size() != static_cast<std::size_t>(spec.order)) throw DomainError("lag vector length must equal order");
    const auto p = static_cast<std::size_t>(spec.order);
    std::vector<double> window(lags.begin(), lags.end());
    std::vector<double> out;
    for (int k = 1; k <= h; ++k) {
        const double x = kernels::reference::mean_point(spec.mean, theta1.data(), window.data());
        if (!(std::fabs(x) <= kExplosionBound)) throw ExplosionError(static_cast<std::size_t>(k), x);
        out.push_back(x);
        for (std::size_t j = p - 1; j > 0; --j) window[j] = window[j - 1];
        window[0] = x;
    }
    return out;
}

double naive_predict(const ModelSpec& spec, std::span<const double> theta1, std::span<const double> lags, int h) {
    return naive_path(spec, theta1, lags, h).back();
}

OraclePrediction oracle_predict(const ModelSpec& spec, const ModelParameters& truth, const TimeSeries& series,
                                const InnovationDistribution& innov, int h, std::size_t M, Loss loss, double alpha,
                                RngStream& rng) {
    PredictiveEnsemble ens =
        simulate_future(spec, truth, series.conditioning_lags(), innov, h, M, rng, EnsembleSource::Oracle);
    PointPrediction point = point_predict(ens, loss, h);
    QuantileInterval interval = qpi(ens, alpha, h);
    return {point, interval, std::move(ens)};
}

namespace {
/// Below this RMS a standardized residual set is treated as a point mass at 0.
constexpr double kDegenerateResidualRms = 1e-6;
}  // namespace

BootstrapModel prepare_bootstrap(const TimeSeries& series, const ModelSpec& spec, const FitResult& fit,
                                 ResidualKind kind, const FitOptions& opts) {
    BootstrapModel model;
    model.fit = fit;
    model.kind = kind;
    ResidualSet raw = kind == ResidualKind::Fitted ? fitted_residuals(series, spec, fit.parameters())
                                                   : predictive_residuals(series, spec, fit, opts);
    model.residuals = center(raw);
    if (spec.heteroscedastic() && std::sqrt(sample_variance(model.residuals.values)) > kDegenerateResidualRms)
        model.residuals = normalize(model.residuals);
    return model;
}

BootstrapModel prepare_bootstrap(const TimeSeries& series, const ModelSpec& spec, ResidualKind kind,
                                 const FitOptions& opts, RngStream& rng) {
    RngStream fit_rng = rng.child("fit");
    const FitResult fit = fit_model(series, spec, opts, fit_rng);
    return prepare_bootstrap(series, spec, fit, kind, opts);
}

PredictiveEnsemble bootstrap_ensemble(const TimeSeries& series, const ModelSpec& spec, const BootstrapModel& model,
                                      int h, std::size_t M, RngStream& rng) {
    const auto source =
        model.kind == ResidualKind::Fitted ? EnsembleSource::BootstrapFitted : EnsembleSource::BootstrapPredictive;
    return simulate_future(spec, model.fit.parameters(), series.conditioning_lags(), model.innovations(), h, M, rng,
                           source);
}

BootstrapPrediction bootstrap_predict(const TimeSeries& series, const ModelSpec& spec, ResidualKind kind, int h,
                                      std::size_t M, Loss loss, double alpha, const FitOptions& opts,
                                      RngStream& rng) {
    BootstrapModel model = prepare_bootstrap(series, spec, kind, opts, rng);
    RngStream sim_rng = rng.child("ensemble");
    PredictiveEnsemble ens = bootstrap_ensemble(series, spec, model, h, M, sim_rng);
    PointPrediction point = point_predict(ens, loss, h);
    QuantileInterval interval = qpi(ens, alpha, h);
    return {std::move(model.fit), std::move(model.residuals), point, interval, std::move(ens)};
}

}  // namespace nlar
