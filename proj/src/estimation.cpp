#include "nlar/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include "nlar/errors.hpp"
#include "nlar/kernels/kernels.hpp"
#include "nlar/kernels/reference.hpp"

namespace nlar {

namespace {

/// Σ over all regression pairs except `exclude`.
template <class Fn>
double sum_excluding(std::size_t T, std::optional<std::size_t> exclude, Fn&& partial) {
    if (!exclude) return partial(std::size_t{0}, T);
    const std::size_t e = *exclude;
    return partial(std::size_t{0}, e) + partial(e + 1, T - e - 1);
}

double count_excluding(std::size_t T, std::optional<std::size_t> exclude) {
    return static_cast<double>(exclude ? T - 1 : T);
}

void check_fit_input(const TimeSeries& series, const ModelSpec& spec) {
    if (series.order() != spec.order) throw FitError("series order does not match model order");
    if (series.T() <= spec.mean.parameter_count())
        throw FitError("series too short: T must exceed the number of mean parameters");
    const auto v = series.values();
    if (std::all_of(v.begin(), v.end(), [&](double x) { return x == v.front(); }))
        throw FitError("degenerate series: all values are identical");
}

std::vector<double> mean_residuals(const TimeSeries& series, const ModelSpec& spec, std::span<const double> theta1) {
    const auto lags = kernels::series_lags(series);
    std::vector<double> r(series.T());
    kernels::mean_batch(spec.mean, theta1, lags, r);
    const auto x = series.targets();
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = x[i] - r[i];
    return r;
}

class MeanObjective {
public:
    MeanObjective(const TimeSeries& series, const ModelSpec& spec, std::optional<std::size_t> exclude)
        : spec_(spec), lags_(kernels::series_lags(series)), target_(series.targets().data()), T_(series.T()),
          exclude_(exclude) {}

    double operator()(std::span<const double> theta) const {
        const double sse = sum_excluding(T_, exclude_, [&](std::size_t begin, std::size_t count) {
            if (count == 0) return 0.0;
            return kernels::sum_squared_error(spec_.mean, theta, lags_.slice(begin, count), target_ + begin);
        });
        return sse / count_excluding(T_, exclude_);
    }

private:
    const ModelSpec& spec_;
    kernels::LagColumns lags_;
    const double* target_;
    std::size_t T_;
    std::optional<std::size_t> exclude_;
};

class VarianceObjective {
public:
    VarianceObjective(const TimeSeries& series, const ModelSpec& spec, std::span<const double> theta1,
                      std::optional<std::size_t> exclude)
        : spec_(spec), lags_(kernels::series_lags(series)), resid_(mean_residuals(series, spec, theta1)),
          T_(series.T()), exclude_(exclude) {}

    double operator()(std::span<const double> theta2) const {
        const double s = sum_excluding(T_, exclude_, [&](std::size_t begin, std::size_t count) {
            if (count == 0) return 0.0;
            return kernels::sum_squared_scaled(*spec_.variance, theta2, lags_.slice(begin, count),
                                               resid_.data() + begin);
        });
        return std::fabs(s / count_excluding(T_, exclude_) - 1.0);
    }

private:
    const ModelSpec& spec_;
    kernels::LagColumns lags_;
    std::vector<double> resid_;
    std::size_t T_;
    std::optional<std::size_t> exclude_;
};

/// Mean square of the targets plus one; the yardstick for rounding-level losses.
double target_scale(const TimeSeries& series) {
    double s = 0.0;
    for (double x : series.targets()) s += x * x;
    return 1.0 + s / static_cast<double>(series.T());
}

/// Solves the small dense system a·x = b in place (partial pivoting); a is n×n row-major.
bool solve_dense(std::vector<double>& a, std::vector<double>& b, std::size_t n) {
    for (std::size_t c = 0; c < n; ++c) {
        std::size_t piv = c;
        for (std::size_t r = c + 1; r < n; ++r)
            if (std::fabs(a[r * n + c]) > std::fabs(a[piv * n + c])) piv = r;
        if (!(std::fabs(a[piv * n + c]) > 0.0)) return false;
        if (piv != c) {
            for (std::size_t k = 0; k < n; ++k) std::swap(a[c * n + k], a[piv * n + k]);
            std::swap(b[c], b[piv]);
        }
        for (std::size_t r = c + 1; r < n; ++r) {
            const double f = a[r * n + c] / a[c * n + c];
            for (std::size_t k = c; k < n; ++k) a[r * n + k] -= f * a[c * n + k];
            b[r] -= f * b[c];
        }
    }
    for (std::size_t c = n; c-- > 0;) {
        double acc = b[c];
        for (std::size_t k = c + 1; k < n; ++k) acc -= a[c * n + k] * b[k];
        b[c] = acc / a[c * n + c];
    }
    return true;
}

/// Gauss-Newton refinement of a Nelder-Mead least-squares estimate. A step is
/// kept only when it strictly lowers the loss, so the result is never worse;
/// on exactly generated data it reaches the zero-residual parameter.
void gauss_newton_polish(const TimeSeries& series, const ModelSpec& spec, const MeanObjective& objective,
                         std::optional<std::size_t> exclude, OptimizerResult& best) {
    constexpr int kMaxSteps = 25;
    const Box& box = spec.theta1_domain;
    const std::size_t d = best.x.size();
    const std::size_t n = series.T();
    const auto lags = kernels::series_lags(series);
    const auto y = series.targets();
    std::vector<double> pred(n), plus(n), minus(n), jac(n * d), probe(d);

    for (int step = 0; step < kMaxSteps && best.value > 0.0; ++step) {
        const std::vector<double>& theta = best.x;
        kernels::mean_batch(spec.mean, theta, lags, pred);
        for (std::size_t j = 0; j < d; ++j) {
            const double h = 1e-6 * std::max(1.0, std::fabs(theta[j]));
            const double hi = std::min(theta[j] + h, box.upper[j]);
            const double lo = std::max(theta[j] - h, box.lower[j]);
            probe = theta;
            probe[j] = hi;
            kernels::mean_batch(spec.mean, probe, lags, plus);
            probe[j] = lo;
            kernels::mean_batch(spec.mean, probe, lags, minus);
            const double width = hi - lo;
            for (std::size_t i = 0; i < n; ++i) jac[i * d + j] = width > 0.0 ? (plus[i] - minus[i]) / width : 0.0;
        }
        std::vector<double> normal(d * d, 0.0), rhs(d, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (exclude && *exclude == i) continue;
            const double r = y[i] - pred[i];
            for (std::size_t a = 0; a < d; ++a) {
                rhs[a] += jac[i * d + a] * r;
                for (std::size_t b = 0; b < d; ++b) normal[a * d + b] += jac[i * d + a] * jac[i * d + b];
            }
        }
        // Parameters the data do not inform (an unvisited regime) get a zero step.
        for (std::size_t a = 0; a < d; ++a)
            if (normal[a * d + a] == 0.0) normal[a * d + a] = 1.0;
        if (!solve_dense(normal, rhs, d)) return;

        std::vector<double> next(d);
        for (std::size_t j = 0; j < d; ++j) next[j] = std::clamp(theta[j] + rhs[j], box.lower[j], box.upper[j]);
        if (next == theta) return;
        const double value = objective(next);
        if (!(value < best.value)) return;
        best.x = std::move(next);
        best.value = value;
    }
}

/// Pattern search in units of ulps, run once the loss is at rounding level.
/// An exactly generated series has a zero-loss parameter a few ulps away from
/// where Gauss-Newton stalls; steps are kept only on strict improvement.
void ulp_polish(const ModelSpec& spec, const MeanObjective& objective, double scale, OptimizerResult& best) {
    constexpr double kRoundingLevel = 1e-26;
    if (!(best.value > 0.0) || best.value > kRoundingLevel * scale) return;
    const Box& box = spec.theta1_domain;
    for (int sweep = 0; sweep < 50 && best.value > 0.0; ++sweep) {
        bool moved = false;
        for (std::size_t j = 0; j < best.x.size(); ++j) {
            for (int ulps : {64, 16, 4, 1}) {
                for (double dir : {1.0, -1.0}) {
                    std::vector<double> trial = best.x;
                    double v = trial[j];
                    for (int k = 0; k < ulps; ++k) v = std::nextafter(v, dir * std::numeric_limits<double>::infinity());
                    trial[j] = std::clamp(v, box.lower[j], box.upper[j]);
                    const double value = objective(trial);
                    if (value < best.value) {
                        best.x = std::move(trial);
                        best.value = value;
                        moved = true;
                    }
                }
            }
        }
        // Coupled parameters can need simultaneous one-ulp moves.
        for (std::size_t i = 0; i < best.x.size(); ++i) {
            for (std::size_t j = i + 1; j < best.x.size(); ++j) {
                for (double di : {1.0, -1.0}) {
                    for (double dj : {1.0, -1.0}) {
                        std::vector<double> trial = best.x;
                        trial[i] = std::clamp(std::nextafter(trial[i], di * std::numeric_limits<double>::infinity()),
                                              box.lower[i], box.upper[i]);
                        trial[j] = std::clamp(std::nextafter(trial[j], dj * std::numeric_limits<double>::infinity()),
                                              box.lower[j], box.upper[j]);
                        const double value = objective(trial);
                        if (value < best.value) {
                            best.x = std::move(trial);
                            best.value = value;
                            moved = true;
                        }
                    }
                }
            }
        }
        if (!moved) return;
    }
}

OptimizerResult fit_mean_impl(const TimeSeries& series, const ModelSpec& spec, const FitOptions& opts,
                              RngStream& rng) {
    check_fit_input(series, spec);
    const MeanObjective objective(series, spec, std::nullopt);
    OptimizerResult best = minimize_multistart(std::cref(objective), spec.theta1_domain, opts.optimizer, rng);
    gauss_newton_polish(series, spec, objective, std::nullopt, best);
    ulp_polish(spec, objective, target_scale(series), best);
    return best;
}

OptimizerResult fit_variance_impl(const TimeSeries& series, const ModelSpec& spec, std::span<const double> theta1_hat,
                                  const FitOptions& opts, RngStream& rng) {
    if (!spec.heteroscedastic()) throw FitError("fit_variance needs a heteroscedastic model");
    if (series.order() != spec.order) throw FitError("series order does not match model order");
    const VarianceObjective objective(series, spec, theta1_hat, std::nullopt);
    return minimize_multistart(std::cref(objective), *spec.theta2_domain, opts.optimizer, rng);
}

}  // namespace

double mean_loss(const TimeSeries& series, const ModelSpec& spec, std::span<const double> theta1,
                 std::optional<std::size_t> exclude) {
    return MeanObjective(series, spec, exclude)(theta1);
}

double variance_loss(const TimeSeries& series, const ModelSpec& spec, std::span<const double> theta1,
                     std::span<const double> theta2, std::optional<std::size_t> exclude) {
    if (!spec.heteroscedastic()) throw DomainError("model is homoscedastic");
    return VarianceObjective(series, spec, theta1, exclude)(theta2);
}

std::vector<double> fit_mean(const TimeSeries& series, const ModelSpec& spec, const FitOptions& opts,
                             RngStream& rng) {
    return fit_mean_impl(series, spec, opts, rng).x;
}

std::vector<double> fit_variance(const TimeSeries& series, const ModelSpec& spec, std::span<const double> theta1_hat,
                                 const FitOptions& opts, RngStream& rng) {
    return fit_variance_impl(series, spec, theta1_hat, opts, rng).x;
}

FitResult fit_model(const TimeSeries& series, const ModelSpec& spec, const FitOptions& opts, RngStream& rng) {
    RngStream mean_rng = rng.child("mean");
    const OptimizerResult mean_fit = fit_mean_impl(series, spec, opts, mean_rng);
    FitResult out;
    out.theta1_hat = mean_fit.x;
    out.loss_mean = mean_fit.value;
    out.converged = mean_fit.converged;
    out.evaluations = mean_fit.evaluations;
    if (spec.heteroscedastic()) {
        RngStream var_rng = rng.child("variance");
        const OptimizerResult var_fit = fit_variance_impl(series, spec, out.theta1_hat, opts, var_rng);
        out.theta2_hat = var_fit.x;
        out.loss_var = var_fit.value;
        out.converged = out.converged && var_fit.converged;
        out.evaluations += var_fit.evaluations;
    }
    return out;
}

FitResult refit_warm(const TimeSeries& series, const ModelSpec& spec, const ModelParameters& start,
                     int max_evaluations, double initial_step, std::optional<std::size_t> exclude) {
    check_fit_input(series, spec);
    const MeanObjective mean_objective(series, spec, exclude);
    OptimizerResult mean_fit = nelder_mead(std::cref(mean_objective), spec.theta1_domain, start.mean, initial_step,
                                           max_evaluations, 1e-8);
    gauss_newton_polish(series, spec, mean_objective, exclude, mean_fit);
    ulp_polish(spec, mean_objective, target_scale(series), mean_fit);
    FitResult out;
    out.theta1_hat = mean_fit.x;
    out.loss_mean = mean_fit.value;
    out.converged = mean_fit.converged;
    out.evaluations = mean_fit.evaluations;
    if (spec.heteroscedastic()) {
        const VarianceObjective var_objective(series, spec, out.theta1_hat, exclude);
        const OptimizerResult var_fit = nelder_mead(std::cref(var_objective), *spec.theta2_domain, start.variance,
                                                    initial_step, max_evaluations, 1e-8);
        out.theta2_hat = var_fit.x;
        out.loss_var = var_fit.value;
        out.converged = out.converged && var_fit.converged;
        out.evaluations += var_fit.evaluations;
    }
    return out;
}

std::string_view to_string(ResidualKind kind) { return kind == ResidualKind::Fitted ? "fitted" : "predictive"; }

ResidualSet fitted_residuals(const TimeSeries& series, const ModelSpec& spec, const ModelParameters& theta_hat) {
    if (!spec.theta1_domain.contains(theta_hat.mean)) throw DomainError("theta1 outside its domain");
    ResidualSet out;
    out.kind = ResidualKind::Fitted;
    out.values = mean_residuals(series, spec, theta_hat.mean);
    if (spec.heteroscedastic()) {
        if (!spec.theta2_domain->contains(theta_hat.variance)) throw DomainError("theta2 outside its domain");
        std::vector<double> sigma(series.T());
        kernels::scale_batch(*spec.variance, theta_hat.variance, kernels::series_lags(series), sigma);
        for (std::size_t i = 0; i < sigma.size(); ++i) {
            if (!(sigma[i] > 0.0)) throw FitError("variance function is non-positive at t = " + std::to_string(i + 1));
            out.values[i] /= sigma[i];
        }
    }
    return out;
}

ResidualSet predictive_residuals(const TimeSeries& series, const ModelSpec& spec, const FitResult& full_fit,
                                 const FitOptions& opts) {
    const std::size_t T = series.T();
    if (T <= spec.mean.parameter_count() + 1) throw FitError("series too short for delete-one refits");
    ResidualSet out;
    out.kind = ResidualKind::Predictive;
    out.values.resize(T);
    const ModelParameters start = full_fit.parameters();
    double lags[kMaxOrder];
    for (std::size_t i = 0; i < T; ++i) {
        FitResult loo;
        try {
            loo = refit_warm(series, spec, start, opts.warm_max_evaluations, opts.warm_initial_step, i);
        } catch (const FitError& e) {
            throw FitError("delete-one refit failed at t = " + std::to_string(i + 1) + ": " + e.what());
        }
        for (int j = 0; j < spec.order; ++j) lags[j] = series.lag(j + 1)[i];
        double r = series.targets()[i] - kernels::reference::mean_point(spec.mean, loo.theta1_hat.data(), lags);
        if (spec.heteroscedastic()) {
            const double s = kernels::reference::scale_point(*spec.variance, loo.theta2_hat->data(), lags);
            if (!(s > 0.0)) throw FitError("variance function is non-positive at t = " + std::to_string(i + 1));
            r /= s;
        }
        out.values[i] = r;
    }
    return out;
}

ResidualSet predictive_residuals(const TimeSeries& series, const ModelSpec& spec, const FitOptions& opts,
                                 RngStream& rng) {
    const FitResult full = fit_model(series, spec, opts, rng);
    return predictive_residuals(series, spec, full, opts);
}

double sample_mean(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_variance(std::span<const double> v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size());
}

ResidualSet center(const ResidualSet& residuals) {
    if (residuals.centered) return residuals;
    ResidualSet out = residuals;
    const double m = sample_mean(out.values);
    for (double& v : out.values) v -= m;
    out.centered = true;
    return out;
}

ResidualSet normalize(const ResidualSet& residuals) {
    if (residuals.normalized) return residuals;
    if (!residuals.centered) throw DomainError("normalize expects centered residuals");
    const double var = sample_variance(residuals.values);
    if (!(var > 0.0)) throw DomainError("cannot normalize residuals with zero variance");
    ResidualSet out = residuals;
    const double sd = std::sqrt(var);
    for (double& v : out.values) v /= sd;
    out.normalized = true;
    return out;
}

ResidualSet smooth(const ResidualSet& residuals, double xi, RngStream& rng) {
    if (!(xi > 0.0)) throw DomainError("smoothing variance must be positive");
    ResidualSet out = residuals;
    std::normal_distribution<double> noise(0.0, std::sqrt(xi));
    for (double& v : out.values) v += noise(rng.engine());
    out.smoothing_sd = std::sqrt(residuals.smoothing_sd * residuals.smoothing_sd + xi);
    return out;
}

double ecdf_sup_distance(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw DomainError("ecdf_sup_distance needs non-empty samples");
    std::vector<double> x(a.begin(), a.end()), y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    const double na = static_cast<double>(x.size());
    const double nb = static_cast<double>(y.size());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() || j < y.size()) {
        double v;
        if (j == y.size() || (i < x.size() && x[i] <= y[j])) v = x[i];
        else v = y[j];
        while (i < x.size() && x[i] == v) ++i;
        while (j < y.size() && y[j] == v) ++j;
        d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

void write_residuals_csv(const ResidualSet& residuals, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "residual\n" << std::setprecision(17);
    for (double v : residuals.values) out << v << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace nlar
