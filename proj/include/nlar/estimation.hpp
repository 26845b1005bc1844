#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlar/model.hpp"
#include "nlar/optimizer.hpp"
#include "nlar/random.hpp"

namespace nlar {

struct FitOptions {
    OptimizerOptions optimizer;
    /// Evaluation cap for warm-started refits (delete-one and bootstrap refits).
    int warm_max_evaluations = 500;
    /// Initial simplex edge for warm starts, as a fraction of the box width.
    double warm_initial_step = 0.02;
};

struct FitResult {
    std::vector<double> theta1_hat;
    std::optional<std::vector<double>> theta2_hat;
    double loss_mean = 0.0;  ///< L_T(θ̂1)
    std::optional<double> loss_var;  ///< K_T(θ̂2, θ̂1)
    bool converged = false;
    int evaluations = 0;

    ModelParameters parameters() const { return {theta1_hat, theta2_hat.value_or(std::vector<double>{})}; }
};

/// L_T(θ1) = (1/n) Σ (X_t − φ(lags_t, θ1))² over t = 1..T, skipping `exclude` (0-based) if given.
double mean_loss(const TimeSeries& series, const ModelSpec& spec, std::span<const double> theta1,
                 std::optional<std::size_t> exclude = std::nullopt);

/// K_T(θ2; θ1) = | (1/n) Σ ((X_t − φ(lags_t, θ1)) / σ(lags_t, θ2))² − 1 |.
double variance_loss(const TimeSeries& series, const ModelSpec& spec, std::span<const double> theta1,
                     std::span<const double> theta2, std::optional<std::size_t> exclude = std::nullopt);

/// Multistart least-squares fit of the mean parameters.
/// Throws FitError on a constant series or T ≤ dim(Θ1).
std::vector<double> fit_mean(const TimeSeries& series, const ModelSpec& spec, const FitOptions& opts,
                             RngStream& rng);

/// Second stage: fit the volatility parameters with θ̂1 held fixed.
std::vector<double> fit_variance(const TimeSeries& series, const ModelSpec& spec, std::span<const double> theta1_hat,
                                 const FitOptions& opts, RngStream& rng);

/// Both stages (the second only for heteroscedastic specs).
FitResult fit_model(const TimeSeries& series, const ModelSpec& spec, const FitOptions& opts, RngStream& rng);

/// Single-start refit warm-started at `start`, optionally leaving out one
/// regression pair (0-based index into t = 1..T).
FitResult refit_warm(const TimeSeries& series, const ModelSpec& spec, const ModelParameters& start,
                     int max_evaluations, double initial_step, std::optional<std::size_t> exclude = std::nullopt);

enum class ResidualKind { Fitted, Predictive };

std::string_view to_string(ResidualKind kind);

struct ResidualSet {
    std::vector<double> values;
    ResidualKind kind = ResidualKind::Fitted;
    bool centered = false;
    bool normalized = false;
    double smoothing_sd = 0.0;
};

ResidualSet fitted_residuals(const TimeSeries& series, const ModelSpec& spec, const ModelParameters& theta_hat);

/// Leave-one-out residuals: the parameters are refit without the pair at t before evaluating it.
ResidualSet predictive_residuals(const TimeSeries& series, const ModelSpec& spec, const FitResult& full_fit,
                                 const FitOptions& opts);
/// Convenience overload that first fits the full sample.
ResidualSet predictive_residuals(const TimeSeries& series, const ModelSpec& spec, const FitOptions& opts,
                                 RngStream& rng);

ResidualSet center(const ResidualSet& residuals);
/// Divides by the divisor-T standard deviation. Throws DomainError on zero variance.
ResidualSet normalize(const ResidualSet& residuals);
/// Adds independent N(0, xi) noise to each value (xi is a variance).
ResidualSet smooth(const ResidualSet& residuals, double xi, RngStream& rng);

double sample_mean(std::span<const double> v);
/// Divisor-n variance.
double sample_variance(std::span<const double> v);

/// Kolmogorov–Smirnov distance between two empirical CDFs.
double ecdf_sup_distance(std::span<const double> a, std::span<const double> b);

/// Kolmogorov–Smirnov distance between an empirical CDF and a continuous CDF.
template <class Cdf>
double ecdf_sup_distance_to(std::span<const double> sample, Cdf&& cdf);

/// Standard normal CDF.
double normal_cdf(double x);

void write_residuals_csv(const ResidualSet& residuals, const std::string& path);

}  // namespace nlar

#include <algorithm>
#include <cmath>

template <class Cdf>
double nlar::ecdf_sup_distance_to(std::span<const double> sample, Cdf&& cdf) {
    std::vector<double> s(sample.begin(), sample.end());
    std::sort(s.begin(), s.end());
    const double n = static_cast<double>(s.size());
    double d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        const double f = cdf(s[i]);
        d = std::max({d, std::fabs(static_cast<double>(i + 1) / n - f), std::fabs(f - static_cast<double>(i) / n)});
    }
    return d;
}
