#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nlar/estimation.hpp"
#include "nlar/model.hpp"
#include "nlar/random.hpp"

namespace nlar {

enum class Loss { L1, L2 };
enum class EnsembleSource { Oracle, BootstrapFitted, BootstrapPredictive };

std::string_view to_string(Loss loss);
std::string_view to_string(EnsembleSource source);
Loss parse_loss(const std::string& text);

inline constexpr std::size_t kDefaultEnsembleSize = 1000;
inline constexpr double kDefaultAlpha = 0.05;

/// M simulated future paths X_{T+1..T+h}, stored column by column so that
/// column k holds all M draws of X_{T+k}.
class PredictiveEnsemble {
public:
    PredictiveEnsemble(int horizon, std::size_t rows, std::vector<double> conditioning_lags, EnsembleSource source);

    int horizon() const { return horizon_; }
    std::size_t rows() const { return rows_; }
    EnsembleSource source() const { return source_; }
    /// (X_T, ..., X_{T-p+1}).
    std::span<const double> conditioning_lags() const { return lags_; }

    /// Draws of X_{T+k}, k in 1..horizon.
    std::span<const double> column(int k) const;
    std::span<double> column(int k);
    /// Row m as (X_{T+1}, ..., X_{T+h}).
    std::vector<double> row(std::size_t m) const;

    void write_csv(const std::string& path) const;

private:
    int horizon_;
    std::size_t rows_;
    std::vector<double> lags_;
    EnsembleSource source_;
    std::vector<double> data_;
};

struct PointPrediction {
    double value = 0.0;
    Loss loss = Loss::L2;
    int horizon = 1;
};

struct QuantileInterval {
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    int horizon = 1;
};

/// Iterates X_{T+k} = φ + σ·ε_{T+k} from `lags` for M independent rows,
/// consuming h·M innovation draws (row m uses draws m·h .. m·h + h − 1).
PredictiveEnsemble simulate_future(const ModelSpec& spec, const ModelParameters& theta, std::span<const double> lags,
                                   const InnovationDistribution& innov, int h, std::size_t M, RngStream& rng,
                                   EnsembleSource source = EnsembleSource::Oracle);

/// Mean (L2) or median (L1, midpoint for even counts) of a sample.
double point_value(std::span<const double> sample, Loss loss);
PointPrediction point_predict(const PredictiveEnsemble& ens, Loss loss, int horizon);
inline PointPrediction point_predict(const PredictiveEnsemble& ens, Loss loss) {
    return point_predict(ens, loss, ens.horizon());
}
/// Predictor of f(X_{T+k}): applies `f` to column k before reducing it.
PointPrediction point_predict(const PredictiveEnsemble& ens, Loss loss, int horizon,
                              const std::function<double(double)>& f);

/// Order statistic with 1-based rank ⌈q·n⌉ clamped to [1, n].
double order_statistic_quantile(std::span<const double> sorted, double q);
QuantileInterval qpi(const PredictiveEnsemble& ens, double alpha, int horizon);
inline QuantileInterval qpi(const PredictiveEnsemble& ens, double alpha) { return qpi(ens, alpha, ens.horizon()); }

/// Iterates the mean function alone (no innovation) h steps from `lags`.
double naive_predict(const ModelSpec& spec, std::span<const double> theta1, std::span<const double> lags, int h);
std::vector<double> naive_path(const ModelSpec& spec, std::span<const double> theta1, std::span<const double> lags,
                               int h);

struct OraclePrediction {
    PointPrediction point;
    QuantileInterval interval;
    PredictiveEnsemble ensemble;
};

/// Simulation predictor with the true parameters and innovation law.
OraclePrediction oracle_predict(const ModelSpec& spec, const ModelParameters& truth, const TimeSeries& series,
                                const InnovationDistribution& innov, int h, std::size_t M, Loss loss, double alpha,
                                RngStream& rng);

/// A fitted model plus the resampling law built from its residuals.
struct BootstrapModel {
    FitResult fit;
    ResidualSet residuals;  ///< centered, and normalized when heteroscedastic
    ResidualKind kind = ResidualKind::Fitted;

    InnovationDistribution innovations() const { return InnovationDistribution::empirical(residuals.values); }
};

/// Fits the model, builds residuals of the requested kind and centers them;
/// heteroscedastic specs also get unit variance unless the residuals are
/// numerically degenerate (a noiseless fit).
BootstrapModel prepare_bootstrap(const TimeSeries& series, const ModelSpec& spec, ResidualKind kind,
                                 const FitOptions& opts, RngStream& rng);
/// Same, reusing an existing full-sample fit.
BootstrapModel prepare_bootstrap(const TimeSeries& series, const ModelSpec& spec, const FitResult& fit,
                                 ResidualKind kind, const FitOptions& opts);

struct BootstrapPrediction {
    FitResult fit;
    ResidualSet residuals;
    PointPrediction point;
    QuantileInterval interval;
    PredictiveEnsemble ensemble;
};

BootstrapPrediction bootstrap_predict(const TimeSeries& series, const ModelSpec& spec, ResidualKind kind, int h,
                                      std::size_t M, Loss loss, double alpha, const FitOptions& opts,
                                      RngStream& rng);

/// Ensemble from a prepared bootstrap model, conditioned on the series' last p values.
PredictiveEnsemble bootstrap_ensemble(const TimeSeries& series, const ModelSpec& spec, const BootstrapModel& model,
                                      int h, std::size_t M, RngStream& rng);

}  // namespace nlar
