#pragma once

#include <array>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nlar/estimation.hpp"
#include "nlar/model.hpp"
#include "nlar/prediction.hpp"
#include "nlar/random.hpp"

namespace nlar {

inline constexpr std::size_t kDefaultReplicates = 1000;

struct PpiOptions {
    /// Full multistart refit on each pseudo-series instead of a warm single start.
    bool multistart_refit = false;
    int refit_max_evaluations = 2000;
    /// Extra attempts per replicate after an abnormal draw.
    int max_retries = 10;
    /// A replicate is abnormal once any value exceeds factor·(1 + max|observed|).
    double abnormal_factor = 1e6;
    unsigned workers = 1;
};

struct BootstrapReplicate {
    TimeSeries pseudo_series;
    ModelParameters theta_star;
    double future_value = 0.0;      ///< X*_{T+h}
    double inner_prediction = 0.0;  ///< X̂*_{T+h}
    double root = 0.0;              ///< future_value − inner_prediction
};

/// One replicate of the forward double bootstrap, for every horizon up to H
/// and both losses at once.
struct ReplicateDraw {
    TimeSeries pseudo_series;  ///< after forward alignment
    ModelParameters theta_star;
    std::vector<double> future;  ///< X*_{T+1..T+H}
    std::array<std::vector<double>, 2> inner;  ///< [L1, L2] × horizon
    int attempts = 1;

    BootstrapReplicate at(int h, Loss loss) const;
};

struct PertinentInterval {
    double center = 0.0;
    double lower = 0.0;
    double upper = 0.0;
    double level = 0.95;
    Loss loss = Loss::L2;
    std::size_t K = 0;
    double q_low = 0.0;
    double q_high = 0.0;
    int horizon = 1;
};

/// Start of the initial block, I ~ Uniform{−p+1, …, T−p+1}.
long sample_start_index(std::size_t T, int order, RngStream& rng);

/// Pseudo-series X*_{−p+1..T}: a random observed block of length p followed by
/// T recursion steps with θ̂ and innovations resampled from `residuals`.
TimeSeries generate_pseudo_series(const TimeSeries& series, const ModelSpec& spec, const ModelParameters& theta_hat,
                                  const ResidualSet& residuals, RngStream& rng);

/// Point predictor from an ensemble driven by θ* and the original residual law.
double inner_predict(const TimeSeries& aligned, const ModelSpec& spec, const ModelParameters& theta_star,
                     const ResidualSet& residuals, int h, std::size_t M, Loss loss, RngStream& rng);

/// Draws one replicate, retrying abnormal draws on derived streams.
/// Throws FitError when every attempt is abnormal.
ReplicateDraw draw_replicate(const TimeSeries& series, const ModelSpec& spec, const BootstrapModel& model,
                             int max_horizon, std::size_t M, const FitOptions& fit_opts, const PpiOptions& opts,
                             const RngStream& rng);

/// Roots of K replicates for horizons 1..H and both losses.
class RootSet {
public:
    RootSet(int max_horizon, std::size_t K);

    int max_horizon() const { return max_horizon_; }
    std::size_t K() const { return K_; }
    std::span<const double> roots(Loss loss, int h) const;
    std::span<double> roots(Loss loss, int h);

private:
    int max_horizon_;
    std::size_t K_;
    std::vector<double> data_;
};

/// Replicate k draws from `rng.child(k)`.
RootSet bootstrap_roots(const TimeSeries& series, const ModelSpec& spec, const BootstrapModel& model, int max_horizon,
                        std::size_t M, std::size_t K, const FitOptions& fit_opts, const PpiOptions& opts,
                        const RngStream& rng);

/// [center + q(α/2), center + q(1 − α/2)] with the qpi order-statistic rule.
PertinentInterval assemble_ppi(double center, std::span<const double> roots, double alpha, Loss loss, int h);

/// Full pipeline: fit, residuals, center ensemble, K replicates, interval.
PertinentInterval ppi(const TimeSeries& series, const ModelSpec& spec, ResidualKind kind, int h, double alpha,
                      Loss loss, std::size_t M, std::size_t K, const FitOptions& fit_opts, RngStream& rng,
                      const PpiOptions& opts = {});

void write_roots_csv(std::span<const double> roots, const std::string& path);

}  // namespace nlar
