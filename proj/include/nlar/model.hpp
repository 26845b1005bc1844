#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "nlar/random.hpp"

namespace nlar {

/// Largest autoregressive order the kernels accept.
inline constexpr int kMaxOrder = 16;

/// Parametric families for the conditional mean φ(lags, θ1).
enum class MeanFamily {
    /// Two-regime threshold linear: lag 1 ≤ 0 selects the first regime.
    /// θ = (first-regime coefficients on lags 1..q1, second-regime coefficients on lags 1..q2).
    ThresholdLinear,
    /// θ = (a, b): a + log(b + |x1|).
    LogAbs,
    /// θ = (c): c·log(x1²).
    LogSquare,
    /// θ = ([α0], α1..αp, β): log(α0 + Σ αj·exp(β·xj)).
    LogExpSum,
    /// θ = ([c0], c1..cp): c0 + Σ cj·xj.
    Linear,
    /// θ = (c0..cd) on lag 1: Σ ck·x1^k.
    Polynomial,
};

struct MeanFunction {
    MeanFamily family = MeanFamily::Linear;
    int order = 1;
    int first_regime_lags = 0;   // ThresholdLinear
    int second_regime_lags = 0;  // ThresholdLinear
    bool intercept = false;      // Linear, LogExpSum
    int degree = 0;              // Polynomial

    std::size_t parameter_count() const;
};

/// Parametric families for the volatility σ(lags, θ2).
enum class VarianceFamily {
    Constant,  ///< σ = c
    ExpDecay,  ///< σ = c·exp(−x1²)
};

struct VarianceFunction {
    VarianceFamily family = VarianceFamily::Constant;
    std::size_t parameter_count() const { return 1; }
};

/// Axis-aligned closed box.
struct Box {
    std::vector<double> lower;
    std::vector<double> upper;

    std::size_t dim() const { return lower.size(); }
    bool contains(std::span<const double> x) const;
    std::vector<double> clamp(std::span<const double> x) const;
    std::vector<double> center() const;
};

struct ModelSpec {
    int order = 1;
    MeanFunction mean;
    std::optional<VarianceFunction> variance;
    Box theta1_domain;
    std::optional<Box> theta2_domain;
    std::string label;

    bool heteroscedastic() const { return variance.has_value(); }
    /// Throws DomainError when the spec breaks its invariants.
    void validate() const;
};

/// θ1 and (for heteroscedastic specs) θ2.
struct ModelParameters {
    std::vector<double> mean;
    std::vector<double> variance;
};

/// Observed path X_{-p+1..T}; `values()[i]` holds X_{i-p+1}.
class TimeSeries {
public:
    TimeSeries() = default;
    TimeSeries(int order, std::vector<double> values);

    int order() const { return order_; }
    std::size_t T() const { return values_.size() - static_cast<std::size_t>(order_); }
    std::span<const double> values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }

    /// X_t for t in [-p+1, T].
    double at(long t) const { return values_[static_cast<std::size_t>(t + order_ - 1)]; }
    /// X_1..X_T.
    std::span<const double> targets() const { return std::span(values_).subspan(order_); }
    /// X_{1-j}..X_{T-j}, the j-th lag (1-based) aligned with targets().
    std::span<const double> lag(int j) const { return std::span(values_).subspan(order_ - j, T()); }
    /// (X_T, X_{T-1}, ..., X_{T-p+1}): the lag vector that conditions the future.
    std::vector<double> conditioning_lags() const;

private:
    int order_ = 1;
    std::vector<double> values_;
};

/// Innovation law F_ε.
class InnovationDistribution {
public:
    enum class Kind { StandardNormal, ChiSquaredCentered, ChiSquared, PointMass, Empirical };

    static InnovationDistribution standard_normal();
    static InnovationDistribution chi_squared_centered(double df);
    static InnovationDistribution chi_squared(double df);
    static InnovationDistribution point_mass(double value);
    static InnovationDistribution empirical(std::vector<double> values);

    Kind kind() const { return kind_; }
    double parameter() const { return parameter_; }
    std::span<const double> support() const;

    double sample(Engine& engine) const;
    void fill(Engine& engine, std::span<double> out) const;

    /// "normal", "chisq-centered:3", "chisq:3", "point:0"; empirical laws print as "empirical:<n>".
    std::string describe() const;
    /// Inverse of describe() for the parametric kinds.
    static InnovationDistribution parse(const std::string& text);

private:
    Kind kind_ = Kind::StandardNormal;
    double parameter_ = 0.0;
    std::shared_ptr<const std::vector<double>> values_;
};

double eval_mean(const ModelSpec& spec, std::span<const double> lags, std::span<const double> theta1);
double eval_variance(const ModelSpec& spec, std::span<const double> lags, std::span<const double> theta2);

struct BuiltinModel {
    ModelSpec spec;
    ModelParameters truth;
};

/// Benchmark zoo: "1".."7".
BuiltinModel builtin_model(const std::string& id);

inline constexpr std::size_t kDefaultBurnIn = 1000;
/// Any |X_t| beyond this aborts a simulation.
inline constexpr double kExplosionBound = 1e12;

/// Initial p values ~ Uniform(-1,1), then burn_in + T recursion steps; the
/// first burn_in generated values are discarded so the result has T + p values.
TimeSeries simulate_path(const ModelSpec& spec, const ModelParameters& theta, const InnovationDistribution& innov,
                         std::size_t T, std::size_t burn_in, RngStream& rng);

/// Continues `series` for h steps with fresh innovations (used for the true future).
std::vector<double> continue_path(const ModelSpec& spec, const ModelParameters& theta,
                                  const InnovationDistribution& innov, std::span<const double> lags, int h,
                                  RngStream& rng);

struct DriftReport {
    double lambda_hat = 0.0;
    double c_hat = 0.0;
    bool satisfied = false;
};

/// Numerical probe of the drift bound |φ(x)| ≤ λ·max|xi| + C on a lattice of
/// spacing 1/grid_points covering [-grid_radius, grid_radius]^p. Advisory only.
DriftReport probe_drift_condition(const ModelSpec& spec, std::span<const double> theta1, double grid_radius,
                                  int grid_points);

}  // namespace nlar
