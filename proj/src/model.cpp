#include "nlar/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nlar/errors.hpp"
#include "nlar/kernels/reference.hpp"

namespace nlar {

std::size_t MeanFunction::parameter_count() const {
    switch (family) {
    case MeanFamily::ThresholdLinear: return static_cast<std::size_t>(first_regime_lags + second_regime_lags);
    case MeanFamily::LogAbs: return 2;
    case MeanFamily::LogSquare: return 1;
    case MeanFamily::LogExpSum: return static_cast<std::size_t>(order + 1 + (intercept ? 1 : 0));
    case MeanFamily::Linear: return static_cast<std::size_t>(order + (intercept ? 1 : 0));
    case MeanFamily::Polynomial: return static_cast<std::size_t>(degree + 1);
    }
    return 0;
}

bool Box::contains(std::span<const double> x) const {
    if (x.size() != dim()) return false;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
    return true;
}

std::vector<double> Box::clamp(std::span<const double> x) const {
    std::vector<double> out(x.begin(), x.end());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = std::clamp(out[i], lower[i], upper[i]);
    return out;
}

std::vector<double> Box::center() const {
    std::vector<double> c(dim());
    for (std::size_t i = 0; i < dim(); ++i) c[i] = 0.5 * (lower[i] + upper[i]);
    return c;
}

namespace {

void validate_box(const Box& box, std::size_t expected, const std::string& what) {
    if (box.lower.size() != expected || box.upper.size() != expected) {
        std::ostringstream os;
        os << what << " domain has dimension " << box.lower.size() << "/" << box.upper.size() << ", expected "
           << expected;
        throw DomainError(os.str());
    }
    for (std::size_t i = 0; i < expected; ++i) {
        if (!std::isfinite(box.lower[i]) || !std::isfinite(box.upper[i]) || box.lower[i] > box.upper[i])
            throw DomainError(what + " domain must be a bounded closed box");
    }
}

}  // namespace

void ModelSpec::validate() const {
    if (order < 1 || order > kMaxOrder) throw DomainError("model order must be in [1, 16]");
    if (mean.order != order) throw DomainError("mean function order does not match model order");
    switch (mean.family) {
    case MeanFamily::ThresholdLinear:
        if (mean.first_regime_lags < 0 || mean.second_regime_lags < 0 ||
            std::max(mean.first_regime_lags, mean.second_regime_lags) != order)
            throw DomainError("threshold regimes must use lags 1..q with max(q1, q2) = order");
        break;
    case MeanFamily::LogAbs:
    case MeanFamily::LogSquare:
    case MeanFamily::Polynomial:
        if (order != 1) throw DomainError("this mean family acts on lag 1 only (order 1)");
        if (mean.family == MeanFamily::Polynomial && mean.degree < 0) throw DomainError("polynomial degree < 0");
        break;
    case MeanFamily::LogExpSum:
    case MeanFamily::Linear:
        break;
    }
    validate_box(theta1_domain, mean.parameter_count(), "theta1");
    if (variance.has_value() != theta2_domain.has_value())
        throw DomainError("variance function and theta2 domain must be given together");
    if (variance) {
        validate_box(*theta2_domain, variance->parameter_count(), "theta2");
        // Both families are c·g(x) with g > 0, so positivity is c > 0 on the box.
        if (!(theta2_domain->lower[0] > 0.0)) throw DomainError("variance scale domain must be strictly positive");
    }
}

TimeSeries::TimeSeries(int order, std::vector<double> values) : order_(order), values_(std::move(values)) {
    if (order < 1) throw DomainError("series order must be >= 1");
    if (values_.size() < static_cast<std::size_t>(order) + 1)
        throw DomainError("series needs at least order + 1 values");
    for (double v : values_)
        if (!std::isfinite(v)) throw DomainError("series values must be finite");
}

std::vector<double> TimeSeries::conditioning_lags() const {
    std::vector<double> lags(static_cast<std::size_t>(order_));
    for (int j = 0; j < order_; ++j) lags[j] = values_[values_.size() - 1 - static_cast<std::size_t>(j)];
    return lags;
}

InnovationDistribution InnovationDistribution::standard_normal() { return {}; }

InnovationDistribution InnovationDistribution::chi_squared_centered(double df) {
    if (!(df > 0)) throw DomainError("chi-squared degrees of freedom must be positive");
    InnovationDistribution d;
    d.kind_ = Kind::ChiSquaredCentered;
    d.parameter_ = df;
    return d;
}

InnovationDistribution InnovationDistribution::chi_squared(double df) {
    if (!(df > 0)) throw DomainError("chi-squared degrees of freedom must be positive");
    InnovationDistribution d;
    d.kind_ = Kind::ChiSquared;
    d.parameter_ = df;
    return d;
}

InnovationDistribution InnovationDistribution::point_mass(double value) {
    InnovationDistribution d;
    d.kind_ = Kind::PointMass;
    d.parameter_ = value;
    return d;
}

InnovationDistribution InnovationDistribution::empirical(std::vector<double> values) {
    if (values.empty()) throw DomainError("empirical innovation law needs at least one value");
    InnovationDistribution d;
    d.kind_ = Kind::Empirical;
    d.values_ = std::make_shared<const std::vector<double>>(std::move(values));
    return d;
}

std::span<const double> InnovationDistribution::support() const {
    if (values_) return *values_;
    return {};
}

double InnovationDistribution::sample(Engine& engine) const {
    switch (kind_) {
    case Kind::StandardNormal: return std::normal_distribution<double>(0.0, 1.0)(engine);
    case Kind::ChiSquaredCentered: return std::chi_squared_distribution<double>(parameter_)(engine) - parameter_;
    case Kind::ChiSquared: return std::chi_squared_distribution<double>(parameter_)(engine);
    case Kind::PointMass: return parameter_;
    case Kind::Empirical: {
        std::uniform_int_distribution<std::size_t> pick(0, values_->size() - 1);
        return (*values_)[pick(engine)];
    }
    }
    return 0.0;
}

void InnovationDistribution::fill(Engine& engine, std::span<double> out) const {
    switch (kind_) {
    case Kind::StandardNormal: {
        std::normal_distribution<double> dist(0.0, 1.0);
        for (double& v : out) v = dist(engine);
        return;
    }
    case Kind::ChiSquaredCentered:
    case Kind::ChiSquared: {
        std::chi_squared_distribution<double> dist(parameter_);
        const double shift = kind_ == Kind::ChiSquaredCentered ? parameter_ : 0.0;
        for (double& v : out) v = dist(engine) - shift;
        return;
    }
    case Kind::PointMass:
        std::fill(out.begin(), out.end(), parameter_);
        return;
    case Kind::Empirical: {
        std::uniform_int_distribution<std::size_t> pick(0, values_->size() - 1);
        const auto& vals = *values_;
        for (double& v : out) v = vals[pick(engine)];
        return;
    }
    }
}

std::string InnovationDistribution::describe() const {
    std::ostringstream os;
    switch (kind_) {
    case Kind::StandardNormal: os << "normal"; break;
    case Kind::ChiSquaredCentered: os << "chisq-centered:" << parameter_; break;
    case Kind::ChiSquared: os << "chisq:" << parameter_; break;
    case Kind::PointMass: os << "point:" << parameter_; break;
    case Kind::Empirical: os << "empirical:" << values_->size(); break;
    }
    return os.str();
}

InnovationDistribution InnovationDistribution::parse(const std::string& text) {
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    double arg = 0.0;
    if (colon != std::string::npos) {
        try {
            std::size_t used = 0;
            arg = std::stod(text.substr(colon + 1), &used);
            if (used != text.size() - colon - 1) throw std::invalid_argument("trailing");
        } catch (const std::exception&) {
            throw ParseError("bad innovation parameter in '" + text + "'");
        }
    }
    if (head == "normal" && colon == std::string::npos) return standard_normal();
    if (head == "chisq-centered" && colon != std::string::npos) return chi_squared_centered(arg);
    if (head == "chisq" && colon != std::string::npos) return chi_squared(arg);
    if (head == "point" || head == "zero") return point_mass(arg);
    throw ParseError("unknown innovation law '" + text + "'");
}

double eval_mean(const ModelSpec& spec, std::span<const double> lags, std::span<const double> theta1) {
    if (lags.size() != static_cast<std::size_t>(spec.order)) throw DomainError("lag vector length must equal order");
    if (!spec.theta1_domain.contains(theta1)) throw DomainError("theta1 outside its domain");
    return kernels::reference::mean_point(spec.mean, theta1.data(), lags.data());
}

double eval_variance(const ModelSpec& spec, std::span<const double> lags, std::span<const double> theta2) {
    if (!spec.heteroscedastic()) throw DomainError("model is homoscedastic; it has no variance function");
    if (lags.size() != static_cast<std::size_t>(spec.order)) throw DomainError("lag vector length must equal order");
    if (!spec.theta2_domain->contains(theta2)) throw DomainError("theta2 outside its domain");
    const double s = kernels::reference::scale_point(*spec.variance, theta2.data(), lags.data());
    if (!(s > 0.0)) throw DomainError("variance function evaluated to a non-positive value");
    return s;
}

namespace {

Box box_around(const std::vector<double>& center, double half_width) {
    Box b;
    for (double c : center) {
        b.lower.push_back(c - half_width);
        b.upper.push_back(c + half_width);
    }
    return b;
}

ModelSpec threshold_spec(int order, int q1, int q2) {
    ModelSpec s;
    s.order = order;
    s.mean.family = MeanFamily::ThresholdLinear;
    s.mean.order = order;
    s.mean.first_regime_lags = q1;
    s.mean.second_regime_lags = q2;
    return s;
}

}  // namespace

BuiltinModel builtin_model(const std::string& id) {
    constexpr double kHalfWidth = 5.0;
    BuiltinModel m;
    ModelSpec& s = m.spec;
    if (id == "1") {
        s = threshold_spec(1, 1, 1);
        m.truth.mean = {0.1, 0.8};
    } else if (id == "2") {
        s = threshold_spec(3, 3, 1);
        m.truth.mean = {0.5, 0.2, 0.1, 0.8};
    } else if (id == "3") {
        s = threshold_spec(1, 1, 1);
        m.truth.mean = {0.1, 0.8};
        s.variance = VarianceFunction{VarianceFamily::ExpDecay};
        m.truth.variance = {0.5};
        Box b2 = box_around(m.truth.variance, kHalfWidth);
        b2.lower[0] = 0.01;
        s.theta2_domain = b2;
    } else if (id == "4") {
        s.order = 1;
        s.mean = MeanFunction{MeanFamily::LogAbs, 1};
        m.truth.mean = {0.2, 0.5};
    } else if (id == "5") {
        s.order = 1;
        s.mean = MeanFunction{MeanFamily::LogSquare, 1};
        m.truth.mean = {2.0};
    } else if (id == "6") {
        s.order = 1;
        s.mean = MeanFunction{MeanFamily::LogExpSum, 1};
        s.mean.intercept = true;
        m.truth.mean = {10.0, 5.0, 0.9};
    } else if (id == "7") {
        s.order = 3;
        s.mean = MeanFunction{MeanFamily::LogExpSum, 3};
        // Lag weights: 5 on X_{t-1}, 4 on X_{t-2}, 6 on X_{t-3}; shared rate 0.9.
        m.truth.mean = {5.0, 4.0, 6.0, 0.9};
    } else {
        throw DomainError("unknown model id '" + id + "' (expected 1..7)");
    }
    s.label = "model" + id;
    s.theta1_domain = box_around(m.truth.mean, kHalfWidth);
    if (s.mean.family == MeanFamily::LogAbs) s.theta1_domain.lower[1] = 0.01;
    if (s.mean.family == MeanFamily::LogExpSum)
        for (double& lo : s.theta1_domain.lower) lo = std::max(lo, 0.0);
    s.validate();
    return m;
}

namespace {

double step_value(const ModelSpec& spec, const ModelParameters& theta, const double* lags, double eps) {
    const double mean = kernels::reference::mean_point(spec.mean, theta.mean.data(), lags);
    if (!spec.heteroscedastic()) return mean + eps;
    return mean + kernels::reference::scale_point(*spec.variance, theta.variance.data(), lags) * eps;
}

void check_parameters(const ModelSpec& spec, const ModelParameters& theta) {
    if (!spec.theta1_domain.contains(theta.mean)) throw DomainError("theta1 outside its domain");
    if (spec.heteroscedastic() && !spec.theta2_domain->contains(theta.variance))
        throw DomainError("theta2 outside its domain");
}

inline void check_finite(std::size_t step, double x) {
    if (!(std::fabs(x) <= kExplosionBound)) throw ExplosionError(step, x);
}

}  // namespace

TimeSeries simulate_path(const ModelSpec& spec, const ModelParameters& theta, const InnovationDistribution& innov,
                         std::size_t T, std::size_t burn_in, RngStream& rng) {
    if (T < 1) throw DomainError("simulate_path needs T >= 1");
    check_parameters(spec, theta);
    const auto p = static_cast<std::size_t>(spec.order);
    std::vector<double> path;
    path.reserve(p + burn_in + T);
    std::uniform_real_distribution<double> init(-1.0, 1.0);
    for (std::size_t i = 0; i < p; ++i) path.push_back(init(rng.engine()));

    double lags[kMaxOrder];
    for (std::size_t step = 1; step <= burn_in + T; ++step) {
        for (std::size_t j = 0; j < p; ++j) lags[j] = path[path.size() - 1 - j];
        const double x = step_value(spec, theta, lags, innov.sample(rng.engine()));
        check_finite(step, x);
        path.push_back(x);
    }
    path.erase(path.begin(), path.begin() + static_cast<std::ptrdiff_t>(burn_in));
    return TimeSeries(spec.order, std::move(path));
}

std::vector<double> continue_path(const ModelSpec& spec, const ModelParameters& theta,
                                  const InnovationDistribution& innov, std::span<const double> lags, int h,
                                  RngStream& rng) {
    if (lags.size() != static_cast<std::size_t>(spec.order)) throw DomainError("lag vector length must equal order");
    const auto p = static_cast<std::size_t>(spec.order);
    std::vector<double> window(lags.begin(), lags.end());  // most recent first
    std::vector<double> out;
    out.reserve(static_cast<std::size_t>(h));
    for (int k = 1; k <= h; ++k) {
        const double x = step_value(spec, theta, window.data(), innov.sample(rng.engine()));
        check_finite(static_cast<std::size_t>(k), x);
        out.push_back(x);
        for (std::size_t j = p - 1; j > 0; --j) window[j] = window[j - 1];
        window[0] = x;
    }
    return out;
}

DriftReport probe_drift_condition(const ModelSpec& spec, std::span<const double> theta1, double grid_radius,
                                  int grid_points) {
    if (grid_points < 2) throw DomainError("grid_points must be >= 2");
    if (!(grid_radius > 0)) throw DomainError("grid_radius must be positive");
    const int p = spec.order;
    const double spacing = 1.0 / grid_points;
    const long half = static_cast<long>(std::floor(grid_radius / spacing + 1e-9));
    const long per_axis = 2 * half + 1;

    std::vector<double> zero(static_cast<std::size_t>(p), 0.0);
    const double phi0 = kernels::reference::mean_point(spec.mean, theta1.data(), zero.data());
    const double c0 = std::isfinite(phi0) ? std::fabs(phi0) : 0.0;

    // Visit every lattice point once, collecting (|φ(x)|, max|xi|).
    std::vector<std::pair<double, double>> samples;
    std::vector<long> idx(static_cast<std::size_t>(p), 0);
    std::vector<double> x(static_cast<std::size_t>(p));
    long total = 1;
    for (int j = 0; j < p; ++j) total *= per_axis;
    samples.reserve(static_cast<std::size_t>(total));
    for (long n = 0; n < total; ++n) {
        long rem = n;
        double norm = 0.0;
        for (int j = 0; j < p; ++j) {
            const long k = rem % per_axis - half;
            rem /= per_axis;
            x[j] = static_cast<double>(k) * spacing;
            norm = std::max(norm, std::fabs(x[j]));
        }
        const double phi = kernels::reference::mean_point(spec.mean, theta1.data(), x.data());
        if (std::isfinite(phi)) samples.emplace_back(std::fabs(phi), norm);
    }

    DriftReport report;
    for (const auto& [phi, norm] : samples)
        if (norm > 0) report.lambda_hat = std::max(report.lambda_hat, (phi - c0) / norm);
    report.c_hat = -std::numeric_limits<double>::infinity();
    for (const auto& [phi, norm] : samples) report.c_hat = std::max(report.c_hat, phi - report.lambda_hat * norm);
    report.satisfied = report.lambda_hat < 1.0;
    return report;
}

}  // namespace nlar
