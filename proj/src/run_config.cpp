#include "nlar/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <sstream>

#include "nlar/errors.hpp"

namespace nlar {

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

template <class T>
std::string join(const std::vector<T>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out += ',';
        if constexpr (std::is_floating_point_v<T>) out += fmt(v[i]);
        else if constexpr (std::is_arithmetic_v<T>) out += std::to_string(v[i]);
        else out += v[i];
    }
    return out;
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, ',')) {
        const auto b = item.find_first_not_of(" \t[]");
        const auto e = item.find_last_not_of(" \t[]");
        if (b == std::string::npos) continue;
        out.push_back(item.substr(b, e - b + 1));
    }
    return out;
}

Box bounds_for(const std::vector<double>& theta, const std::vector<double>& lower, const std::vector<double>& upper,
               std::size_t expected, const std::string& what) {
    Box b;
    if (!lower.empty() || !upper.empty()) {
        b.lower = lower;
        b.upper = upper;
    } else if (!theta.empty()) {
        for (double t : theta) {
            b.lower.push_back(t - 5.0);
            b.upper.push_back(t + 5.0);
        }
    } else {
        throw DomainError(what + ": give either coefficients or explicit bounds");
    }
    if (b.lower.size() != expected || b.upper.size() != expected)
        throw DomainError(what + ": expected " + std::to_string(expected) + " bounds per side");
    return b;
}

}  // namespace

std::string_view to_string(Command c) {
    switch (c) {
    case Command::Simulate: return "simulate";
    case Command::Fit: return "fit";
    case Command::Predict: return "predict";
    case Command::Interval: return "interval";
    case Command::Experiment: return "experiment";
    }
    return "unknown";
}

Command parse_command(const std::string& text) {
    for (Command c : {Command::Simulate, Command::Fit, Command::Predict, Command::Interval, Command::Experiment})
        if (to_string(c) == text) return c;
    throw ParseError("unknown command '" + text + "'");
}

std::vector<double> parse_real_list(const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) {
        double v = 0.0;
        const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
        if (r.ec != std::errc() || r.ptr != item.data() + item.size())
            throw ParseError("not a real number: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& text) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) {
        int v = 0;
        const auto r = std::from_chars(item.data(), item.data() + item.size(), v);
        if (r.ec != std::errc() || r.ptr != item.data() + item.size())
            throw ParseError("not an integer: '" + item + "'");
        out.push_back(v);
    }
    return out;
}

BuiltinModel build_custom_model(const CustomModelSpec& c) {
    BuiltinModel m;
    ModelSpec& s = m.spec;
    s.order = c.order;
    s.mean.order = c.order;
    if (c.family == "threshold-linear") {
        if (c.regime_lags.size() != 2) throw DomainError("threshold-linear needs regime-lags q1,q2");
        s.mean.family = MeanFamily::ThresholdLinear;
        s.mean.first_regime_lags = c.regime_lags[0];
        s.mean.second_regime_lags = c.regime_lags[1];
    } else if (c.family == "log-abs") {
        s.mean.family = MeanFamily::LogAbs;
    } else if (c.family == "log-square") {
        s.mean.family = MeanFamily::LogSquare;
    } else if (c.family == "log-exp-sum") {
        s.mean.family = MeanFamily::LogExpSum;
        s.mean.intercept = c.intercept;
    } else if (c.family == "linear") {
        s.mean.family = MeanFamily::Linear;
        s.mean.intercept = c.intercept;
    } else if (c.family == "polynomial") {
        s.mean.family = MeanFamily::Polynomial;
        s.mean.degree = c.degree;
    } else {
        throw ParseError("unknown model family '" + c.family + "'");
    }
    const std::size_t n1 = s.mean.parameter_count();
    if (!c.theta.empty() && c.theta.size() != n1)
        throw DomainError("family '" + c.family + "' takes " + std::to_string(n1) + " coefficients");
    s.theta1_domain = bounds_for(c.theta, c.theta_lower, c.theta_upper, n1, "theta");
    m.truth.mean = c.theta;

    if (!c.variance_family.empty()) {
        VarianceFunction v;
        if (c.variance_family == "constant") v.family = VarianceFamily::Constant;
        else if (c.variance_family == "exp-decay") v.family = VarianceFamily::ExpDecay;
        else throw ParseError("unknown variance family '" + c.variance_family + "'");
        s.variance = v;
        Box b2 = bounds_for(c.theta2, c.theta2_lower, c.theta2_upper, v.parameter_count(), "theta2");
        if (c.theta2_lower.empty()) b2.lower[0] = std::max(b2.lower[0], 0.01);
        s.theta2_domain = b2;
        m.truth.variance = c.theta2;
        if (!c.theta2.empty() && c.theta2.size() != v.parameter_count())
            throw DomainError("variance family takes one coefficient");
    }
    s.label = "custom:" + c.family;
    s.validate();
    if (!m.truth.mean.empty() && !s.theta1_domain.contains(m.truth.mean))
        throw DomainError("theta lies outside its bounds");
    if (s.variance && !m.truth.variance.empty() && !s.theta2_domain->contains(m.truth.variance))
        throw DomainError("theta2 lies outside its bounds");
    return m;
}

BuiltinModel RunConfig::resolve_model() const { return custom ? build_custom_model(*custom) : builtin_model(model); }

void RunConfig::validate() const {
    const BuiltinModel m = resolve_model();
    if (order != 0 && order != m.spec.order)
        throw DomainError("order " + std::to_string(order) + " does not match the model order " +
                          std::to_string(m.spec.order));
    if (horizon < 1) throw DomainError("horizon must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    if (loss != "L1" && loss != "L2" && loss != "both") throw ParseError("loss must be L1, L2 or both");
    if (residuals != "fitted" && residuals != "predictive") throw ParseError("residuals must be fitted or predictive");
    if (T < 1 || N < 1) throw DomainError("T and N must be >= 1");
    if (M < 2) throw DomainError("M must be >= 2");
    InnovationDistribution::parse(innovation);
    for (const auto& name : methods) {
        if (command == Command::Experiment) parse_method(name);
        else if (command == Command::Interval && name != "QPI" && name != "PPI")
            throw ParseError("interval method must be QPI or PPI");
        else if (command == Command::Predict && name != "boot" && name != "sim")
            throw ParseError("predict method must be boot or sim");
    }
    const bool simulates = command == Command::Simulate || command == Command::Experiment || data_path.empty();
    const bool wants_truth = simulates || std::find(methods.begin(), methods.end(), "sim") != methods.end();
    if (wants_truth && m.truth.mean.empty()) throw DomainError("this command needs the model coefficients (--theta)");
    if (wants_truth && m.spec.heteroscedastic() && m.truth.variance.empty())
        throw DomainError("this command needs the variance coefficient (--theta2)");
    if (command == Command::Interval && (methods.empty() || methods.front() == "PPI") && K < 2)
        throw DomainError("PPI needs K >= 2");
}

std::map<std::string, std::string> RunConfig::to_key_values() const {
    std::map<std::string, std::string> kv;
    if (custom) {
        kv["family"] = custom->family;
        kv["order"] = std::to_string(custom->order);
        if (!custom->regime_lags.empty()) kv["regime-lags"] = join(custom->regime_lags);
        kv["intercept"] = custom->intercept ? "true" : "false";
        if (custom->family == "polynomial") kv["degree"] = std::to_string(custom->degree);
        if (!custom->theta.empty()) kv["theta"] = join(custom->theta);
        if (!custom->theta_lower.empty()) kv["theta-lower"] = join(custom->theta_lower);
        if (!custom->theta_upper.empty()) kv["theta-upper"] = join(custom->theta_upper);
        if (!custom->variance_family.empty()) kv["variance-family"] = custom->variance_family;
        if (!custom->theta2.empty()) kv["theta2"] = join(custom->theta2);
        if (!custom->theta2_lower.empty()) kv["theta2-lower"] = join(custom->theta2_lower);
        if (!custom->theta2_upper.empty()) kv["theta2-upper"] = join(custom->theta2_upper);
    } else {
        kv["model"] = model;
        if (order != 0) kv["order"] = std::to_string(order);
    }
    if (!data_path.empty()) kv["data"] = data_path;
    if (!out_path.empty()) kv["out"] = out_path;
    kv["horizon"] = std::to_string(horizon);
    kv["loss"] = loss;
    kv["alpha"] = fmt(alpha);
    kv["residuals"] = residuals;
    if (!methods.empty()) kv["method"] = join(methods);
    kv["T"] = std::to_string(T);
    kv["N"] = std::to_string(N);
    kv["M"] = std::to_string(M);
    kv["K"] = std::to_string(K);
    kv["burn-in"] = std::to_string(burn_in);
    if (seed) kv["seed"] = std::to_string(*seed);
    kv["workers"] = std::to_string(workers);
    kv["innovation"] = innovation;
    kv["multistart-refit"] = multistart_refit ? "true" : "false";
    return kv;
}

ExperimentConfig RunConfig::to_experiment(std::uint64_t master_seed) const {
    ExperimentConfig e;
    if (custom) e.custom_model = build_custom_model(*custom);
    else e.model_id = model;
    e.T = T;
    e.N = N;
    e.M = M;
    e.K = K;
    e.horizons.clear();
    for (int h = 1; h <= horizon; ++h) e.horizons.push_back(h);
    e.alpha = alpha;
    e.innovation = InnovationDistribution::parse(innovation);
    if (methods.empty()) {
        for (const char* name : {"SPI", "QPI-f", "QPI-p", "L2-Sim", "L1-Sim", "L2-Boot", "L1-Boot", "TrueNaive",
                                 "EstNaive"})
            e.methods.push_back(parse_method(name));
    } else {
        for (const auto& name : methods) e.methods.push_back(parse_method(name));
    }
    e.burn_in = burn_in;
    e.master_seed = master_seed;
    e.workers = workers;
    e.ppi.multistart_refit = multistart_refit;
    return e;
}

}  // namespace nlar
