#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "nlar/harness.hpp"
#include "nlar/model.hpp"

namespace nlar {

enum class Command { Simulate, Fit, Predict, Interval, Experiment };

std::string_view to_string(Command c);
Command parse_command(const std::string& text);

/// Inline model given by family id and coefficient layout.
struct CustomModelSpec {
    std::string family;  ///< threshold-linear | log-abs | log-square | log-exp-sum | linear | polynomial
    int order = 1;
    std::vector<int> regime_lags;  ///< threshold-linear: {q1, q2}
    bool intercept = false;
    int degree = 0;
    std::vector<double> theta;
    std::vector<double> theta_lower;
    std::vector<double> theta_upper;
    std::string variance_family;  ///< empty | constant | exp-decay
    std::vector<double> theta2;
    std::vector<double> theta2_lower;
    std::vector<double> theta2_upper;
};

/// One CLI invocation. Everything random derives from `seed`.
struct RunConfig {
    Command command = Command::Predict;
    std::string model = "4";
    std::optional<CustomModelSpec> custom;
    std::string data_path;
    std::string out_path;
    int order = 0;  ///< 0: take the model's order
    int horizon = 5;
    std::string loss = "both";  ///< L1 | L2 | both
    double alpha = 0.05;
    std::string residuals = "fitted";
    std::vector<std::string> methods;
    std::size_t T = 400;
    std::size_t N = 500;
    std::size_t M = 1000;
    std::size_t K = 1000;
    std::size_t burn_in = kDefaultBurnIn;
    std::optional<std::uint64_t> seed;
    unsigned workers = 1;
    std::string innovation = "normal";
    bool multistart_refit = false;

    /// Rejects inconsistent settings before any computation.
    void validate() const;
    /// Zoo model, or the inline custom model with its parameters when given.
    BuiltinModel resolve_model() const;
    /// Flat key → value echo of every setting, in the config-file syntax.
    std::map<std::string, std::string> to_key_values() const;
    ExperimentConfig to_experiment(std::uint64_t seed) const;
};

BuiltinModel build_custom_model(const CustomModelSpec& c);

std::vector<double> parse_real_list(const std::string& text);
std::vector<int> parse_int_list(const std::string& text);

}  // namespace nlar
