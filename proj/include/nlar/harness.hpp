#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "nlar/estimation.hpp"
#include "nlar/intervals.hpp"
#include "nlar/metrics_table.hpp"
#include "nlar/model.hpp"

namespace nlar {

enum class Method {
    SPI,
    QpiF,
    QpiP,
    L2PpiF,
    L2PpiP,
    L1PpiF,
    L1PpiP,
    L2Sim,
    L1Sim,
    L2Boot,
    L1Boot,
    TrueNaive,
    EstNaive,
};

std::string_view method_name(Method m);
Method parse_method(std::string_view name);
const std::vector<Method>& all_methods();
bool is_interval_method(Method m);
inline bool is_point_method(Method m) { return !is_interval_method(m); }

struct ExperimentConfig {
    std::string model_id = "4";
    /// Overrides model_id when set (inline custom model with its true parameters).
    std::optional<BuiltinModel> custom_model;
    std::size_t T = 400;
    std::size_t N = 500;
    std::size_t M = 500;
    std::size_t K = 250;
    std::vector<int> horizons{1, 2, 3, 4, 5};
    double alpha = 0.05;
    InnovationDistribution innovation = InnovationDistribution::standard_normal();
    std::vector<Method> methods;
    std::size_t burn_in = kDefaultBurnIn;
    std::uint64_t master_seed = 0;
    unsigned workers = 1;
    FitOptions fit;
    PpiOptions ppi;

    /// Throws DomainError on empty methods/horizons, N = 0 and similar.
    void validate() const;
    int max_horizon() const;
    BuiltinModel resolve_model() const;
};

struct ExperimentResult {
    MetricsTable table;
    std::size_t n_effective = 0;
    std::size_t n_failed = 0;
    double wall_seconds = 0.0;
};

/// Runs N replications of every requested method. Replication n draws from
/// master_seed.child(n), so the table is independent of the worker count.
///
/// Reported metrics per (method, horizon):
/// - point methods: MSPE against the true continuation;
/// - L2-Boot / L1-Boot additionally carry the paired MSD against L2-Sim / L1-Sim
///   when those are requested too;
/// - interval methods: CVR and LEN.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Restricted to the point methods of `cfg` (at least one required).
MetricsTable run_point_experiment(const ExperimentConfig& cfg);
/// Restricted to the interval methods of `cfg` (at least one required).
MetricsTable run_coverage_experiment(const ExperimentConfig& cfg);

/// Writes `<table_path>` and a JSON manifest next to it at `manifest_path`.
/// `config_echo` is a JSON object text; empty means echo `cfg` itself.
void write_experiment_outputs(const ExperimentConfig& cfg, const ExperimentResult& result,
                              const std::string& table_path, const std::string& manifest_path,
                              const std::string& config_echo = {});

std::string config_to_json(const ExperimentConfig& cfg);

}  // namespace nlar
