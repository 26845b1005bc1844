#pragma once

#include <functional>
#include <span>
#include <vector>

#include "nlar/model.hpp"
#include "nlar/random.hpp"

namespace nlar {

struct OptimizerOptions {
    int multistarts = 8;
    int max_evaluations = 2000;  ///< per start
    double tolerance = 1e-8;     ///< simplex diameter (max-norm) at convergence
    double initial_step = 0.1;   ///< initial simplex edge, as a fraction of the box width
};

struct OptimizerResult {
    std::vector<double> x;
    double value = 0.0;
    bool converged = false;
    /// False when no vertex ever beat the starting point.
    bool improved = false;
    int evaluations = 0;
};

using Objective = std::function<double(std::span<const double>)>;

/// Nelder–Mead restricted to `box` by projecting every trial point onto it.
/// NaN objective values count as +inf.
OptimizerResult nelder_mead(const Objective& f, const Box& box, std::span<const double> start, double initial_step,
                            int max_evaluations, double tolerance);

/// Best of `opts.multistarts` Nelder–Mead runs from points drawn uniformly in the box.
OptimizerResult minimize_multistart(const Objective& f, const Box& box, const OptimizerOptions& opts, RngStream& rng);

}  // namespace nlar
