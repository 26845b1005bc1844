#include "nlar/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "nlar/errors.hpp"

namespace nlar {

namespace {

struct Vertex {
    std::vector<double> x;
    double f;
};

double safe(double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; }

}  // namespace

OptimizerResult nelder_mead(const Objective& objective, const Box& box, std::span<const double> start,
                            double initial_step, int max_evaluations, double tolerance) {
    const std::size_t n = box.dim();
    if (start.size() != n) throw DomainError("optimizer start has wrong dimension");

    OptimizerResult result;
    auto eval = [&](const std::vector<double>& x) {
        ++result.evaluations;
        return safe(objective(x));
    };

    std::vector<Vertex> simplex;
    simplex.reserve(n + 1);
    {
        std::vector<double> x0 = box.clamp(start);
        simplex.push_back({x0, eval(x0)});
        for (std::size_t i = 0; i < n; ++i) {
            std::vector<double> xi = x0;
            const double step = initial_step * (box.upper[i] - box.lower[i]);
            xi[i] = x0[i] + step <= box.upper[i] ? x0[i] + step : x0[i] - step;
            xi = box.clamp(xi);
            simplex.push_back({xi, eval(xi)});
        }
    }
    const double f_start = simplex[0].f;

    std::vector<double> centroid(n), trial(n);
    auto point_along = [&](double coef, const std::vector<double>& towards) {
        for (std::size_t j = 0; j < n; ++j) trial[j] = centroid[j] + coef * (towards[j] - centroid[j]);
        return box.clamp(trial);
    };
    auto diameter = [&] {
        double d = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j) d = std::max(d, std::fabs(simplex[i].x[j] - simplex[0].x[j]));
        return d;
    };
    auto by_value = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };

    std::stable_sort(simplex.begin(), simplex.end(), by_value);
    while (true) {
        if (diameter() < tolerance) {
            result.converged = true;
            break;
        }
        if (result.evaluations >= max_evaluations) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i].x[j];
        for (double& c : centroid) c /= static_cast<double>(n);

        Vertex& worst = simplex[n];
        const auto reflected = point_along(-1.0, worst.x);
        const double fr = eval(reflected);

        if (fr < simplex[0].f) {
            const auto expanded = point_along(-2.0, worst.x);
            const double fe = eval(expanded);
            if (fe < fr) worst = {expanded, fe};
            else worst = {reflected, fr};
        } else if (fr < simplex[n - 1].f) {
            worst = {reflected, fr};
        } else {
            bool shrink = false;
            if (fr < worst.f) {
                const auto outside = point_along(-0.5, worst.x);
                const double fc = eval(outside);
                if (fc <= fr) worst = {outside, fc};
                else shrink = true;
            } else {
                const auto inside = point_along(0.5, worst.x);
                const double fcc = eval(inside);
                if (fcc < worst.f) worst = {inside, fcc};
                else shrink = true;
            }
            if (shrink) {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        simplex[i].x[j] = simplex[0].x[j] + 0.5 * (simplex[i].x[j] - simplex[0].x[j]);
                    simplex[i].f = eval(simplex[i].x);
                }
            }
        }
        std::stable_sort(simplex.begin(), simplex.end(), by_value);
    }

    result.x = simplex[0].x;
    result.value = simplex[0].f;
    result.improved = simplex[0].f < f_start;
    return result;
}

OptimizerResult minimize_multistart(const Objective& objective, const Box& box, const OptimizerOptions& opts,
                                    RngStream& rng) {
    const int starts = std::max(1, opts.multistarts);
    OptimizerResult best;
    best.value = std::numeric_limits<double>::infinity();
    int total_evaluations = 0;
    bool first = true;
    std::vector<double> x0(box.dim());
    for (int s = 0; s < starts; ++s) {
        for (std::size_t j = 0; j < box.dim(); ++j)
            x0[j] = box.lower[j] == box.upper[j] ? box.lower[j] : rng.uniform(box.lower[j], box.upper[j]);
        OptimizerResult r = nelder_mead(objective, box, x0, opts.initial_step, opts.max_evaluations, opts.tolerance);
        total_evaluations += r.evaluations;
        if (first || r.value < best.value) {
            best = std::move(r);
            first = false;
        }
    }
    best.evaluations = total_evaluations;
    return best;
}

}  // namespace nlar
