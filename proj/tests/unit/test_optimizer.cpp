#include <doctest.h>

#include <cmath>
#include <limits>

#include "nlar/optimizer.hpp"

using namespace nlar;

TEST_CASE("multistart Nelder-Mead finds the Rosenbrock minimum inside a box") {
    const Box box{{-2.0, -2.0}, {2.0, 2.0}};
    auto rosen = [](std::span<const double> x) {
        return 100.0 * std::pow(x[1] - x[0] * x[0], 2) + std::pow(1.0 - x[0], 2);
    };
    RngStream rng(1);
    OptimizerOptions opts;
    opts.max_evaluations = 5000;
    const OptimizerResult r = minimize_multistart(rosen, box, opts, rng);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.x[1] == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(r.value < 1e-10);
    CHECK(r.converged);
}

TEST_CASE("projection keeps iterates in the box and reaches a boundary minimum") {
    const Box box{{0.0}, {1.0}};
    auto f = [](std::span<const double> x) {
        CHECK(x[0] >= 0.0);
        CHECK(x[0] <= 1.0);
        return (x[0] - 3.0) * (x[0] - 3.0);
    };
    const OptimizerResult r = nelder_mead(f, box, std::vector{0.2}, 0.1, 2000, 1e-10);
    CHECK(r.x[0] == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("NaN objective values are treated as +inf") {
    const Box box{{0.0}, {1.0}};
    auto f = [](std::span<const double> x) {
        return x[0] < 0.5 ? std::numeric_limits<double>::quiet_NaN() : (x[0] - 0.7) * (x[0] - 0.7);
    };
    const OptimizerResult r = nelder_mead(f, box, std::vector{0.9}, 0.1, 2000, 1e-10);
    CHECK(r.x[0] == doctest::Approx(0.7).epsilon(1e-8));
    CHECK(r.improved);
}

TEST_CASE("evaluation cap and the not-improved report") {
    const Box box{{-1.0, -1.0, -1.0}, {1.0, 1.0, 1.0}};
    int calls = 0;
    auto f = [&](std::span<const double> x) {
        ++calls;
        return x[0] * x[0] + 2 * x[1] * x[1] + 3 * x[2] * x[2];
    };
    const OptimizerResult r = nelder_mead(f, box, std::vector{0.9, 0.9, 0.9}, 0.1, 40, 1e-12);
    CHECK_FALSE(r.converged);
    CHECK(r.evaluations == calls);
    CHECK(r.evaluations <= 40 + 4);

    auto flat = [](std::span<const double>) { return 1.0; };
    const OptimizerResult s = nelder_mead(flat, box, std::vector{0.0, 0.0, 0.0}, 0.1, 200, 1e-8);
    CHECK_FALSE(s.improved);
}

TEST_CASE("multistart is deterministic for a fixed seed") {
    const Box box{{-3.0, -3.0}, {3.0, 3.0}};
    auto f = [](std::span<const double> x) { return std::sin(3 * x[0]) * std::cos(2 * x[1]) + 0.1 * x[0] * x[0]; };
    RngStream a(77), b(77);
    const OptimizerResult ra = minimize_multistart(f, box, {}, a);
    const OptimizerResult rb = minimize_multistart(f, box, {}, b);
    CHECK(ra.x == rb.x);
    CHECK(ra.value == rb.value);
    CHECK(ra.evaluations == rb.evaluations);
}
