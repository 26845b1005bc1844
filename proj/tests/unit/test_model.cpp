#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "nlar/errors.hpp"
#include "nlar/model.hpp"

using namespace nlar;

namespace {

ModelSpec linear_spec(double half_width = 5.0) {
    ModelSpec s;
    s.order = 1;
    s.mean = MeanFunction{MeanFamily::Linear, 1};
    s.theta1_domain = Box{{-half_width}, {half_width}};
    s.label = "linear";
    return s;
}

/// Hand-written zoo formulas, independent of the library kernels.
double zoo_formula(const std::string& id, const std::vector<double>& x) {
    if (id == "1" || id == "3") return x[0] <= 0 ? 0.1 * x[0] : 0.8 * x[0];
    if (id == "2") return x[0] <= 0 ? 0.5 * x[0] + 0.2 * x[1] + 0.1 * x[2] : 0.8 * x[0];
    if (id == "4") return 0.2 + std::log(0.5 + std::fabs(x[0]));
    if (id == "5") return 2.0 * std::log(x[0] * x[0]);
    if (id == "6") return std::log(10.0 + 5.0 * std::exp(0.9 * x[0]));
    if (id == "7") return std::log(5.0 * std::exp(0.9 * x[0]) + 4.0 * std::exp(0.9 * x[1]) + 6.0 * std::exp(0.9 * x[2]));
    throw std::logic_error("no formula");
}

}  // namespace

TEST_CASE("eval_mean on the documented points") {
    const auto m4 = builtin_model("4");
    CHECK(eval_mean(m4.spec, std::vector{0.5}, m4.truth.mean) == doctest::Approx(0.2).epsilon(1e-15));
    const auto m1 = builtin_model("1");
    CHECK(eval_mean(m1.spec, std::vector{-1.0}, m1.truth.mean) == doctest::Approx(-0.1).epsilon(1e-15));
    CHECK(eval_mean(m1.spec, std::vector{0.0}, m1.truth.mean) == 0.0);
    const auto m7 = builtin_model("7");
    CHECK(eval_mean(m7.spec, std::vector{0.0, 0.0, 0.0}, m7.truth.mean) == doctest::Approx(std::log(15.0)));
}

TEST_CASE("eval_mean rejects bad lags and out-of-domain parameters") {
    const auto m4 = builtin_model("4");
    CHECK_THROWS_AS(eval_mean(m4.spec, std::vector{0.5, 1.0}, m4.truth.mean), DomainError);
    CHECK_THROWS_AS(eval_mean(m4.spec, std::vector{0.5}, std::vector{0.2, -1.0}), DomainError);
    CHECK_THROWS_AS(eval_mean(m4.spec, std::vector{0.5}, std::vector{0.2}), DomainError);
}

TEST_CASE("eval_variance for the heteroscedastic threshold model") {
    const auto m3 = builtin_model("3");
    CHECK(eval_variance(m3.spec, std::vector{0.0}, m3.truth.variance) == doctest::Approx(0.5));
    CHECK(eval_variance(m3.spec, std::vector{1.0}, m3.truth.variance) == doctest::Approx(0.5 * std::exp(-1.0)));
    CHECK(eval_variance(m3.spec, std::vector{1.0}, m3.truth.variance) == doctest::Approx(0.18394).epsilon(1e-4));
    const auto m4 = builtin_model("4");
    CHECK_THROWS_AS(eval_variance(m4.spec, std::vector{0.0}, std::vector{1.0}), DomainError);
}

TEST_CASE("builtin zoo: orders, ids and errors") {
    const int orders[] = {1, 3, 1, 1, 1, 1, 3};
    for (int id = 1; id <= 7; ++id) {
        const auto m = builtin_model(std::to_string(id));
        CHECK(m.spec.order == orders[id - 1]);
        CHECK(m.spec.theta1_domain.contains(m.truth.mean));
        CHECK(m.spec.heteroscedastic() == (id == 3));
    }
    const auto m4 = builtin_model("4");
    CHECK(m4.spec.mean.family == MeanFamily::LogAbs);
    CHECK(m4.truth.mean == std::vector{0.2, 0.5});
    CHECK(builtin_model("2").spec.mean.family == MeanFamily::ThresholdLinear);
    CHECK_THROWS_AS(builtin_model("8"), DomainError);
    CHECK_THROWS_AS(builtin_model("0"), DomainError);
}

TEST_CASE("zoo mean functions agree with hand-coded formulas at random lags") {
    std::mt19937_64 eng(42);
    std::uniform_real_distribution<double> u(-4.0, 4.0);
    for (const char* id : {"1", "2", "3", "4", "5", "6", "7"}) {
        CAPTURE(id);
        const auto m = builtin_model(id);
        for (int i = 0; i < 100; ++i) {
            std::vector<double> x(static_cast<std::size_t>(m.spec.order));
            for (double& v : x) v = u(eng);
            const double want = zoo_formula(id, x);
            CHECK(eval_mean(m.spec, x, m.truth.mean) == doctest::Approx(want).epsilon(1e-13));
        }
    }
}

TEST_CASE("ModelSpec validation") {
    ModelSpec s = linear_spec();
    CHECK_NOTHROW(s.validate());
    s.theta1_domain = Box{{0.0, 0.0}, {1.0, 1.0}};
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = linear_spec();
    s.theta1_domain.upper[0] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = linear_spec();
    s.order = 0;
    CHECK_THROWS_AS(s.validate(), DomainError);
    s = linear_spec();
    s.variance = VarianceFunction{VarianceFamily::Constant};
    s.theta2_domain = Box{{0.0}, {1.0}};
    CHECK_THROWS_AS(s.validate(), DomainError);
}

TEST_CASE("TimeSeries indexing") {
    const TimeSeries s(2, {1, 2, 3, 4, 5});
    CHECK(s.T() == 3);
    CHECK(s.at(-1) == 1);
    CHECK(s.at(3) == 5);
    CHECK(std::vector(s.targets().begin(), s.targets().end()) == std::vector<double>{3, 4, 5});
    CHECK(std::vector(s.lag(1).begin(), s.lag(1).end()) == std::vector<double>{2, 3, 4});
    CHECK(std::vector(s.lag(2).begin(), s.lag(2).end()) == std::vector<double>{1, 2, 3});
    CHECK(s.conditioning_lags() == std::vector<double>{5, 4});
    CHECK_THROWS_AS(TimeSeries(2, {1, 2}), DomainError);
    CHECK_THROWS_AS(TimeSeries(1, {1, NAN}), DomainError);
}

TEST_CASE("simulate_path length, determinism and the noiseless recursion") {
    const auto m4 = builtin_model("4");
    RngStream a(9), b(9);
    const auto pa = simulate_path(m4.spec, m4.truth, InnovationDistribution::standard_normal(), 5, 0, a);
    const auto pb = simulate_path(m4.spec, m4.truth, InnovationDistribution::standard_normal(), 5, 0, b);
    CHECK(pa.values().size() == 6);
    CHECK(std::equal(pa.values().begin(), pa.values().end(), pb.values().begin()));

    for (const char* id : {"1", "2", "3", "4", "5", "6", "7"}) {
        CAPTURE(id);
        const auto m = builtin_model(id);
        RngStream rng(3);
        const auto path = simulate_path(m.spec, m.truth, InnovationDistribution::point_mass(0.0), 40, 25, rng);
        CHECK(path.values().size() == 40 + static_cast<std::size_t>(m.spec.order));
        for (std::size_t t = 1; t <= path.T(); ++t) {
            std::vector<double> lags;
            for (int j = 1; j <= m.spec.order; ++j) lags.push_back(path.lag(j)[t - 1]);
            CHECK(path.targets()[t - 1] == eval_mean(m.spec, lags, m.truth.mean));
        }
    }
}

TEST_CASE("noiseless Model 4 orbit: the fixed point exists but repels") {
    // x* solves x = 0.2 + log(0.5 + |x|); bisection on [-1, 0].
    auto g = [](double x) { return 0.2 + std::log(0.5 + std::fabs(x)) - x; };
    double lo = -1.0, hi = 0.0;
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        (g(mid) > 0 ? lo : hi) = mid;
    }
    const double x_star = 0.5 * (lo + hi);
    CHECK(x_star == doctest::Approx(-0.18229425509978).epsilon(1e-12));
    const double slope = 1.0 / (0.5 - x_star);
    CHECK(slope > 1.0);

    const auto m4 = builtin_model("4");
    RngStream rng(5);
    const auto path = simulate_path(m4.spec, m4.truth, InnovationDistribution::point_mass(0.0), 200, 1000, rng);
    double far = 0.0;
    for (double v : path.targets()) far = std::max(far, std::fabs(v - x_star));
    CHECK(far > 0.1);
}

TEST_CASE("simulate_path reports explosions with the step index") {
    ModelSpec s = linear_spec();
    ModelParameters theta{{3.0}, {}};
    RngStream rng(1);
    try {
        simulate_path(s, theta, InnovationDistribution::point_mass(1.0), 100, 0, rng);
        FAIL("expected an explosion");
    } catch (const ExplosionError& e) {
        CHECK(e.step() > 10);
        CHECK(e.step() < 40);
    }
}

TEST_CASE("innovation laws") {
    Engine eng(17);
    const std::size_t n = 200000;
    std::vector<double> v(n);
    InnovationDistribution::chi_squared_centered(3).fill(eng, v);
    double mean = 0;
    for (double x : v) mean += x;
    mean /= n;
    CHECK(std::fabs(mean) < 4.0 * std::sqrt(6.0 / n));

    InnovationDistribution::standard_normal().fill(eng, v);
    double m2 = 0;
    for (double x : v) m2 += x * x;
    CHECK(m2 / n == doctest::Approx(1.0).epsilon(0.02));

    InnovationDistribution::point_mass(0.0).fill(eng, v);
    CHECK(std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));

    const auto emp = InnovationDistribution::empirical({-1.0, 0.0, 2.0});
    std::vector<int> counts(3);
    for (int i = 0; i < 30000; ++i) {
        const double x = emp.sample(eng);
        REQUIRE((x == -1.0 || x == 0.0 || x == 2.0));
        ++counts[x == -1.0 ? 0 : (x == 0.0 ? 1 : 2)];
    }
    for (int c : counts) CHECK(std::abs(c - 10000) < 4 * std::sqrt(30000 * (1.0 / 3) * (2.0 / 3)));

    for (const char* text : {"normal", "chisq-centered:3", "chisq:3", "point:0"})
        CHECK(InnovationDistribution::parse(text).describe() == text);
    CHECK_THROWS(InnovationDistribution::parse("cauchy"));
}

TEST_CASE("drift probe") {
    const auto m1 = builtin_model("1");
    const DriftReport r1 = probe_drift_condition(m1.spec, m1.truth.mean, 5.0, 20);
    CHECK(r1.satisfied);
    CHECK(r1.lambda_hat <= 0.8 + 1e-12);

    ModelSpec lin = linear_spec();
    const DriftReport r2 = probe_drift_condition(lin, std::vector{2.0}, 5.0, 20);
    CHECK_FALSE(r2.satisfied);
    CHECK(r2.lambda_hat == doctest::Approx(2.0));

    const DriftReport r0 = probe_drift_condition(lin, std::vector{0.0}, 5.0, 20);
    CHECK(r0.lambda_hat == 0.0);
    CHECK(r0.satisfied);

    const auto m4 = builtin_model("4");
    double prev = -1.0;
    for (double radius : {0.5, 1.0, 2.0, 4.0, 8.0}) {
        const double lam = probe_drift_condition(m4.spec, m4.truth.mean, radius, 10).lambda_hat;
        CHECK(lam >= prev);
        prev = lam;
    }
    CHECK_THROWS_AS(probe_drift_condition(lin, std::vector{0.5}, 1.0, 1), DomainError);
}
