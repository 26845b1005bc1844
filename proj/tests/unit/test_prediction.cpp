#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "nlar/errors.hpp"
#include "nlar/prediction.hpp"

using namespace nlar;

namespace {

ModelSpec linear_spec() {
    ModelSpec s;
    s.order = 1;
    s.mean = MeanFunction{MeanFamily::Linear, 1};
    s.theta1_domain = Box{{-2.0}, {2.0}};
    s.label = "linear";
    return s;
}

PredictiveEnsemble column_ensemble(const std::vector<double>& values) {
    PredictiveEnsemble e(1, values.size(), {0.0}, EnsembleSource::Oracle);
    std::copy(values.begin(), values.end(), e.column(1).begin());
    return e;
}

double sample_sd(std::span<const double> v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

}  // namespace

TEST_CASE("point-mass innovations give a rank-1 ensemble") {
    const auto lin = linear_spec();
    RngStream rng(1);
    const auto ens = simulate_future(lin, ModelParameters{{0.5}, {}}, std::vector{1.0},
                                     InnovationDistribution::point_mass(0.0), 2, 17, rng);
    CHECK(ens.rows() == 17);
    for (std::size_t m = 0; m < ens.rows(); ++m) CHECK(ens.row(m) == std::vector{0.5, 0.25});

    const auto m4 = builtin_model("4");
    const auto e4 = simulate_future(m4.spec, m4.truth, std::vector{0.3}, InnovationDistribution::point_mass(0.0), 5,
                                    9, rng);
    const auto naive = naive_path(m4.spec, m4.truth.mean, std::vector{0.3}, 5);
    for (std::size_t m = 0; m < e4.rows(); ++m) CHECK(e4.row(m) == naive);
    for (Loss loss : {Loss::L1, Loss::L2})
        for (int k = 1; k <= 5; ++k) CHECK(point_predict(e4, loss, k).value == naive[static_cast<std::size_t>(k - 1)]);
}

TEST_CASE("rows follow the model recursion from their own innovations") {
    const auto m3 = builtin_model("3");
    RngStream a(21), b(21);
    const int h = 4;
    const std::size_t M = 6;
    const auto ens = simulate_future(m3.spec, m3.truth, std::vector{0.7}, InnovationDistribution::standard_normal(), h,
                                     M, a);
    std::vector<double> eps(static_cast<std::size_t>(h) * M);
    InnovationDistribution::standard_normal().fill(b.engine(), eps);
    for (std::size_t m = 0; m < M; ++m) {
        double x = 0.7;
        for (int k = 0; k < h; ++k) {
            const double e = eps[m * static_cast<std::size_t>(h) + static_cast<std::size_t>(k)];
            const double next = (x <= 0 ? 0.1 * x : 0.8 * x) + 0.5 * std::exp(-x * x) * e;
            CHECK(ens.row(m)[static_cast<std::size_t>(k)] == doctest::Approx(next).epsilon(1e-13));
            x = ens.row(m)[static_cast<std::size_t>(k)];
        }
    }
}

TEST_CASE("simulate_future rejects bad sizes and explosions") {
    const auto lin = linear_spec();
    RngStream rng(1);
    CHECK_THROWS_AS(simulate_future(lin, ModelParameters{{0.5}, {}}, std::vector{1.0},
                                    InnovationDistribution::point_mass(0.0), 0, 3, rng),
                    DomainError);
    CHECK_THROWS_AS(simulate_future(lin, ModelParameters{{0.5}, {}}, std::vector{1.0},
                                    InnovationDistribution::point_mass(0.0), 2, 0, rng),
                    DomainError);
    CHECK_THROWS_AS(simulate_future(lin, ModelParameters{{2.0}, {}}, std::vector{1e300},
                                    InnovationDistribution::point_mass(0.0), 3, 2, rng),
                    ExplosionError);
}

TEST_CASE("point predictors") {
    CHECK(point_value(std::vector{1.0, 2.0, 3.0}, Loss::L2) == 2.0);
    CHECK(point_value(std::vector{1.0, 2.0, 3.0}, Loss::L1) == 2.0);
    CHECK(point_value(std::vector{1.0, 2.0, 3.0, 100.0}, Loss::L1) == 2.5);
    CHECK(point_value(std::vector{1.0, 2.0, 3.0, 100.0}, Loss::L2) == 26.5);

    const auto e = column_ensemble({3.0, 1.0, 2.0});
    CHECK(point_predict(e, Loss::L2).value == 2.0);
    CHECK(point_predict(e, Loss::L1).horizon == 1);
    CHECK(point_predict(e, Loss::L2, 1, [](double x) { return x * x; }).value == doctest::Approx(14.0 / 3.0));
    CHECK(point_predict(e, Loss::L1, 1, [](double x) { return -x; }).value == -2.0);

    std::mt19937_64 eng(3);
    std::normal_distribution<double> z;
    std::vector<double> v(1001);
    for (double& x : v) x = z(eng);
    const double med = point_value(v, Loss::L1);
    std::shuffle(v.begin(), v.end(), eng);
    CHECK(point_value(v, Loss::L1) == med);
}

TEST_CASE("loss names") {
    CHECK(parse_loss("L1") == Loss::L1);
    CHECK(parse_loss("L2") == Loss::L2);
    CHECK(to_string(Loss::L1) == "L1");
    CHECK_THROWS_AS(parse_loss("L3"), ParseError);
}

TEST_CASE("quantile prediction intervals") {
    std::vector<double> hundred(100);
    std::iota(hundred.begin(), hundred.end(), 1.0);
    std::mt19937_64 eng(8);
    std::shuffle(hundred.begin(), hundred.end(), eng);
    const auto e = column_ensemble(hundred);
    const QuantileInterval q = qpi(e, 0.10);
    CHECK(q.lower == 5.0);
    CHECK(q.upper == 95.0);
    CHECK(q.level == doctest::Approx(0.9));

    std::vector<double> ten(10);
    std::iota(ten.begin(), ten.end(), 1.0);
    const QuantileInterval c = qpi(column_ensemble(ten), 0.9999);
    CHECK(c.lower <= c.upper);
    CHECK(c.lower == 5.0);
    CHECK(c.upper == 6.0);

    std::normal_distribution<double> z;
    std::vector<double> draws(997);
    for (double& x : draws) x = z(eng);
    const auto ez = column_ensemble(draws);
    const QuantileInterval wide = qpi(ez, 0.05);
    const QuantileInterval narrow = qpi(ez, 0.10);
    CHECK(wide.lower <= narrow.lower);
    CHECK(narrow.upper <= wide.upper);
    CHECK(std::find(draws.begin(), draws.end(), wide.lower) != draws.end());
    CHECK(std::find(draws.begin(), draws.end(), wide.upper) != draws.end());

    CHECK_THROWS_AS(qpi(column_ensemble({1.0}), 0.1), DomainError);
    CHECK_THROWS_AS(qpi(ez, 0.0), DomainError);
}

TEST_CASE("naive iteration") {
    const auto lin = linear_spec();
    CHECK(naive_predict(lin, std::vector{0.5}, std::vector{1.0}, 3) == 0.125);
    const auto m4 = builtin_model("4");
    CHECK(naive_predict(m4.spec, m4.truth.mean, std::vector{0.0}, 1) ==
          doctest::Approx(0.2 + std::log(0.5)).epsilon(1e-15));
    CHECK(naive_predict(m4.spec, m4.truth.mean, std::vector{0.0}, 1) == doctest::Approx(-0.4931).epsilon(1e-4));
}

TEST_CASE("one-step oracle mean matches the analytic conditional mean") {
    const auto m4 = builtin_model("4");
    const std::size_t M = 100000;
    for (double xT : {-2.0, 0.0, 1.3}) {
        RngStream rng(static_cast<std::uint64_t>(100 + xT * 10));
        const auto ens =
            simulate_future(m4.spec, m4.truth, std::vector{xT}, InnovationDistribution::standard_normal(), 1, M, rng);
        const double mean = point_predict(ens, Loss::L2).value;
        const double sd = sample_sd(ens.column(1));
        CHECK(std::fabs(mean - (0.2 + std::log(0.5 + std::fabs(xT)))) < 4.0 * sd / std::sqrt(double(M)));
    }
}

TEST_CASE("oracle prediction collapses to the naive path without noise and is seed-deterministic") {
    const auto m4 = builtin_model("4");
    const TimeSeries series(1, {0.1, -0.4, 0.7});
    for (int h = 1; h <= 5; ++h) {
        RngStream rng(4);
        const auto o = oracle_predict(m4.spec, m4.truth, series, InnovationDistribution::point_mass(0.0), h, 50,
                                      Loss::L2, 0.05, rng);
        const double naive = naive_predict(m4.spec, m4.truth.mean, std::vector{0.7}, h);
        CHECK(o.point.value == naive);
        CHECK(o.interval.lower == naive);
        CHECK(o.interval.upper == naive);
    }
    RngStream a(9), b(9);
    const auto oa = oracle_predict(m4.spec, m4.truth, series, InnovationDistribution::standard_normal(), 3, 500,
                                   Loss::L1, 0.05, a);
    const auto ob = oracle_predict(m4.spec, m4.truth, series, InnovationDistribution::standard_normal(), 3, 500,
                                   Loss::L1, 0.05, b);
    CHECK(oa.point.value == ob.point.value);
    CHECK(oa.interval.lower == ob.interval.lower);
    CHECK(oa.interval.upper == ob.interval.upper);
}

TEST_CASE("bootstrap prediction on noiseless linear data equals the naive iteration with the estimate") {
    std::vector<double> v{1.0};
    for (int t = 0; t < 30; ++t) v.push_back(0.5 * v.back());
    const TimeSeries series(1, v);
    const auto lin = linear_spec();
    for (ResidualKind kind : {ResidualKind::Fitted, ResidualKind::Predictive}) {
        RngStream rng(2);
        const auto bp = bootstrap_predict(series, lin, kind, 3, 200, Loss::L2, 0.05, {}, rng);
        // The residuals are zero up to the optimizer tolerance; with slope 0.5
        // their effect on a 3-step path is bounded by 2·max|residual|.
        double rmax = 0.0;
        for (double r : bp.residuals.values) rmax = std::max(rmax, std::fabs(r));
        CHECK(rmax < 1e-8);
        const double naive = naive_predict(lin, bp.fit.theta1_hat, series.conditioning_lags(), 3);
        CHECK(std::fabs(bp.point.value - naive) <= 2.0 * rmax);
        CHECK(bp.interval.upper - bp.interval.lower <= 4.0 * rmax);
        CHECK(bp.residuals.kind == kind);
        CHECK(bp.residuals.centered);
        CHECK(bp.ensemble.source() ==
              (kind == ResidualKind::Fitted ? EnsembleSource::BootstrapFitted : EnsembleSource::BootstrapPredictive));
    }
}

TEST_CASE("fitted and predictive pipelines share the estimate") {
    const auto m4 = builtin_model("4");
    RngStream g(3);
    const TimeSeries series =
        simulate_path(m4.spec, m4.truth, InnovationDistribution::standard_normal(), 80, 100, g);
    RngStream a(5), b(5);
    const auto f = bootstrap_predict(series, m4.spec, ResidualKind::Fitted, 2, 100, Loss::L2, 0.05, {}, a);
    const auto p = bootstrap_predict(series, m4.spec, ResidualKind::Predictive, 2, 100, Loss::L2, 0.05, {}, b);
    CHECK(f.fit.theta1_hat == p.fit.theta1_hat);
    CHECK(f.residuals.values != p.residuals.values);
}

TEST_CASE("Monte-Carlo error of the L1 and L2 predictors shrinks at the root-M rate") {
    const auto m4 = builtin_model("4");
    auto rms_gap = [&](std::size_t M) {
        double s = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            RngStream rng = RngStream(404).child(static_cast<std::uint64_t>(rep)).child(M);
            const auto ens =
                simulate_future(m4.spec, m4.truth, std::vector{0.4}, InnovationDistribution::standard_normal(), 2, M,
                                rng);
            const double gap = point_predict(ens, Loss::L2).value - point_predict(ens, Loss::L1).value;
            s += gap * gap;
        }
        return std::sqrt(s / 100.0);
    };
    // Both predictors converge; their gap converges to the fixed mean-median offset at the root-M rate.
    RngStream big(1);
    const auto ref =
        simulate_future(m4.spec, m4.truth, std::vector{0.4}, InnovationDistribution::standard_normal(), 2, 2000000, big);
    const double offset = point_predict(ref, Loss::L2).value - point_predict(ref, Loss::L1).value;
    auto rms_error = [&](std::size_t M) {
        double s = 0.0;
        for (int rep = 0; rep < 100; ++rep) {
            RngStream rng = RngStream(405).child(static_cast<std::uint64_t>(rep)).child(M);
            const auto ens =
                simulate_future(m4.spec, m4.truth, std::vector{0.4}, InnovationDistribution::standard_normal(), 2, M,
                                rng);
            const double gap = point_predict(ens, Loss::L2).value - point_predict(ens, Loss::L1).value;
            s += (gap - offset) * (gap - offset);
        }
        return std::sqrt(s / 100.0);
    };
    const double ratio = rms_error(1000) / rms_error(100000);
    CHECK(ratio > 5.0);
    CHECK(ratio < 20.0);
    CHECK(rms_gap(100000) < rms_gap(1000));
}

TEST_CASE("ensemble CSV export") {
    const auto lin = linear_spec();
    RngStream rng(1);
    const auto ens = simulate_future(lin, ModelParameters{{0.5}, {}}, std::vector{1.0},
                                     InnovationDistribution::standard_normal(), 3, 4, rng);
    const auto path = std::filesystem::temp_directory_path() / "nlar_ensemble_test.csv";
    ens.write_csv(path.string());
    std::ifstream in(path);
    std::string line;
    std::getline(in, line);
    CHECK(line == "h1,h2,h3");
    std::size_t rows = 0;
    while (std::getline(in, line)) {
        std::vector<double> cells;
        std::size_t pos = 0;
        while (pos <= line.size()) {
            const std::size_t next = std::min(line.find(',', pos), line.size());
            cells.push_back(std::stod(line.substr(pos, next - pos)));
            pos = next + 1;
        }
        CHECK(cells == ens.row(rows));
        ++rows;
    }
    CHECK(rows == 4);
    std::filesystem::remove(path);
}
