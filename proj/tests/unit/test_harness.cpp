#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "nlar/errors.hpp"
#include "nlar/harness.hpp"

using namespace nlar;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig cfg;
    cfg.model_id = "4";
    cfg.T = 60;
    cfg.N = 6;
    cfg.M = 50;
    cfg.K = 10;
    cfg.horizons = {1, 2, 3};
    cfg.master_seed = 42;
    cfg.methods = {Method::SPI, Method::QpiF, Method::L2PpiP, Method::L1PpiF, Method::L2Sim, Method::L2Boot,
                   Method::EstNaive};
    return cfg;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("method names round-trip") {
    for (Method m : all_methods()) CHECK(parse_method(method_name(m)) == m);
    CHECK(all_methods().size() == 13);
    CHECK(method_name(Method::L2PpiP) == "L2-PPI-p");
    CHECK(is_interval_method(Method::SPI));
    CHECK(is_point_method(Method::TrueNaive));
    CHECK_THROWS_AS(parse_method("L3-Sim"), ParseError);
}

TEST_CASE("configuration validation") {
    ExperimentConfig cfg = small_config();
    CHECK_NOTHROW(cfg.validate());
    auto expect_domain = [](ExperimentConfig c) { CHECK_THROWS_AS(c.validate(), DomainError); };
    ExperimentConfig c = cfg;
    c.N = 0;
    expect_domain(c);
    c = cfg;
    c.methods.clear();
    expect_domain(c);
    c = cfg;
    c.horizons = {0};
    expect_domain(c);
    c = cfg;
    c.alpha = 1.0;
    expect_domain(c);
    c = cfg;
    c.K = 1;
    expect_domain(c);
    c = cfg;
    c.M = 1;
    expect_domain(c);
    c = cfg;
    c.model_id = "9";
    expect_domain(c);
    CHECK(cfg.max_horizon() == 3);
}

TEST_CASE("degenerate innovations: every method collapses onto the true path") {
    for (const char* id : {"1", "4", "6"}) {
        CAPTURE(id);
        ExperimentConfig cfg;
        cfg.model_id = id;
        cfg.T = 40;
        cfg.N = 3;
        cfg.M = 20;
        cfg.K = 5;
        cfg.burn_in = 0;
        cfg.horizons = {1, 2, 3, 4, 5};
        cfg.innovation = InnovationDistribution::point_mass(0.0);
        cfg.methods = all_methods();
        const ExperimentResult r = run_experiment(cfg);
        REQUIRE(r.n_effective == 3);
        for (const auto& [key, row] : r.table.rows()) {
            CAPTURE(key.first);
            CAPTURE(key.second);
            if (row.cvr) {
                CHECK(*row.cvr == 1.0);
                CHECK(*row.len == 0.0);
            } else {
                CHECK(*row.mspe == 0.0);
            }
            if (row.msd) CHECK(*row.msd == 0.0);
        }
    }
}

TEST_CASE("tables are identical across reruns and worker counts") {
    ExperimentConfig cfg = small_config();
    const std::string one = format_table(run_experiment(cfg).table);
    CHECK(format_table(run_experiment(cfg).table) == one);
    cfg.workers = 3;
    CHECK(format_table(run_experiment(cfg).table) == one);
    cfg.master_seed = 43;
    CHECK(format_table(run_experiment(cfg).table) != one);
}

TEST_CASE("adding methods does not perturb the others") {
    ExperimentConfig cfg = small_config();
    const ExperimentResult full = run_experiment(cfg);
    cfg.methods = {Method::QpiF, Method::L2Sim};
    const ExperimentResult part = run_experiment(cfg);
    for (int h : cfg.horizons) {
        CHECK(*part.table.find("QPI-f", h) == *full.table.find("QPI-f", h));
        CHECK(part.table.find("L2-Sim", h)->mspe == full.table.find("L2-Sim", h)->mspe);
    }
}

TEST_CASE("MSD sits on the bootstrap rows and needs the simulation partner") {
    ExperimentConfig cfg = small_config();
    cfg.methods = {Method::L2Sim, Method::L2Boot, Method::L1Boot, Method::TrueNaive};
    const ExperimentResult r = run_experiment(cfg);
    CHECK(r.table.find("L2-Boot", 1)->msd.has_value());
    CHECK_FALSE(r.table.find("L1-Boot", 1)->msd.has_value());
    CHECK_FALSE(r.table.find("L2-Sim", 1)->msd.has_value());
    CHECK_FALSE(r.table.find("TrueNaive", 1)->msd.has_value());
    CHECK(*r.table.find("L2-Boot", 1)->msd > 0.0);
    CHECK(r.table.find("L2-Boot", 1)->n_effective == 6);
}

TEST_CASE("coverage of a noisy model is strictly inside (0, 1)") {
    ExperimentConfig cfg;
    cfg.model_id = "4";
    cfg.T = 100;
    cfg.N = 100;
    cfg.M = 200;
    cfg.horizons = {1, 3};
    cfg.master_seed = 7;
    cfg.methods = {Method::SPI, Method::L2Sim};
    const MetricsTable t = run_coverage_experiment(cfg);
    CHECK(t.size() == 2);
    for (int h : cfg.horizons) {
        const MetricsRow* row = t.find("SPI", h);
        REQUIRE(row);
        CHECK(*row->cvr > 0.0);
        CHECK(*row->cvr < 1.0);
        CHECK(*row->len > 0.0);
    }
    CHECK(run_point_experiment(cfg).find("L2-Sim", 1)->mspe.has_value());
    cfg.methods = {Method::L2Sim};
    CHECK_THROWS_AS(run_coverage_experiment(cfg), DomainError);
}

TEST_CASE("failed replications are dropped and counted") {
    ExperimentConfig cfg;
    BuiltinModel explosive;
    explosive.spec.order = 1;
    explosive.spec.mean = MeanFunction{MeanFamily::Linear, 1};
    explosive.spec.theta1_domain = Box{{-5.0}, {5.0}};
    explosive.spec.label = "explosive";
    explosive.truth = ModelParameters{{4.0}, {}};
    cfg.custom_model = explosive;
    cfg.T = 1000;
    cfg.burn_in = 0;
    cfg.N = 4;
    cfg.M = 10;
    cfg.horizons = {1};
    cfg.methods = {Method::L2Sim};
    const ExperimentResult r = run_experiment(cfg);
    CHECK(r.n_effective == 0);
    CHECK(r.n_failed == 4);
    const MetricsRow* row = r.table.find("L2-Sim", 1);
    REQUIRE(row);
    CHECK_FALSE(row->mspe.has_value());
    CHECK(row->n_effective == 0);
}

TEST_CASE("metrics table CSV") {
    MetricsTable empty;
    CHECK(format_table(empty) == "method,horizon,msd,mspe,cvr,len,n_effective\n");
    CHECK(parse_table(format_table(empty)).empty());

    MetricsTable t;
    t.at("L2-Boot", 1) = MetricsRow{0.00452, 0.9595, std::nullopt, std::nullopt, 500};
    t.at("SPI", 5) = MetricsRow{std::nullopt, std::nullopt, 0.9502, 4.34, 500};
    const std::string csv = format_table(t);
    CHECK(csv ==
          "method,horizon,msd,mspe,cvr,len,n_effective\n"
          "L2-Boot,1,0.004520,0.959500,,,500\n"
          "SPI,5,,,0.950200,4.340000,500\n");
    CHECK(parse_table(csv) == t);
    CHECK(format_table(parse_table(csv)) == csv);
    CHECK_THROWS_AS(parse_table("method,horizon\nSPI,1\n"), ParseError);
    CHECK_THROWS_AS(parse_table("method,horizon,msd,mspe,cvr,len,n_effective\nSPI,x,,,,,1\n"), ParseError);

    const auto path = std::filesystem::temp_directory_path() / "nlar_table_test.csv";
    export_table(t, path.string());
    CHECK(slurp(path) == csv);
    CHECK(read_table(path.string()) == t);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(read_table("/nonexistent-dir/table.csv"), IoError);
}

TEST_CASE("experiment outputs: table and manifest") {
    ExperimentConfig cfg = small_config();
    cfg.methods = {Method::SPI, Method::L2Sim};
    const ExperimentResult r = run_experiment(cfg);
    const auto dir = std::filesystem::temp_directory_path();
    const auto table = dir / "nlar_exp_test.csv";
    const auto manifest = dir / "nlar_exp_test.manifest.json";
    write_experiment_outputs(cfg, r, table.string(), manifest.string());
    CHECK(slurp(table) == format_table(r.table));
    const auto j = nlohmann::json::parse(slurp(manifest));
    CHECK(j["n_effective"] == 6);
    CHECK(j["n_failed"] == 0);
    CHECK(j["config"]["model"] == "4");
    CHECK(j["config"]["seed"] == 42);
    CHECK(j["config"]["methods"] == nlohmann::json::array({"SPI", "L2-Sim"}));

    write_experiment_outputs(cfg, r, table.string(), manifest.string(), R"({"model":"4","N":"6"})");
    CHECK(nlohmann::json::parse(slurp(manifest))["config"]["N"] == "6");
    CHECK_THROWS_AS(write_experiment_outputs(cfg, r, table.string(), manifest.string(), "{not json"), ParseError);
    std::filesystem::remove(table);
    std::filesystem::remove(manifest);
}
