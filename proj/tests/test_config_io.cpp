#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "sselab/config.hpp"
#include "sselab/io.hpp"

using namespace sselab;

namespace {

const char* kFlatBath = R"(# comment line
system.kind = flat_bath
system.gamma = 0.1
system.levels = 21
system.spacing = 0.1
noise.sigma = 0.5   # trailing comment
run.dt = 0.05
run.horizon = 2
run.output_stride = 4
run.n_traj = 16
run.observables = ["survival", "occupations"]
run.master_seed = 99
run.engine = all
compare.allowance = 0.01
)";

std::size_t error_line(const std::string& text) {
    try {
        parse_experiment_config(text);
    } catch (const ConfigError& e) {
        return e.line();
    }
    return static_cast<std::size_t>(-1);
}

}  // namespace

TEST(Config, ParsesFlatBathPlan) {
    const auto cfg = parse_experiment_config(kFlatBath);
    const auto& plan = cfg.plan;
    EXPECT_EQ(plan.system.dim(), 22u);
    EXPECT_DOUBLE_EQ(plan.noise.sigma, 0.5);
    EXPECT_EQ(plan.steps(), 40u);
    EXPECT_EQ(plan.output_times().size(), 11u);
    EXPECT_EQ(plan.master_seed, 99u);
    ASSERT_EQ(plan.observables.size(), 2u);
    EXPECT_EQ(plan.observables[1], Observable::occupations);
    EXPECT_EQ(cfg.engines.size(), 4u);
    EXPECT_DOUBLE_EQ(cfg.oracle_allowance, 0.01);
    EXPECT_DOUBLE_EQ(cfg.occupation_allowance, 0.01);
    EXPECT_TRUE(plan.system.bath_spacing.has_value());
}

TEST(Config, ErrorsCarryLineNumbers) {
    EXPECT_EQ(error_line("system.kind = flat_bath\nnot a pair\n"), 2u);
    EXPECT_EQ(error_line(std::string(kFlatBath) + "run.dt = 0.1\n"), 15u);  // duplicate
    EXPECT_EQ(error_line(std::string(kFlatBath) + "run.bogus = 1\n"), 15u);  // unknown key
    std::string bad_number = kFlatBath;
    bad_number.replace(bad_number.find("0.5   #"), 3, "abc");
    EXPECT_EQ(error_line(bad_number), 6u);
}

TEST(Config, FieldIsReported) {
    try {
        parse_experiment_config(std::string(kFlatBath) + "run.bogus = 1\n");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_EQ(e.field(), "run.bogus");
        EXPECT_NE(std::string(e.what()).find("config:15"), std::string::npos);
    }
}

TEST(Config, StepBoundIsEnforcedUnlessOverridden) {
    std::string coarse = kFlatBath;
    coarse.replace(coarse.find("run.dt = 0.05"), 13, "run.dt = 0.5 ");
    coarse.replace(coarse.find("run.output_stride = 4"), 21, "run.output_stride = 1");
    EXPECT_THROW(parse_experiment_config(coarse), ConfigError);
    EXPECT_NO_THROW(parse_experiment_config(coarse + "run.allow_coarse_step = true\n"));
}

TEST(Config, ExplicitSystemDefaultsToFirstLevel) {
    const auto cfg = parse_experiment_config(R"(
system.energies = [0.0, 1.0]
system.V = [[[0,0],[0.1,0]],[[0.1,0],[0,0]]]
run.dt = 0.01
run.horizon = 1
)");
    EXPECT_EQ(cfg.plan.system.manifold, std::vector<std::size_t>{0});
    EXPECT_EQ(cfg.plan.system.initial, 0u);
}

TEST(Config, SystemJsonRoundTrip) {
    const auto spec = build_flat_bath(0.1, 5, 0.2, 0.1).spec;
    const auto j = system_spec_to_json(spec);
    const auto back = system_spec_from_json(j);
    EXPECT_EQ(back.energies, spec.energies);
    EXPECT_NEAR((back.V - spec.V).norm(), 0.0, 0.0);
    EXPECT_EQ(back.manifold, spec.manifold);
    EXPECT_EQ(back.bath_spacing, spec.bath_spacing);
}

TEST(Io, Fnv1aKnownVectors) {
    EXPECT_EQ(fnv1a64(""), 0xcbf29ce484222325ULL);
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
    EXPECT_EQ(hex64(0xabcULL), "0000000000000abc");
}

TEST(Io, DoublesRoundTrip) {
    for (double x : {0.1, 1.0 / 3.0, 6.02214076e23, -2.5e-300}) EXPECT_EQ(std::stod(format_double(x)), x);
}

TEST(Io, HeaderLineAndCsvLayout) {
    EstimateTable table;
    table.times = {0.0, 0.5};
    table.columns = {"survival"};
    table.values = {{{1.0, std::nullopt, 1}}, {{0.5, 0.01, 1}}};
    const RunHeader header{7, "x = 1"};
    std::ostringstream out;
    write_estimates_csv(out, table, header);
    std::istringstream in(out.str());
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# sse_lab " + std::string(kVersion) + " master_seed=7 config_hash=" + hex64(fnv1a64("x = 1")));
    std::getline(in, line);
    EXPECT_EQ(line, "t,observable,mean,std_error,n");
    std::getline(in, line);
    EXPECT_EQ(line, "0,survival,1,,1");
    std::getline(in, line);
    EXPECT_EQ(line, "0.5,survival,0.5,0.01,1");
}

TEST(Io, JsonHeaderComesFirst) {
    const auto path = std::filesystem::temp_directory_path() / "sselab_io_test.json";
    write_json(path.string(), nlohmann::json{{"alpha", 1}, {"pass", true}}, RunHeader{3, "cfg"});
    std::ifstream in(path);
    const auto doc = nlohmann::ordered_json::parse(in);
    EXPECT_EQ(doc.begin().key(), "header");
    EXPECT_EQ(doc["header"]["master_seed"], 3);
    EXPECT_EQ(doc["header"]["version"], std::string(kVersion));
    EXPECT_EQ(doc["pass"], true);
    std::filesystem::remove(path);
}
