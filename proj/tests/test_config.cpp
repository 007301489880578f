#include "doctest.h"

#include "ddsat/config.hpp"

#include <cstdio>
#include <fstream>

using namespace ddsat;

TEST_CASE("inline matrix literals") {
    Mat m = parse_inline_matrix("1 2 3; 4 5 6");
    REQUIRE(m.rows() == 2);
    REQUIRE(m.cols() == 3);
    CHECK(m(0, 0) == 1.0);
    CHECK(m(1, 2) == 6.0);

    Mat row = parse_inline_matrix("0.5 -1.5");
    CHECK(row.rows() == 1);
    CHECK(row.cols() == 2);
    CHECK(row(0, 1) == -1.5);

    CHECK_THROWS_AS(parse_inline_matrix(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_inline_matrix("1 2; 3"), std::invalid_argument);
}

TEST_CASE("seed lists expand ranges") {
    auto seeds = parse_seed_list("7");
    REQUIRE(seeds.size() == 1);
    CHECK(seeds[0] == 7);

    auto ranged = parse_seed_list("1 3 10..13");
    REQUIRE(ranged.size() == 6);
    CHECK(ranged[0] == 1);
    CHECK(ranged[1] == 3);
    CHECK(ranged[2] == 10);
    CHECK(ranged[5] == 13);

    CHECK_THROWS_AS(parse_seed_list(""), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_list("5..2"), std::invalid_argument);
    CHECK_THROWS_AS(parse_seed_list("abc"), std::invalid_argument);
}

TEST_CASE("built-in experiment defaults") {
    ExperimentConfig cfg = benchmark_config();
    CHECK(cfg.system.nx() == 3);
    CHECK(cfg.system.nu() == 3);
    CHECK(cfg.system.A(0, 0) == 1.01);
    CHECK(cfg.system.channel.has_value());
    REQUIRE(cfg.excitation_gain.has_value());
    CHECK((*cfg.excitation_gain - Mat::Identity(3, 3)).norm() == 0.0);
    CHECK(cfg.excitation_low == -1.0);
    CHECK(cfg.excitation_high == 1.0);
    CHECK(cfg.T == 6000);
    CHECK(cfg.noise_std == 0.1);
    REQUIRE(cfg.seeds.size() == 20);
    CHECK(cfg.seeds.front() == 1);
    CHECK(cfg.seeds.back() == 20);
    CHECK(cfg.problem == SynthProblem::Boa);
    CHECK(cfg.synth.eta == 0.995);
    CHECK(cfg.synth.s == 1.0);
    CHECK(cfg.jobs == 1);
}

TEST_CASE("empty text keeps the defaults, comments are stripped") {
    ExperimentConfig base = benchmark_config();
    ExperimentConfig cfg = parse_config_text("# nothing here\n\n   \n# [data] T = 3\n");
    CHECK(cfg.T == base.T);
    CHECK(cfg.noise_std == base.noise_std);
    CHECK(cfg.seeds == base.seeds);
}

TEST_CASE("sectioned values override the defaults") {
    const std::string text = R"(
[data]
T = 1500            # short run
noise_std = 0.05
seeds = 2..4

[synthesis]
problem = l2gain
mode = indirect
eta = 0.9
s = 2.5
kappa2 = 100
epsilon = 1e-9

[compare]
noise_grid = 0.001 0.1
T_grid = 1500 6000 24000

[output]
dir = results
jobs = 4

[solver]
tolerance = 1e-7
max_iterations = 80
)";
    ExperimentConfig cfg = parse_config_text(text);
    CHECK(cfg.T == 1500);
    CHECK(cfg.noise_std == 0.05);
    REQUIRE(cfg.seeds.size() == 3);
    CHECK(cfg.seeds[0] == 2);
    CHECK(cfg.problem == SynthProblem::L2Gain);
    CHECK(cfg.synth.mode == SynthMode::Indirect);
    CHECK(cfg.synth.eta == 0.9);
    CHECK(cfg.synth.s == 2.5);
    REQUIRE(cfg.synth.kappa2.has_value());
    CHECK(*cfg.synth.kappa2 == 100.0);
    REQUIRE(cfg.synth.epsilon.has_value());
    CHECK(*cfg.synth.epsilon == 1e-9);
    REQUIRE(cfg.noise_grid.size() == 2);
    CHECK(cfg.noise_grid[1] == 0.1);
    REQUIRE(cfg.horizon_grid.size() == 3);
    CHECK(cfg.horizon_grid[2] == 24000);
    CHECK(cfg.out_dir == "results");
    CHECK(cfg.jobs == 4);
    CHECK(cfg.synth.solver.tolerance == 1e-7);
    CHECK(cfg.synth.solver.max_iterations == 80);
}

TEST_CASE("explicit plants replace the preset") {
    const std::string text = R"(
[system]
A = 0.5 0; 0 0.25
B = 1; 0.5
ubar = 2
)";
    ExperimentConfig cfg = parse_config_text(text);
    CHECK(cfg.system.nx() == 2);
    CHECK(cfg.system.nu() == 1);
    CHECK(cfg.system.A(1, 1) == 0.25);
    CHECK(cfg.system.bounds.ubar(0) == 2.0);
    CHECK_FALSE(cfg.system.channel.has_value());
    // no benchmark gain survives a plant with different dimensions
    CHECK_FALSE(cfg.excitation_gain.has_value());
}

TEST_CASE("explicit plants can carry a performance channel and a gain") {
    const std::string text = R"(
[system]
A = 0.5 0; 0 0.25
B = 1 0; 0 1
ubar = 1 1
C = 1 0
D_u = 0 0
D_w = 0 0

[excitation]
gain = 0.1 0; 0 0.1
low = -2
high = 2
)";
    ExperimentConfig cfg = parse_config_text(text);
    REQUIRE(cfg.system.channel.has_value());
    CHECK(cfg.system.channel->nz() == 1);
    REQUIRE(cfg.excitation_gain.has_value());
    CHECK((*cfg.excitation_gain)(0, 0) == 0.1);
    CHECK(cfg.excitation_low == -2.0);
    CHECK(cfg.excitation_high == 2.0);
}

TEST_CASE("open loop excitation clears the tracking gain") {
    ExperimentConfig cfg = parse_config_text("[excitation]\nopen_loop = true\n");
    CHECK_FALSE(cfg.excitation_gain.has_value());
}

TEST_CASE("unknown names are rejected with their spelling") {
    CHECK_THROWS_WITH_AS(parse_config_text("[nonsense]\nx = 1\n"),
                         doctest::Contains("unknown section"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("[data]\nlength = 5\n"),
                         doctest::Contains("length"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("[synthesis]\nproblem = biggest\n"),
                         doctest::Contains("biggest"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("T = 5\n"), doctest::Contains("outside"),
                         std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[data\nT = 5\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[data]\nT\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[data]\nT =\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[data]\nT = abc\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[system]\npreset = other\n"), std::invalid_argument);
}

TEST_CASE("incomplete explicit plants are rejected") {
    CHECK_THROWS_WITH_AS(parse_config_text("[system]\nA = 1\n"),
                         doctest::Contains("A, B, and ubar"), std::invalid_argument);
    CHECK_THROWS_WITH_AS(parse_config_text("[system]\nA = 1\nB = 1\nubar = 1\nC = 1\n"),
                         doctest::Contains("C, D_u, and D_w"), std::invalid_argument);
}

TEST_CASE("semantic validation of parsed values") {
    CHECK_THROWS_AS(parse_config_text("[data]\nT = 0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[data]\nnoise_std = -0.1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[excitation]\nlow = 1\nhigh = -1\n"),
                    std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[output]\njobs = 0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[synthesis]\neta = 0\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[synthesis]\neta = 1.2\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[synthesis]\ns = -1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_config_text("[excitation]\ngain = 1 0; 0 1\n[system]\n"
                                      "A = 0.5\nB = 1\nubar = 1\n"),
                    std::invalid_argument);
}

TEST_CASE("config files load from disk") {
    const std::string path = "config_load_test.cfg";
    {
        std::ofstream out(path);
        out << "[data]\nT = 123\n";
    }
    ExperimentConfig cfg = load_config(path);
    CHECK(cfg.T == 123);
    std::remove(path.c_str());
    CHECK_THROWS_AS(load_config("does_not_exist.cfg"), std::runtime_error);
}
