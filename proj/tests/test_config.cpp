#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

#include "agebif/config.hpp"
#include "agebif/errors.hpp"
#include "agebif/grid.hpp"

using namespace agebif;
namespace fs = std::filesystem;

namespace {

fs::path temp_config(const std::string& text, const char* name = "cfg.json") {
    const fs::path dir = fs::temp_directory_path() / "agebif_cfg";
    fs::create_directories(dir);
    const fs::path p = dir / name;
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out << text;
    out.close();
    return p;
}

// loads and returns the message of the InvalidArgument the text must provoke
std::string rejection(const std::string& text) {
    const fs::path p = temp_config(text);
    try {
        load_config(p);
    } catch (const InvalidArgument& e) {
        return e.what();
    }
    FAIL("expected the config to be rejected: ", text);
    return {};
}

} // namespace

TEST_CASE("empty config yields documented defaults") {
    const RunConfig rc = load_config(temp_config("{}"));
    CHECK(rc.n_x == 12);
    CHECK(rc.n_a == 48);
    CHECK(rc.params.alpha1 == 1.0);
    CHECK(rc.params.alpha2 == 1.0);
    CHECK(rc.params.beta1 == 1.0);
    CHECK(rc.params.beta2 == 1.0);
    CHECK(rc.params.gamma == 0.5);
    CHECK(rc.params.a_m == 1.0);
    CHECK(rc.birth.shape == BirthShape::Constant);
    CHECK(rc.semitrivial.species == "prey");
    CHECK(rc.bifpoints.which == std::vector<std::string>{"eta0", "xi0"});
    CHECK(rc.bifpoints.eta == 2.0);
    CHECK(rc.bifpoints.xi == 2.0);
    CHECK(rc.bifpoints.xi_prey == 0.9);
    CHECK(rc.branch.scenario == "T1");
    CHECK(rc.branch.cc.fixed_value == 2.0);
    CHECK(rc.branch.cc.s0 == 1e-2);
    CHECK(rc.branch.cc.h_min == 1e-4);
    CHECK(rc.branch.cc.h_max == 0.25);
    CHECK(rc.branch.cc.norm_cap == 1e3);
    CHECK(rc.simulate.init == "coexistence");
    CHECK(rc.simulate.t_end == 5.0);
    CHECK(rc.seed == 0);
    CHECK(rc.out_dir == fs::path("out"));
}

TEST_CASE("full config overrides every default") {
    const RunConfig rc = load_config(temp_config(R"({
        "grid": {"n_x": 20, "n_a": 96},
        "params": {"alpha1": 1.0, "alpha2": 0.5, "beta1": 1.5, "beta2": 2.0,
                   "gamma": 0.0, "a_m": 2.0},
        "birth": {"shape": "ramp"},
        "semitrivial": {"species": "predator", "params": [1.5, 3.0]},
        "bifpoints": {"which": ["eta1", "delta"], "eta": 3.0, "xi": 1.5,
                      "xi_prey": 0.85, "eta_max": 32.0, "delta_etas": [2.0, 4.0],
                      "xi_scan": {"lo": 1.1, "hi": 1.4, "samples": 5}},
        "branch": {"scenario": "T222", "fixed_value": 3.0, "s0": 0.02,
                   "h_min": 1e-3, "h_max": 0.1, "norm_cap": 50.0, "pos_tol": 1e-7,
                   "mu_min": 1e-3, "mu_max": 16.0, "max_corrector_iters": 8,
                   "max_records": 500},
        "simulate": {"init": "small", "eta": 0.5, "xi": 0.5, "t_end": 3.0,
                     "sample_every": 4, "amplitude": 0.1, "perturb": 2.0},
        "seed": 7,
        "out_dir": "artifacts"
    })"));
    CHECK(rc.n_x == 20);
    CHECK(rc.n_a == 96);
    CHECK(rc.params.gamma == 0.0);
    CHECK(rc.params.a_m == 2.0);
    CHECK(rc.birth.shape == BirthShape::Ramp);
    CHECK(rc.semitrivial.species == "predator");
    CHECK(rc.semitrivial.params == std::vector<double>{1.5, 3.0});
    CHECK(rc.bifpoints.which == std::vector<std::string>{"eta1", "delta"});
    CHECK(rc.bifpoints.xi_prey == 0.85);
    CHECK(rc.bifpoints.eta_max == 32.0);
    CHECK(rc.bifpoints.delta_etas == std::vector<double>{2.0, 4.0});
    CHECK(rc.bifpoints.xi_scan.lo == 1.1);
    CHECK(rc.bifpoints.xi_scan.samples == 5);
    CHECK(rc.branch.scenario == "T222");
    CHECK(rc.branch.cc.fixed_value == 3.0);
    CHECK(rc.branch.cc.max_records == 500);
    CHECK(rc.simulate.init == "small");
    CHECK(rc.simulate.perturb == 2.0);
    CHECK(rc.seed == 7);
    CHECK(rc.out_dir == fs::path("artifacts"));
}

TEST_CASE("unknown keys are rejected with their location") {
    CHECK(rejection(R"({"bogus": 1})").find("top level: unknown key \"bogus\"") !=
          std::string::npos);
    CHECK(rejection(R"({"grid": {"n_t": 4}})").find("grid: unknown key \"n_t\"") !=
          std::string::npos);
    CHECK(rejection(R"({"params": {"alpha3": 1}})").find("params: unknown key \"alpha3\"") !=
          std::string::npos);
    CHECK(rejection(R"({"bifpoints": {"xi_scan": {"step": 1}}})")
              .find("bifpoints.xi_scan: unknown key \"step\"") != std::string::npos);
    CHECK(rejection(R"({"branch": {"cap": 2}})").find("branch: unknown key \"cap\"") !=
          std::string::npos);
    CHECK(rejection(R"({"simulate": {"dt": 0.1}})").find("simulate: unknown key \"dt\"") !=
          std::string::npos);
}

TEST_CASE("bound violations name the violated bound") {
    CHECK(rejection(R"({"grid": {"n_x": 2}})").find("grid.n_x: must be >= 3") !=
          std::string::npos);
    CHECK(rejection(R"({"grid": {"n_a": 0}})").find("grid.n_a: must be >= 1") !=
          std::string::npos);
    CHECK(rejection(R"({"params": {"alpha1": -1.0}})").find("alpha1") != std::string::npos);
    CHECK(rejection(R"({"params": {"gamma": -0.5}})").find("gamma") != std::string::npos);
    CHECK(rejection(R"({"params": {"a_m": 0.0}})").find("a_m") != std::string::npos);
    CHECK(rejection(R"({"semitrivial": {"params": [1.0, -2.0]}})")
              .find("must be > 0") != std::string::npos);
    CHECK(rejection(R"({"bifpoints": {"eta": 1.0}})").find("bifpoints.eta: must be > 1") !=
          std::string::npos);
    CHECK(rejection(R"({"bifpoints": {"xi": 0.9}})").find("bifpoints.xi: must be > 1") !=
          std::string::npos);
    CHECK(rejection(R"({"bifpoints": {"xi_prey": 1.5}})")
              .find("bifpoints.xi_prey: must lie in (0, 1)") != std::string::npos);
    CHECK(rejection(R"({"bifpoints": {"delta_etas": [4.0, 2.0]}})")
              .find("strictly increasing") != std::string::npos);
    CHECK(rejection(R"({"bifpoints": {"xi_scan": {"lo": 0.9}}})")
              .find("xi_scan.lo: must be > 1") != std::string::npos);
    CHECK(rejection(R"({"bifpoints": {"xi_scan": {"lo": 1.2, "hi": 1.1}}})")
              .find("xi_scan.hi: must be > lo") != std::string::npos);
    CHECK(rejection(R"({"branch": {"h_min": 0.5, "h_max": 0.1}})")
              .find("branch.h_max: must be >= h_min") != std::string::npos);
    CHECK(rejection(R"({"branch": {"mu_min": 8.0, "mu_max": 4.0}})")
              .find("branch.mu_max: must be > mu_min") != std::string::npos);
    CHECK(rejection(R"({"branch": {"max_corrector_iters": 1}})")
              .find("max_corrector_iters: must be >= 2") != std::string::npos);
    CHECK(rejection(R"({"branch": {"scenario": "T22"}})")
              .find("must lie in (0, 1) for scenario T22") != std::string::npos);
    CHECK(rejection(R"({"branch": {"scenario": "T1", "fixed_value": 0.9}})")
              .find("must be > 1 for scenarios T1 and T222") != std::string::npos);
    CHECK(rejection(R"({"simulate": {"eta": -0.1}})").find("simulate.eta: must be >= 0") !=
          std::string::npos);
    CHECK(rejection(R"({"simulate": {"sample_every": 0}})")
              .find("sample_every: must be >= 1") != std::string::npos);
    CHECK(rejection(R"({"seed": -3})").find("seed: must be a nonnegative integer") !=
          std::string::npos);
    CHECK(rejection(R"({"out_dir": ""})").find("out_dir: must not be empty") !=
          std::string::npos);
}

TEST_CASE("enum fields reject unknown spellings") {
    CHECK(rejection(R"({"birth": {"shape": "spike"}})")
              .find("must be one of constant, ramp, samples") != std::string::npos);
    CHECK(rejection(R"({"semitrivial": {"species": "wolf"}})")
              .find("must be \"prey\" or \"predator\"") != std::string::npos);
    CHECK(rejection(R"({"bifpoints": {"which": ["eta2"]}})").find("unknown item \"eta2\"") !=
          std::string::npos);
    CHECK(rejection(R"({"branch": {"scenario": "T3", "fixed_value": 2.0}})")
              .find("must be T1, T22 or T222") != std::string::npos);
    CHECK(rejection(R"({"simulate": {"init": "random"}})")
              .find("must be one of coexistence, prey, predator, small") != std::string::npos);
}

TEST_CASE("type errors and malformed json are rejected") {
    CHECK(rejection("{").find("config:") != std::string::npos);
    CHECK(rejection("[1, 2]").find("top level must be a JSON object") != std::string::npos);
    CHECK(rejection(R"({"grid": 5})").find("grid: must be an object") != std::string::npos);
    CHECK(rejection(R"({"grid": {"n_x": "many"}})").find("grid.n_x: must be an integer") !=
          std::string::npos);
    CHECK(rejection(R"({"grid": {"n_a": 4.5}})").find("grid.n_a: must be an integer") !=
          std::string::npos);
    CHECK(rejection(R"({"params": {"gamma": "none"}})")
              .find("params.gamma: must be a number") != std::string::npos);
    CHECK(rejection(R"({"bifpoints": {"which": "eta0"}})")
              .find("must be a non-empty array of strings") != std::string::npos);
    CHECK_THROWS_AS(load_config(fs::temp_directory_path() / "agebif_cfg" / "missing.json"),
                    InvalidArgument);
}

TEST_CASE("birth sample files are resolved, counted and validated") {
    const fs::path dir = fs::temp_directory_path() / "agebif_cfg";
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "b.txt");
        for (int k = 0; k <= 8; ++k) out << 1.0 + 0.1 * k << "\n";
    }
    const fs::path cfg = temp_config(
        R"({"grid": {"n_x": 6, "n_a": 8}, "birth": {"shape": "samples", "file": "b.txt"}})");
    const RunConfig rc = load_config(cfg);
    CHECK(rc.birth.shape == BirthShape::Samples);
    // resolved relative to the config file's directory
    CHECK(rc.birth.samples_file == dir / "b.txt");

    const Problem pr = problem_from_config(rc);
    CHECK(pr.grid.n_x == 6);
    CHECK(pr.ages.n_a == 8);
    CHECK(pr.birth.samples.size() == 9);

    // wrong sample count: file has 9 values but n_a = 16 wants 17
    const fs::path cfg2 = temp_config(
        R"({"grid": {"n_x": 6, "n_a": 16}, "birth": {"shape": "samples", "file": "b.txt"}})",
        "cfg2.json");
    CHECK_THROWS_WITH_AS(problem_from_config(load_config(cfg2)),
                         doctest::Contains("expected 17 samples"), InvalidArgument);

    {
        std::ofstream out(dir / "junk.txt");
        out << "1.0 2.0 fish";
    }
    const fs::path cfg3 = temp_config(
        R"({"grid": {"n_x": 6, "n_a": 8}, "birth": {"shape": "samples", "file": "junk.txt"}})",
        "cfg3.json");
    CHECK_THROWS_WITH_AS(problem_from_config(load_config(cfg3)),
                         doctest::Contains("non-numeric"), InvalidArgument);

    CHECK(rejection(R"({"birth": {"shape": "samples"}})").find("requires \"file\"") !=
          std::string::npos);
    CHECK(rejection(R"({"birth": {"shape": "constant", "file": "b.txt"}})")
              .find("only allowed with shape \"samples\"") != std::string::npos);
}

TEST_CASE("problem_from_config assembles the configured discretization") {
    const RunConfig rc = load_config(temp_config(
        R"({"grid": {"n_x": 9, "n_a": 24}, "params": {"a_m": 2.0}, "birth": {"shape": "ramp"}})"));
    const Problem pr = problem_from_config(rc);
    CHECK(pr.grid.n_x == 9);
    CHECK(pr.ages.n_a == 24);
    CHECK(pr.ages.a_m == 2.0);
    CHECK(pr.ages.da == doctest::Approx(2.0 / 24));
    // ramp rises from zero: first sample 0, later ones positive
    CHECK(pr.birth.samples[0] == 0.0);
    CHECK(pr.birth.samples[pr.ages.n_a] > 0.0);
    CHECK(pr.birth_constant > 0.0);
}
