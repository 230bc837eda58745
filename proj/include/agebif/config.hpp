#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "agebif/continuation.hpp"

namespace agebif {

enum class BirthShape { Constant, Ramp, Samples };

struct BirthSpec {
    BirthShape shape = BirthShape::Constant;
    std::filesystem::path samples_file; // resolved against the config directory
};

struct SemitrivialSpec {
    std::string species = "prey"; // "prey" or "predator"
    std::vector<double> params = {1.2, 1.5, 2.0, 4.0};
};

struct XiScanSpec {
    double lo = 1.05;
    double hi = 1.35;
    int samples = 13;
};

struct BifpointsSpec {
    std::vector<std::string> which = {"eta0", "xi0"};
    double eta = 2.0;     // fixed eta for xi0 / xi1-scan / delta
    double xi = 2.0;      // fixed xi (> 1) for eta0
    double xi_prey = 0.9; // fixed xi (in (0,1)) for eta1
    double eta_max = 64.0;
    std::vector<double> delta_etas = {10.0, 100.0, 1000.0};
    XiScanSpec xi_scan;
};

struct BranchSpec {
    std::string scenario = "T1"; // T1, T22 or T222
    ContinuationConfig cc;
};

struct SimulateSpec {
    std::string init = "coexistence"; // coexistence, prey, predator or small
    double eta = 2.0;
    double xi = 2.0;
    double t_end = 5.0;
    int sample_every = 8;
    double amplitude = 0.2; // coexistence: relative first-step amplitude;
                            // small: constant initial value
    double perturb = 1.0;   // multiplies the steady initial data
};

struct RunConfig {
    int n_x = 12;
    int n_a = 48;
    ModelParams params;
    BirthSpec birth;
    SemitrivialSpec semitrivial;
    BifpointsSpec bifpoints;
    BranchSpec branch;
    SimulateSpec simulate;
    std::uint64_t seed = 0;
    std::filesystem::path out_dir = "out";
};

// Parses and validates a JSON config.  Unknown keys anywhere are rejected;
// every numeric bound violation is reported with the offending key and the
// violated bound.  Throws InvalidArgument.
RunConfig load_config(const std::filesystem::path& path);

// Assembles the discrete problem the commands run on (builds grids, the
// Laplacian, and the normalized birth profile from the configured shape).
Problem problem_from_config(const RunConfig& rc);

} // namespace agebif
