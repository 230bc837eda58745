#pragma once

#include "agebif/spectral.hpp"

namespace agebif {

// Everything the branch and continuation solvers need in one place: grids,
// Laplacian, reaction parameters, the normalized birth profile, stepper knobs.
struct Problem {
    SpatialGrid grid;
    AgeGrid ages;
    DirichletLaplacian lap;
    ModelParams params;
    BirthProfile birth;    // normalized: r(H_[0]) = 1
    double birth_constant; // scale applied by the normalization
    StepperConfig stepper;

    CoefficientPath zero_path() const { return constant_path(ages, grid.n_x, 0.0); }
    CoefficientPath unit_path() const { return constant_path(ages, grid.n_x, 1.0); }
};

inline Problem make_problem(int n_x, int n_a, const ModelParams& params,
                            const BirthProfile& raw_birth, const StepperConfig& cfg = {}) {
    params.validate();
    SpatialGrid grid(n_x);
    AgeGrid ages(n_a, params.a_m);
    DirichletLaplacian lap = build_laplacian(grid);
    NormalizedBirth nb = normalize_birth(lap, ages, raw_birth, cfg);
    return Problem{grid, ages, lap, params, std::move(nb.profile), nb.constant, cfg};
}

inline Problem make_problem(int n_x, int n_a, const ModelParams& params,
                            const StepperConfig& cfg = {}) {
    AgeGrid ages(n_a, params.a_m);
    return make_problem(n_x, n_a, params, BirthProfile::constant(ages), cfg);
}

} // namespace agebif
