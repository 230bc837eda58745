#pragma once

#include <string>

#include "agebif/evolve.hpp"

namespace agebif {

// Dense matrix of a birth-weighted evolution operator on traces.
struct NonlocalOperator {
    Matrix M;
    std::string tag; // which family and coefficient produced it (diagnostics)
};

struct SpectralResult {
    double radius;
    Vector eigvec;   // componentwise positive, sup-norm 1
    int iterations;
    double residual; // ||M v - r v||_inf
};

// Trace -> birth integral of the linear evolution:
//   column j = age_integral(evolve_linear(h, e_j), b).
NonlocalOperator assemble_H(const DirichletLaplacian& lap, const AgeGrid& ages,
                            const CoefficientPath& h, const BirthProfile& b,
                            const StepperConfig& cfg = {});

// Same with the conservative evolution (diffusion weight d, absorption c);
// this is the trace map whose fixed points detect bifurcation from the
// predator-only branch.
NonlocalOperator assemble_G(const DirichletLaplacian& lap, const AgeGrid& ages,
                            const CoefficientPath& d, const CoefficientPath& c,
                            const BirthProfile& b, const StepperConfig& cfg = {});

// Spectral radius of an entrywise-nonnegative matrix by power iteration
// from the all-ones vector; converged when successive normalized iterates
// agree to 1e-12 in sup norm.
SpectralResult spectral_radius(const Matrix& M);

inline SpectralResult spectral_radius(const NonlocalOperator& op) {
    return spectral_radius(op.M);
}

struct NormalizedBirth {
    BirthProfile profile; // scaled so that r(H_[0]) = 1 exactly
    double constant;      // the scale c applied to the raw samples
};

// Discrete normalization: c = 1 / r(H_[0; b_raw]).  For b_raw == 1, a_m = 1
// the constant approaches pi^2 / (1 - exp(-pi^2)) under grid refinement.
NormalizedBirth normalize_birth(const DirichletLaplacian& lap, const AgeGrid& ages,
                                const BirthProfile& b_raw, const StepperConfig& cfg = {});

} // namespace agebif
