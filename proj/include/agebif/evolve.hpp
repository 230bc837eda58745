#pragma once

#include <utility>

#include "agebif/grid.hpp"

namespace agebif {

// Zeroth-order coefficient sampled on the age-space grid; the steppers read
// row k+1 when advancing from age node k to k+1 (row 0 is never consumed).
using CoefficientPath = AgeField;

struct StepperConfig {
    double newton_tol = 1e-12;   // per-step residual tolerance (scaled by data size)
    int max_newton_iters = 20;
    double eps_d = 0.5;          // admissibility floor for 1 + gamma * v
};

// Reaction/growth parameters of the coupled system.
struct ModelParams {
    double alpha1 = 1.0; // prey self-limitation
    double alpha2 = 1.0; // predation loss
    double beta1 = 1.0;  // predator self-limitation
    double beta2 = 1.0;  // predation gain
    double gamma = 0.5;  // cross-diffusion strength
    double a_m = 1.0;    // maximal age

    void validate() const;
};

CoefficientPath constant_path(const AgeGrid& ages, int n_x, double value);

// All steppers advance z_0 = phi through n_a backward-Euler steps and return
// the whole age field (row k = solution at age node k).

// d/da z - L z + h z = 0:
//   (I - da L + da diag(h_{k+1})) z_{k+1} = z_k.
// Requires da * max(0, -min h) < 1 so the step matrix stays an M-matrix.
AgeField evolve_linear(const DirichletLaplacian& lap, const AgeGrid& ages,
                       const CoefficientPath& h, const Vector& phi,
                       const StepperConfig& cfg = {});

// d/da z - L(d z) + c z = 0 with spatially varying diffusion weight d:
//   (I - da L diag(d_{k+1}) + da diag(c_{k+1})) z_{k+1} = z_k.
// Requires min d >= eps_d and da * max(0, -min c) < 1.
AgeField evolve_conservative(const DirichletLaplacian& lap, const AgeGrid& ages,
                             const CoefficientPath& d, const CoefficientPath& c,
                             const Vector& phi, const StepperConfig& cfg = {});

// d/da z - L z + h z = f:
//   (I - da L + da diag(h_{k+1})) z_{k+1} = z_k + da f_{k+1}.
AgeField evolve_duhamel(const DirichletLaplacian& lap, const AgeGrid& ages,
                        const CoefficientPath& h, const AgeField& f,
                        const Vector& phi, const StepperConfig& cfg = {});

// d/da u - L u + alpha u^2 = 0, fully implicit; per-step Newton on the
// tridiagonal system.  alpha may be negative (mirrored branch extension).
AgeField evolve_semitrivial(const DirichletLaplacian& lap, const AgeGrid& ages,
                            double alpha, const Vector& phi,
                            const StepperConfig& cfg = {});

struct CoupledFields {
    AgeField u;
    AgeField v;
};

// One implicit step of the coupled system (also the react-diffuse substep of
// the time simulator):
//   u+ - dt L((1+gamma v+) u+) + dt (alpha1 u+^2 + alpha2 u+ v+) = u
//   v+ - dt L(v+)              + dt (beta1 v+^2  - beta2 u+ v+)  = v
// Newton on the interleaved 2x2-block tridiagonal system.
std::pair<Vector, Vector> coupled_step(const DirichletLaplacian& lap, double dt,
                                       const ModelParams& p, const Vector& u_prev,
                                       const Vector& v_prev, const StepperConfig& cfg = {});

// Full age sweep of the coupled system from traces (phi_u, phi_v).
CoupledFields evolve_coupled(const DirichletLaplacian& lap, const AgeGrid& ages,
                             const ModelParams& p, const Vector& phi_u,
                             const Vector& phi_v, const StepperConfig& cfg = {});

} // namespace agebif
