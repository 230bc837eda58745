#pragma once

#include <vector>

#include "agebif/continuation.hpp"

namespace agebif {

// One time level of both populations on the age-space grid (row k = age node
// k, column i = interior x node i).
struct PopulationState {
    double t = 0.0;
    AgeField u;
    AgeField v;
};

// Which component of a one-species steady state to populate.
enum class Species { Prey, Predator };

// Time integration settings.  The time step is pinned to the age step, so a
// run advances round(t_end / da) whole steps.
struct SimulateConfig {
    double t_end = 5.0;
    int sample_every = 1; // keep every k-th time level; t = 0 and the final
                          // level are always kept
};

// Initial data constructed from computed steady states.  Entries are clamped
// to zero from below so the result is admissible initial data even when the
// source field carries roundoff-level negative values.
PopulationState population_from_coexistence(const Problem& pr, const CoexistenceState& st);
PopulationState population_from_semitrivial(const Problem& pr, const SemiTrivialSolution& s,
                                            Species which);

// Characteristics-aligned splitting for the time-dependent system, dt = da.
// One step, in order:
//   1. renewal integrals of the current field (birth-weighted),
//   2. transport + react-diffuse: new slice k+1 is one implicit coupled step
//      applied to current slice k (exact advection along dt = da),
//   3. the new a = 0 slice is the renewal boundary value (eta Iu, xi Iv).
// The boundary slice is not react-diffused: it is a constraint at the new
// time level, and evolving it would advance it twice.  With this ordering a
// steady state of the age steppers is a fixed point of the map up to the
// per-step solver tolerance.
// Throws InvalidArgument on shape/sign violations; per-step solver errors
// (NewtonFailure, CoefficientFloorError) propagate annotated with the time.
std::vector<PopulationState> simulate(const Problem& pr, const PopulationState& init,
                                      double eta, double xi, const SimulateConfig& sc);

// L2(age x space) distance of every sampled state to a fixed target,
// combined over both components; reports whether the trailing half of the
// sequence is non-increasing.
struct DistanceSeries {
    std::vector<double> values;
    bool tail_decreasing = false;
};

DistanceSeries steady_state_distance(const Problem& pr, const std::vector<PopulationState>& traj,
                                     const PopulationState& target);

} // namespace agebif
