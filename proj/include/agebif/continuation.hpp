#pragma once

#include <string>
#include <vector>

#include "agebif/branches.hpp"

namespace agebif {

// A converged steady state of the full two-species system, identified by its
// traces and the active renewal parameter mu (eta when xi is held fixed, xi
// when eta is).  The age fields are the coupled evolution of the traces.
struct CoexistenceState {
    Vector u0;
    Vector v0;
    double mu;
    CoupledFields fields;
    int newton_iters = 0;
    double residual_norm = 0.0;
};

// Which branch a continuation run is tracing: the launch point, the vanishing
// component there, and the parameter that moves all follow from this.
//   PredatorBaseEta: launch at eta0 on the predator-only branch, vary eta
//                    (xi fixed); u vanishes at the base.
//   PreyBaseEta:     launch at eta1 on the prey-only branch, vary eta
//                    (xi fixed); v vanishes at the base.
//   PreyBaseXi:      launch at xi0 on the prey-only branch, vary xi
//                    (eta fixed); v vanishes at the base.
enum class BranchContext { PredatorBaseEta, PreyBaseEta, PreyBaseXi };

enum class StopReason {
    NormCapReached,
    HitSemitrivialU, // u-component vanished
    HitSemitrivialV, // v-component vanished
    ParamExitedRange,
    CoefficientFloor,
    StepFailure,
};

const char* to_string(StopReason r);

struct BranchRecord {
    int index;
    double s;  // accumulated arclength from the launch point
    double mu;
    double norm_u; // discrete L2 of the age field
    double norm_v;
    double min_u0;
    double min_v0;
    double step;      // arclength step that produced this record (0 at launch)
    int newton_iters; // corrector iterations (0 at launch)
};

struct ContinuationConfig {
    double fixed_value = 2.0; // the renewal parameter that stays fixed
    double s0 = 1e-2;         // first-step amplitude, relative to the base trace
    double h_min = 1e-4;
    double h_max = 0.25;
    double norm_cap = 1e3;    // stop when norm_u + norm_v exceeds this
    double pos_tol = 1e-8;    // vanishing threshold, relative to the branch scale
    double mu_min = 1e-6;
    double mu_max = 64.0;
    int max_corrector_iters = 12;
    int max_records = 2000;
};

struct BranchResult {
    std::vector<BranchRecord> records;
    std::vector<CoexistenceState> states; // aligned with records
    StopReason stop = StopReason::StepFailure;
    std::string stop_detail;
    CoexistenceState terminal; // last state computed (recorded or not)
};

// Residual of the coexistence fixed point,
//   R = (u0 - eta * age_integral(u-field), v0 - xi * age_integral(v-field)),
// stacked as (u block; v block), fields from evolve_coupled(u0, v0).
Vector coexistence_residual(const Problem& pr, const Vector& u0, const Vector& v0,
                            double eta, double xi);

// Forward-difference Jacobian of the residual with respect to (u0, v0) at
// fixed parameters; step 1e-7 * (1 + sup norm of the traces).
Matrix coexistence_jacobian(const Problem& pr, const Vector& u0, const Vector& v0,
                            double eta, double xi);

// The semi-trivial solution viewed as a (degenerate) coexistence state: the
// vanishing component's trace is zero, mu is the bifurcation value.  Used as
// the zeroth point of the secant predictor.
CoexistenceState semitrivial_embedding(const Problem& pr, BranchContext context,
                                       const SemiTrivialSolution& base, double mu);

// First coexistence state off a bifurcation point.  The vanishing
// component's amplitude is pinned (its trace is fixed to s0 at the peak of
// the tangent direction) and Newton solves for both traces and mu; this
// sidesteps the exactly singular Jacobian at the bifurcation point itself.
// Retries with s0/2 up to 6 times; throws NewtonFailure if all fail.
CoexistenceState first_step_off_bifurcation(const Problem& pr, const ContinuationConfig& cc,
                                            BranchContext context, const TangentData& tangent,
                                            const SemiTrivialSolution& base);

// Pseudo-arclength continuation: secant predictor, bordered Newton corrector
// with constraint <X - X_prev, secant> = h, X = (u0, v0, mu).  The step
// halves on corrector failure and grows by 1.3 after fast successes.  The
// launch state becomes record 0; the state that triggers a vanishing-trace
// stop is kept as `terminal` but not recorded.
BranchResult continue_branch(const Problem& pr, const ContinuationConfig& cc,
                             BranchContext context, const CoexistenceState& start,
                             const CoexistenceState& base_embedding);

struct EndpointReport {
    std::string alternative; // short machine-readable label
    std::string detail;
    bool verified = false;        // a claimed connection was checked numerically
    double connection_param = 0;  // parameter value of a verified connection
    double connection_error = 0;  // measured mismatch of that connection
};

// Map a terminated branch to the labeled outcome its launch context admits:
// unbounded growth, connection to the other semi-trivial branch (verified
// against solve_semitrivial), exit through the parameter range, or
// "unclassified" when the terminal state is ambiguous.
EndpointReport classify_endpoint(const Problem& pr, const ContinuationConfig& cc,
                                 BranchContext context, const BranchResult& result);

} // namespace agebif
