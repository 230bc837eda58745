#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "agebif/problem.hpp"

namespace agebif {

// One population alone: trace Phi solving Phi = param * age_integral(field)
// where field = evolve_semitrivial(Phi, alpha).
struct SemiTrivialSolution {
    double parameter;
    double alpha;             // quadratic coefficient the branch was solved with
    Vector trace;             // field row 0 (nonnegative; the mirrored sign is factored out)
    AgeField field;
    bool mirrored = false;    // true for the extension below param = 1 (field stores -u)
    double identity_residual; // |param * r(H_[alpha * field]) - 1|
};

// Nontrivial branch solution for param > 1 (throws NoPositiveSolution at
// param <= 1).  Newton on the trace with forward-difference Jacobian,
// warm-started along a parameter ladder from 1 + 0.05.
SemiTrivialSolution solve_semitrivial(const Problem& pr, double param, double alpha,
                                      const Vector* initial_guess = nullptr);

// Mirrored branch on (eta_star, 1): w = -u >= 0 solves the sign-flipped
// equation (alpha -> -alpha1).  Exists only near 1; a convergence failure
// reports the smallest parameter reached.
SemiTrivialSolution extend_semitrivial_below_one(const Problem& pr, double eta);

// First-order directions of the coexistence curve at a bifurcation point,
// in physical coordinates: (u, v)(s) = base + s * (u_dir, v_dir) + o(s).
struct TangentData {
    double param;    // bifurcation value of the varied parameter
    Vector u_trace;  // u_dir row 0
    Vector v_trace;  // v_dir row 0
    AgeField u_dir;
    AgeField v_dir;
};

// Bifurcation from the predator-only branch (u == 0, v = v_xi), varying eta.
struct BifPointEta0 {
    double eta0;                  // 1 / r(G_xi)
    TangentData tangent;
    SemiTrivialSolution v_branch;
    double resolvent_radius;      // r(xi H_[2 beta1 v]) < 1, reported
    double transversality_error;  // ||Phi0 - eta0 * age_integral(u_dir)||_inf
};
BifPointEta0 eta0(const Problem& pr, double xi);

// Bifurcation from the prey-only branch (u = u_eta, v == 0), varying xi.
struct BifPointXi0 {
    double xi0;                   // 1 / r(H_[-beta2 u_eta]), in (0, 1)
    TangentData tangent;
    SemiTrivialSolution u_branch;
};
BifPointXi0 xi0(const Problem& pr, double eta);

// Bifurcation from the prey-only branch at fixed xi in (delta, 1), varying
// eta: the root of xi * r(H_[-beta2 u_eta]) = 1, which is increasing in eta.
struct BifPointEta1 {
    double eta1;
    TangentData tangent;
    SemiTrivialSolution u_branch;
    double residual; // |xi * r - 1| at the root
};
BifPointEta1 eta1(const Problem& pr, double xi, double eta_max = 64.0);

// Finite-eta estimate of the infinite-eta limit delta; each ladder value
// 1 / r(H_[-beta2 u_eta]) is an upper bound decreasing in eta, so the value
// at the largest feasible eta over-estimates the limit.
struct DeltaEstimate {
    double value;
    std::vector<std::pair<double, double>> sequence;            // (eta, estimate)
    std::vector<std::pair<double, std::string>> failures;       // (eta, reason)
};
DeltaEstimate delta_estimate(const Problem& pr,
                             const std::vector<double>& etas = {10.0, 100.0, 1000.0});

// Residual eta * r(G_xi) - 1 whose roots locate the secondary connection
// point xi_1 on the predator branch (a root need not exist).
double xi1_residual(const Problem& pr, double eta, double xi);

struct Xi1Scan {
    std::vector<std::pair<double, double>> samples; // (xi, residual)
    std::vector<double> roots;
};
Xi1Scan xi1_scan(const Problem& pr, double eta, double xi_lo, double xi_hi, int count);

} // namespace agebif
