#include "agebif/branches.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Dense>

namespace agebif {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
}

// Residual of the trace fixed point, Phi - param * age_integral(field(Phi)).
// A diverging inner evolution is reported as "infeasible" so the caller's
// line search can back off instead of aborting.
std::optional<Vector> trace_residual(const Problem& pr, double param, double alpha,
                                     const Vector& phi, AgeField* field_out = nullptr) {
    try {
        AgeField f = evolve_semitrivial(pr.lap, pr.ages, alpha, phi, pr.stepper);
        Vector r = phi - param * age_integral(f, pr.birth, pr.ages);
        if (field_out) *field_out = std::move(f);
        return r;
    } catch (const NewtonFailure&) {
        return std::nullopt;
    }
}

// Convergence needs both a small residual and a small last step: near the
// branch onset the Jacobian is almost singular and a residual-only test
// would accept iterates whose error along the near-null direction is orders
// of magnitude larger than the residual.
Vector newton_trace(const Problem& pr, double param, double alpha, Vector phi) {
    const int n = pr.grid.n_x;
    auto r0 = trace_residual(pr, param, alpha, phi);
    if (!r0)
        throw NewtonFailure("trace Newton: infeasible initial guess at parameter " + fmt(param));
    Vector r = std::move(*r0);

    const int max_outer = 60;
    for (int outer = 0; outer < max_outer; ++outer) {
        const double rn = r.cwiseAbs().maxCoeff();

        const double delta = 1e-7 * (1.0 + phi.cwiseAbs().maxCoeff());
        Matrix J(n, n);
        for (int j = 0; j < n; ++j) {
            Vector pj = phi;
            pj[j] += delta;
            auto rj = trace_residual(pr, param, alpha, pj);
            if (!rj)
                throw NewtonFailure("trace Newton: evolution diverged while differencing at "
                                    "parameter " + fmt(param));
            J.col(j) = (*rj - r) / delta;
        }
        const Vector step = Eigen::PartialPivLU<Matrix>(J).solve(-r);

        double t = 1.0;
        bool accepted = false;
        while (t >= 1e-7) {
            const Vector cand = phi + t * step;
            auto rc = trace_residual(pr, param, alpha, cand);
            if (rc && rc->cwiseAbs().maxCoeff() < (1.0 - 1e-4 * t) * rn) {
                phi = cand;
                r = std::move(*rc);
                accepted = true;
                const double scale = 1.0 + phi.cwiseAbs().maxCoeff();
                if (r.cwiseAbs().maxCoeff() <= 1e-10 * scale &&
                    t * step.cwiseAbs().maxCoeff() <= 1e-9 * scale)
                    return phi;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            if (rn <= 1e-10 * (1.0 + phi.cwiseAbs().maxCoeff())) return phi;
            throw NewtonFailure("trace Newton stalled at parameter " + fmt(param) +
                                " with residual " + fmt(rn));
        }
    }
    throw NewtonFailure("trace Newton: iteration limit at parameter " + fmt(param));
}

// Parameter ladder from just past the trivial threshold up to the target;
// the branch amplitude scales like (param - 1) near onset, which fixes both
// the first guess and the rung-to-rung rescaling.
std::vector<double> ladder_above_one(double target) {
    std::vector<double> ts;
    double t = 1.05;
    while (t < target) {
        ts.push_back(t);
        t = 1.0 + 2.0 * (t - 1.0);
    }
    ts.push_back(target);
    return ts;
}

// The trivial root attracts any start below roughly half the solution
// amplitude, so a rung solve must both converge and land at a scale
// commensurate with its guess; otherwise retry with a rescaled guess.
Vector solve_rung(const Problem& pr, double param, double alpha, const Vector& guess) {
    static constexpr double multipliers[] = {1.0, 2.5, 6.25, 15.6, 0.4, 0.16, 39.0};
    std::string last = "no attempt made";
    for (double m : multipliers) {
        try {
            Vector phi = newton_trace(pr, param, alpha, m * guess);
            if (phi.cwiseAbs().maxCoeff() >= 0.02 * m * guess.cwiseAbs().maxCoeff())
                return phi;
            last = "converged to the trivial root";
        } catch (const NewtonFailure& e) {
            last = e.what();
        }
    }
    throw NewtonFailure("trace Newton failed at parameter " + fmt(param) +
                        " for every guess scale; last outcome: " + last);
}

SemiTrivialSolution finish_solution(const Problem& pr, double param, double alpha,
                                    const Vector& phi, bool mirrored) {
    AgeField field;
    auto r = trace_residual(pr, param, alpha, phi, &field);
    if (!r) throw InternalError("semi-trivial solution: final evolution failed");

    SemiTrivialSolution out;
    out.parameter = param;
    out.alpha = alpha;
    out.trace = phi;
    out.field = std::move(field);
    out.mirrored = mirrored;

    if (out.field.minCoeff() < -1e-7 * (1.0 + out.field.maxCoeff()))
        throw InternalError("semi-trivial solution lost positivity (min " +
                            fmt(out.field.minCoeff()) + ")");
    if (!(out.trace.minCoeff() > 0.0))
        throw InternalError("semi-trivial trace is not strictly positive");

    const SpectralResult s =
        spectral_radius(assemble_H(pr.lap, pr.ages, alpha * out.field, pr.birth, pr.stepper));
    out.identity_residual = std::abs(param * s.radius - 1.0);
    if (out.identity_residual > 1e-8)
        throw InternalError("semi-trivial radius identity violated: |param * r - 1| = " +
                            fmt(out.identity_residual));
    return out;
}

} // namespace

SemiTrivialSolution solve_semitrivial(const Problem& pr, double param, double alpha,
                                      const Vector* initial_guess) {
    if (!(alpha > 0.0))
        throw InvalidArgument("solve_semitrivial: quadratic coefficient must be positive");
    if (!(param > 1.0))
        throw NoPositiveSolution("no nontrivial single-population solution at parameter " +
                                 fmt(param) + " <= 1");

    if (initial_guess && initial_guess->size() == pr.grid.n_x) {
        try {
            const Vector phi = newton_trace(pr, param, alpha, *initial_guess);
            if (phi.minCoeff() > 0.0 &&
                phi.cwiseAbs().maxCoeff() >= 0.02 * initial_guess->cwiseAbs().maxCoeff())
                return finish_solution(pr, param, alpha, phi, false);
        } catch (const NewtonFailure&) {
            // fall through to the ladder
        }
    }

    const std::vector<double> ts = ladder_above_one(param);
    const EigenPair ep = principal_eigenpair(pr.lap);
    // Onset slope of the branch amplitude is about lambda1 / alpha per unit
    // distance from 1; overshoot it so the guess clears the trivial basin.
    Vector phi = 4.0 * ep.value * (ts.front() - 1.0) / alpha * ep.vector;
    double prev = ts.front();
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (i > 0) phi *= (ts[i] - 1.0) / (prev - 1.0);
        phi = solve_rung(pr, ts[i], alpha, phi);
        prev = ts[i];
    }
    return finish_solution(pr, param, alpha, phi, false);
}

SemiTrivialSolution extend_semitrivial_below_one(const Problem& pr, double eta) {
    if (!(eta > 0.0 && eta < 1.0))
        throw InvalidArgument("extend_semitrivial_below_one: eta must lie in (0, 1)");
    const double alpha = -pr.params.alpha1; // mirrored sign: w = -u >= 0

    std::vector<double> ts;
    double t = 0.95;
    while (t > eta) {
        ts.push_back(t);
        t = 1.0 - 2.0 * (1.0 - t);
    }
    ts.push_back(eta);

    const EigenPair ep = principal_eigenpair(pr.lap);
    Vector phi = 4.0 * ep.value * (1.0 - ts.front()) / pr.params.alpha1 * ep.vector;
    double prev = ts.front();
    double smallest_ok = 1.0;
    for (std::size_t i = 0; i < ts.size(); ++i) {
        if (i > 0) phi *= (1.0 - ts[i]) / (1.0 - prev);
        try {
            phi = solve_rung(pr, ts[i], alpha, phi);
        } catch (const NewtonFailure& e) {
            throw NewtonFailure("mirrored branch stops above the requested eta: " +
                                std::string(e.what()) + "; smallest parameter reached = " +
                                fmt(smallest_ok) + " (the branch exists only near 1)");
        }
        smallest_ok = ts[i];
        prev = ts[i];
    }
    return finish_solution(pr, eta, alpha, phi, true);
}

namespace {

// Tangent directions at a bifurcation point sitting on the prey-only branch
// (u = u_base, v == 0).  The v-direction is the Perron trace of the
// predation-weighted evolution; the u-direction responds to it through the
// cross-diffusion and predation forcing.
TangentData prey_base_tangent(const Problem& pr, double eta_at_base, double bif_param,
                              const AgeField& u) {
    const auto& p = pr.params;
    const int n = pr.grid.n_x;

    const CoefficientPath h_minus = -p.beta2 * u;
    const SpectralResult sv =
        spectral_radius(assemble_H(pr.lap, pr.ages, h_minus, pr.birth, pr.stepper));
    const Vector Psi = sv.eigvec;
    const AgeField psi = evolve_linear(pr.lap, pr.ages, h_minus, Psi, pr.stepper);

    // Forcing on the u-linearization: g = -L(gamma u psi) + alpha2 u psi.
    const AgeField upsi = u.cwiseProduct(psi);
    AgeField g(pr.ages.n_a + 1, n);
    for (int k = 0; k <= pr.ages.n_a; ++k) {
        const Vector row = upsi.row(k).transpose();
        g.row(k) = (-p.gamma * pr.lap.apply(row) + p.alpha2 * row).transpose();
    }

    const CoefficientPath h2 = (2.0 * p.alpha1) * u;
    const AgeField Npsi = evolve_duhamel(pr.lap, pr.ages, h2, g, Vector::Zero(n), pr.stepper);
    const NonlocalOperator H2 = assemble_H(pr.lap, pr.ages, h2, pr.birth, pr.stepper);
    const double r2 = eta_at_base * spectral_radius(H2).radius;
    if (!(r2 < 1.0))
        throw InternalError("tangent resolvent not invertible: eta * r(H_[2 alpha1 u]) = " +
                            fmt(r2));
    const Vector rhs = eta_at_base * age_integral(Npsi, pr.birth, pr.ages);
    const Matrix A = Matrix::Identity(n, n) - eta_at_base * H2.M;
    const Vector Phi = Eigen::PartialPivLU<Matrix>(A).solve(rhs);
    const AgeField phi = evolve_linear(pr.lap, pr.ages, h2, Phi, pr.stepper) + Npsi;

    TangentData t;
    t.param = bif_param;
    // Physical directions: u recedes (-phi) while v grows (+psi).
    t.u_trace = -Phi;
    t.v_trace = Psi;
    t.u_dir = -phi;
    t.v_dir = psi;
    return t;
}

} // namespace

BifPointEta0 eta0(const Problem& pr, double xi) {
    const auto& p = pr.params;
    const int n = pr.grid.n_x;

    BifPointEta0 out;
    out.v_branch = solve_semitrivial(pr, xi, p.beta1);
    const AgeField& v = out.v_branch.field;

    const CoefficientPath d = pr.unit_path() + p.gamma * v;
    const CoefficientPath c = p.alpha2 * v;
    const SpectralResult sg = spectral_radius(assemble_G(pr.lap, pr.ages, d, c, pr.birth,
                                                         pr.stepper));
    out.eta0 = 1.0 / sg.radius;
    const Vector Phi0 = sg.eigvec;
    const AgeField phi = evolve_conservative(pr.lap, pr.ages, d, c, Phi0, pr.stepper);

    const CoefficientPath h2 = (2.0 * p.beta1) * v;
    const NonlocalOperator H2 = assemble_H(pr.lap, pr.ages, h2, pr.birth, pr.stepper);
    out.resolvent_radius = xi * spectral_radius(H2).radius;
    if (!(out.resolvent_radius < 1.0))
        throw InternalError("eta0 resolvent not invertible: xi * r(H_[2 beta1 v]) = " +
                            fmt(out.resolvent_radius));

    const AgeField forcing = p.beta2 * v.cwiseProduct(phi);
    const AgeField duh0 =
        evolve_duhamel(pr.lap, pr.ages, h2, forcing, Vector::Zero(n), pr.stepper);
    const Vector rhs = xi * age_integral(duh0, pr.birth, pr.ages);
    const Matrix A = Matrix::Identity(n, n) - xi * H2.M;
    const Vector Psi0 = Eigen::PartialPivLU<Matrix>(A).solve(rhs);
    const AgeField psi = evolve_duhamel(pr.lap, pr.ages, h2, forcing, Psi0, pr.stepper);

    out.tangent.param = out.eta0;
    out.tangent.u_trace = Phi0;
    out.tangent.v_trace = Psi0;
    out.tangent.u_dir = phi;
    out.tangent.v_dir = psi;

    out.transversality_error =
        (Phi0 - out.eta0 * age_integral(phi, pr.birth, pr.ages)).cwiseAbs().maxCoeff();
    if (out.transversality_error > 1e-9)
        throw InternalError("eta0 transversality identity violated: " +
                            fmt(out.transversality_error));
    return out;
}

BifPointXi0 xi0(const Problem& pr, double eta) {
    const auto& p = pr.params;
    BifPointXi0 out;
    out.u_branch = solve_semitrivial(pr, eta, p.alpha1);
    const SpectralResult s = spectral_radius(
        assemble_H(pr.lap, pr.ages, -p.beta2 * out.u_branch.field, pr.birth, pr.stepper));
    if (!(s.radius > 1.0))
        throw InternalError("xi0: expected r(H_[-beta2 u]) > 1, got " + fmt(s.radius));
    out.xi0 = 1.0 / s.radius;
    out.tangent = prey_base_tangent(pr, eta, out.xi0, out.u_branch.field);
    return out;
}

BifPointEta1 eta1(const Problem& pr, double xi, double eta_max) {
    if (!(xi > 0.0 && xi < 1.0))
        throw InvalidArgument("eta1: xi must lie in (0, 1)");
    const auto& p = pr.params;

    Vector warm;
    bool have_warm = false;
    SemiTrivialSolution u_at;
    auto F = [&](double eta) {
        u_at = solve_semitrivial(pr, eta, p.alpha1, have_warm ? &warm : nullptr);
        warm = u_at.trace;
        have_warm = true;
        const double r = spectral_radius(
            assemble_H(pr.lap, pr.ages, -p.beta2 * u_at.field, pr.birth, pr.stepper)).radius;
        return xi * r - 1.0;
    };

    double lo = 1.0 + 1e-4;
    double flo = F(lo);
    double x = lo, fx = flo;
    if (std::abs(flo) > 1e-9) {
        if (flo > 0.0)
            throw NoBifurcation("eta1: xi * r(H_[-beta2 u_eta]) already >= 1 at eta = " +
                                fmt(lo));

        double hi = 1.5, fhi = 0.0;
        while (true) {
            if (hi > eta_max)
                throw NoBifurcation("eta1: no sign change of xi * r - 1 up to eta_max = " +
                                    fmt(eta_max));
            try {
                fhi = F(hi);
            } catch (const PositivityGuardError& e) {
                throw PositivityGuardError("eta1: bracketing stopped at eta = " + fmt(hi) +
                                           ": " + e.what());
            }
            if (std::abs(fhi) <= 1e-9 || fhi > 0.0) break;
            lo = hi;
            flo = fhi;
            hi = 1.0 + 2.0 * (hi - 1.0);
        }

        // Illinois iteration on the increasing residual.
        double a = lo, fa = flo, b = hi, fb = fhi;
        x = b;
        fx = fb;
        for (int it = 0; it < 80; ++it) {
            if (std::abs(fx) <= 1e-9) break;
            x = (a * fb - b * fa) / (fb - fa);
            if (!(x > a && x < b)) x = 0.5 * (a + b);
            fx = F(x);
            if (std::abs(fx) <= 1e-9) break;
            if ((fx < 0.0) == (fa < 0.0)) {
                a = x;
                fa = fx;
                fb *= 0.5;
            } else {
                b = x;
                fb = fx;
                fa *= 0.5;
            }
        }
        if (std::abs(fx) > 1e-9)
            throw NewtonFailure("eta1: root refinement stalled with residual " + fmt(fx));
    }

    BifPointEta1 out;
    out.eta1 = x;
    out.residual = std::abs(fx);
    out.u_branch = (u_at.parameter == x) ? u_at : solve_semitrivial(pr, x, p.alpha1, &warm);
    out.tangent = prey_base_tangent(pr, x, x, out.u_branch.field);
    return out;
}

DeltaEstimate delta_estimate(const Problem& pr, const std::vector<double>& etas) {
    if (etas.empty()) throw InvalidArgument("delta_estimate: empty eta ladder");
    for (std::size_t i = 0; i < etas.size(); ++i) {
        if (!(etas[i] > 1.0)) throw InvalidArgument("delta_estimate: ladder values must be > 1");
        if (i > 0 && !(etas[i] > etas[i - 1]))
            throw InvalidArgument("delta_estimate: ladder must be increasing");
    }
    const auto& p = pr.params;

    DeltaEstimate out;
    Vector warm;
    bool have_warm = false;
    for (double eta : etas) {
        try {
            const SemiTrivialSolution u =
                solve_semitrivial(pr, eta, p.alpha1, have_warm ? &warm : nullptr);
            warm = u.trace;
            have_warm = true;
            const double r = spectral_radius(
                assemble_H(pr.lap, pr.ages, -p.beta2 * u.field, pr.birth, pr.stepper)).radius;
            out.sequence.emplace_back(eta, 1.0 / r);
        } catch (const Error& e) {
            // Larger eta only gets harder; record how far the ladder went.
            out.failures.emplace_back(eta, e.what());
            break;
        }
    }
    if (out.sequence.empty())
        throw NewtonFailure("delta_estimate: no ladder value was computable; first failure: " +
                            out.failures.front().second);
    out.value = out.sequence.back().second;
    return out;
}

double xi1_residual(const Problem& pr, double eta, double xi) {
    const auto& p = pr.params;
    const SemiTrivialSolution v = solve_semitrivial(pr, xi, p.beta1);
    const CoefficientPath d = pr.unit_path() + p.gamma * v.field;
    const CoefficientPath c = p.alpha2 * v.field;
    const double r =
        spectral_radius(assemble_G(pr.lap, pr.ages, d, c, pr.birth, pr.stepper)).radius;
    return eta * r - 1.0;
}

Xi1Scan xi1_scan(const Problem& pr, double eta, double xi_lo, double xi_hi, int count) {
    if (!(xi_lo > 1.0) || !(xi_hi > xi_lo) || count < 2)
        throw InvalidArgument("xi1_scan: need 1 < xi_lo < xi_hi and count >= 2");
    const auto& p = pr.params;

    Vector warm;
    bool have_warm = false;
    auto F = [&](double xi) {
        const SemiTrivialSolution v =
            solve_semitrivial(pr, xi, p.beta1, have_warm ? &warm : nullptr);
        warm = v.trace;
        have_warm = true;
        const CoefficientPath d = pr.unit_path() + p.gamma * v.field;
        const CoefficientPath c = p.alpha2 * v.field;
        return eta * spectral_radius(
                         assemble_G(pr.lap, pr.ages, d, c, pr.birth, pr.stepper)).radius -
               1.0;
    };

    Xi1Scan out;
    for (int i = 0; i < count; ++i) {
        const double xi = xi_lo + (xi_hi - xi_lo) * i / (count - 1);
        out.samples.emplace_back(xi, F(xi));
    }
    for (int i = 0; i + 1 < count; ++i) {
        double a = out.samples[i].first, fa = out.samples[i].second;
        double b = out.samples[i + 1].first, fb = out.samples[i + 1].second;
        if (fa == 0.0) {
            out.roots.push_back(a);
            continue;
        }
        if ((fa < 0.0) == (fb < 0.0)) continue;
        double x = b, fx = fb;
        for (int it = 0; it < 60 && std::abs(fx) > 1e-9; ++it) {
            x = (a * fb - b * fa) / (fb - fa);
            if (!(x > a && x < b)) x = 0.5 * (a + b);
            fx = F(x);
            if ((fx < 0.0) == (fa < 0.0)) {
                a = x;
                fa = fx;
                fb *= 0.5;
            } else {
                b = x;
                fb = fx;
                fa *= 0.5;
            }
        }
        out.roots.push_back(x);
    }
    return out;
}

} // namespace agebif
