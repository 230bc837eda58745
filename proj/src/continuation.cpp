#include "agebif/continuation.hpp"

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

bool varies_eta(BranchContext ctx) { return ctx != BranchContext::PreyBaseXi; }
bool u_vanishes_at_base(BranchContext ctx) { return ctx == BranchContext::PredatorBaseEta; }

// (eta, xi) for a given value of the active parameter.
std::pair<double, double> renewal_pair(const ContinuationConfig& cc, BranchContext ctx,
                                       double mu) {
    return varies_eta(ctx) ? std::make_pair(mu, cc.fixed_value)
                           : std::make_pair(cc.fixed_value, mu);
}

struct ResidualParts {
    CoupledFields fields;
    Vector Iu; // birth-weighted age integrals of the two fields
    Vector Iv;
    Vector R; // stacked (u block; v block)
};

ResidualParts eval_residual(const Problem& pr, const Vector& u0, const Vector& v0,
                            double eta, double xi) {
    ResidualParts out;
    out.fields = evolve_coupled(pr.lap, pr.ages, pr.params, u0, v0, pr.stepper);
    out.Iu = age_integral(out.fields.u, pr.birth, pr.ages);
    out.Iv = age_integral(out.fields.v, pr.birth, pr.ages);
    const int n = pr.grid.n_x;
    out.R.resize(2 * n);
    out.R.head(n) = u0 - eta * out.Iu;
    out.R.tail(n) = v0 - xi * out.Iv;
    return out;
}

// Column of the bordered system that belongs to mu: the residual depends on
// the active parameter only through the explicit factor in front of the age
// integral, so this derivative is exact.
Vector mu_column(const ResidualParts& parts, BranchContext ctx, int n) {
    Vector c = Vector::Zero(2 * n);
    if (varies_eta(ctx))
        c.head(n) = -parts.Iu;
    else
        c.tail(n) = -parts.Iv;
    return c;
}

double trace_scale(const Vector& u0, const Vector& v0) {
    return std::max(u0.cwiseAbs().maxCoeff(), v0.cwiseAbs().maxCoeff());
}

double corrector_tol(double scale) { return std::min(1e-10 * (1.0 + scale), 1e-9); }

struct CorrectorOutcome {
    Vector u0;
    Vector v0;
    double mu;
    int iters;
    double rnorm;
    CoupledFields fields;
};

// Bordered Newton corrector: solve R(u0, v0, mu) = 0 together with the
// arclength constraint <X - X_prev, tangent> = h.  The Jacobian is frozen at
// the predicted point and refreshed once if convergence drags.
CorrectorOutcome correct_point(const Problem& pr, const ContinuationConfig& cc,
                               BranchContext ctx, Vector X, const Vector& X_prev,
                               const Vector& tangent, double h) {
    const int n = pr.grid.n_x;
    const int m = 2 * n + 1;

    Eigen::PartialPivLU<Matrix> lu;
    bool have_lu = false;
    const int refresh_at = 6;

    for (int it = 1; it <= cc.max_corrector_iters; ++it) {
        const Vector u0 = X.head(n);
        const Vector v0 = X.segment(n, n);
        const double mu = X[2 * n];
        const auto [eta, xi] = renewal_pair(cc, ctx, mu);
        ResidualParts parts = eval_residual(pr, u0, v0, eta, xi);
        const double c = (X - X_prev).dot(tangent) - h;
        const double rn = std::max(parts.R.cwiseAbs().maxCoeff(), std::abs(c));
        if (!std::isfinite(rn))
            throw NewtonFailure("corrector diverged at mu = " + fmt(mu));
        if (rn <= corrector_tol(trace_scale(u0, v0)))
            return {u0, v0, mu, it - 1, rn, std::move(parts.fields)};

        if (!have_lu || it == refresh_at) {
            Matrix B = Matrix::Zero(m, m);
            B.topLeftCorner(2 * n, 2 * n) = coexistence_jacobian(pr, u0, v0, eta, xi);
            B.block(0, 2 * n, 2 * n, 1) = mu_column(parts, ctx, n);
            B.row(2 * n) = tangent.transpose();
            lu.compute(B);
            have_lu = true;
        }
        Vector rhs(m);
        rhs.head(2 * n) = -parts.R;
        rhs[2 * n] = -c;
        X += lu.solve(rhs);
    }
    throw NewtonFailure("corrector did not converge within " +
                        std::to_string(cc.max_corrector_iters) + " iterations");
}

Vector pack(const CoexistenceState& st, int n) {
    Vector X(2 * n + 1);
    X.head(n) = st.u0;
    X.segment(n, n) = st.v0;
    X[2 * n] = st.mu;
    return X;
}

BranchRecord make_record(const Problem& pr, const CoexistenceState& st, int index, double s,
                         double step) {
    BranchRecord r;
    r.index = index;
    r.s = s;
    r.mu = st.mu;
    r.norm_u = field_l2(st.fields.u, pr.ages, pr.grid);
    r.norm_v = field_l2(st.fields.v, pr.ages, pr.grid);
    r.min_u0 = st.u0.minCoeff();
    r.min_v0 = st.v0.minCoeff();
    r.step = step;
    r.newton_iters = st.newton_iters;
    return r;
}

} // namespace

const char* to_string(StopReason r) {
    switch (r) {
    case StopReason::NormCapReached: return "NormCapReached";
    case StopReason::HitSemitrivialU: return "HitSemitrivialU";
    case StopReason::HitSemitrivialV: return "HitSemitrivialV";
    case StopReason::ParamExitedRange: return "ParamExitedRange";
    case StopReason::CoefficientFloor: return "CoefficientFloor";
    case StopReason::StepFailure: return "StepFailure";
    }
    return "StepFailure";
}

Vector coexistence_residual(const Problem& pr, const Vector& u0, const Vector& v0, double eta,
                            double xi) {
    return eval_residual(pr, u0, v0, eta, xi).R;
}

Matrix coexistence_jacobian(const Problem& pr, const Vector& u0, const Vector& v0, double eta,
                            double xi) {
    const int n = pr.grid.n_x;
    const Vector R = coexistence_residual(pr, u0, v0, eta, xi);
    const double delta = 1e-7 * (1.0 + trace_scale(u0, v0));
    Matrix J(2 * n, 2 * n);
    for (int j = 0; j < 2 * n; ++j) {
        Vector up = u0, vp = v0;
        if (j < n)
            up[j] += delta;
        else
            vp[j - n] += delta;
        J.col(j) = (coexistence_residual(pr, up, vp, eta, xi) - R) / delta;
    }
    return J;
}

CoexistenceState semitrivial_embedding(const Problem& pr, BranchContext context,
                                       const SemiTrivialSolution& base, double mu) {
    const int n = pr.grid.n_x;
    CoexistenceState st;
    if (u_vanishes_at_base(context)) {
        st.u0 = Vector::Zero(n);
        st.v0 = base.trace;
    } else {
        st.u0 = base.trace;
        st.v0 = Vector::Zero(n);
    }
    st.mu = mu;
    st.fields = evolve_coupled(pr.lap, pr.ages, pr.params, st.u0, st.v0, pr.stepper);
    return st;
}

CoexistenceState first_step_off_bifurcation(const Problem& pr, const ContinuationConfig& cc,
                                            BranchContext context, const TangentData& tangent,
                                            const SemiTrivialSolution& base) {
    const int n = pr.grid.n_x;
    const bool pin_u = u_vanishes_at_base(context);
    const Vector& pin_dir = pin_u ? tangent.u_trace : tangent.v_trace;

    int i_star = 0;
    pin_dir.maxCoeff(&i_star);
    if (!(pin_dir[i_star] > 0.0))
        throw InvalidArgument("first step: tangent direction of the vanishing component "
                              "must be positive somewhere");
    const int pin_index = (pin_u ? 0 : n) + i_star;

    double s0 = std::max(1e-4, cc.s0 * base.trace.cwiseAbs().maxCoeff());
    std::string last = "no attempt made";
    for (int attempt = 0; attempt <= 6; ++attempt, s0 *= 0.5) {
        const double c = s0 / pin_dir[i_star];
        Vector X(2 * n + 1);
        if (pin_u) {
            X.head(n) = c * tangent.u_trace;
            X.segment(n, n) = base.trace + c * tangent.v_trace;
        } else {
            X.head(n) = base.trace + c * tangent.u_trace;
            X.segment(n, n) = c * tangent.v_trace;
        }
        X[2 * n] = tangent.param;

        try {
            for (int it = 1; it <= 15; ++it) {
                const Vector u0 = X.head(n);
                const Vector v0 = X.segment(n, n);
                const double mu = X[2 * n];
                const auto [eta, xi] = renewal_pair(cc, context, mu);
                ResidualParts parts = eval_residual(pr, u0, v0, eta, xi);
                const double pin_res = X[pin_index] - s0;
                const double rn = std::max(parts.R.cwiseAbs().maxCoeff(), std::abs(pin_res));
                if (!std::isfinite(rn)) throw NewtonFailure("first-step iteration diverged");
                if (rn <= corrector_tol(trace_scale(u0, v0))) {
                    if (u0.minCoeff() > 0.0 && v0.minCoeff() > 0.0) {
                        CoexistenceState st;
                        st.u0 = u0;
                        st.v0 = v0;
                        st.mu = mu;
                        st.fields = std::move(parts.fields);
                        st.newton_iters = it - 1;
                        st.residual_norm = rn;
                        return st;
                    }
                    throw NewtonFailure("first-step state not positive at amplitude " +
                                        fmt(s0));
                }

                Matrix B = Matrix::Zero(2 * n + 1, 2 * n + 1);
                B.topLeftCorner(2 * n, 2 * n) = coexistence_jacobian(pr, u0, v0, eta, xi);
                B.block(0, 2 * n, 2 * n, 1) = mu_column(parts, context, n);
                B(2 * n, pin_index) = 1.0;
                Vector rhs(2 * n + 1);
                rhs.head(2 * n) = -parts.R;
                rhs[2 * n] = -pin_res;
                X += Eigen::PartialPivLU<Matrix>(B).solve(rhs);
            }
            throw NewtonFailure("first-step Newton hit the iteration limit at amplitude " +
                                fmt(s0));
        } catch (const NewtonFailure& e) {
            last = e.what();
        } catch (const CoefficientFloorError& e) {
            last = e.what();
        }
    }
    throw NewtonFailure("first step off the bifurcation point failed after 6 amplitude "
                        "halvings; last outcome: " + last);
}

BranchResult continue_branch(const Problem& pr, const ContinuationConfig& cc,
                             BranchContext context, const CoexistenceState& start,
                             const CoexistenceState& base_embedding) {
    const int n = pr.grid.n_x;
    BranchResult out;

    out.records.push_back(make_record(pr, start, 0, 0.0, 0.0));
    out.states.push_back(start);
    out.terminal = start;

    Vector X_prev = pack(base_embedding, n);
    Vector X_curr = pack(start, n);
    if ((X_curr - X_prev).norm() == 0.0)
        throw InvalidArgument("continue_branch: start coincides with the base embedding");

    double scale_ref = std::max(1.0, trace_scale(start.u0, start.v0));
    double h = std::min(cc.h_max, std::max(cc.h_min, (X_curr - X_prev).norm()));
    double s = 0.0;

    while (static_cast<int>(out.records.size()) < cc.max_records) {
        const Vector tangent = (X_curr - X_prev).normalized();
        bool floor_hit = false;
        CorrectorOutcome next;
        bool ok = false;
        try {
            next = correct_point(pr, cc, context, X_curr + h * tangent, X_curr, tangent, h);
            ok = true;
        } catch (const CoefficientFloorError& e) {
            floor_hit = true;
            out.stop_detail = e.what();
        } catch (const NewtonFailure& e) {
            out.stop_detail = e.what();
        }

        if (!ok) {
            h *= 0.5;
            if (h < cc.h_min) {
                out.stop = floor_hit ? StopReason::CoefficientFloor : StopReason::StepFailure;
                out.stop_detail = "step fell below h_min = " + fmt(cc.h_min) + "; " +
                                  out.stop_detail;
                return out;
            }
            continue;
        }

        CoexistenceState st;
        st.u0 = std::move(next.u0);
        st.v0 = std::move(next.v0);
        st.mu = next.mu;
        st.fields = std::move(next.fields);
        st.newton_iters = next.iters;
        st.residual_norm = next.rnorm;
        out.terminal = st;

        scale_ref = std::max(scale_ref, trace_scale(st.u0, st.v0));
        const double pos_floor = cc.pos_tol * scale_ref;
        const bool u_hit = st.u0.minCoeff() < pos_floor;
        const bool v_hit = st.v0.minCoeff() < pos_floor;
        if (u_hit || v_hit) {
            // Sharpen the crossing: bisect the step until the vanished trace
            // sits within pos_floor of zero, so the terminal state is close
            // enough to the semi-trivial branch for connection checks.
            if (u_hit != v_hit) {
                double lo = 0.0, hi = h;
                for (int it = 0; it < 48; ++it) {
                    const double mid = 0.5 * (lo + hi);
                    CorrectorOutcome o;
                    try {
                        o = correct_point(pr, cc, context, X_curr + mid * tangent, X_curr,
                                          tangent, mid);
                    } catch (const Error&) {
                        hi = mid;
                        continue;
                    }
                    const double m = u_hit ? o.u0.minCoeff() : o.v0.minCoeff();
                    if (m >= pos_floor) {
                        lo = mid;
                        continue;
                    }
                    st.u0 = std::move(o.u0);
                    st.v0 = std::move(o.v0);
                    st.mu = o.mu;
                    st.fields = std::move(o.fields);
                    st.newton_iters = o.iters;
                    st.residual_norm = o.rnorm;
                    hi = mid;
                    if (m > -pos_floor || hi - lo < 1e-12) break;
                }
                out.terminal = st;
            }
            out.stop = u_hit ? StopReason::HitSemitrivialU : StopReason::HitSemitrivialV;
            const double tmin = u_hit ? st.u0.minCoeff() : st.v0.minCoeff();
            out.stop_detail = std::string("min ") + (u_hit ? "u0" : "v0") + " = " + fmt(tmin) +
                              " below " + fmt(pos_floor) + " at mu = " + fmt(st.mu);
            return out;
        }

        s += h;
        const int index = static_cast<int>(out.records.size());
        out.records.push_back(make_record(pr, st, index, s, h));
        out.states.push_back(st);
        X_prev = X_curr;
        X_curr = pack(st, n);

        const BranchRecord& rec = out.records.back();
        if (rec.norm_u + rec.norm_v > cc.norm_cap) {
            out.stop = StopReason::NormCapReached;
            out.stop_detail = "norm_u + norm_v = " + fmt(rec.norm_u + rec.norm_v) +
                              " exceeded " + fmt(cc.norm_cap);
            return out;
        }
        if (st.mu < cc.mu_min || st.mu > cc.mu_max) {
            out.stop = StopReason::ParamExitedRange;
            out.stop_detail = "mu = " + fmt(st.mu) + " left [" + fmt(cc.mu_min) + ", " +
                              fmt(cc.mu_max) + "]";
            return out;
        }
        if (st.newton_iters <= 3) h = std::min(h * 1.3, cc.h_max);
    }
    out.stop = StopReason::StepFailure;
    out.stop_detail = "record budget (" + std::to_string(cc.max_records) +
                      ") exhausted before a natural endpoint";
    return out;
}

namespace {

// Checks whether the terminal state sits on the named semi-trivial branch:
// the surviving trace must match solve_semitrivial at the terminal parameters.
void verify_connection(const Problem& pr, const ContinuationConfig& cc, BranchContext ctx,
                       const CoexistenceState& terminal, bool surviving_is_v,
                       EndpointReport& rep) {
    const auto [eta, xi] = renewal_pair(cc, ctx, terminal.mu);
    const double param = surviving_is_v ? xi : eta;
    const double alpha = surviving_is_v ? pr.params.beta1 : pr.params.alpha1;
    const Vector& trace = surviving_is_v ? terminal.v0 : terminal.u0;
    try {
        const SemiTrivialSolution s = solve_semitrivial(pr, param, alpha, &trace);
        const double err =
            (trace - s.trace).cwiseAbs().maxCoeff() / (1.0 + s.trace.cwiseAbs().maxCoeff());
        rep.connection_param = terminal.mu;
        rep.connection_error = err;
        rep.verified = err <= 1e-6;
        rep.detail += " terminal trace vs semi-trivial solution at parameter " + fmt(param) +
                      ": relative mismatch " + fmt(err) + ".";
        if (surviving_is_v) {
            // Necessary condition for a predator-branch connection point.
            const double res = xi1_residual(pr, eta, xi);
            rep.detail += " |eta * r(G) - 1| = " + fmt(std::abs(res)) + ".";
            rep.verified = rep.verified && std::abs(res) <= 1e-4;
        }
    } catch (const Error& e) {
        rep.alternative = "unclassified";
        rep.verified = false;
        rep.detail += " connection target could not be computed: " + std::string(e.what());
    }
}

} // namespace

EndpointReport classify_endpoint(const Problem& pr, const ContinuationConfig& cc,
                                 BranchContext context, const BranchResult& result) {
    EndpointReport rep;
    const CoexistenceState& t = result.terminal;
    const double su = t.u0.cwiseAbs().maxCoeff();
    const double sv = t.v0.cwiseAbs().maxCoeff();

    switch (result.stop) {
    case StopReason::NormCapReached:
        rep.alternative = "unbounded";
        rep.detail = "solution norm exceeded the cap (" + fmt(cc.norm_cap) +
                     ") at mu = " + fmt(t.mu) + "; consistent with an unbounded continuum.";
        return rep;

    case StopReason::HitSemitrivialU:
        if (su < 1e-6 && sv < 1e-6) {
            rep.alternative = "unclassified";
            rep.detail = "both components are tiny at the endpoint (sup u0 = " + fmt(su) +
                         ", sup v0 = " + fmt(sv) + "); no alternative can be assigned.";
            return rep;
        }
        rep.alternative = (context == BranchContext::PredatorBaseEta)
                              ? "returned-to-predator-branch"
                              : "connects-to-predator-branch";
        rep.detail = "u vanished at mu = " + fmt(t.mu) + ".";
        verify_connection(pr, cc, context, t, /*surviving_is_v=*/true, rep);
        return rep;

    case StopReason::HitSemitrivialV:
        if (su < 1e-6 && sv < 1e-6) {
            rep.alternative = "unclassified";
            rep.detail = "both components are tiny at the endpoint (sup u0 = " + fmt(su) +
                         ", sup v0 = " + fmt(sv) + "); no alternative can be assigned.";
            return rep;
        }
        rep.alternative = (context == BranchContext::PredatorBaseEta)
                              ? "connects-to-prey-branch"
                              : "returned-to-prey-branch";
        rep.detail = "v vanished at mu = " + fmt(t.mu) + ".";
        verify_connection(pr, cc, context, t, /*surviving_is_v=*/false, rep);
        return rep;

    case StopReason::ParamExitedRange:
        if (context == BranchContext::PreyBaseEta && t.mu <= cc.mu_min) {
            rep.alternative = "lower-range-exit";
            rep.detail = "branch left through the lower parameter bound at mu = " + fmt(t.mu) +
                         " with both components positive; candidate connection toward the "
                         "extended branch below 1.";
        } else {
            rep.alternative = "exited-parameter-range";
            rep.detail = "mu = " + fmt(t.mu) + " left [" + fmt(cc.mu_min) + ", " +
                         fmt(cc.mu_max) + "].";
        }
        return rep;

    case StopReason::CoefficientFloor:
        rep.alternative = "coefficient-floor";
        rep.detail = "cross-diffusion coefficient reached the admissible floor: " +
                     result.stop_detail;
        return rep;

    case StopReason::StepFailure:
        rep.alternative = "step-failure";
        rep.detail = "continuation stopped without a natural endpoint: " + result.stop_detail;
        return rep;
    }
    rep.alternative = "unclassified";
    rep.detail = "unknown stop reason";
    return rep;
}

} // namespace agebif
