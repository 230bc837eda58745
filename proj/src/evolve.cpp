#include "agebif/evolve.hpp"

#include <cmath>
#include <sstream>
#include <vector>

namespace agebif {

void ModelParams::validate() const {
    if (!(alpha1 > 0)) throw InvalidArgument("params: alpha1 must be > 0");
    if (!(alpha2 > 0)) throw InvalidArgument("params: alpha2 must be > 0");
    if (!(beta1 > 0)) throw InvalidArgument("params: beta1 must be > 0");
    if (!(beta2 > 0)) throw InvalidArgument("params: beta2 must be > 0");
    if (!(gamma >= 0)) throw InvalidArgument("params: gamma must be >= 0");
    if (!(a_m > 0)) throw InvalidArgument("params: a_m must be > 0");
}

CoefficientPath constant_path(const AgeGrid& ages, int n_x, double value) {
    return CoefficientPath::Constant(ages.n_a + 1, n_x, value);
}

namespace {

void check_shape(const AgeField& f, const AgeGrid& ages, int n_x, const char* what) {
    if (f.rows() != ages.n_a + 1 || f.cols() != n_x) {
        std::ostringstream msg;
        msg << what << ": expected " << ages.n_a + 1 << " x " << n_x << " age field, got "
            << f.rows() << " x " << f.cols();
        throw InvalidArgument(msg.str());
    }
}

// Step matrices stay M-matrices (hence inverse-positive and safe for the
// pivot-free Thomas sweep) iff da * max(0, -min h) < 1 over the rows the
// stepper actually reads (1..n_a).
void check_da_bound(const AgeField& h, const AgeGrid& ages, const char* what) {
    const double hmin = h.bottomRows(ages.n_a).minCoeff();
    const double bound = ages.da * std::max(0.0, -hmin);
    if (bound >= 1.0) {
        std::ostringstream msg;
        msg << what << ": positivity guard violated, da * max(0,-min coeff) = " << bound
            << " >= 1 (da = " << ages.da << ", min coeff = " << hmin
            << "); refine the age grid";
        throw PositivityGuardError(msg.str());
    }
}

// Thomas sweep; rhs is consumed.  Bands: sub[i] multiplies x_{i-1} in row i,
// sup[i] multiplies x_{i+1}.  Callers guarantee an M-matrix, so pivots stay
// positive; a vanishing pivot means a broken precondition upstream.
Vector solve_tridiag(const Vector& sub, const Vector& diag, const Vector& sup, Vector rhs) {
    const int n = static_cast<int>(diag.size());
    Vector c(n);
    double piv = diag[0];
    if (piv == 0.0) throw InternalError("singular step matrix (zero pivot)");
    c[0] = sup[0] / piv;
    rhs[0] /= piv;
    for (int i = 1; i < n; ++i) {
        piv = diag[i] - sub[i] * c[i - 1];
        if (piv == 0.0) throw InternalError("singular step matrix (zero pivot)");
        c[i] = sup[i] / piv;
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / piv;
    }
    for (int i = n - 2; i >= 0; --i) rhs[i] -= c[i] * rhs[i + 1];
    return rhs;
}

struct LinearBands {
    Vector sub, diag, sup;
};

// Bands of I - da L diag(d) + da diag(c); pass empty d for d == 1.
LinearBands step_bands(const DirichletLaplacian& lap, double da, const Vector& d,
                       const Vector& c) {
    const int n = lap.size();
    const double qd = da * lap.inv_h2();
    LinearBands b{Vector(n), Vector(n), Vector(n)};
    if (d.size() == 0) {
        for (int i = 0; i < n; ++i) {
            b.sub[i] = (i > 0) ? -qd : 0.0;
            b.sup[i] = (i + 1 < n) ? -qd : 0.0;
            b.diag[i] = (1.0 + 2.0 * qd) + da * c[i];
        }
    } else {
        for (int i = 0; i < n; ++i) {
            b.sub[i] = (i > 0) ? -qd * d[i - 1] : 0.0;
            b.sup[i] = (i + 1 < n) ? -qd * d[i + 1] : 0.0;
            b.diag[i] = (1.0 + 2.0 * qd * d[i]) + da * c[i];
        }
    }
    return b;
}

} // namespace

AgeField evolve_linear(const DirichletLaplacian& lap, const AgeGrid& ages,
                       const CoefficientPath& h, const Vector& phi, const StepperConfig&) {
    const int n = lap.size();
    check_shape(h, ages, n, "evolve_linear coefficient");
    if (phi.size() != n) throw InvalidArgument("evolve_linear: trace size mismatch");
    check_da_bound(h, ages, "evolve_linear");

    AgeField z(ages.n_a + 1, n);
    z.row(0) = phi;
    Vector cur = phi;
    for (int k = 0; k < ages.n_a; ++k) {
        const LinearBands b = step_bands(lap, ages.da, Vector(), h.row(k + 1).transpose());
        cur = solve_tridiag(b.sub, b.diag, b.sup, cur);
        z.row(k + 1) = cur;
    }
    return z;
}

AgeField evolve_conservative(const DirichletLaplacian& lap, const AgeGrid& ages,
                             const CoefficientPath& d, const CoefficientPath& c,
                             const Vector& phi, const StepperConfig& cfg) {
    const int n = lap.size();
    check_shape(d, ages, n, "evolve_conservative diffusion weight");
    check_shape(c, ages, n, "evolve_conservative coefficient");
    if (phi.size() != n) throw InvalidArgument("evolve_conservative: trace size mismatch");
    const double dmin = d.bottomRows(ages.n_a).minCoeff();
    if (dmin < cfg.eps_d) {
        std::ostringstream msg;
        msg << "evolve_conservative: diffusion weight " << dmin << " below floor " << cfg.eps_d;
        throw CoefficientFloorError(msg.str());
    }
    check_da_bound(c, ages, "evolve_conservative");

    AgeField z(ages.n_a + 1, n);
    z.row(0) = phi;
    Vector cur = phi;
    for (int k = 0; k < ages.n_a; ++k) {
        const LinearBands b =
            step_bands(lap, ages.da, d.row(k + 1).transpose(), c.row(k + 1).transpose());
        cur = solve_tridiag(b.sub, b.diag, b.sup, cur);
        z.row(k + 1) = cur;
    }
    return z;
}

AgeField evolve_duhamel(const DirichletLaplacian& lap, const AgeGrid& ages,
                        const CoefficientPath& h, const AgeField& f, const Vector& phi,
                        const StepperConfig&) {
    const int n = lap.size();
    check_shape(h, ages, n, "evolve_duhamel coefficient");
    check_shape(f, ages, n, "evolve_duhamel forcing");
    if (phi.size() != n) throw InvalidArgument("evolve_duhamel: trace size mismatch");
    check_da_bound(h, ages, "evolve_duhamel");

    AgeField z(ages.n_a + 1, n);
    z.row(0) = phi;
    Vector cur = phi;
    for (int k = 0; k < ages.n_a; ++k) {
        const LinearBands b = step_bands(lap, ages.da, Vector(), h.row(k + 1).transpose());
        Vector rhs = cur + ages.da * f.row(k + 1).transpose();
        cur = solve_tridiag(b.sub, b.diag, b.sup, std::move(rhs));
        z.row(k + 1) = cur;
    }
    return z;
}

AgeField evolve_semitrivial(const DirichletLaplacian& lap, const AgeGrid& ages, double alpha,
                            const Vector& phi, const StepperConfig& cfg) {
    const int n = lap.size();
    if (phi.size() != n) throw InvalidArgument("evolve_semitrivial: trace size mismatch");
    const double da = ages.da;
    const double qd = da * lap.inv_h2();

    AgeField out(ages.n_a + 1, n);
    out.row(0) = phi;
    Vector prev = phi;
    Vector sub(n), diag(n), sup(n);
    for (int k = 0; k < ages.n_a; ++k) {
        Vector z = prev; // warm start at the previous age level
        const double tol = cfg.newton_tol * (1.0 + prev.cwiseAbs().maxCoeff());
        bool done = false;
        for (int it = 0; it < cfg.max_newton_iters; ++it) {
            Vector res = z - da * lap.apply(z) + (da * alpha) * z.cwiseProduct(z) - prev;
            if (res.cwiseAbs().maxCoeff() <= tol) {
                done = true;
                break;
            }
            for (int i = 0; i < n; ++i) {
                sub[i] = (i > 0) ? -qd : 0.0;
                sup[i] = (i + 1 < n) ? -qd : 0.0;
                diag[i] = (1.0 + 2.0 * qd) + 2.0 * da * alpha * z[i];
            }
            z -= solve_tridiag(sub, diag, sup, std::move(res));
        }
        if (!done) {
            std::ostringstream msg;
            msg << "evolve_semitrivial: per-step Newton stalled at age step " << k + 1;
            throw NewtonFailure(msg.str());
        }
        out.row(k + 1) = z;
        prev = std::move(z);
    }
    return out;
}

namespace {

using Eigen::Matrix2d;
using Eigen::Vector2d;

// Interleaved (u_i, v_i) block-tridiagonal solve, 2x2 blocks.
// A[i] couples node i-1, B[i] is the diagonal block, C[i] couples node i+1.
void solve_block_tridiag(std::vector<Matrix2d>& A, std::vector<Matrix2d>& B,
                         std::vector<Matrix2d>& C, std::vector<Vector2d>& rhs) {
    const int n = static_cast<int>(B.size());
    // Forward elimination: B[i] <- B[i] - A[i] E[i-1], reuse C for E = B^-1 C.
    for (int i = 0; i < n; ++i) {
        if (i > 0) {
            B[i] -= A[i] * C[i - 1];
            rhs[i] -= A[i] * rhs[i - 1];
        }
        const double det = B[i](0, 0) * B[i](1, 1) - B[i](0, 1) * B[i](1, 0);
        if (det == 0.0) throw InternalError("singular step matrix (coupled block)");
        Matrix2d inv;
        inv << B[i](1, 1), -B[i](0, 1), -B[i](1, 0), B[i](0, 0);
        inv /= det;
        if (i + 1 < n) C[i] = inv * C[i];
        rhs[i] = inv * rhs[i];
    }
    for (int i = n - 2; i >= 0; --i) rhs[i] -= C[i] * rhs[i + 1];
}

} // namespace

std::pair<Vector, Vector> coupled_step(const DirichletLaplacian& lap, double dt,
                                       const ModelParams& p, const Vector& u_prev,
                                       const Vector& v_prev, const StepperConfig& cfg) {
    const int n = lap.size();
    if (u_prev.size() != n || v_prev.size() != n)
        throw InvalidArgument("coupled_step: trace size mismatch");
    const double q = dt * lap.inv_h2();

    Vector u = u_prev, v = v_prev;
    const double scale =
        std::max(u_prev.cwiseAbs().maxCoeff(), v_prev.cwiseAbs().maxCoeff());
    const double tol = cfg.newton_tol * (1.0 + scale);

    std::vector<Matrix2d> A(n), B(n), C(n);
    std::vector<Vector2d> rhs(n);

    auto residual = [&](const Vector& uu, const Vector& vv, Vector& ru, Vector& rv) {
        const Vector du = (Vector::Constant(n, 1.0) + p.gamma * vv).cwiseProduct(uu);
        const Vector Ldu = lap.apply(du);
        const Vector Lv = lap.apply(vv);
        ru = uu - dt * Ldu +
             dt * (p.alpha1 * uu.cwiseProduct(uu) + p.alpha2 * uu.cwiseProduct(vv)) - u_prev;
        rv = vv - dt * Lv +
             dt * (p.beta1 * vv.cwiseProduct(vv) - p.beta2 * uu.cwiseProduct(vv)) - v_prev;
    };

    Vector ru(n), rv(n);
    bool done = false;
    for (int it = 0; it < cfg.max_newton_iters; ++it) {
        residual(u, v, ru, rv);
        const double rn = std::max(ru.cwiseAbs().maxCoeff(), rv.cwiseAbs().maxCoeff());
        if (rn <= tol) {
            done = true;
            break;
        }
        for (int i = 0; i < n; ++i) {
            const double di = 1.0 + p.gamma * v[i];
            B[i](0, 0) = 1.0 + 2.0 * q * di + dt * (2.0 * p.alpha1 * u[i] + p.alpha2 * v[i]);
            B[i](0, 1) = 2.0 * q * p.gamma * u[i] + dt * p.alpha2 * u[i];
            B[i](1, 0) = -dt * p.beta2 * v[i];
            B[i](1, 1) = 1.0 + 2.0 * q + dt * (2.0 * p.beta1 * v[i] - p.beta2 * u[i]);
            if (i > 0) {
                const double dm = 1.0 + p.gamma * v[i - 1];
                A[i] << -q * dm, -q * p.gamma * u[i - 1], 0.0, -q;
            } else {
                A[i].setZero();
            }
            if (i + 1 < n) {
                const double dp = 1.0 + p.gamma * v[i + 1];
                C[i] << -q * dp, -q * p.gamma * u[i + 1], 0.0, -q;
            } else {
                C[i].setZero();
            }
            rhs[i] << -ru[i], -rv[i];
        }
        solve_block_tridiag(A, B, C, rhs);
        for (int i = 0; i < n; ++i) {
            u[i] += rhs[i][0];
            v[i] += rhs[i][1];
        }
    }
    if (!done) throw NewtonFailure("coupled_step: per-step Newton stalled");

    if (p.gamma > 0.0) {
        const double dmin = 1.0 + p.gamma * v.minCoeff();
        if (dmin < cfg.eps_d) {
            std::ostringstream msg;
            msg << "coupled_step: diffusion weight " << dmin << " below floor " << cfg.eps_d;
            throw CoefficientFloorError(msg.str());
        }
    }
    return {std::move(u), std::move(v)};
}

CoupledFields evolve_coupled(const DirichletLaplacian& lap, const AgeGrid& ages,
                             const ModelParams& p, const Vector& phi_u, const Vector& phi_v,
                             const StepperConfig& cfg) {
    const int n = lap.size();
    if (phi_u.size() != n || phi_v.size() != n)
        throw InvalidArgument("evolve_coupled: trace size mismatch");
    CoupledFields f{AgeField(ages.n_a + 1, n), AgeField(ages.n_a + 1, n)};
    f.u.row(0) = phi_u;
    f.v.row(0) = phi_v;
    Vector u = phi_u, v = phi_v;
    for (int k = 0; k < ages.n_a; ++k) {
        try {
            std::tie(u, v) = coupled_step(lap, ages.da, p, u, v, cfg);
        } catch (const NewtonFailure& e) {
            std::ostringstream msg;
            msg << e.what() << " (age step " << k + 1 << ")";
            throw NewtonFailure(msg.str());
        }
        f.u.row(k + 1) = u;
        f.v.row(k + 1) = v;
    }
    return f;
}

} // namespace agebif
