#include "agebif/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "agebif/errors.hpp"

namespace agebif {

namespace {

std::string fmt(double x) {
    std::ostringstream os;
    os.precision(9);
    os << x;
    return os.str();
}

void check_shape(const Problem& pr, const AgeField& f, const char* name) {
    if (f.rows() != pr.ages.n_a + 1 || f.cols() != pr.grid.n_x) {
        std::ostringstream os;
        os << "simulate: " << name << " has shape " << f.rows() << "x" << f.cols()
           << ", expected " << pr.ages.n_a + 1 << "x" << pr.grid.n_x;
        throw InvalidArgument(os.str());
    }
}

// One splitting step: renewal integrals from the current field, then every
// transported slice advances by one implicit coupled step.
PopulationState advance(const Problem& pr, const PopulationState& s, double eta, double xi) {
    const int n_a = pr.ages.n_a;
    const int n_x = pr.grid.n_x;
    const double da = pr.ages.da;

    const Vector iu = age_integral(s.u, pr.birth, pr.ages);
    const Vector iv = age_integral(s.v, pr.birth, pr.ages);

    PopulationState out;
    out.t = s.t + da;
    out.u.resize(n_a + 1, n_x);
    out.v.resize(n_a + 1, n_x);
    out.u.row(0) = eta * iu.transpose();
    out.v.row(0) = xi * iv.transpose();
    for (int k = 0; k < n_a; ++k) {
        const auto [un, vn] = coupled_step(pr.lap, da, pr.params, s.u.row(k).transpose(),
                                           s.v.row(k).transpose(), pr.stepper);
        out.u.row(k + 1) = un.transpose();
        out.v.row(k + 1) = vn.transpose();
    }
    return out;
}

} // namespace

PopulationState population_from_coexistence(const Problem& pr, const CoexistenceState& st) {
    PopulationState out;
    out.t = 0.0;
    out.u = st.fields.u.cwiseMax(0.0);
    out.v = st.fields.v.cwiseMax(0.0);
    check_shape(pr, out.u, "u");
    check_shape(pr, out.v, "v");
    return out;
}

PopulationState population_from_semitrivial(const Problem& pr, const SemiTrivialSolution& s,
                                            Species which) {
    PopulationState out;
    out.t = 0.0;
    AgeField zero = AgeField::Zero(pr.ages.n_a + 1, pr.grid.n_x);
    if (which == Species::Prey) {
        out.u = s.field.cwiseMax(0.0);
        out.v = std::move(zero);
    } else {
        out.u = std::move(zero);
        out.v = s.field.cwiseMax(0.0);
    }
    check_shape(pr, out.u, "u");
    check_shape(pr, out.v, "v");
    return out;
}

std::vector<PopulationState> simulate(const Problem& pr, const PopulationState& init,
                                      double eta, double xi, const SimulateConfig& sc) {
    check_shape(pr, init.u, "init.u");
    check_shape(pr, init.v, "init.v");
    if (!init.u.allFinite() || !init.v.allFinite())
        throw InvalidArgument("simulate: initial data must be finite");
    if (init.u.minCoeff() < 0.0 || init.v.minCoeff() < 0.0)
        throw InvalidArgument("simulate: initial data must be nonnegative");
    if (!(eta >= 0.0) || !(xi >= 0.0) || !std::isfinite(eta) || !std::isfinite(xi))
        throw InvalidArgument("simulate: renewal parameters must be finite and >= 0");
    if (sc.sample_every < 1)
        throw InvalidArgument("simulate: sample_every must be >= 1");

    const double da = pr.ages.da;
    const long long steps = std::llround(sc.t_end / da);
    if (!(sc.t_end > 0.0) || steps < 1)
        throw InvalidArgument("simulate: t_end must cover at least one time step (da = " +
                              fmt(da) + ")");

    std::vector<PopulationState> traj;
    traj.reserve(static_cast<std::size_t>(steps / sc.sample_every) + 2);
    traj.push_back(init);
    traj.back().t = 0.0;

    PopulationState cur = traj.back();
    for (long long m = 1; m <= steps; ++m) {
        try {
            cur = advance(pr, cur, eta, xi);
        } catch (const CoefficientFloorError& e) {
            throw CoefficientFloorError(std::string(e.what()) + " (simulate, t = " +
                                        fmt(m * da) + ")");
        } catch (const NewtonFailure& e) {
            throw NewtonFailure(std::string(e.what()) + " (simulate, t = " + fmt(m * da) + ")");
        }
        if (m % sc.sample_every == 0 || m == steps) traj.push_back(cur);
    }
    return traj;
}

DistanceSeries steady_state_distance(const Problem& pr, const std::vector<PopulationState>& traj,
                                     const PopulationState& target) {
    check_shape(pr, target.u, "target.u");
    check_shape(pr, target.v, "target.v");

    DistanceSeries out;
    out.values.reserve(traj.size());
    for (const PopulationState& s : traj) {
        check_shape(pr, s.u, "trajectory u");
        check_shape(pr, s.v, "trajectory v");
        const double du = field_l2(s.u - target.u, pr.ages, pr.grid);
        const double dv = field_l2(s.v - target.v, pr.ages, pr.grid);
        out.values.push_back(std::hypot(du, dv));
    }

    const std::size_t m = out.values.size();
    if (m >= 3) {
        bool mono = true;
        for (std::size_t i = m / 2; i + 1 < m; ++i) {
            if (out.values[i + 1] > out.values[i] * (1.0 + 1e-12) + 1e-15) {
                mono = false;
                break;
            }
        }
        out.tail_decreasing = mono;
    }
    return out;
}

} // namespace agebif
