#include <doctest.h>

#include <cmath>

#include "agebif/dynamics.hpp"

using namespace agebif;

namespace {

Problem small_problem(int n_x = 12, int n_a = 48, ModelParams p = {}) {
    return make_problem(n_x, n_a, p);
}

PopulationState zero_state(const Problem& pr) {
    PopulationState s;
    s.u = AgeField::Zero(pr.ages.n_a + 1, pr.grid.n_x);
    s.v = AgeField::Zero(pr.ages.n_a + 1, pr.grid.n_x);
    return s;
}

// a coexistence steady state a fixed amplitude off the predator base
CoexistenceState coexistence_point(const Problem& pr, double s0 = 0.2) {
    const BifPointEta0 b0 = eta0(pr, 2.0);
    ContinuationConfig cc;
    cc.fixed_value = 2.0;
    cc.s0 = s0;
    return first_step_off_bifurcation(pr, cc, BranchContext::PredatorBaseEta, b0.tangent,
                                      b0.v_branch);
}

PopulationState smooth_state(const Problem& pr) {
    PopulationState s;
    const int na = pr.ages.n_a, nx = pr.grid.n_x;
    s.u.resize(na + 1, nx);
    s.v.resize(na + 1, nx);
    for (int k = 0; k <= na; ++k) {
        const double a = pr.ages.da * k;
        for (int i = 0; i < nx; ++i) {
            const double x = pr.grid.h * (i + 1);
            s.u(k, i) = 2.0 * std::exp(-a) * std::sin(M_PI * x);
            s.v(k, i) = 1.5 * std::exp(-0.5 * a) * std::sin(M_PI * x);
        }
    }
    return s;
}

} // namespace

TEST_CASE("a computed coexistence state is a fixed point of the time stepper") {
    const Problem pr = small_problem();
    const CoexistenceState st = coexistence_point(pr);
    const PopulationState init = population_from_coexistence(pr, st);

    SimulateConfig sc;
    sc.t_end = 5.0 * pr.params.a_m;
    sc.sample_every = 24;
    const auto traj = simulate(pr, init, st.mu, 2.0, sc);
    REQUIRE(traj.size() >= 3);
    CHECK(traj.front().t == 0.0);
    CHECK(std::abs(traj.back().t - sc.t_end) <= 1e-12);

    const DistanceSeries ds = steady_state_distance(pr, traj, init);
    REQUIRE(ds.values.size() == traj.size());
    CHECK(ds.values.front() == 0.0);
    for (double d : ds.values) {
        CHECK(std::isfinite(d));
        CHECK(d >= 0.0);
        CHECK(d <= 1e-6);
    }

    // distance of a trajectory to its own terminal state ends at zero
    const DistanceSeries self = steady_state_distance(pr, traj, traj.back());
    CHECK(self.values.back() <= 1e-12);

    // every sample stays nonnegative
    for (const PopulationState& s : traj) {
        CHECK(s.u.minCoeff() >= 0.0);
        CHECK(s.v.minCoeff() >= 0.0);
    }
}

TEST_CASE("one-species steady states persist and the empty component stays zero") {
    const Problem pr = small_problem();
    SimulateConfig sc;
    sc.t_end = 5.0;
    sc.sample_every = 24;

    const SemiTrivialSolution u2 = solve_semitrivial(pr, 2.0, pr.params.alpha1);
    const PopulationState iu = population_from_semitrivial(pr, u2, Species::Prey);
    const auto tu = simulate(pr, iu, 2.0, 0.7, sc);
    for (const PopulationState& s : tu) CHECK(s.v.cwiseAbs().maxCoeff() == 0.0);
    CHECK(steady_state_distance(pr, tu, iu).values.back() <= 1e-6);

    const SemiTrivialSolution v2 = solve_semitrivial(pr, 2.0, pr.params.beta1);
    const PopulationState iv = population_from_semitrivial(pr, v2, Species::Predator);
    const auto tv = simulate(pr, iv, 1.3, 2.0, sc);
    for (const PopulationState& s : tv) CHECK(s.u.cwiseAbs().maxCoeff() == 0.0);
    CHECK(steady_state_distance(pr, tv, iv).values.back() <= 1e-6);
}

TEST_CASE("sub-threshold renewal drives both populations extinct") {
    const Problem pr = small_problem();
    PopulationState init;
    init.u = AgeField::Constant(pr.ages.n_a + 1, pr.grid.n_x, 0.05);
    init.v = AgeField::Constant(pr.ages.n_a + 1, pr.grid.n_x, 0.05);

    SimulateConfig sc;
    sc.t_end = 10.0;
    sc.sample_every = 48;
    const auto traj = simulate(pr, init, 0.5, 0.5, sc);

    CHECK(traj.back().u.maxCoeff() <= 1e-9);
    CHECK(traj.back().v.maxCoeff() <= 1e-9);
    CHECK(traj.back().u.minCoeff() >= 0.0);
    CHECK(traj.back().v.minCoeff() >= 0.0);

    const DistanceSeries ds = steady_state_distance(pr, traj, zero_state(pr));
    CHECK(ds.values.back() <= 1e-9 * ds.values.front());
    for (double d : ds.values) {
        CHECK(std::isfinite(d));
        CHECK(d >= 0.0);
    }
}

TEST_CASE("a perturbed coexistence state relaxes back toward it") {
    // observation-level check: dynamic stability is not asserted theory, but
    // the measured relaxation at these parameters is robustly below 1e-3
    const Problem pr = small_problem();
    const CoexistenceState st = coexistence_point(pr);
    const PopulationState target = population_from_coexistence(pr, st);
    PopulationState pert = target;
    pert.u *= 1.05;
    pert.v *= 1.05;

    SimulateConfig sc;
    sc.t_end = 20.0;
    sc.sample_every = 48;
    const auto traj = simulate(pr, pert, st.mu, 2.0, sc);
    const DistanceSeries ds = steady_state_distance(pr, traj, target);
    CHECK(ds.values.front() > 1e-2);
    CHECK(ds.values.back() <= 1e-3);
    CHECK(ds.tail_decreasing);
}

TEST_CASE("decoupled limit relaxes to the one-species steady states") {
    // exact zeros are outside the admissible parameter domain, so the
    // decoupled limit is realized with negligible couplings
    ModelParams p;
    p.gamma = 0.0;
    p.alpha2 = 1e-12;
    p.beta2 = 1e-12;
    const Problem pr = small_problem(12, 48, p);

    const SemiTrivialSolution u2 = solve_semitrivial(pr, 2.0, pr.params.alpha1);
    const SemiTrivialSolution v2 = solve_semitrivial(pr, 2.0, pr.params.beta1);
    PopulationState target;
    target.u = u2.field.cwiseMax(0.0);
    target.v = v2.field.cwiseMax(0.0);

    PopulationState init = target;
    init.u *= 1.1;
    init.v *= 0.9;

    SimulateConfig sc;
    sc.t_end = 20.0;
    sc.sample_every = 96;
    const auto traj = simulate(pr, init, 2.0, 2.0, sc);
    const DistanceSeries ds = steady_state_distance(pr, traj, target);
    CHECK(ds.values.back() <= 1e-4);
}

TEST_CASE("splitting error shrinks linearly under grid refinement") {
    const Problem p48 = small_problem(12, 48);
    const Problem p96 = small_problem(12, 96);
    const Problem p192 = small_problem(12, 192);

    SimulateConfig sc;
    sc.t_end = 1.0;
    sc.sample_every = 1 << 20; // only t = 0 and the final level

    const auto r48 = simulate(p48, smooth_state(p48), 2.0, 2.0, sc);
    const auto r96 = simulate(p96, smooth_state(p96), 2.0, 2.0, sc);
    const auto r192 = simulate(p192, smooth_state(p192), 2.0, 2.0, sc);

    const auto restrict_rows = [](const AgeField& f, int factor) {
        AgeField g((f.rows() - 1) / factor + 1, f.cols());
        for (int k = 0; k < g.rows(); ++k) g.row(k) = f.row(k * factor);
        return g;
    };
    const AgeField ru192 = restrict_rows(r192.back().u, 4);
    const AgeField rv192 = restrict_rows(r192.back().v, 4);
    const AgeField ru96 = restrict_rows(r96.back().u, 2);
    const AgeField rv96 = restrict_rows(r96.back().v, 2);

    const double e48 = std::hypot(field_l2(r48.back().u - ru192, p48.ages, p48.grid),
                                  field_l2(r48.back().v - rv192, p48.ages, p48.grid));
    const double e96 = std::hypot(field_l2(ru96 - ru192, p48.ages, p48.grid),
                                  field_l2(rv96 - rv192, p48.ages, p48.grid));
    CHECK(e48 > 0.0);
    CHECK(e96 < 0.7 * e48);
}

TEST_CASE("trajectories sample on the requested stride and rerun bitwise") {
    const Problem pr = small_problem();
    PopulationState init;
    init.u = AgeField::Constant(pr.ages.n_a + 1, pr.grid.n_x, 0.2);
    init.v = AgeField::Constant(pr.ages.n_a + 1, pr.grid.n_x, 0.1);

    SimulateConfig sc;
    sc.t_end = 23.0 / 48.0; // 23 steps
    sc.sample_every = 7;
    const auto traj = simulate(pr, init, 1.0, 1.0, sc);
    REQUIRE(traj.size() == 5); // t = 0, 7, 14, 21, 23 steps
    CHECK(traj[1].t == doctest::Approx(7.0 / 48.0).epsilon(1e-14));
    CHECK(traj[3].t == doctest::Approx(21.0 / 48.0).epsilon(1e-14));
    CHECK(traj.back().t == doctest::Approx(23.0 / 48.0).epsilon(1e-14));

    const auto traj2 = simulate(pr, init, 1.0, 1.0, sc);
    REQUIRE(traj2.size() == traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        CHECK((traj2[i].u - traj[i].u).cwiseAbs().maxCoeff() == 0.0);
        CHECK((traj2[i].v - traj[i].v).cwiseAbs().maxCoeff() == 0.0);
    }
}

TEST_CASE("simulate validates its inputs") {
    const Problem pr = small_problem();
    const PopulationState good = zero_state(pr);
    SimulateConfig sc;
    sc.t_end = 0.5;

    PopulationState bad = good;
    bad.u = AgeField::Zero(pr.ages.n_a, pr.grid.n_x); // one row short
    CHECK_THROWS_AS((void)simulate(pr, bad, 1.0, 1.0, sc), InvalidArgument);

    PopulationState neg = good;
    neg.v(3, 4) = -1e-3;
    CHECK_THROWS_AS((void)simulate(pr, neg, 1.0, 1.0, sc), InvalidArgument);

    CHECK_THROWS_AS((void)simulate(pr, good, -0.5, 1.0, sc), InvalidArgument);

    SimulateConfig bad_stride = sc;
    bad_stride.sample_every = 0;
    CHECK_THROWS_AS((void)simulate(pr, good, 1.0, 1.0, bad_stride), InvalidArgument);

    SimulateConfig too_short = sc;
    too_short.t_end = 1e-4; // below half a time step
    CHECK_THROWS_AS((void)simulate(pr, good, 1.0, 1.0, too_short), InvalidArgument);
}
