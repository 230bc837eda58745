#include "agebif/commands.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

#include "agebif/dynamics.hpp"
#include "agebif/errors.hpp"
#include "agebif/io.hpp"

namespace agebif {

namespace {

using ojson = nlohmann::ordered_json;

void write_json(const std::filesystem::path& path, const ojson& j) {
    write_file_atomic(path, j.dump(2) + "\n");
}

// semi-trivial branch norms sampled over a parameter window, warm-started
// along the ladder (for diagram overlays)
void sampled_semitrivial_norms(const Problem& pr, double alpha, double lo, double hi, int count,
                               std::vector<double>& params, std::vector<double>& norms) {
    params.clear();
    norms.clear();
    if (!(hi > lo) || count < 2) return;
    const Vector* warm = nullptr;
    Vector last;
    for (int i = 0; i < count; ++i) {
        const double p = lo + (hi - lo) * i / (count - 1);
        try {
            const SemiTrivialSolution s = solve_semitrivial(pr, p, alpha, warm);
            last = s.trace;
            warm = &last;
            params.push_back(p);
            norms.push_back(field_l2(s.field, pr.ages, pr.grid));
        } catch (const Error&) {
            // outside the solvable window; skip the sample
        }
    }
}

struct BranchSetup {
    BranchContext context;
    TangentData tangent;
    SemiTrivialSolution base;
    double base_mu;
    const char* mu_name;
};

BranchSetup branch_setup(const Problem& pr, const BranchSpec& bs) {
    if (bs.scenario == "T1") {
        BifPointEta0 b = eta0(pr, bs.cc.fixed_value);
        return BranchSetup{BranchContext::PredatorBaseEta, std::move(b.tangent),
                           std::move(b.v_branch), b.eta0, "eta"};
    }
    if (bs.scenario == "T22") {
        BifPointEta1 b = eta1(pr, bs.cc.fixed_value);
        return BranchSetup{BranchContext::PreyBaseEta, std::move(b.tangent),
                           std::move(b.u_branch), b.eta1, "eta"};
    }
    BifPointXi0 b = xi0(pr, bs.cc.fixed_value);
    return BranchSetup{BranchContext::PreyBaseXi, std::move(b.tangent), std::move(b.u_branch),
                       b.xi0, "xi"};
}

} // namespace

void cmd_normalize(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const Problem pr = problem_from_config(rc);
    const EigenPair ep = principal_eigenpair(pr.lap);

    // echo the normalization: the birth-weighted neutral operator must have
    // spectral radius exactly one
    const NonlocalOperator h0 = assemble_H(pr.lap, pr.ages, pr.zero_path(), pr.birth, pr.stepper);
    const SpectralResult sr = spectral_radius(h0);

    const double pi2 = M_PI * M_PI;
    const double c_limit = pi2 / (1.0 - std::exp(-pi2 * pr.params.a_m)); // for b_raw == 1
    const double gap = std::abs(pr.birth_constant - c_limit) / c_limit;

    ojson j;
    j["grid"] = {{"n_x", rc.n_x}, {"n_a", rc.n_a}, {"a_m", rc.params.a_m}};
    j["lambda1_discrete"] = ep.value;
    j["lambda1_continuum"] = pi2;
    j["birth_constant"] = pr.birth_constant;
    j["birth_constant_continuum_limit"] = c_limit;
    j["birth_constant_relative_gap"] = gap;
    j["spectral_radius_check"] = sr.radius;
    j["spectral_radius_error"] = std::abs(sr.radius - 1.0);
    write_json(out_dir / "normalize.json", j);

    std::printf("lambda1 (discrete) = %s  [continuum %s]\n", format_double(ep.value).c_str(),
                format_double(pi2).c_str());
    std::printf("normalization constant c = %s\n", format_double(pr.birth_constant).c_str());
    std::printf("  continuum limit %s, relative gap %s\n", format_double(c_limit).c_str(),
                format_double(gap).c_str());
    std::printf("spectral radius after normalization = %s (|r-1| = %s)\n",
                format_double(sr.radius).c_str(), format_double(std::abs(sr.radius - 1.0)).c_str());
    std::printf("wrote %s\n", (out_dir / "normalize.json").string().c_str());
}

void cmd_semitrivial(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const Problem pr = problem_from_config(rc);
    const bool prey = rc.semitrivial.species == "prey";
    const double alpha = prey ? pr.params.alpha1 : pr.params.beta1;

    CsvTable csv({"param", "norm_l2", "trace_min", "trace_max", "identity_residual", "status"});
    int solved = 0;
    for (double p : rc.semitrivial.params) {
        try {
            const SemiTrivialSolution s = solve_semitrivial(pr, p, alpha);
            csv.add_row({format_double(p), format_double(field_l2(s.field, pr.ages, pr.grid)),
                         format_double(s.trace.minCoeff()), format_double(s.trace.maxCoeff()),
                         format_double(s.identity_residual), "ok"});
            ++solved;
        } catch (const NoPositiveSolution&) {
            csv.add_row({format_double(p), "", "", "", "", "no-positive-solution"});
        }
    }
    write_file_atomic(out_dir / "semitrivial.csv", csv.str());
    std::printf("%s branch: %d of %zu parameters solved; wrote %s\n",
                rc.semitrivial.species.c_str(), solved, rc.semitrivial.params.size(),
                (out_dir / "semitrivial.csv").string().c_str());
}

void cmd_bifpoints(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const Problem pr = problem_from_config(rc);
    const BifpointsSpec& bp = rc.bifpoints;

    ojson j;
    j["eta"] = bp.eta;
    j["xi"] = bp.xi;
    j["xi_prey"] = bp.xi_prey;
    for (const std::string& which : bp.which) {
        if (which == "eta0") {
            const BifPointEta0 b = eta0(pr, bp.xi);
            j["eta0"] = {{"value", b.eta0},
                         {"resolvent_radius", b.resolvent_radius},
                         {"transversality_error", b.transversality_error}};
            std::printf("eta0(xi = %s) = %s\n", format_double(bp.xi).c_str(),
                        format_double(b.eta0).c_str());
        } else if (which == "xi0") {
            const BifPointXi0 b = xi0(pr, bp.eta);
            j["xi0"] = {{"value", b.xi0}};
            std::printf("xi0(eta = %s) = %s\n", format_double(bp.eta).c_str(),
                        format_double(b.xi0).c_str());
        } else if (which == "eta1") {
            try {
                const BifPointEta1 b = eta1(pr, bp.xi_prey, bp.eta_max);
                j["eta1"] = {{"exists", true}, {"value", b.eta1}, {"residual", b.residual}};
                std::printf("eta1(xi = %s) = %s\n", format_double(bp.xi_prey).c_str(),
                            format_double(b.eta1).c_str());
            } catch (const NoBifurcation& e) {
                j["eta1"] = {{"exists", false}, {"detail", e.what()}};
                std::printf("eta1(xi = %s): none below eta_max (%s)\n",
                            format_double(bp.xi_prey).c_str(), e.what());
            }
        } else if (which == "xi1-scan") {
            const Xi1Scan scan =
                xi1_scan(pr, bp.eta, bp.xi_scan.lo, bp.xi_scan.hi, bp.xi_scan.samples);
            ojson samples = ojson::array();
            for (const auto& [x, r] : scan.samples) samples.push_back({x, r});
            j["xi1_scan"] = {{"samples", samples}, {"roots", scan.roots}};
            std::printf("xi1 scan over [%s, %s]: %zu sign changes\n",
                        format_double(bp.xi_scan.lo).c_str(),
                        format_double(bp.xi_scan.hi).c_str(), scan.roots.size());
        } else if (which == "delta") {
            const DeltaEstimate d = delta_estimate(pr, bp.delta_etas);
            ojson seq = ojson::array();
            for (const auto& [e, v] : d.sequence) seq.push_back({e, v});
            ojson fails = ojson::array();
            for (const auto& [e, msg] : d.failures)
                fails.push_back({{"eta", e}, {"reason", msg}});
            j["delta"] = {{"value", d.value}, {"sequence", seq}, {"failures", fails}};
            std::printf("delta estimate = %s (%zu ladder points, %zu failures)\n",
                        format_double(d.value).c_str(), d.sequence.size(), d.failures.size());
        }
    }
    write_json(out_dir / "bifpoints.json", j);
    std::printf("wrote %s\n", (out_dir / "bifpoints.json").string().c_str());
}

void cmd_branch(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const Problem pr = problem_from_config(rc);
    const BranchSpec& bs = rc.branch;
    const ContinuationConfig& cc = bs.cc;

    const BranchSetup setup = branch_setup(pr, bs);
    const CoexistenceState s1 =
        first_step_off_bifurcation(pr, cc, setup.context, setup.tangent, setup.base);
    const CoexistenceState emb =
        semitrivial_embedding(pr, setup.context, setup.base, setup.base_mu);
    const BranchResult r = continue_branch(pr, cc, setup.context, s1, emb);
    const EndpointReport rep = classify_endpoint(pr, cc, setup.context, r);

    CsvTable csv({"index", "s", "mu", "norm_u", "norm_v", "min_u0", "min_v0", "step",
                  "newton_iters"});
    for (const BranchRecord& rec : r.records) {
        csv.add_row({std::to_string(rec.index), format_double(rec.s), format_double(rec.mu),
                     format_double(rec.norm_u), format_double(rec.norm_v),
                     format_double(rec.min_u0), format_double(rec.min_v0),
                     format_double(rec.step), std::to_string(rec.newton_iters)});
    }
    write_file_atomic(out_dir / "branch.csv", csv.str());

    ojson j;
    j["scenario"] = bs.scenario;
    j["varied_parameter"] = setup.mu_name;
    j["fixed_value"] = cc.fixed_value;
    j["bifurcation_mu"] = setup.base_mu;
    j["records"] = r.records.size();
    j["stop"] = to_string(r.stop);
    j["stop_detail"] = r.stop_detail;
    j["alternative"] = rep.alternative;
    j["alternative_detail"] = rep.detail;
    j["verified"] = rep.verified;
    if (rep.verified) {
        j["connection_param"] = rep.connection_param;
        j["connection_error"] = rep.connection_error;
    }
    j["terminal"] = {{"mu", r.terminal.mu},
                     {"sup_u0", r.terminal.u0.cwiseAbs().maxCoeff()},
                     {"sup_v0", r.terminal.v0.cwiseAbs().maxCoeff()},
                     {"residual_norm", r.terminal.residual_norm}};
    write_json(out_dir / "branch_summary.json", j);

    // bifurcation diagram: branch norms over mu, semi-trivial branches overlaid
    std::vector<double> mu, nu, nv;
    for (const BranchRecord& rec : r.records) {
        mu.push_back(rec.mu);
        nu.push_back(rec.norm_u);
        nv.push_back(rec.norm_v);
    }
    const double mu_lo = *std::min_element(mu.begin(), mu.end());
    const double mu_hi = *std::max_element(mu.begin(), mu.end());
    LinePlot plot("bifurcation diagram (" + bs.scenario + ")", setup.mu_name,
                  "L2 norm over age and space");
    plot.add_series("coexistence |u|", mu, nu, "#c0392b");
    plot.add_series("coexistence |v|", mu, nv, "#2471a3");

    std::vector<double> sp, sn;
    if (setup.context == BranchContext::PreyBaseXi) {
        // varying xi: the prey-only norm is flat, the predator-only branch
        // exists for xi > 1
        if (cc.fixed_value > 1.0) {
            const SemiTrivialSolution u_fixed =
                solve_semitrivial(pr, cc.fixed_value, pr.params.alpha1);
            const double nu_fixed = field_l2(u_fixed.field, pr.ages, pr.grid);
            plot.add_series("prey-only |u|", {mu_lo, mu_hi}, {nu_fixed, nu_fixed}, "#7d6608",
                            true);
        }
        sampled_semitrivial_norms(pr, pr.params.beta1, std::max(1.05, mu_lo), mu_hi, 25, sp, sn);
        if (sp.size() >= 2) plot.add_series("predator-only |v|", sp, sn, "#1e8449", true);
    } else {
        // varying eta: the predator-only norm is flat (absent below xi = 1),
        // the prey-only branch exists for eta > 1
        if (cc.fixed_value > 1.0) {
            const SemiTrivialSolution v_fixed =
                solve_semitrivial(pr, cc.fixed_value, pr.params.beta1);
            const double nv_fixed = field_l2(v_fixed.field, pr.ages, pr.grid);
            plot.add_series("predator-only |v|", {mu_lo, mu_hi}, {nv_fixed, nv_fixed}, "#1e8449",
                            true);
        }
        sampled_semitrivial_norms(pr, pr.params.alpha1, std::max(1.05, mu_lo), mu_hi, 25, sp, sn);
        if (sp.size() >= 2) plot.add_series("prey-only |u|", sp, sn, "#7d6608", true);
    }
    write_file_atomic(out_dir / "branch.svg", plot.render());

    std::printf("%s: %zu records, stop %s, alternative %s%s\n", bs.scenario.c_str(),
                r.records.size(), to_string(r.stop), rep.alternative.c_str(),
                rep.verified ? " (verified)" : "");
    std::printf("wrote %s, %s, %s\n", (out_dir / "branch.csv").string().c_str(),
                (out_dir / "branch_summary.json").string().c_str(),
                (out_dir / "branch.svg").string().c_str());
}

void cmd_simulate(const RunConfig& rc, const std::filesystem::path& out_dir) {
    const Problem pr = problem_from_config(rc);
    const SimulateSpec& ss = rc.simulate;

    PopulationState target;
    double eta_used = ss.eta, xi_used = ss.xi;
    if (ss.init == "coexistence") {
        // a coexistence steady state off the predator base at the configured
        // xi; the matching eta is the state's own renewal parameter
        const BifPointEta0 b0 = eta0(pr, ss.xi);
        ContinuationConfig cc;
        cc.fixed_value = ss.xi;
        cc.s0 = ss.amplitude;
        const CoexistenceState st =
            first_step_off_bifurcation(pr, cc, BranchContext::PredatorBaseEta, b0.tangent,
                                       b0.v_branch);
        target = population_from_coexistence(pr, st);
        eta_used = st.mu;
    } else if (ss.init == "prey") {
        const SemiTrivialSolution u = solve_semitrivial(pr, ss.eta, pr.params.alpha1);
        target = population_from_semitrivial(pr, u, Species::Prey);
    } else if (ss.init == "predator") {
        const SemiTrivialSolution v = solve_semitrivial(pr, ss.xi, pr.params.beta1);
        target = population_from_semitrivial(pr, v, Species::Predator);
    } else { // small
        target.u = AgeField::Zero(pr.ages.n_a + 1, pr.grid.n_x);
        target.v = AgeField::Zero(pr.ages.n_a + 1, pr.grid.n_x);
    }

    PopulationState init = target;
    if (ss.init == "small") {
        init.u.setConstant(ss.amplitude);
        init.v.setConstant(ss.amplitude);
    }
    init.u *= ss.perturb;
    init.v *= ss.perturb;

    SimulateConfig sc;
    sc.t_end = ss.t_end;
    sc.sample_every = ss.sample_every;
    const auto traj = simulate(pr, init, eta_used, xi_used, sc);
    const DistanceSeries ds = steady_state_distance(pr, traj, target);

    CsvTable csv({"t", "distance", "norm_u", "norm_v"});
    std::vector<double> ts, dist, nu, nv;
    for (std::size_t i = 0; i < traj.size(); ++i) {
        const double l2u = field_l2(traj[i].u, pr.ages, pr.grid);
        const double l2v = field_l2(traj[i].v, pr.ages, pr.grid);
        csv.add_numeric_row({traj[i].t, ds.values[i], l2u, l2v});
        ts.push_back(traj[i].t);
        dist.push_back(ds.values[i]);
        nu.push_back(l2u);
        nv.push_back(l2v);
    }
    write_file_atomic(out_dir / "simulate.csv", csv.str());

    double dmax = 0.0;
    for (double d : ds.values) dmax = std::max(dmax, d);
    ojson j;
    j["init"] = ss.init;
    j["eta"] = eta_used;
    j["xi"] = xi_used;
    j["perturb"] = ss.perturb;
    j["t_end"] = ss.t_end;
    j["samples"] = traj.size();
    j["final_distance"] = ds.values.back();
    j["max_distance"] = dmax;
    j["tail_decreasing"] = ds.tail_decreasing;
    write_json(out_dir / "simulate_summary.json", j);

    LinePlot plot("population norms over time (init: " + ss.init + ")", "t",
                  "L2 norm over age and space");
    plot.add_series("|u(t)|", ts, nu, "#c0392b");
    plot.add_series("|v(t)|", ts, nv, "#2471a3");
    write_file_atomic(out_dir / "simulate.svg", plot.render());

    std::printf("simulated %zu samples to t = %s; final distance %s (max %s)\n", traj.size(),
                format_double(ts.back()).c_str(), format_double(ds.values.back()).c_str(),
                format_double(dmax).c_str());
    std::printf("wrote %s, %s, %s\n", (out_dir / "simulate.csv").string().c_str(),
                (out_dir / "simulate_summary.json").string().c_str(),
                (out_dir / "simulate.svg").string().c_str());
}

} // namespace agebif
