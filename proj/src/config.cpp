#include "agebif/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "agebif/errors.hpp"

namespace agebif {

namespace {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& what) {
    throw InvalidArgument("config: " + where + ": " + what);
}

void require_known_keys(const json& obj, const std::string& where,
                        const std::set<std::string>& allowed) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        if (!allowed.count(it.key()))
            fail(where, "unknown key \"" + it.key() + "\"");
    }
}

const json* find(const json& obj, const char* key) {
    auto it = obj.find(key);
    return it == obj.end() ? nullptr : &*it;
}

double get_number(const json& j, const std::string& where) {
    if (!j.is_number()) fail(where, "must be a number");
    return j.get<double>();
}

int get_int(const json& j, const std::string& where) {
    if (!j.is_number_integer()) fail(where, "must be an integer");
    return j.get<int>();
}

std::string get_string(const json& j, const std::string& where) {
    if (!j.is_string()) fail(where, "must be a string");
    return j.get<std::string>();
}

std::vector<double> get_number_list(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) fail(where, "must be a non-empty array of numbers");
    std::vector<double> out;
    for (const auto& e : j) {
        if (!e.is_number()) fail(where, "must contain only numbers");
        out.push_back(e.get<double>());
    }
    return out;
}

void check_positive(double v, const std::string& where) {
    if (!(v > 0.0)) fail(where, "must be > 0 (got " + std::to_string(v) + ")");
}

void parse_grid(const json& j, RunConfig& rc) {
    require_known_keys(j, "grid", {"n_x", "n_a"});
    if (const json* v = find(j, "n_x")) {
        rc.n_x = get_int(*v, "grid.n_x");
        if (rc.n_x < 3) fail("grid.n_x", "must be >= 3");
    }
    if (const json* v = find(j, "n_a")) {
        rc.n_a = get_int(*v, "grid.n_a");
        if (rc.n_a < 1) fail("grid.n_a", "must be >= 1");
    }
}

void parse_params(const json& j, RunConfig& rc) {
    require_known_keys(j, "params",
                       {"alpha1", "alpha2", "beta1", "beta2", "gamma", "a_m"});
    if (const json* v = find(j, "alpha1")) rc.params.alpha1 = get_number(*v, "params.alpha1");
    if (const json* v = find(j, "alpha2")) rc.params.alpha2 = get_number(*v, "params.alpha2");
    if (const json* v = find(j, "beta1")) rc.params.beta1 = get_number(*v, "params.beta1");
    if (const json* v = find(j, "beta2")) rc.params.beta2 = get_number(*v, "params.beta2");
    if (const json* v = find(j, "gamma")) rc.params.gamma = get_number(*v, "params.gamma");
    if (const json* v = find(j, "a_m")) rc.params.a_m = get_number(*v, "params.a_m");
    rc.params.validate(); // names the violated bound itself
}

void parse_birth(const json& j, const std::filesystem::path& config_dir, RunConfig& rc) {
    require_known_keys(j, "birth", {"shape", "file"});
    std::string shape = "constant";
    if (const json* v = find(j, "shape")) shape = get_string(*v, "birth.shape");
    if (shape == "constant") {
        rc.birth.shape = BirthShape::Constant;
    } else if (shape == "ramp") {
        rc.birth.shape = BirthShape::Ramp;
    } else if (shape == "samples") {
        rc.birth.shape = BirthShape::Samples;
        const json* v = find(j, "file");
        if (!v) fail("birth", "shape \"samples\" requires \"file\"");
        rc.birth.samples_file = config_dir / get_string(*v, "birth.file");
    } else {
        fail("birth.shape", "must be one of constant, ramp, samples (got \"" + shape + "\")");
    }
    if (rc.birth.shape != BirthShape::Samples && find(j, "file"))
        fail("birth.file", "only allowed with shape \"samples\"");
}

void parse_semitrivial(const json& j, RunConfig& rc) {
    require_known_keys(j, "semitrivial", {"species", "params"});
    if (const json* v = find(j, "species")) {
        rc.semitrivial.species = get_string(*v, "semitrivial.species");
        if (rc.semitrivial.species != "prey" && rc.semitrivial.species != "predator")
            fail("semitrivial.species", "must be \"prey\" or \"predator\"");
    }
    if (const json* v = find(j, "params")) {
        rc.semitrivial.params = get_number_list(*v, "semitrivial.params");
        for (double p : rc.semitrivial.params) check_positive(p, "semitrivial.params entries");
    }
}

void parse_bifpoints(const json& j, RunConfig& rc) {
    require_known_keys(j, "bifpoints",
                       {"which", "eta", "xi", "xi_prey", "eta_max", "delta_etas", "xi_scan"});
    if (const json* v = find(j, "which")) {
        if (!v->is_array() || v->empty())
            fail("bifpoints.which", "must be a non-empty array of strings");
        rc.bifpoints.which.clear();
        const std::set<std::string> known = {"eta0", "eta1", "xi0", "xi1-scan", "delta"};
        for (const auto& e : *v) {
            const std::string s = get_string(e, "bifpoints.which entries");
            if (!known.count(s))
                fail("bifpoints.which", "unknown item \"" + s +
                                            "\" (expected eta0, eta1, xi0, xi1-scan, delta)");
            rc.bifpoints.which.push_back(s);
        }
    }
    if (const json* v = find(j, "eta")) {
        rc.bifpoints.eta = get_number(*v, "bifpoints.eta");
        if (!(rc.bifpoints.eta > 1.0)) fail("bifpoints.eta", "must be > 1");
    }
    if (const json* v = find(j, "xi")) {
        rc.bifpoints.xi = get_number(*v, "bifpoints.xi");
        if (!(rc.bifpoints.xi > 1.0)) fail("bifpoints.xi", "must be > 1");
    }
    if (const json* v = find(j, "xi_prey")) {
        rc.bifpoints.xi_prey = get_number(*v, "bifpoints.xi_prey");
        if (!(rc.bifpoints.xi_prey > 0.0 && rc.bifpoints.xi_prey < 1.0))
            fail("bifpoints.xi_prey", "must lie in (0, 1)");
    }
    if (const json* v = find(j, "eta_max")) {
        rc.bifpoints.eta_max = get_number(*v, "bifpoints.eta_max");
        if (!(rc.bifpoints.eta_max > 1.0)) fail("bifpoints.eta_max", "must be > 1");
    }
    if (const json* v = find(j, "delta_etas")) {
        rc.bifpoints.delta_etas = get_number_list(*v, "bifpoints.delta_etas");
        double prev = 1.0;
        for (double e : rc.bifpoints.delta_etas) {
            if (!(e > prev))
                fail("bifpoints.delta_etas", "must be strictly increasing and > 1");
            prev = e;
        }
    }
    if (const json* v = find(j, "xi_scan")) {
        require_known_keys(*v, "bifpoints.xi_scan", {"lo", "hi", "samples"});
        XiScanSpec& xs = rc.bifpoints.xi_scan;
        if (const json* w = find(*v, "lo")) xs.lo = get_number(*w, "bifpoints.xi_scan.lo");
        if (const json* w = find(*v, "hi")) xs.hi = get_number(*w, "bifpoints.xi_scan.hi");
        if (const json* w = find(*v, "samples"))
            xs.samples = get_int(*w, "bifpoints.xi_scan.samples");
        if (!(xs.lo > 1.0)) fail("bifpoints.xi_scan.lo", "must be > 1");
        if (!(xs.hi > xs.lo)) fail("bifpoints.xi_scan.hi", "must be > lo");
        if (xs.samples < 2) fail("bifpoints.xi_scan.samples", "must be >= 2");
    }
}

void parse_branch(const json& j, RunConfig& rc) {
    require_known_keys(j, "branch",
                       {"scenario", "fixed_value", "s0", "h_min", "h_max", "norm_cap",
                        "pos_tol", "mu_min", "mu_max", "max_corrector_iters", "max_records"});
    if (const json* v = find(j, "scenario")) {
        rc.branch.scenario = get_string(*v, "branch.scenario");
        if (rc.branch.scenario != "T1" && rc.branch.scenario != "T22" &&
            rc.branch.scenario != "T222")
            fail("branch.scenario", "must be T1, T22 or T222");
    }
    ContinuationConfig& cc = rc.branch.cc;
    if (const json* v = find(j, "fixed_value")) {
        cc.fixed_value = get_number(*v, "branch.fixed_value");
        check_positive(cc.fixed_value, "branch.fixed_value");
    }
    if (const json* v = find(j, "s0")) {
        cc.s0 = get_number(*v, "branch.s0");
        check_positive(cc.s0, "branch.s0");
    }
    if (const json* v = find(j, "h_min")) {
        cc.h_min = get_number(*v, "branch.h_min");
        check_positive(cc.h_min, "branch.h_min");
    }
    if (const json* v = find(j, "h_max")) cc.h_max = get_number(*v, "branch.h_max");
    if (!(cc.h_max >= cc.h_min)) fail("branch.h_max", "must be >= h_min");
    if (const json* v = find(j, "norm_cap")) {
        cc.norm_cap = get_number(*v, "branch.norm_cap");
        check_positive(cc.norm_cap, "branch.norm_cap");
    }
    if (const json* v = find(j, "pos_tol")) {
        cc.pos_tol = get_number(*v, "branch.pos_tol");
        check_positive(cc.pos_tol, "branch.pos_tol");
    }
    if (const json* v = find(j, "mu_min")) {
        cc.mu_min = get_number(*v, "branch.mu_min");
        check_positive(cc.mu_min, "branch.mu_min");
    }
    if (const json* v = find(j, "mu_max")) cc.mu_max = get_number(*v, "branch.mu_max");
    if (!(cc.mu_max > cc.mu_min)) fail("branch.mu_max", "must be > mu_min");
    if (const json* v = find(j, "max_corrector_iters")) {
        cc.max_corrector_iters = get_int(*v, "branch.max_corrector_iters");
        if (cc.max_corrector_iters < 2) fail("branch.max_corrector_iters", "must be >= 2");
    }
    if (const json* v = find(j, "max_records")) {
        cc.max_records = get_int(*v, "branch.max_records");
        if (cc.max_records < 2) fail("branch.max_records", "must be >= 2");
    }
    // T1 fixes xi > 1 (predator persists alone); T222 fixes eta > 1 (prey persists
    // alone); T22 fixes a prey-side xi in (0, 1).
    if (rc.branch.scenario == "T22") {
        if (!(cc.fixed_value < 1.0))
            fail("branch.fixed_value", "must lie in (0, 1) for scenario T22");
    } else if (!(cc.fixed_value > 1.0)) {
        fail("branch.fixed_value", "must be > 1 for scenarios T1 and T222");
    }
}

void parse_simulate(const json& j, RunConfig& rc) {
    require_known_keys(j, "simulate",
                       {"init", "eta", "xi", "t_end", "sample_every", "amplitude", "perturb"});
    if (const json* v = find(j, "init")) {
        rc.simulate.init = get_string(*v, "simulate.init");
        const std::set<std::string> known = {"coexistence", "prey", "predator", "small"};
        if (!known.count(rc.simulate.init))
            fail("simulate.init", "must be one of coexistence, prey, predator, small");
    }
    if (const json* v = find(j, "eta")) {
        rc.simulate.eta = get_number(*v, "simulate.eta");
        if (rc.simulate.eta < 0.0) fail("simulate.eta", "must be >= 0");
    }
    if (const json* v = find(j, "xi")) {
        rc.simulate.xi = get_number(*v, "simulate.xi");
        if (rc.simulate.xi < 0.0) fail("simulate.xi", "must be >= 0");
    }
    if (const json* v = find(j, "t_end")) {
        rc.simulate.t_end = get_number(*v, "simulate.t_end");
        check_positive(rc.simulate.t_end, "simulate.t_end");
    }
    if (const json* v = find(j, "sample_every")) {
        rc.simulate.sample_every = get_int(*v, "simulate.sample_every");
        if (rc.simulate.sample_every < 1) fail("simulate.sample_every", "must be >= 1");
    }
    if (const json* v = find(j, "amplitude")) {
        rc.simulate.amplitude = get_number(*v, "simulate.amplitude");
        check_positive(rc.simulate.amplitude, "simulate.amplitude");
    }
    if (const json* v = find(j, "perturb")) {
        rc.simulate.perturb = get_number(*v, "simulate.perturb");
        check_positive(rc.simulate.perturb, "simulate.perturb");
    }
}

BirthProfile read_birth_samples(const std::filesystem::path& file, int n_a) {
    std::ifstream is(file);
    if (!is) throw InvalidArgument("config: birth.file: cannot open " + file.string());
    std::vector<double> vals;
    double v;
    while (is >> v) vals.push_back(v);
    if (!is.eof())
        throw InvalidArgument("config: birth.file: non-numeric content in " + file.string());
    if (static_cast<int>(vals.size()) != n_a + 1) {
        std::ostringstream os;
        os << "config: birth.file: expected " << n_a + 1 << " samples (n_a + 1), got "
           << vals.size();
        throw InvalidArgument(os.str());
    }
    Vector s(vals.size());
    for (std::size_t i = 0; i < vals.size(); ++i) s[i] = vals[i];
    return BirthProfile::from_samples(std::move(s));
}

} // namespace

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw InvalidArgument("config: cannot open " + path.string());
    json j;
    try {
        j = json::parse(is);
    } catch (const json::parse_error& e) {
        throw InvalidArgument("config: " + path.string() + ": " + e.what());
    }
    if (!j.is_object()) throw InvalidArgument("config: top level must be a JSON object");

    require_known_keys(j, "top level",
                       {"grid", "params", "birth", "semitrivial", "bifpoints", "branch",
                        "simulate", "seed", "out_dir"});

    RunConfig rc;
    const std::filesystem::path config_dir = path.parent_path();
    if (const json* v = find(j, "grid")) {
        if (!v->is_object()) fail("grid", "must be an object");
        parse_grid(*v, rc);
    }
    if (const json* v = find(j, "params")) {
        if (!v->is_object()) fail("params", "must be an object");
        parse_params(*v, rc);
    } else {
        rc.params.validate();
    }
    if (const json* v = find(j, "birth")) {
        if (!v->is_object()) fail("birth", "must be an object");
        parse_birth(*v, config_dir, rc);
    }
    if (const json* v = find(j, "semitrivial")) {
        if (!v->is_object()) fail("semitrivial", "must be an object");
        parse_semitrivial(*v, rc);
    }
    if (const json* v = find(j, "bifpoints")) {
        if (!v->is_object()) fail("bifpoints", "must be an object");
        parse_bifpoints(*v, rc);
    }
    if (const json* v = find(j, "branch")) {
        if (!v->is_object()) fail("branch", "must be an object");
        parse_branch(*v, rc);
    }
    if (const json* v = find(j, "simulate")) {
        if (!v->is_object()) fail("simulate", "must be an object");
        parse_simulate(*v, rc);
    }
    if (const json* v = find(j, "seed")) {
        if (!v->is_number_unsigned()) fail("seed", "must be a nonnegative integer");
        rc.seed = v->get<std::uint64_t>();
    }
    if (const json* v = find(j, "out_dir")) {
        const std::string s = get_string(*v, "out_dir");
        if (s.empty()) fail("out_dir", "must not be empty");
        rc.out_dir = s;
    }
    return rc;
}

Problem problem_from_config(const RunConfig& rc) {
    const AgeGrid ages(rc.n_a, rc.params.a_m);
    BirthProfile birth = BirthProfile::constant(ages);
    switch (rc.birth.shape) {
    case BirthShape::Constant: break;
    case BirthShape::Ramp: birth = BirthProfile::ramp(ages); break;
    case BirthShape::Samples:
        birth = read_birth_samples(rc.birth.samples_file, rc.n_a);
        break;
    }
    return make_problem(rc.n_x, rc.n_a, rc.params, birth);
}

} // namespace agebif
