#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "agebif/commands.hpp"
#include "agebif/errors.hpp"

int main(int argc, char** argv) {
    CLI::App app{"bifurcation toolkit for an age- and space-structured predator-prey system"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_override;

    const auto add = [&](const char* name, const char* desc) {
        CLI::App* sub = app.add_subcommand(name, desc);
        sub->add_option("--config", config_path, "JSON config file")->required();
        sub->add_option("--out", out_override, "output directory (overrides config out_dir)");
        return sub;
    };
    CLI::App* norm = add("normalize", "birth-profile normalization report");
    CLI::App* semi = add("semitrivial", "one-species steady states over a parameter list");
    CLI::App* bifp = add("bifpoints", "bifurcation points and related diagnostics");
    CLI::App* bran = add("branch", "coexistence branch continuation and its diagram");
    CLI::App* simu = add("simulate", "time integration toward a selected steady state");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        const agebif::RunConfig rc = agebif::load_config(config_path);
        const std::filesystem::path out =
            out_override.empty() ? rc.out_dir : std::filesystem::path(out_override);
        if (norm->parsed()) agebif::cmd_normalize(rc, out);
        else if (semi->parsed()) agebif::cmd_semitrivial(rc, out);
        else if (bifp->parsed()) agebif::cmd_bifpoints(rc, out);
        else if (bran->parsed()) agebif::cmd_branch(rc, out);
        else if (simu->parsed()) agebif::cmd_simulate(rc, out);
        return 0;
    } catch (const agebif::InvalidArgument& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const agebif::Error& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "failure: %s\n", e.what());
        return 3;
    }
}
