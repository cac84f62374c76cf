#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "romdot/harness.hpp"

namespace {

void apply_thread_cap() {
    if (const char* env = std::getenv("ROMDOT_THREADS")) {
        const int n = std::atoi(env);
        if (n > 0) Eigen::setNbThreads(n);
    }
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_cap();

    CLI::App app{"romdot: diffuse optical absorption imaging via model order reduction"};
    app.require_subcommand(1);

    std::string config_path;
    std::string out_dir = "out";
    std::string mode = "fom";
    std::string basis_path;
    int system_index = 1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file")->required();
        sub->add_option("--out", out_dir, "output directory");
    };

    auto* sim = app.add_subcommand("simulate", "generate phantom data");
    add_common(sim);
    auto* inv = app.add_subcommand("invert", "run the inverse problem");
    add_common(inv);
    inv->add_option("--mode", mode, "forward model: fom or rom-hybrid")
        ->check(CLI::IsMember({"fom", "rom-hybrid"}));
    auto* cmp = app.add_subcommand("compare-recycling", "inner-outer vs per-RHS recycling");
    add_common(cmp);
    auto* off = app.add_subcommand("offline", "precompute eigenvector/solution artifacts");
    add_common(off);
    auto* cof = app.add_subcommand("coeffs", "basis coefficients of held-out solutions");
    add_common(cof);
    cof->add_option("--basis", basis_path, "basis file (default <out>/basis.romb)");
    cof->add_option("--system", system_index, "held-out system index");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        const auto cfg = romdot::parse_experiment(romdot::KeyValueConfig::from_file(config_path));
        if (sim->parsed()) return romdot::cmd_simulate(cfg, out_dir);
        if (inv->parsed()) {
            romdot::cmd_invert(cfg, mode, out_dir);
            return 0;
        }
        if (cmp->parsed()) {
            romdot::cmd_compare_recycling(cfg, out_dir);
            return 0;
        }
        if (off->parsed()) {
            romdot::cmd_offline(cfg, out_dir);
            return 0;
        }
        if (cof->parsed()) {
            if (basis_path.empty()) basis_path = out_dir + "/basis.romb";
            return romdot::cmd_coeffs(cfg, basis_path, system_index, out_dir);
        }
    } catch (const romdot::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const romdot::SolverError& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 3;
    } catch (const romdot::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
