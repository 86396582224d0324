#include <chrono>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "persol/run.hpp"

namespace {

persol::json load_config(const std::string& path) {
    if (path.empty()) return persol::json::object();
    std::ifstream is(path);
    if (!is) throw persol::ConfigError("cannot open config file: " + path);
    try {
        return persol::json::parse(is);
    } catch (const std::exception& e) {
        throw persol::ConfigError(std::string("config parse error in ") + path + ": " + e.what());
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"persol: positive periodic orbits of planar systems u'=h(t,v), v'=-lambda a(t) g(u) "
                 "-- hypothesis checks, degree ledger, shooting solver"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string out_dir;
    std::vector<std::string> require_flags;

    const std::vector<std::string> names{"check",    "thresholds", "degree", "solve",
                                         "continue", "period-map", "probe"};
    const std::vector<std::string> blurbs{
        "audit the structural hypotheses and print the theorem applicability table",
        "compute lambda*(R) or R(lambda) with the margin certificates",
        "degree ledger: small averaged ball, large Poincare box, annulus",
        "multistart shooting for periodic orbits, with positivity validation",
        "continue an orbit branch in lambda",
        "period map of the autonomous quasi-homogeneous center",
        "nonexistence probe for small positive orbits of the theta-homotopy"};
    for (std::size_t i = 0; i < names.size(); ++i) {
        CLI::App* sub = app.add_subcommand(names[i], blurbs[i]);
        sub->add_option("--config", config_path, "JSON config file");
        sub->add_option("--set", overrides, "override config entries, e.g. --set system.lambda=75");
        sub->add_option("--out", out_dir, "output directory for report.json and CSVs");
        if (names[i] == "check")
            sub->add_option("--require", require_flags,
                            "condition ids that must pass (exit 2 otherwise)");
        if (names[i] == "degree") {
            sub->add_flag_callback(
                "--ledger", [&overrides]() { overrides.push_back("run.degree.ledger=true"); },
                "compute the -1/0/+1 ledger (default)");
            sub->add_flag_callback(
                "--box-only", [&overrides]() { overrides.push_back("run.degree.ledger=false"); },
                "compute a single box degree from run.degree.box_*");
        }
    }

    CLI11_PARSE(app, argc, argv);
    const std::string subcommand = app.get_subcommands().front()->get_name();

    try {
        persol::json raw = load_config(config_path);
        for (const auto& o : overrides) persol::apply_override(raw, o);
        persol::Config cfg = persol::parse_config(raw);
        if (!out_dir.empty()) cfg.output.dir = out_dir;

        const auto start = std::chrono::steady_clock::now();
        const int code = persol::run_and_write(subcommand, cfg, require_flags);
        const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                            std::chrono::steady_clock::now() - start)
                            .count();
        std::cerr << "[" << subcommand << "] " << ms << " ms, exit " << code << "\n";
        return code;
    } catch (const persol::ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 1;
    } catch (const persol::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
