// gmclab <subcommand> --config <path> [--seed N] [--replicas R] [--out DIR]
//
// Exit status: 0 when every criterion evaluated by the subcommand passes, 1 when one
// fails, 2 on a configuration error, 3 on a numerical or I/O error.

#include <iostream>

#include "CLI11.hpp"

#include "gmclab/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Gaussian multiplicative chaos laboratory"};
    app.require_subcommand(1);

    std::string config_path;
    std::uint64_t seed = 0;
    std::size_t replicas = 0;
    std::string out;
    for (const auto& name : gmclab::subcommands()) {
        auto* sub = app.add_subcommand(name);
        sub->add_option("--config", config_path, "JSON configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "override the configured seed");
        sub->add_option("--replicas", replicas, "override the configured replica count")->check(CLI::PositiveNumber);
        sub->add_option("--out", out, "output directory");
    }
    CLI11_PARSE(app, argc, argv);

    const auto* sub = app.get_subcommands().front();
    const std::string name = sub->get_name();
    gmclab::RunOverrides o;
    if (sub->count("--seed")) o.seed = seed;
    if (sub->count("--replicas")) o.replicas = replicas;
    if (sub->count("--out")) o.out = out;

    gmclab::ExperimentConfig cfg;
    try {
        cfg = gmclab::load_config(config_path);
    } catch (const gmclab::Error& e) {
        std::cerr << "gmclab: " << e.what() << '\n';
        return 2;
    }

    try {
        const auto rec = gmclab::run_subcommand(name, cfg, o, [](const gmclab::CriterionResult& r) {
            std::cout << gmclab::verdict_line(r) << std::endl;
        });
        for (const auto& [k, v] : rec.criteria.items()) {
            if (name != "accept") std::cout << k << ' ' << (v.get<bool>() ? "PASS" : "FAIL") << '\n';
        }
        std::cout << name << ": results in " << rec.output_dir.string() << '\n';
        return rec.pass() ? 0 : 1;
    } catch (const gmclab::ConfigError& e) {
        std::cerr << "gmclab " << name << ": " << config_path << ": " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "gmclab " << name << ": " << e.what() << '\n';
        return 3;
    }
}
