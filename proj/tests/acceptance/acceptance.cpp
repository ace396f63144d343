// Acceptance suite: one PASS/FAIL line per criterion, then acceptance.json and
// acceptance.csv in the output directory.  Exit status 0 iff every enabled criterion passes.
//
//   acceptance --out DIR [--profile full|smoke] [--only AC-3,AC-7] [--seed N]

#include <iostream>
#include <sstream>

#include "CLI11.hpp"

#include "gmclab/experiments.hpp"

int main(int argc, char** argv) {
    CLI::App app{"gmclab acceptance suite"};
    std::string out = "acceptance_out";
    std::string profile = "full";
    std::vector<std::string> only;
    std::uint64_t seed = 20240601;  // fixed before any run was looked at
    app.add_option("--out", out, "output directory");
    app.add_option("--profile", profile, "problem sizes")->check(CLI::IsMember({"full", "smoke"}));
    app.add_option("--only", only, "run only these criteria")->delimiter(',');
    app.add_option("--seed", seed, "base seed");
    CLI11_PARSE(app, argc, argv);

    // The run is described by an ordinary configuration so that the record embeds it verbatim.
    nlohmann::json cfg{{"description", "acceptance suite"},
                       {"kernel", {{"d", 1}, {"kappa", {{"form", "Triangle"}}}}},
                       {"grid", {{"n", 4096}, {"side", 3.0}}},
                       {"seed", seed},
                       {"acceptance", {{"profile", profile}}}};
    if (!only.empty()) {
        nlohmann::json crit = nlohmann::json::object();
        for (const auto& id : gmclab::criterion_ids()) crit[id] = false;
        for (const auto& id : only) {
            if (!crit.contains(id)) {
                std::cerr << "acceptance: unknown criterion " << id << '\n';
                return 2;
            }
            crit[id] = true;
        }
        cfg["acceptance"]["criteria"] = crit;
    }

    try {
        const auto c = gmclab::parse_config(cfg.dump(2) + "\n", "<acceptance>");
        gmclab::RunOverrides o;
        o.out = out;
        std::cout << "profile " << profile << ", seed " << seed << '\n' << std::flush;
        const auto rec = gmclab::run_subcommand("accept", c, o, [](const gmclab::CriterionResult& r) {
            std::cout << gmclab::verdict_line(r);
            if (r.enabled) std::cout << "  [" << gmclab::fmt("%.1f", r.seconds) << " s]";
            std::cout << std::endl;
        });
        std::cout << (rec.pass() ? "ALL PASS" : "SOME CRITERIA FAILED") << "; record in "
                  << rec.output_dir.string() << "/accept.json\n";
        return rec.pass() ? 0 : 1;
    } catch (const std::exception& e) {
        std::cerr << "acceptance: " << e.what() << '\n';
        return 3;
    }
}
