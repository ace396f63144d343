#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gmclab/experiments.hpp"

using namespace gmclab;
namespace fs = std::filesystem;

namespace {

struct Run {
    int status;
    std::string output;
};

Run run_cli(const std::string& args) {
    const auto log = fs::temp_directory_path() / "gmclab_cli_test.log";
    const std::string cmd = std::string(GMCLAB_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int rc = std::system(cmd.c_str());
    std::ifstream is(log);
    std::stringstream ss;
    ss << is.rdbuf();
    return {WIFEXITED(rc) ? WEXITSTATUS(rc) : -1, ss.str()};
}

fs::path scratch(const std::string& name) {
    const auto p = fs::temp_directory_path() / ("gmclab_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

fs::path write_config(const fs::path& dir, const std::string& text) {
    const auto p = dir / "config.json";
    std::ofstream(p) << text;
    return p;
}

std::string slurp(const fs::path& p) {
    std::ifstream is(p);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

nlohmann::json read_json(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

const std::string kConfigs = std::string(GMCLAB_SOURCE_DIR) + "/configs/";

}  // namespace

TEST(Cli, ConstantsForTheTriangleKernel) {
    const auto dir = scratch("constants");
    const auto r = run_cli("constants --config " + kConfigs + "constants.json --out " + dir.string());
    ASSERT_EQ(r.status, 0) << r.output;
    const auto j = read_json(dir / "constants.json");
    EXPECT_NEAR(j["constants"]["j_kappa"].get<double>(), 1.0, 1e-9);
    // |gamma|^2 = 2 row: the finite-t chain at t_max = log(1/h) approaches 2 e^{-2}
    const auto& g0 = j["constants"]["gamma"][0];
    EXPECT_EQ(g0["phase"].get<std::string>(), "PhaseIII");
    EXPECT_NEAR(g0["limit_target"].get<double>(), 2.0 * std::exp(-2.0), 1e-12);
    EXPECT_TRUE(fs::exists(dir / "constants_kernel.csv"));
    EXPECT_TRUE(fs::exists(dir / "constants_scaling.csv"));
    EXPECT_EQ(j["config"].get<std::string>(), slurp(kConfigs + "constants.json"));
}

TEST(Cli, AcceptRunsAreReproducible) {
    const auto dir = scratch("accept");
    const auto cfg = write_config(dir, R"({
  "kernel": {"d": 1, "kappa": {"form": "Triangle"}},
  "grid": {"n": 1024, "side": 3.0},
  "seed": 7,
  "acceptance": {"profile": "smoke", "criteria": {"AC-2": false, "AC-3": false, "AC-4": false, "AC-5": false,
                                                   "AC-6": false, "AC-9": false, "AC-10": false}}
}
)");
    const auto out = dir / "out";
    const auto a = run_cli("accept --config " + cfg.string() + " --out " + out.string());
    ASSERT_NE(a.status, 3) << a.output;
    auto first = read_json(out / "accept.json");
    const auto csv1 = slurp(out / "acceptance.csv");
    const auto pairs1 = slurp(out / "ac1_pairs.csv");
    const auto b = run_cli("accept --config " + cfg.string() + " --out " + out.string());
    EXPECT_EQ(a.status, b.status);
    auto second = read_json(out / "accept.json");
    ASSERT_TRUE(first.contains("timestamps"));
    first.erase("timestamps");
    second.erase("timestamps");
    EXPECT_EQ(first.dump(), second.dump());
    EXPECT_EQ(csv1, slurp(out / "acceptance.csv"));
    EXPECT_EQ(pairs1, slurp(out / "ac1_pairs.csv"));
    EXPECT_NE(a.output.find("AC-7 PASS"), std::string::npos) << a.output;
    EXPECT_NE(a.output.find("AC-8 PASS"), std::string::npos) << a.output;
    EXPECT_NE(a.output.find("AC-9 SKIP"), std::string::npos) << a.output;
}

TEST(Cli, SeedOverrideChangesTheDraws) {
    const auto dir = scratch("seed");
    const auto cfg = write_config(dir, R"({
  "kernel": {"d": 1, "kappa": {"form": "Triangle"}},
  "grid": {"n": 256, "side": 3.0},
  "replicas": 3
}
)");
    ASSERT_EQ(run_cli("synthesize --config " + cfg.string() + " --out " + (dir / "a").string()).status, 0);
    ASSERT_EQ(run_cli("synthesize --config " + cfg.string() + " --seed 99 --out " + (dir / "b").string()).status, 0);
    EXPECT_NE(slurp(dir / "a" / "ensemble.bin"), slurp(dir / "b" / "ensemble.bin"));
    const auto j = read_json(dir / "b" / "synthesize.json");
    EXPECT_EQ(j["overrides"]["seed"].get<int>(), 99);
    EXPECT_EQ(j["reports"]["ensemble"]["seed"].get<int>(), 99);
}

TEST(Cli, EnsembleExportRoundTrip) {
    const auto dir = scratch("export");
    const auto cfg = write_config(dir, R"({
  "kernel": {"d": 1, "kappa": {"form": "Triangle"}},
  "grid": {"n": 512, "side": 3.0},
  "replicas": 4,
  "seed": 5,
  "synthesize": {"eps": 0.1}
}
)");
    const auto r = run_cli("synthesize --config " + cfg.string() + " --out " + dir.string());
    ASSERT_EQ(r.status, 0) << r.output;
    EnsembleHeader h;
    const auto values = import_ensemble((dir / "ensemble").string(), &h);
    ASSERT_EQ(h.replicas, 4u);
    ASSERT_EQ(h.sites, 512u);
    EXPECT_DOUBLE_EQ(h.meta["eps"].get<double>(), 0.1);

    const Grid g = Grid::make(1, 512, 3.0);
    const auto sched = LayerSchedule::for_grid(g);
    FieldEnsemble e(KernelSpec{}, g, sched, 4, 5);
    const MollifierFilter filt(g, Mollifier::standard_bump(1), 0.1);
    for (std::size_t rep = 0; rep < 4; ++rep) {
        auto w = e.walker(rep);
        w.run_to(sched.layers());
        const auto x = w.mollified(filt);
        for (std::size_t i = 0; i < x.size(); ++i) ASSERT_EQ(values[rep][i], x[i]) << rep << ' ' << i;
    }
}

TEST(Cli, ScanPhaseExponentIsMonotone) {
    const auto dir = scratch("scan");
    const auto cfg = write_config(dir, R"({
  "kernel": {"d": 1, "kappa": {"form": "Triangle"}},
  "grid": {"n": 2048, "side": 3.0},
  "scan_phase": {"gamma": [{"alpha": 0.5, "beta": 1.3228756555322954},
                           {"alpha": 0.5, "beta": 0.8660254037844386},
                           {"alpha": 0.5, "beta": 1.6583123951777}]},
  "eps_ladder": {"base": 3.0, "exponents": [4, 5, 6, 7]},
  "replicas": 150,
  "seed": 2
}
)");
    const auto r = run_cli("scan-phase --config " + cfg.string() + " --out " + dir.string());
    ASSERT_EQ(r.status, 0) << r.output;
    std::ifstream is(dir / "scan_phase.csv");
    std::string line;
    std::getline(is, line);
    EXPECT_EQ(line, "alpha,beta,abs_sq,phase,exponent,ci_lo,ci_hi,r2,expected_exponent");
    std::vector<double> abs_sq, exponent;
    while (std::getline(is, line)) {
        std::stringstream ss(line);
        std::vector<std::string> f;
        std::string cell;
        while (std::getline(ss, cell, ',')) f.push_back(cell);
        ASSERT_EQ(f.size(), 9u);
        abs_sq.push_back(std::stod(f[2]));
        exponent.push_back(std::stod(f[4]));
    }
    ASSERT_EQ(exponent.size(), 3u);
    for (std::size_t k = 1; k < 3; ++k) {
        EXPECT_GT(abs_sq[k], abs_sq[k - 1]);
        EXPECT_LT(exponent[k], exponent[k - 1]);
    }
}

TEST(Cli, JsonSyntaxErrorReportsLineAndColumn) {
    const auto dir = scratch("syntax");
    const auto cfg = write_config(dir, "{\n  \"kernel\": {\"d\": 1,\n    \"kappa\": {\"form\": \"Triangle\",}}\n}\n");
    const auto r = run_cli("constants --config " + cfg.string());
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.output.find("config.json:3:"), std::string::npos) << r.output;
}

TEST(Cli, InvalidValueReportsItsLocation) {
    const auto dir = scratch("badn");
    const auto cfg = write_config(dir, R"({
  "kernel": {"d": 1, "kappa": {"form": "Triangle"}},
  "grid": {"n": 1000, "side": 3.0}
}
)");
    const auto r = run_cli("constants --config " + cfg.string());
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.output.find("config.json:3:"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("/grid/n"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find("power of two"), std::string::npos) << r.output;
}

TEST(Cli, UnknownKeyIsRejected) {
    const auto dir = scratch("unknown");
    const auto cfg = write_config(dir, R"({
  "kernel": {"d": 1, "kappa": {"form": "Triangle"}},
  "grid": {"n": 1024, "side": 3.0},
  "replica": 10
}
)");
    const auto r = run_cli("constants --config " + cfg.string());
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.output.find("replica"), std::string::npos) << r.output;
    EXPECT_NE(r.output.find(":4:"), std::string::npos) << r.output;
}

TEST(Cli, TriangleKernelRejectedInTwoDimensions) {
    const auto dir = scratch("tri2d");
    const auto cfg = write_config(dir, R"({
  "kernel": {"d": 2, "kappa": {"form": "Triangle"}},
  "grid": {"n": 64, "side": 3.0}
}
)");
    const auto r = run_cli("constants --config " + cfg.string());
    EXPECT_EQ(r.status, 2);
    EXPECT_NE(r.output.find("/kernel/kappa"), std::string::npos) << r.output;
}

TEST(Cli, MissingConfigFlagIsAUsageError) {
    const auto r = run_cli("constants");
    EXPECT_NE(r.status, 0);
    EXPECT_NE(r.output.find("--config"), std::string::npos) << r.output;
}

TEST(Cli, DecomposeShippedInstance) {
    const auto dir = scratch("decompose");
    const auto r = run_cli("decompose --config " + kConfigs + "decompose.json --out " + dir.string());
    ASSERT_EQ(r.status, 0) << r.output;
    const auto j = read_json(dir / "decompose.json");
    const auto& arr = j["reports"]["decomposition"];
    ASSERT_EQ(arr.size(), 3u);
    double prev = -1.0;
    for (const auto& row : arr) {
        EXPECT_TRUE(row["diagonal_exact"].get<bool>());
        const double t0 = row["t0_found"].get<double>();
        EXPECT_GE(t0, prev);
        prev = t0;
    }
}

TEST(ResultRecordTest, NumericPayloadDropsOnlyTimestamps) {
    ResultRecord rec;
    rec.subcommand = "x";
    rec.timestamps["started"] = "now";
    rec.criteria["a"] = true;
    const auto full = rec.to_json();
    const auto num = rec.numeric_payload();
    EXPECT_TRUE(full.contains("timestamps"));
    EXPECT_FALSE(num.contains("timestamps"));
    EXPECT_EQ(full.size(), num.size() + 1);
    EXPECT_TRUE(rec.pass());
    rec.criteria["b"] = false;
    EXPECT_FALSE(rec.pass());
}
