#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "hwq/cli.hpp"
#include "hwq/io.hpp"

using namespace hwq;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
    auto p = fs::temp_directory_path() / "hwq_cli_tests" / name;
    fs::remove_all(p);
    fs::create_directories(p.parent_path());
    return p;
}

}  // namespace

TEST_CASE("same config and seed give byte-identical outputs") {
    auto a = scratch("rep_a"), b = scratch("rep_b");
    std::vector<std::string> run{"simulate-diffusion", "--family", "exponential",
                                 "--dt", "0.02", "--t-max", "1", "--r-max", "8",
                                 "--x0", "-0.5", "--seed", "42",
                                 "--snapshot-times", "0.5,1"};
    auto run_a = run, run_b = run;
    run_a.insert(run_a.end(), {"--out", a.string()});
    run_b.insert(run_b.end(), {"--out", b.string()});
    REQUIRE(run_cli(run_a) == 0);
    REQUIRE(run_cli(run_b) == 0);
    for (const char* f : {"x.csv", "k.csv", "boundary.csv", "z_snapshot_000.csv"}) {
        CHECK(fnv1a64_file(a / f) == fnv1a64_file(b / f));
    }
}

TEST_CASE("manifest lists every output with its hash") {
    auto dir = scratch("manifest");
    REQUIRE(run_cli({"coupling", "--family", "lomax", "--params", "shape=3,scale=2",
                     "--dt", "0.02", "--t-max", "2", "--r-max", "8", "--beta", "1",
                     "--decay-times", "1,2", "--out", dir.string()}) == 0);
    std::ifstream in(dir / "manifest.json");
    REQUIRE(in.good());
    nlohmann::json man;
    in >> man;
    REQUIRE(man.contains("outputs"));
    std::size_t listed = 0;
    for (const auto& f : man["outputs"]) {
        const auto p = dir / f["path"].get<std::string>();
        CHECK(fs::exists(p));
        char hex[20];
        std::snprintf(hex, sizeof(hex), "%016llx",
                      static_cast<unsigned long long>(fnv1a64_file(p)));
        CHECK(f["fnv1a64"].get<std::string>() == hex);
        ++listed;
    }
    // every non-manifest file in the directory is listed
    std::size_t present = 0;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename() != "manifest.json") ++present;
    CHECK(listed == present);
    CHECK(man["config"]["lambda"].get<double>() == 1.0);
}

TEST_CASE("invalid configuration fails without partial outputs") {
    auto dir = scratch("invalid");
    // negative initial condition is outside the coupling set A
    CHECK(run_cli({"coupling", "--family", "lomax", "--params", "shape=3,scale=2",
                   "--dt", "0.02", "--t-max", "2", "--r-max", "8", "--beta", "1",
                   "--x0", "-1", "--out", dir.string()}) != 0);
    std::size_t files = 0;
    if (fs::exists(dir))
        for (const auto& e : fs::directory_iterator(dir)) {
            (void)e;
            ++files;
        }
    CHECK(files == 0);

    // nonpositive beta rejected unless overridden
    auto dir2 = scratch("beta");
    CHECK(run_cli({"simulate-diffusion", "--family", "exponential", "--dt", "0.05", "--t-max",
                   "0.5", "--r-max", "5", "--beta", "0", "--out", dir2.string()}) != 0);
    CHECK(run_cli({"simulate-diffusion", "--family", "exponential", "--dt", "0.05", "--t-max",
                   "0.5", "--r-max", "5", "--beta", "0", "--allow-nonpositive-beta", "--out",
                   dir2.string()}) == 0);
}

TEST_CASE("config file with flag overrides") {
    auto dir = scratch("cfgfile");
    const auto cfgp = scratch("cfgfile_json").string() + ".json";
    {
        nlohmann::json j;
        j["grid"] = {{"dt", 0.05}, {"t_max", 0.5}, {"r_max", 5.0}};
        j["distribution"] = {{"family", "gamma"},
                             {"params", {{"shape", 2.0}, {"rate", 2.0}}}};
        j["beta"] = 0.5;
        j["seed"] = 9;
        std::ofstream(cfgp) << j.dump();
    }
    REQUIRE(run_cli({"simulate-diffusion", "--config", cfgp, "--dt", "0.025", "--out",
                     dir.string()}) == 0);
    std::ifstream in(dir / "manifest.json");
    nlohmann::json man;
    in >> man;
    CHECK(man["config"]["grid"]["dt"].get<double>() == 0.025);  // flag wins
    CHECK(man["config"]["distribution"]["family"].get<std::string>() == "gamma");
    CHECK(man["config"]["seed"].get<std::uint64_t>() == 9);
}

TEST_CASE("verify-distribution reports failures via the report") {
    auto dir = scratch("verify");
    REQUIRE(run_cli({"verify-distribution", "--family", "gamma", "--params", "shape=1.5,rate=1.5",
                     "--out", dir.string()}) == 0);
    std::ifstream in(dir / "assumption_report.json");
    nlohmann::json j;
    in >> j;
    CHECK_FALSE(j["pass"].get<bool>());
    CHECK_FALSE(j["pass_h2_bounded"].get<bool>());
}
