#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct RunResult {
    int exit_code;
};

RunResult run_cli(const std::string& args) {
    const std::string cmd = std::string(CLI_BIN_PATH) + " " + args + " > /dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    return {WEXITSTATUS(rc)};
}

fs::path temp_dir() {
    const fs::path dir = fs::temp_directory_path() / "blowup-cli-tests";
    fs::create_directories(dir);
    return dir;
}

fs::path write_config(const std::string& name, const json& j) {
    const fs::path p = temp_dir() / name;
    std::ofstream out(p);
    out << j.dump(2);
    return p;
}

json base_config() {
    return json{{"kind", "power"},
                {"p", 2.0},
                {"beta", 2.0},
                {"g", {{"const", 1.0}}},
                {"n", 1},
                {"controls", {{"ball", {{"B", {{1.0}}}, {"radius", 1.0}}}}},
                {"y0", {2.0}},
                {"zeta", {{"R0", 2.0}, {"coeff", 0.5}, {"power", 2.0}}}};
}

json read_json(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in.good());
    return json::parse(in);
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("simulate writes the closed-form summary") {
    json cfg = base_config();
    cfg["y0"] = {1.0};
    cfg.erase("controls");
    cfg.erase("zeta");
    const fs::path cpath = write_config("sim.json", cfg);
    const fs::path out = temp_dir() / "sim-out";
    const RunResult r =
        run_cli("simulate --config " + cpath.string() + " --out " + out.string());
    CHECK(r.exit_code == 0);
    const json summary = read_json(out / "summary.json");
    CHECK(std::abs(summary.at("T_hat").get<double>() - 1.0) <= 1e-6);
    CHECK(summary.at("err").get<double>() <= 1e-6);
    CHECK(fs::exists(out / "trajectory.csv"));
    CHECK(fs::exists(out / "config.json"));

    SUBCASE("re-running is bit-identical modulo the meta field") {
        const std::string csv1 = slurp(out / "trajectory.csv");
        json s1 = read_json(out / "summary.json");
        const RunResult r2 =
            run_cli("simulate --config " + cpath.string() + " --out " + out.string());
        CHECK(r2.exit_code == 0);
        json s2 = read_json(out / "summary.json");
        s1.erase("meta");
        s2.erase("meta");
        CHECK(s1 == s2);
        CHECK(slurp(out / "trajectory.csv") == csv1);
    }
}

TEST_CASE("simulate without blowup exits 0 with a null estimate") {
    json cfg = base_config();
    cfg["y0"] = {0.1};
    cfg.erase("controls");
    cfg.erase("zeta");
    const fs::path cpath = write_config("noblow.json", cfg);
    const fs::path out = temp_dir() / "noblow-out";
    const RunResult r = run_cli("simulate --config " + cpath.string() + " --out " +
                                out.string() + " --tmax 1.0");
    CHECK(r.exit_code == 0);
    CHECK(read_json(out / "summary.json").at("T_hat").is_null());
}

TEST_CASE("malformed or invalid configs exit 2") {
    const fs::path bad = temp_dir() / "bad.json";
    {
        std::ofstream out(bad);
        out << "{ \"kind\": \"power\", ";  // truncated
    }
    CHECK(run_cli("simulate --config " + bad.string()).exit_code == 2);

    json cfg = base_config();
    cfg["p"] = 0.5;
    const fs::path cpath = write_config("badp.json", cfg);
    CHECK(run_cli("simulate --config " + cpath.string()).exit_code == 2);
}

TEST_CASE("unresolvable blowup tail exits 3") {
    // beta = 12 makes the tail time eps^{(p-1)beta} vanish below double
    // resolution: an honest numerics failure.
    json cfg = base_config();
    cfg["beta"] = 12.0;
    cfg["y0"] = {1.0};
    cfg.erase("controls");
    cfg.erase("zeta");
    const fs::path cpath = write_config("steep.json", cfg);
    const fs::path out = temp_dir() / "steep-out";
    CHECK(run_cli("simulate --config " + cpath.string() + " --out " + out.string())
              .exit_code == 3);
}

TEST_CASE("optimize finds the extremal controls") {
    const fs::path cpath = write_config("opt.json", base_config());
    const fs::path out = temp_dir() / "opt-out";
    SUBCASE("ti sweep") {
        const RunResult r = run_cli("optimize --config " + cpath.string() + " --out " +
                                    out.string() + " --mode ti --method sweep --dirs 2");
        CHECK(r.exit_code == 0);
        const json summary = read_json(out / "summary.json");
        CHECK(std::abs(summary.at("top_T").get<double>() - 0.463648) <= 1e-5);
        CHECK(read_json(out / "report.json").at("verdicts").at("H_max").get<bool>());
    }
    SUBCASE("ts sweep") {
        const RunResult r = run_cli("optimize --config " + cpath.string() + " --out " +
                                    out.string() + " --mode ts --method sweep --dirs 2");
        CHECK(r.exit_code == 0);
        CHECK(std::abs(read_json(out / "summary.json").at("top_T").get<double>() -
                       0.549306) <= 1e-5);
    }
    SUBCASE("ts without a zeta gate exits 4 unless forced") {
        json cfg = base_config();
        cfg.erase("zeta");
        const fs::path cp2 = write_config("nozeta.json", cfg);
        CHECK(run_cli("optimize --config " + cp2.string() + " --out " + out.string() +
                      " --mode ts --method sweep --dirs 2")
                  .exit_code == 4);
        CHECK(run_cli("optimize --config " + cp2.string() + " --out " + out.string() +
                      " --mode ts --method sweep --dirs 2 --force")
                  .exit_code == 0);
    }
    SUBCASE("brute with config values") {
        json cfg = base_config();
        cfg["optimize"] = {{"k", 4}, {"values", {-1.0, 0.0, 1.0}}};
        const fs::path cp2 = write_config("brute.json", cfg);
        const RunResult r = run_cli("optimize --config " + cp2.string() + " --out " +
                                    out.string() + " --mode ti --method brute");
        CHECK(r.exit_code == 0);
        CHECK(std::abs(read_json(out / "summary.json").at("top_T").get<double>() -
                       0.463648) <= 1e-4);
    }
}

TEST_CASE("audit command emits the report table") {
    const fs::path cpath = write_config("audit.json", base_config());
    const fs::path out = temp_dir() / "audit-out";
    const RunResult r =
        run_cli("audit --config " + cpath.string() + " --out " + out.string() + " --tmax 1");
    CHECK(r.exit_code == 0);
    const json rep = read_json(out / "report.json");
    bool s2 = false, s3 = false, p5 = false;
    for (const auto& e : rep) {
        if (e.at("id") == "S2") s2 = e.at("status") == "pass";
        if (e.at("id") == "S3") s3 = e.at("status") == "pass";
        if (e.at("id") == "P5") p5 = e.at("status") == "pass";
    }
    CHECK(s2);
    CHECK(s3);
    CHECK(p5);
}

TEST_CASE("certify by shooting") {
    const fs::path cpath = write_config("certify.json", base_config());
    const fs::path out = temp_dir() / "certify-out";
    const RunResult r = run_cli("certify --config " + cpath.string() + " --out " +
                                out.string() + " --shoot 1 --mode ti");
    CHECK(r.exit_code == 0);
    const json rep = read_json(out / "report.json");
    CHECK(rep.at("verdicts").at("H_max").get<bool>());
    CHECK(rep.at("verdicts").at("transversality").get<bool>());
    CHECK(rep.at("verdicts").at("sign").get<bool>());
    CHECK(fs::exists(out / "costate.csv"));

    SUBCASE("certify from the exported files") {
        const RunResult r2 = run_cli("certify --config " + cpath.string() + " --out " +
                                     (out.string() + "-files") + " --mode ti --traj " +
                                     (out / "trajectory.csv").string() + " --costate " +
                                     (out / "costate.csv").string());
        CHECK(r2.exit_code == 0);
        const json rep2 = read_json(fs::path(out.string() + "-files") / "report.json");
        CHECK(rep2.at("verdicts").at("sign").get<bool>());
    }
}

TEST_CASE("monotone batch certification") {
    json cfg = base_config();
    cfg["n"] = 2;
    cfg["y0"] = {2.0, 0.0};
    cfg.erase("controls");
    cfg.erase("zeta");
    const fs::path cpath = write_config("mono.json", cfg);
    const fs::path out = temp_dir() / "mono-out";
    const RunResult r = run_cli("monotone --config " + cpath.string() + " --out " +
                                out.string() + " --seeds 5");
    CHECK(r.exit_code == 0);
    std::ifstream jl(out / "monotone.jsonl");
    int lines = 0, passes = 0;
    std::string line;
    while (std::getline(jl, line)) {
        const json e = json::parse(line);
        ++lines;
        passes += e.at("pass").get<bool>() ? 1 : 0;
        CHECK(e.contains("min_increment"));
        CHECK(e.at("kind") == "power");
    }
    CHECK(lines == 5);
    CHECK(passes == 5);
}
