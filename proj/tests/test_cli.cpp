#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"
#include "json.hpp"

namespace fs = std::filesystem;

namespace {

struct Result {
    int code;
    std::string out;
};

Result run(const std::string& args) {
    const std::string cmd = std::string(BLINDSIM_CLI) + " " + args + " 2>/dev/null";
    FILE* p = popen(cmd.c_str(), "r");
    REQUIRE(p != nullptr);
    std::string out;
    char buf[4096];
    while (const std::size_t n = std::fread(buf, 1, sizeof buf, p)) {
        out.append(buf, n);
    }
    const int status = pclose(p);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

std::vector<std::vector<std::string>> csv_rows(const std::string& text) {
    std::vector<std::vector<std::string>> rows;
    std::istringstream lines(text);
    for (std::string line; std::getline(lines, line);) {
        std::vector<std::string> cells;
        std::istringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) {
            cells.push_back(c);
        }
        rows.push_back(cells);
    }
    return rows;
}

fs::path scratch(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "blindsim_cli_test";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("sweep on the zero-rbias preset has no blinded rows") {
    const Result r = run("sweep --config zero-rbias --check");
    REQUIRE(r.code == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 277);
    CHECK(rows[0][4] == "blinded");
    for (std::size_t i = 1; i < rows.size(); ++i) {
        REQUIRE(rows[i][4] == "0");
    }
}

TEST_CASE("window on the 1k / L0 preset reports none") {
    const Result r = run("window --config clavis2-like-L0");
    CHECK(r.code == 0);
    CHECK(r.out == "window: none\n");
    const Result v = run("window --config paper-680k --check");
    CHECK(v.code == 0);
    CHECK(v.out.rfind("window: [", 0) == 0);
}

TEST_CASE("qkd with Eve and monitor on the vulnerable preset raises alarms") {
    const Result r = run("qkd --config paper-680k --eve on --monitor on --pulses 20000 --seed 3 --check");
    CHECK(r.code == 0);
    const auto rows = csv_rows(r.out);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0][6] == "alarms");
    CHECK(std::stoi(rows[1][6]) > 0);
    CHECK(rows[1][7] == "attack_detected");

    // Without the monitor the attack succeeds, which --check reports.
    const Result bare = run("qkd --config paper-680k --eve on --monitor off --pulses 20000 --seed 3 --check");
    CHECK(bare.code == 3);
    CHECK(csv_rows(bare.out)[1][7] == "attack_successful");
}

TEST_CASE("qkd against an unblindable detector with an attack designed elsewhere") {
    const Result r = run("qkd --config clavis2-like-L0 --eve on --eve-design paper-680k --pulses 5000 --check");
    CHECK(r.code == 0);
    CHECK(csv_rows(r.out)[1][7] == "attack_detected");
    CHECK(run("qkd --config clavis2-like-L0 --eve on --pulses 100").code == 1);
}

TEST_CASE("thermal and monitor-demo checks") {
    CHECK(run("thermal --config clavis2-like-L0 --check").code == 0);
    const Result demo = run("monitor-demo --config paper-680k --pulses 4000 --check");
    CHECK(demo.code == 0);
    const auto rows = csv_rows(demo.out);
    REQUIRE(rows.size() == 2);
    CHECK(std::stoul(rows[1][0]) >= 2000);
}

TEST_CASE("exit codes for invalid input and numeric failure") {
    CHECK(run("sweep --config no-such-preset").code == 1);
    CHECK(run("sweep --bogus-flag").code == 1);
    CHECK(run("qkd --eve maybe").code == 1);
    CHECK(run("sweep --pmin 1 --pmax 0.1").code == 1);
    CHECK(run("").code == 1);
    CHECK(run("calibrate --max-evals 2").code == 2);
}

TEST_CASE("identical arguments and seed give byte-identical outputs and a complete manifest") {
    for (const std::string& cmd : {std::string("sweep --config paper-330k --points-per-decade 10"),
                                   std::string("qkd --config paper-680k --eve on --pulses 5000 --seed 9")}) {
        const fs::path a = scratch("a.csv");
        const fs::path b = scratch("b.csv");
        REQUIRE(run(cmd + " --out " + a.string()).code == 0);
        REQUIRE(run(cmd + " --out " + b.string()).code == 0);
        CHECK(slurp(a) == slurp(b));
        CHECK(!slurp(a).empty());

        const auto m = nlohmann::json::parse(slurp(a.string() + ".manifest.json"));
        REQUIRE(m["outputs"].size() == 1);
        CHECK(m["outputs"][0]["path"] == a.string());
        CHECK(m["config"]["sha256"].get<std::string>().size() == 64);

        // Hash cross-checked with the system tool.
        FILE* p = popen(("sha256sum " + a.string()).c_str(), "r");
        REQUIRE(p != nullptr);
        char hex[65] = {};
        REQUIRE(std::fread(hex, 1, 64, p) == 64);
        pclose(p);
        CHECK(m["outputs"][0]["sha256"] == std::string(hex));
    }
}

TEST_CASE("show-config output parses back as a config") {
    const fs::path f = scratch("cfg.conf");
    REQUIRE(run("show-config --config paper-100k --out " + f.string()).code == 0);
    const Result w1 = run("window --config " + f.string());
    const Result w2 = run("window --config paper-100k");
    CHECK(w1.out == w2.out);
}
