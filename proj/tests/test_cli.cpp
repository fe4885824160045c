#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

#include "json.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string err;
};

fs::path workdir(const std::string& name) {
    const fs::path d = fs::temp_directory_path() / ("cevhedge_cli_test_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

Run run(const fs::path& dir, const std::string& sub, const std::string& config, const std::string& extra = "") {
    const fs::path cfg = dir / "run.cfg";
    std::ofstream(cfg) << config;
    const fs::path err = dir / "stderr.txt";
    const std::string cmd = std::string(CEVHEDGE_CLI) + " " + sub + " --config " + cfg.string() + " --out " +
                            (dir / "out").string() + " " + extra + " 2> " + err.string() + " > /dev/null";
    const int status = std::system(cmd.c_str());
    std::ifstream in(err);
    std::stringstream ss;
    ss << in.rdbuf();
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, ss.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::vector<double>> csv_rows(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::vector<std::vector<double>> rows;
    std::getline(in, line);
    std::getline(in, line);
    while (std::getline(in, line)) {
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    return rows;
}

const std::string kSmall = "t_steps = 20\ns_nodes = 20\nn_paths = 500\nmc_steps = 50\n";

}  // namespace

TEST_CASE("configuration errors exit with code 2") {
    const auto d = workdir("config");
    auto r = run(d, "price", "sigma = 0.2\n");
    CHECK(r.code == 2);
    CHECK(r.err.find("maturity") != std::string::npos);
    CHECK(run(d, "validate", "maturity = 1\ngamma = 0.3\n").code == 2);
    CHECK(run(d, "price", "maturity = 1\nbogus = 3\n").code == 2);
    CHECK(run(d, "price", "maturity = 1\nsigma = abc\n").code == 2);
    CHECK(run(d, "simulate", "maturity = 1\n", "--strategy wild").code == 2);
}

TEST_CASE("unreachable tolerance exits with code 4") {
    const auto d = workdir("tol");
    CHECK(run(d, "solve", "maturity = 1\ntol = 0\n" + kSmall).code == 4);
}

TEST_CASE("price: strike-zero call reproduces the spot") {
    const auto d = workdir("price0");
    REQUIRE(run(d, "price", "maturity = 1\nstrike = 0\n" + kSmall).code == 0);
    const auto rows = csv_rows(d / "out" / "price_surface.csv");
    REQUIRE(rows.size() == 21 * 20);
    for (const auto& r : rows) {
        CHECK(r[2] == doctest::Approx(r[1]).epsilon(1e-12));
        CHECK(r[3] == doctest::Approx(1.0).epsilon(1e-10));
    }
}

TEST_CASE("price: lognormal table against Black-Scholes") {
    const auto d = workdir("pricebs");
    REQUIRE(run(d, "price", "maturity = 1\ngamma = 0\n" + kSmall).code == 0);
    for (const auto& r : csv_rows(d / "out" / "price_surface.csv")) {
        const double tau = 1.0 - r[0];
        const double ref = tau > 0 ? oracle::bs_call(r[1], 100.0, 0.2, tau) : std::max(r[1] - 100.0, 0.0);
        CHECK(std::abs(r[2] - ref) < 1e-4);
    }
}

TEST_CASE("solve: unit bond has vanishing b and c") {
    const auto d = workdir("bond");
    REQUIRE(run(d, "solve", "maturity = 1\noption = bond\n" + kSmall).code == 0);
    for (const auto& r : csv_rows(d / "out" / "fields.csv")) {
        CHECK(r[3] == 0.0);
        CHECK(r[4] == 0.0);
    }
    const auto rep = nlohmann::json::parse(slurp(d / "out" / "solve_report.json"));
    CHECK(rep["converged"].get<bool>());
}

TEST_CASE("simulate: zero strategy on the bond, and byte-identical reruns") {
    const auto d = workdir("sim");
    REQUIRE(run(d, "simulate", "maturity = 1\noption = bond\nstrategy = zero\n" + kSmall).code == 0);
    const auto rep = nlohmann::json::parse(slurp(d / "out" / "cost_report.json"));
    CHECK(rep["psi"].get<double>() == 0.0);

    const std::string cfg = "maturity = 1\nstrategy = optimal\ntrace_path = 2\nthreads = 3\n" + kSmall;
    REQUIRE(run(d, "simulate", cfg).code == 0);
    const auto first = slurp(d / "out" / "cost_report.json");
    const auto trace = slurp(d / "out" / "trace.csv");
    REQUIRE(run(d, "simulate", cfg).code == 0);
    CHECK(first == slurp(d / "out" / "cost_report.json"));
    CHECK(trace == slurp(d / "out" / "trace.csv"));
    CHECK(trace.rfind("# cevhedge trace v1", 0) == 0);
}

TEST_CASE("simulate reuses a saved fields file") {
    const auto d = workdir("fields");
    const std::string cfg = "maturity = 1\n" + kSmall;
    REQUIRE(run(d, "solve", cfg).code == 0);
    REQUIRE(run(d, "simulate", cfg).code == 0);
    const auto inline_solve = nlohmann::json::parse(slurp(d / "out" / "cost_report.json"));
    REQUIRE(run(d, "simulate", cfg, "--fields " + (d / "out" / "fields.csv").string()).code == 0);
    const auto from_file = nlohmann::json::parse(slurp(d / "out" / "cost_report.json"));
    CHECK(from_file["psi"].get<double>() == doctest::Approx(inline_solve["psi"].get<double>()).epsilon(1e-9));
}

TEST_CASE("validate with few paths is inconclusive but succeeds") {
    const auto d = workdir("validate");
    const auto r = run(d, "validate", "maturity = 1\nvalidate_paths = 10\nvalidate_grid = 50\nvalidate_steps = 20\n");
    CHECK(r.code == 0);
    CHECK(r.err.find("inconclusive") != std::string::npos);
    const auto j = nlohmann::json::parse(slurp(d / "out" / "validate.json"));
    CHECK(j["inconclusive"].get<bool>());
    CHECK(j["all_passed"].get<bool>());
}

TEST_CASE("validate at default sizes passes") {
    const auto d = workdir("validate_full");
    const auto r = run(d, "validate", "maturity = 1\nthreads = 4\n");
    CHECK(r.code == 0);
    const auto j = nlohmann::json::parse(slurp(d / "out" / "validate.json"));
    CHECK(j["all_passed"].get<bool>());
    CHECK_FALSE(j["inconclusive"].get<bool>());
}

TEST_CASE("sweep with a single eps reports no slope") {
    const auto d = workdir("sweep");
    REQUIRE(run(d, "sweep", "maturity = 1\n" + kSmall, "--eps-list 0.01 --k 2").code == 0);
    const auto text = slurp(d / "out" / "sweep.csv");
    CHECK(text.rfind("# cevhedge sweep v1 k=2 decay_slope=NA\n", 0) == 0);
    CHECK(csv_rows(d / "out" / "sweep.csv").size() == 1);
}
