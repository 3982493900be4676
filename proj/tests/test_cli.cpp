#include <catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "run_config.hpp"

using namespace pulse_dicke;
using namespace pulse_dicke::cli;
namespace fs = std::filesystem;

namespace {

RunConfig parse(std::vector<std::string> args) {
    args.insert(args.begin(), "pulse_dicke");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    return parse_config(int(argv.size()), argv.data());
}

ErrorCode parse_error(std::vector<std::string> args) {
    try {
        parse(std::move(args));
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("no error raised");
    return ErrorCode::InvalidArgument;
}

fs::path scratch_dir(const std::string& name) {
    const fs::path p = fs::temp_directory_path() / ("pulse_dicke_cli_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

std::string read_file(const fs::path& p) {
    std::ifstream f(p);
    std::ostringstream os;
    os << f.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("parse a fidelity sweep", "[cli]") {
    const RunConfig c = parse({"sweep-fidelity", "--n", "3", "--upsilon-min", "0.05", "--upsilon-max", "5", "--upsilon-points", "60",
                               "--out", "fid.csv", "--workers", "2"});
    CHECK(c.command == "sweep-fidelity");
    CHECK(c.n == std::vector<int>{3});
    CHECK(c.upsilon_grid().size() == 60);
    CHECK(c.out == "fid.csv");
    CHECK(c.workers == 2);
    CHECK_FALSE(c.upsilon.has_value());
}

TEST_CASE("list flags", "[cli]") {
    const RunConfig c = parse({"negativity-trace", "--n", "5,11", "--upsilon", "0.25", "--kappa", "0,0.1"});
    CHECK(c.n == std::vector<int>{5, 11});
    CHECK(c.kappa == std::vector<double>{0.0, 0.1});
    CHECK(c.upsilon_grid() == std::vector<double>{0.25});
}

TEST_CASE("usage errors", "[cli][errors]") {
    CHECK(parse_error({"sweep-fidelity", "--n", "0"}) == ErrorCode::UsageError);
    CHECK(parse_error({"sweep-fidelity", "--bogus"}) == ErrorCode::UsageError);
    CHECK(parse_error({"sweep-fidelity", "--format", "xml"}) == ErrorCode::UsageError);
    CHECK(parse_error({"sweep-fidelity", "--workers", "0"}) == ErrorCode::UsageError);
    CHECK(parse_error({"--n", "3"}) == ErrorCode::UsageError);
    CHECK(parse_error({"negativity-trace", "--n", "5"}) == ErrorCode::UsageError);
    CHECK(parse_error({"sweep-fidelity", "--upsilon", "0.3", "--upsilon-points", "10"}) == ErrorCode::Conflict);
    try {
        parse({"sweep-fidelity", "--n", "0"});
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("--n") != std::string::npos);
    }
}

TEST_CASE("flags override the config file", "[cli][config]") {
    const fs::path dir = scratch_dir("precedence");
    const fs::path cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"command": "entropy-map", "peak": 1.0, "n": [3, 5]})";
    const RunConfig c = parse({"--config", cfg.string(), "--peak", "0.5"});
    CHECK(c.command == "entropy-map");
    CHECK(c.peak == 0.5);
    CHECK(c.n == std::vector<int>{3, 5});
    const RunConfig d = parse({"sweep-fidelity", "--config", cfg.string()});
    CHECK(d.command == "sweep-fidelity");
    CHECK(d.peak == 1.0);
    fs::remove_all(dir);
}

TEST_CASE("unknown config keys are rejected", "[cli][config][errors]") {
    const fs::path dir = scratch_dir("unknown");
    const fs::path cfg = dir / "cfg.json";
    std::ofstream(cfg) << R"({"command": "validate", "speed": 1.0})";
    CHECK(parse_error({"--config", cfg.string()}) == ErrorCode::UsageError);
    std::ofstream(cfg) << R"({"command": "validate", "peak": "high"})";
    CHECK(parse_error({"--config", cfg.string()}) == ErrorCode::UsageError);
    CHECK(parse_error({"--config", (dir / "missing.json").string()}) == ErrorCode::UsageError);
    fs::remove_all(dir);
}

TEST_CASE("print-config round trips", "[cli][config]") {
    const fs::path dir = scratch_dir("roundtrip");
    const RunConfig c = parse({"entropy-map", "--n", "3,5", "--peak", "0.75", "--n-max", "30", "--kappa", "0.2", "--samples", "17",
                               "--workers", "3", "--print-config"});
    CHECK(c.print_config);
    std::ostringstream out, err;
    CHECK(run(c, out, err) == 0);
    const fs::path cfg = dir / "echo.json";
    std::ofstream(cfg) << out.str();
    const RunConfig back = parse({"--config", cfg.string()});
    CHECK(back == c);
    CHECK(back.n_max == 30);
    fs::remove_all(dir);
}

TEST_CASE("workers default from the environment", "[cli]") {
    ::setenv("PULSE_DICKE_WORKERS", "3", 1);
    CHECK(parse({"validate"}).workers == 3);
    ::setenv("PULSE_DICKE_WORKERS", "none", 1);
    CHECK(parse_error({"validate"}) == ErrorCode::UsageError);
    CHECK(parse({"validate", "--workers", "2"}).workers == 2);
    ::unsetenv("PULSE_DICKE_WORKERS");
    CHECK(parse({"validate"}).workers == default_workers());
}

TEST_CASE("validate command passes", "[cli][run]") {
    std::ostringstream out, err;
    CHECK(run(parse({"validate"}), out, err) == 0);
    CHECK(out.str().find("FAIL") == std::string::npos);
}

TEST_CASE("exit codes", "[cli][run]") {
    const fs::path dir = scratch_dir("exit");
    std::ostringstream out, err;

    SECTION("a failed grid point gives 2") {
        const fs::path p = dir / "fid.csv";
        CHECK(run(parse({"sweep-fidelity", "--n", "3", "--n-max", "6", "--upsilon-min", "0.25", "--upsilon-max", "1000",
                         "--upsilon-points", "3", "--out", p.string()}),
                  out, err) == 2);
        CHECK(read_file(p).find("nan") != std::string::npos);
    }

    SECTION("an unwritable path gives 1 and no file") {
        const fs::path p = dir / "missing" / "fid.csv";
        CHECK(run(parse({"sweep-fidelity", "--n", "1", "--n-max", "10", "--upsilon", "2", "--out", p.string()}), out, err) == 1);
        CHECK_FALSE(fs::exists(p));
        CHECK(fs::is_empty(dir));
    }
    fs::remove_all(dir);
}

TEST_CASE("find-ustar prints one JSON line", "[cli][run]") {
    const fs::path dir = scratch_dir("ustar");
    const fs::path out = dir / "out.txt";
    const std::string cmd = std::string(PULSE_DICKE_CLI_PATH) +
                            " find-ustar --n 3 --n-max 30 --upsilon-min 0.1 --upsilon-max 0.6 --upsilon-points 12"
                            " --workers 1 > " + out.string() + " 2> /dev/null";
    REQUIRE(std::system(cmd.c_str()) == 0);
    const std::string text = read_file(out);
    CHECK(std::count(text.begin(), text.end(), '\n') == 1);
    const auto j = nlohmann::json::parse(text);
    CHECK(j.at("n_attackers") == 3);
    CHECK(j.at("upsilon_star").get<double>() > 0.24);
    CHECK(j.at("upsilon_star").get<double>() < 0.255);
    CHECK(j.at("fidelity_min").get<double>() < 1e-3);
    fs::remove_all(dir);
}
