#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <json.hpp>

#ifndef RUMOURSTREAM_BIN
#error "RUMOURSTREAM_BIN must point at the CLI binary"
#endif
#ifndef PATTERNS_FILE
#error "PATTERNS_FILE must point at the example pattern catalogue"
#endif

namespace {

int run_cmd(const std::string& args) {
    const std::string cmd = std::string(RUMOURSTREAM_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
    std::ifstream in(path);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST_CASE("usage errors exit with 2") {
    CHECK(run_cmd("run --stream /tmp/nope.txt") == 2);
    CHECK(run_cmd("definitely-not-a-command") == 2);
    CHECK(run_cmd("--help") == 0);
}

TEST_CASE("runtime errors exit with 1") {
    CHECK(run_cmd(std::string("run --patterns ") + PATTERNS_FILE +
                  " --stream /tmp/does-not-exist-xyz.txt") == 1);

    const std::string bad = "/tmp/rumour_cli_bad_stream.txt";
    std::ofstream(bad) << "a b user tweet 1\nmalformed line\n";
    CHECK(run_cmd(std::string("run --patterns ") + PATTERNS_FILE + " --stream " + bad) == 1);
}

TEST_CASE("generation is reproducible and runs end to end") {
    const std::string s1 = "/tmp/rumour_cli_s1.txt", s2 = "/tmp/rumour_cli_s2.txt";
    const std::string base = std::string("gen --patterns ") + PATTERNS_FILE +
                             " --length 500 --rumour-rate 0.1 --seed 11 --out ";
    REQUIRE(run_cmd(base + s1) == 0);
    REQUIRE(run_cmd(base + s2) == 0);
    CHECK(slurp(s1) == slurp(s2));
    CHECK_FALSE(slurp(s1).empty());

    SUBCASE("zero-length stream is a valid empty file") {
        const std::string empty = "/tmp/rumour_cli_empty.txt";
        REQUIRE(run_cmd(std::string("gen --patterns ") + PATTERNS_FILE +
                        " --length 0 --out " + empty) == 0);
        CHECK(slurp(empty).empty());
        CHECK(run_cmd(std::string("run --patterns ") + PATTERNS_FILE + " --stream " + empty +
                      " --metrics-out /tmp/rumour_cli_empty.json") == 0);
    }

    SUBCASE("a no-shedding run reports a zero ratio and the default window") {
        const std::string metrics = "/tmp/rumour_cli_m.json";
        REQUIRE(run_cmd(std::string("run --patterns ") + PATTERNS_FILE + " --stream " + s1 +
                        " --shedder none --metrics-out " + metrics) == 0);
        auto report = nlohmann::json::parse(slurp(metrics));
        CHECK(report["shedding_ratio"].get<double>() == 0.0);
        CHECK(report["config"]["shed"]["window_size"].get<int>() == 100);
        CHECK(report["config"]["shed"]["strategy"] == "none");
    }

    SUBCASE("bursty streams cluster their inter-arrival gaps") {
        const std::string bursty = "/tmp/rumour_cli_bursty.txt";
        REQUIRE(run_cmd(std::string("gen --patterns ") + PATTERNS_FILE +
                        " --length 4000 --rate-profile bursty --burst-factor 6 --seed 3" +
                        " --rumour-rate 0 --out " + bursty) == 0);
        std::ifstream in(bursty);
        std::string u, v, mu, mv;
        std::uint64_t t, prev = 0;
        std::size_t zeros = 0, large = 0, n = 0;
        bool first = true;
        while (in >> u >> v >> mu >> mv >> t) {
            std::string rest;
            std::getline(in, rest);
            if (!first) {
                const auto gap = t - prev;
                if (gap == 0) ++zeros;
                if (gap >= 3) ++large;
                ++n;
            }
            first = false;
            prev = t;
        }
        REQUIRE(n > 1000);
        // burst phases produce simultaneous arrivals, lulls produce long gaps
        CHECK(static_cast<double>(zeros) / n > 0.2);
        CHECK(static_cast<double>(large) / n > 0.1);
    }
}

TEST_CASE("oracle subcommands succeed") {
    CHECK(run_cmd(std::string("oracle --mode matcher --trials 5 --patterns ") +
                  PATTERNS_FILE) == 0);
    CHECK(run_cmd("oracle --mode cco --trials 20") == 0);
    CHECK(run_cmd("oracle --mode anomaly") == 0);
}
