#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdio>
#include <fstream>
#include <string>
#include <sys/wait.h>

#include "acopf/case_io.hpp"
#include "acopf/export.hpp"
#include "acopf/transforms.hpp"
#include "test_util.hpp"

#ifndef ACOPF_CLI_PATH
#define ACOPF_CLI_PATH "build/acopf"
#endif

namespace {

struct CliResult {
    int exit_code;
    std::string output;
};

CliResult run_cli(const std::string& args) {
    const std::string cmd = std::string(ACOPF_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string out;
    char buf[4096];
    size_t n;
    while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) out.append(buf, n);
    const int status = pclose(pipe);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, out};
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

std::string case5() { return testutil::data_path("case5.dat"); }

}  // namespace

TEST_CASE("parse prints a case summary") {
    const CliResult r = run_cli("parse " + case5());
    CHECK(r.exit_code == 0);
    CHECK(r.output == "5 buses, 6 lines, 5 generators, reference bus 4\n");
}

TEST_CASE("parse rejects malformed input with the input-error code") {
    write_file("/tmp/acopf_cli_bad.dat", "param : B : busType :=\n 1 oops\n ;\n");
    const CliResult r = run_cli("parse /tmp/acopf_cli_bad.dat");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error:") != std::string::npos);
    CHECK(run_cli("parse /tmp/no_such_file.dat").exit_code == 2);
}

TEST_CASE("build writes canonical model json") {
    const CliResult r = run_cli("build --form jabr " + case5());
    CHECK(r.exit_code == 0);
    const acopf::Formulation f = acopf::import_json(r.output);
    CHECK(f.socs.size() == 6);
    // --out goes to a file with the same bytes
    CHECK(run_cli("build --form jabr --out /tmp/acopf_cli_jabr.json " + case5()).exit_code == 0);
    std::ifstream in("/tmp/acopf_cli_jabr.json", std::ios::binary);
    std::string file((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(file == r.output);
}

TEST_CASE("unknown formulation kind is an input error") {
    const CliResult r = run_cli("build --form warp " + case5());
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error:") != std::string::npos);
}

TEST_CASE("check classifies points") {
    // a two-bus grid with no demand: the flat profile is exactly feasible
    const std::string tiny = R"(
param : B : busType SDR SDC VL VU :=
  1 3  0.0 0.0  0.9 1.1
  2 1  0.0 0.0  0.9 1.1
  ;
set G[1] := 1 ;
param : SLR SLC SUR SUC :=
  1 1  0.0 -1.0 1.0 1.0
  ;
param : L0 : r x :=
  1 2 1  0.01 0.1
  ;
)";
    write_file("/tmp/acopf_cli_tiny.dat", tiny);
    const acopf::Grid g = acopf::parse_dat(tiny);
    acopf::VoltagePoint v;
    v.rep = acopf::VoltagePoint::Rep::Cartesian;
    v.values[1] = {1.0, 0.0};
    v.values[2] = {1.0, 0.0};
    acopf::GenerationPoint gen;
    gen[{1, 1}] = {0.0, 0.0};
    write_file("/tmp/acopf_cli_flat.json",
               acopf::write_point_json(acopf::make_siv_point(g, v, gen)));

    const CliResult ok =
        run_cli("check --form siv --point /tmp/acopf_cli_flat.json /tmp/acopf_cli_tiny.dat");
    CHECK(ok.exit_code == 0);
    CHECK(ok.output.find("feasible") != std::string::npos);

    // the same point is infeasible once bus 2 demands power
    const std::string loaded =
        std::string(tiny).replace(tiny.find("2 1  0.0 0.0"), 12, "2 1  1.0 0.5");
    write_file("/tmp/acopf_cli_loaded.dat", loaded);
    const CliResult bad =
        run_cli("check --form siv --point /tmp/acopf_cli_flat.json /tmp/acopf_cli_loaded.dat");
    CHECK(bad.exit_code == 1);
    CHECK(bad.output.find("violated") != std::string::npos);

    // unknown variable names are an input error, not an infeasibility
    write_file("/tmp/acopf_cli_alien.json", "{\"Zeta[1]\": 1.0}\n");
    CHECK(run_cli("check --form siv --point /tmp/acopf_cli_alien.json /tmp/acopf_cli_tiny.dat")
              .exit_code == 2);
}

TEST_CASE("export produces sdpa text for the sdp relaxation") {
    const CliResult r = run_cli("export --form sdp_real --sdpa " + case5());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("65 = mDIM") != std::string::npos);
    // kinds whose models are nonlinear refuse the format
    CHECK(run_cli("export --form polar --sdpa " + case5()).exit_code == 2);
}

TEST_CASE("solve reports both bounds and a gap") {
    const CliResult r = run_cli("solve --lb --ub --multistart 2 --seed 1 " + case5());
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("lower  optimal") != std::string::npos);
    CHECK(r.output.find("upper  optimal") != std::string::npos);
    CHECK(r.output.find("gap: ") != std::string::npos);
    CHECK(run_cli("solve " + case5()).exit_code == 2);  // needs --lb or --ub
}

TEST_CASE("matpower cases load through the same front door") {
    const CliResult r = run_cli("parse " + testutil::data_path("case5.m"));
    CHECK(r.exit_code == 0);
    CHECK(r.output == "5 buses, 6 lines, 5 generators, reference bus 4\n");
}
