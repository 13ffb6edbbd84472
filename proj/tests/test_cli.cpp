// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>

using namespace zkmap;
using namespace zkmap::test;
namespace fs = std::filesystem;

namespace {

struct CommandResult {
    int exit_code = 0;
    std::string output;
};

CommandResult run_cli(const std::string& args) {
    std::string cmd = std::string(ZKMAP_CLI_PATH) + " " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe);
    CommandResult r;
    char buffer[512];
    while (fgets(buffer, sizeof(buffer), pipe))
        r.output += buffer;
    int status = pclose(pipe);
    r.exit_code = WEXITSTATUS(status);
    return r;
}

std::string tmp_path(const char* name) {
    return (fs::temp_directory_path() / name).string();
}

} // namespace

TEST_CASE("cli: compile, trace, query and validate round trip") {
    std::string artifact = tmp_path("cli_zkvoting.zkb.json");
    auto compiled = run_cli("compile " + fixture_dir() + "/zkvoting.msol -o " + artifact);
    CHECK(compiled.exit_code == 0);

    // tx 1 is the second vote by the same sender
    auto traced = run_cli("trace " + artifact + " --tx " + fixture_dir() +
                          "/zkvoting.txs.json --index 1");
    CHECK(traced.exit_code == 0);
    CHECK(traced.output.find("Already voted") != std::string::npos);
    CHECK(traced.output.find("require(!hasVoted[msg.sender]") != std::string::npos);

    auto validated = run_cli("validate " + artifact);
    CHECK(validated.exit_code == 0);
    CHECK(validated.output.find("both validators clean") != std::string::npos);

    auto disasm = run_cli("disasm " + artifact);
    CHECK(disasm.exit_code == 0);
    CHECK(disasm.output.find("JUMPDEST") != std::string::npos);
}

TEST_CASE("cli: validate flags a hand-corrupted artifact") {
    std::string artifact = tmp_path("cli_corrupt.zkb.json");
    auto compiled = run_cli("compile " + fixture_dir() + "/counter.msol -o " + artifact);
    REQUIRE(compiled.exit_code == 0);

    // nudge one mapping span off its registered position
    std::ifstream in(artifact);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    auto artifact_obj = artifact_from_json(text);
    REQUIRE_FALSE(artifact_obj.table.entries.empty());
    artifact_obj.table.entries[0].span.start += 1;
    save_artifact(artifact_obj, artifact);

    auto validated = run_cli("validate " + artifact);
    CHECK(validated.exit_code == 1);
    CHECK(validated.output.find("violation") != std::string::npos);
}

TEST_CASE("cli: usage errors exit with 2") {
    auto bad = run_cli("frobnicate");
    CHECK(bad.exit_code == 2);
    auto no_args = run_cli("");
    CHECK(no_args.exit_code == 2);
}

TEST_CASE("cli: structured bench output is reproducible without timing") {
    auto a = run_cli("bench " + fixture_dir() + " --format structured --no-timing");
    auto b = run_cli("bench " + fixture_dir() + " --format structured --no-timing");
    CHECK(a.exit_code == 0);
    CHECK(a.output == b.output);
    CHECK(a.output.find("optimized_aggregate_pct") != std::string::npos);
}
