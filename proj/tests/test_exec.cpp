// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support.hpp"

#include "zkmap/diag.hpp"
#include "zkmap/disasm.hpp"
#include "zkmap/trace.hpp"

#include <random>

using namespace zkmap;
using namespace zkmap::test;

TEST_CASE("zkvoting twin run, identity pipeline") {
    Compilation c = compile_fixture("zkvoting");
    TxSuite suite = fixture_suite("zkvoting");
    TwinRunResult twin = run_twin(c, suite);
    for (const auto& m : twin.mismatches)
        MESSAGE("tx ", m.tx_index, ": ", m.detail);
    for (const auto& f : twin.expect_failures)
        MESSAGE(f);
    CHECK(twin.ok());
}

TEST_CASE("zkvoting interpreter semantics") {
    Compilation c = compile_fixture("zkvoting");

    TxInput vote;
    vote.function = "submitVote";
    vote.args = {7};
    vote.sender = 1;

    Storage fresh;
    InterpOutcome first = interpret_source(c.unit, vote, fresh);
    CHECK_FALSE(first.result.reverted);
    CHECK(first.result.storage.read(0, 1) == 1); // hasVoted[sender]
    CHECK(first.result.storage.read(1) == 1);    // voteCount
    REQUIRE(first.result.events.size() == 1);
    CHECK(first.result.events[0].name == "VoteSubmitted");

    InterpOutcome second = interpret_source(c.unit, vote, first.result.storage);
    CHECK(second.result.reverted);
    CHECK(second.result.revert_message == "Already voted");
    // rollback: storage unchanged
    CHECK(second.result.storage == first.result.storage);
    CHECK(second.result.events.empty());
}

TEST_CASE("vm agrees with the interpreter across the config matrix") {
    TxSuite suite = fixture_suite("zkvoting");
    for (const auto& [name, config] : config_matrix()) {
        CAPTURE(name);
        Compilation c = compile_fixture("zkvoting", config);
        TwinRunResult twin = run_twin(c, suite);
        for (const auto& m : twin.mismatches)
            MESSAGE(name, " tx ", m.tx_index, ": ", m.detail);
        CHECK(twin.ok());
    }
}

TEST_CASE("identity-pipeline accuracy is exactly 100 percent") {
    Compilation c = compile_fixture("zkvoting");
    TxSuite suite = fixture_suite("zkvoting");
    AccuracyResult acc = measure_accuracy(c, suite, "zkvoting");
    CHECK(acc.accuracy_pct == 100.0);
    CHECK(acc.matched_events == acc.mapped_events);
    CHECK(acc.coverage_warnings.empty());
}

TEST_CASE("infinite loop hits the interpreter step limit") {
    const char* src = "contract Spin { function spin() external { while (true) { } } }";
    Compilation c = compile_source("spin.msol", src, PassConfig::none());
    TxInput tx;
    tx.function = "spin";
    Storage fresh;
    CHECK_THROWS_AS(interpret_source(c.unit, tx, fresh), CompileError);
    CHECK_THROWS_AS(run_vm(c.program, tx, fresh), CompileError);
}

TEST_CASE("corrupted jump target raises InvalidJump") {
    Compilation c = compile_fixture("zkvoting");
    // find a PUSH;JUMP pair and corrupt the pushed target
    BytecodeProgram corrupted = c.program;
    uint32_t offset = 0;
    bool patched = false;
    std::optional<DecodedInstr> prev;
    while (offset < corrupted.code.size()) {
        DecodedInstr d = decode_at(corrupted.code, offset);
        if (prev && prev->op == Op::PUSH && d.op == Op::JUMP) {
            corrupted.code[prev->offset + 8] ^= 0x01; // flip a target bit
            patched = true;
            break;
        }
        prev = d;
        offset += d.length;
    }
    REQUIRE(patched);
    TxInput tx;
    tx.function = "submitVote";
    tx.args = {7};
    tx.sender = 1;
    Storage fresh;
    try {
        run_vm(corrupted, tx, fresh);
        // corrupting one bit may still hit a JUMPDEST; only a thrown
        // InvalidJump is asserted when it does not
    } catch (const CompileError& e) {
        CHECK(e.code == ErrorCode::InvalidJump);
    }
}

TEST_CASE("reconstructed trace of the failing vote ends at the require") {
    Compilation c = compile_fixture("zkvoting");
    TxInput bad;
    bad.function = "submitVote";
    bad.args = {0}; // proof fails
    bad.sender = 2;
    Storage fresh;
    VmOutcome vm = run_vm(c.program, bad, fresh);
    CHECK(vm.result.reverted);
    CHECK(vm.result.revert_message == "Invalid proof");

    SourceTrace trace = reconstruct_trace(vm.offset_trace, c.table, c.unit.registry,
                                          c.program.code.size());
    REQUIRE_FALSE(trace.events.empty());
    const auto& last = trace.events.back();
    // the failing proof resolves to the require statement, constraint 1
    std::string text = c.unit.text.substr(last.span.start, last.span.length);
    CHECK(text == "require(verifyZKProof(zkProof), \"Invalid proof\");");
    REQUIRE(last.zk_constraint.has_value()); // set once zk_instrument ran
}

TEST_CASE("reconstructed trace with zk instrumentation carries constraint 1") {
    Compilation c = compile_fixture("zkvoting", PassConfig{});
    TxInput bad;
    bad.function = "submitVote";
    bad.args = {0};
    bad.sender = 2;
    Storage fresh;
    VmOutcome vm = run_vm(c.program, bad, fresh);
    SourceTrace trace = reconstruct_trace(vm.offset_trace, c.table, c.unit.registry,
                                          c.program.code.size());
    REQUIRE_FALSE(trace.events.empty());
    CHECK(trace.events.back().zk_constraint == 1);
}

TEST_CASE("identity reconstruction reproduces the interpreter trace") {
    Compilation c = compile_fixture("zkvoting");
    TxSuite suite = fixture_suite("zkvoting");
    Storage interp_state, vm_state;
    for (const auto& tx : suite.txs) {
        InterpOutcome ir = interpret_source(c.unit, tx.input, interp_state);
        VmOutcome vr = run_vm(c.program, tx.input, vm_state);
        interp_state = ir.result.storage;
        vm_state = vr.result.storage;

        SourceTrace vm_trace = reconstruct_trace(vr.offset_trace, c.table, c.unit.registry,
                                                 c.program.code.size());
        std::vector<uint32_t> vm_stmts;
        for (const auto& e : vm_trace.events)
            vm_stmts.push_back(e.statement_id);
        std::vector<uint32_t> interp_stmts;
        for (uint32_t s : ir.statement_trace)
            if (interp_stmts.empty() || interp_stmts.back() != s)
                interp_stmts.push_back(s);
        CHECK(vm_stmts == interp_stmts);
    }
}

TEST_CASE("trace offsets outside the program are rejected") {
    Compilation c = compile_fixture("zkvoting");
    std::vector<uint32_t> bogus = {static_cast<uint32_t>(c.program.code.size()) + 10};
    CHECK_THROWS_AS(reconstruct_trace(bogus, c.table, c.unit.registry, c.program.code.size()),
                    CompileError);
}

TEST_CASE("accuracy degrades monotonically under mapping corruption") {
    // re-pointing k% of entries at wrong registered statements must cost at
    // least k/2 percentage points on average
    Compilation c = compile_fixture("zkvoting");
    TxSuite suite = fixture_suite("zkvoting");
    double base = measure_accuracy(c, suite, "base").accuracy_pct;
    REQUIRE(base == 100.0);

    const double k = 30.0;
    std::mt19937 rng(77);
    double total_drop = 0;
    const int trials = 30;
    for (int t = 0; t < trials; ++t) {
        Compilation corrupted = c;
        size_t n = corrupted.table.entries.size();
        size_t to_corrupt = static_cast<size_t>(n * k / 100.0);
        for (size_t i = 0; i < to_corrupt; ++i) {
            MappingEntry& e = corrupted.table.entries[rng() % n];
            auto current = c.unit.registry.statement_at(e.span);
            for (int attempt = 0; attempt < 50; ++attempt) {
                const auto& st =
                    c.unit.registry.statement(rng() % c.unit.registry.size());
                if (current && st.id == *current)
                    continue;
                e.span = st.span;
                break;
            }
        }
        double got = measure_accuracy(corrupted, suite, "corrupt").accuracy_pct;
        total_drop += base - got;
    }
    double mean_drop = total_drop / trials;
    MESSAGE("mean drop: ", mean_drop, "pp for k=", k);
    CHECK(mean_drop >= k / 2.0);
}

TEST_CASE("dce removing a statement leaves the alignment intact") {
    Compilation c = compile_fixture("dead_code", PassConfig::single(PassKind::Dce));
    AccuracyResult acc = measure_accuracy(c, fixture_suite("dead_code"), "dead_code");
    CHECK(acc.accuracy_pct == 100.0);
}

TEST_CASE("an unexercised external function is a coverage gap") {
    Compilation c = compile_fixture("counter");
    TxSuite partial;
    partial.txs.push_back({TxInput{"increment", {1}, 1, std::nullopt}, {}});
    AccuracyResult acc = measure_accuracy(c, partial, "partial");
    CHECK(acc.coverage_warnings.size() == 2); // decrement/1 and current/0
}

TEST_CASE("void internal helpers and repeated call sites agree across engines") {
    const char* src = R"(contract C {
        uint log;
        function note(uint v) internal { log = log + v; }
        function run(uint a) external returns (uint) {
            note(a);
            note(a * 2);
            return log;
        }
    })";
    TxSuite suite;
    suite.txs.push_back({TxInput{"run", {5}, 1, std::nullopt}, {}});
    for (const auto& [name, config] : config_matrix()) {
        CAPTURE(name);
        Compilation c = compile_source("void.msol", src, config);
        TwinRunResult twin = run_twin(c, suite);
        CHECK(twin.ok());
        Storage fresh;
        auto vm = run_vm(c.program, suite.txs[0].input, fresh);
        CHECK(vm.result.value == 15);
    }
}

TEST_CASE("runtime recursion works on both engines") {
    const char* src = R"(contract C {
        function fact(uint n) internal returns (uint) {
            if (n < 2) { return 1; }
            return n * fact(n - 1);
        }
        function run(uint n) external returns (uint) { return fact(n); }
    })";
    TxSuite suite;
    suite.txs.push_back({TxInput{"run", {6}, 1, std::nullopt}, {}});
    for (const auto& [name, config] : config_matrix()) {
        CAPTURE(name);
        Compilation c = compile_source("fact.msol", src, config);
        TwinRunResult twin = run_twin(c, suite);
        CHECK(twin.ok());
        Storage fresh;
        auto vm = run_vm(c.program, suite.txs[0].input, fresh);
        CHECK(vm.result.value == 720);
        AccuracyResult acc = measure_accuracy(c, suite, name);
        if (std::string(name) == "none")
            CHECK(acc.accuracy_pct == 100.0);
    }
}
