// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support.hpp"

#include "zkmap/diag.hpp"
#include "zkmap/disasm.hpp"
#include "zkmap/lowering.hpp"

#include <set>

using namespace zkmap;
using namespace zkmap::test;

TEST_CASE("an empty external function is JUMPDEST plus STOP") {
    CompilationUnit unit = run_frontend("e.msol", "contract C { function f() external { } }");
    IrModule m = lower(unit);
    EmitResult r = emit(m);
    REQUIRE(r.program.code.size() == 2);
    CHECK(r.program.code[0] == static_cast<uint8_t>(Op::JUMPDEST));
    CHECK(r.program.code[1] == static_cast<uint8_t>(Op::STOP));
    CHECK(r.log.records.size() == 2);
    CHECK(r.program.function_table.at("f/0") == 0);
}

TEST_CASE("the offset log partitions the code with no gaps") {
    for (const auto& [stem, text] : corpus()) {
        CAPTURE(stem);
        for (const auto& [cfg_name, config] : config_matrix()) {
            Compilation c = compile_source(stem, text, config);
            uint32_t expected = 0;
            for (const auto& rec : c.log.records) {
                CHECK(rec.offset == expected);
                expected += static_cast<uint32_t>(
                    instruction_length(c.program.code[rec.offset]));
            }
            CHECK(expected == c.program.code.size());
        }
    }
}

TEST_CASE("emission is deterministic") {
    for (const auto& [stem, text] : corpus()) {
        CompilationUnit unit = run_frontend(stem, text);
        IrModule m = lower(unit);
        EmitResult a = emit(m);
        EmitResult b = emit(m);
        CHECK(a.program.code == b.program.code);
        CHECK(a.log.records.size() == b.log.records.size());
    }
}

TEST_CASE("every static jump target is a JUMPDEST") {
    for (const auto& [stem, text] : corpus()) {
        CAPTURE(stem);
        for (const auto& [cfg_name, config] : config_matrix()) {
            Compilation c = compile_source(stem, text, config);
            auto violations = verify_jump_targets(c.program);
            CHECK(violations.empty());
        }
    }
}

TEST_CASE("disassembly format and reassembly") {
    std::vector<uint8_t> code;
    code.push_back(static_cast<uint8_t>(Op::PUSH));
    for (int i = 0; i < 7; ++i)
        code.push_back(0);
    code.push_back(5);
    code.push_back(static_cast<uint8_t>(Op::ADD));
    std::string listing = disassemble(code);
    CHECK(listing == "0x0000 PUSH 0x5\n0x0009 ADD\n");
    CHECK(assemble(listing) == code);

    CHECK(disassemble(std::vector<uint8_t>{}).empty());
}

TEST_CASE("listing -> bytes -> listing is a fixpoint over the corpus") {
    for (const auto& [stem, text] : corpus()) {
        CAPTURE(stem);
        Compilation c = compile_source(stem, text, PassConfig{});
        std::string listing = disassemble(c.program);
        std::vector<uint8_t> bytes = assemble(listing);
        CHECK(bytes == c.program.code);
        CHECK(disassemble(bytes) == listing);
    }
}

TEST_CASE("truncated immediates are rejected") {
    std::vector<uint8_t> bad = {static_cast<uint8_t>(Op::PUSH), 0x01};
    try {
        decode_at(bad, 0);
        FAIL("expected TruncatedImmediate");
    } catch (const CompileError& e) {
        CHECK(e.code == ErrorCode::TruncatedImmediate);
    }
}

TEST_CASE("keyed stores log every byte to the store instruction") {
    Compilation c = compile_fixture("zkvoting");
    // find the store_key instruction for hasVoted[msg.sender] = true
    const IrInstr* store = nullptr;
    for (const auto& fn : c.module.functions)
        for (const auto& b : fn.blocks)
            for (const auto& i : b.instrs)
                if (i.op == IrOp::StoreKey)
                    store = &i;
    REQUIRE(store);
    std::vector<uint32_t> offsets;
    for (const auto& rec : c.log.records)
        if (rec.ir_id == store->ir_id)
            offsets.push_back(rec.offset);
    // key DUP, value DUP and the SSTOREK itself at least
    CHECK(offsets.size() >= 3);
    CHECK(c.program.code[offsets.back()] == static_cast<uint8_t>(Op::SSTOREK));
}

TEST_CASE("internal calls pair an Into entry jump with an OutOf return") {
    Compilation c = compile_fixture("zkvoting"); // identity keeps the call
    bool saw_into = false, saw_out = false;
    for (const auto& rec : c.log.records) {
        if (rec.jump == JumpType::Into) {
            saw_into = true;
            CHECK(c.program.code[rec.offset] == static_cast<uint8_t>(Op::JUMP));
        }
        if (rec.jump == JumpType::OutOf)
            saw_out = true;
    }
    CHECK(saw_into);
    CHECK(saw_out);
}

TEST_CASE("the require branch compiles to JUMPI with a revert block") {
    Compilation c = compile_fixture("zkvoting");
    std::set<uint8_t> seen;
    for (uint32_t off = 0; off < c.program.code.size();) {
        DecodedInstr d = decode_at(c.program.code, off);
        seen.insert(static_cast<uint8_t>(d.op));
        off += d.length;
    }
    CHECK(seen.count(static_cast<uint8_t>(Op::JUMPI)));
    CHECK(seen.count(static_cast<uint8_t>(Op::REVERT)));
    CHECK(seen.count(static_cast<uint8_t>(Op::SSTOREK)));
    CHECK(seen.count(static_cast<uint8_t>(Op::CALLER)));
}
