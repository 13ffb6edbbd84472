// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support.hpp"

#include "zkmap/diag.hpp"
#include "zkmap/lowering.hpp"
#include "zkmap/passes.hpp"

#include <set>

using namespace zkmap;
using namespace zkmap::test;

namespace {

struct Lowered {
    CompilationUnit unit;
    IrModule module;
};

Lowered lowered(const char* text) {
    Lowered out;
    out.unit = run_frontend("t.msol", text);
    out.module = lower(out.unit);
    return out;
}

PassContext ctx_for(const Lowered& l) {
    PassContext ctx;
    ctx.unit = &l.unit;
    return ctx;
}

const IrInstr* find_op(const IrModule& m, IrOp op) {
    for (const auto& fn : m.functions)
        for (const auto& b : fn.blocks)
            for (const auto& i : b.instrs)
                if (i.op == op)
                    return &i;
    return nullptr;
}

size_t count_op(const IrModule& m, IrOp op) {
    size_t n = 0;
    for (const auto& fn : m.functions)
        for (const auto& b : fn.blocks)
            for (const auto& i : b.instrs)
                if (i.op == op)
                    ++n;
    return n;
}

} // namespace

TEST_CASE("const_fold: add of constants keeps the expression span") {
    Lowered l = lowered(R"(contract C {
        function f() external returns (uint) { return 2 + 3; }
    })");
    pass_const_fold(l.module, ctx_for(l));
    verify_ssa(l.module);

    // the fold produced const 5 whose span is the "2 + 3" expression
    bool found = false;
    size_t expr_at = l.unit.text.find("2 + 3");
    for (const auto& b : l.module.functions[0].blocks)
        for (const auto& i : b.instrs)
            if (i.op == IrOp::Const && i.imm == 5) {
                found = true;
                CHECK(i.prov.confidence == Confidence::Exact);
                REQUIRE(i.prov.primary_span.has_value());
                CHECK(i.prov.primary_span->start == expr_at);
                CHECK(i.prov.primary_span->length == 5);
            }
    CHECK(found);
}

TEST_CASE("const_fold: x*1 deletes the multiply, x untouched") {
    Lowered l = lowered(R"(contract C {
        uint s;
        function f(uint x) external { s = x * 1; }
    })");
    REQUIRE(count_op(l.module, IrOp::Mul) == 1);
    PassCounts counts = pass_const_fold(l.module, ctx_for(l));
    verify_ssa(l.module);
    CHECK(count_op(l.module, IrOp::Mul) == 0);
    CHECK(counts.deleted >= 1);
    // the store now uses the parameter directly
    const IrInstr* store = find_op(l.module, IrOp::StoreState);
    REQUIRE(store);
    const IrInstr* param = find_op(l.module, IrOp::Param);
    REQUIRE(param);
    CHECK(store->args[0] == param->ir_id);
    CHECK(param->prov.confidence == Confidence::Exact);
}

TEST_CASE("const_fold: collapsing values from different statements downgrades") {
    Lowered l = lowered(R"(contract C {
        uint s;
        function f() external {
            uint a = 2;
            s = 40;
            s = a + 3;
        }
    })");
    PassCounts counts = pass_const_fold(l.module, ctx_for(l));
    verify_ssa(l.module);
    // a's const (stmt 1) and 3 (stmt 3) merge; the fold anchors at the
    // operator, confidence drops because no registered span contains both
    bool downgraded = false;
    for (const auto& b : l.module.functions[0].blocks)
        for (const auto& i : b.instrs)
            if (i.op == IrOp::Const && i.imm == 5 &&
                i.prov.confidence == Confidence::Approximate)
                downgraded = true;
    CHECK(downgraded);
    CHECK(counts.downgrades >= 1);
}

TEST_CASE("dce: unused pure code goes away, effects stay") {
    Lowered l = lowered(R"(contract C {
        uint s;
        function f(uint x) external {
            uint unused = 1 + 2;
            require(x > 0, "p");
            s = x;
        }
    })");
    size_t before = l.module.instruction_count();
    PassCounts counts = pass_dce(l.module, ctx_for(l));
    verify_ssa(l.module);
    CHECK(l.module.instruction_count() < before);
    CHECK(counts.deleted == before - l.module.instruction_count());
    // the require branch and the store survive
    CHECK(count_op(l.module, IrOp::Branch) == 1);
    CHECK(count_op(l.module, IrOp::StoreState) == 1);
    CHECK(count_op(l.module, IrOp::Revert) == 1);
}

TEST_CASE("dce: code after return is unreachable and removed") {
    Lowered l = lowered(R"(contract C {
        uint s;
        function f() external returns (uint) {
            return 1;
            s = 99;
        }
    })");
    pass_dce(l.module, ctx_for(l));
    verify_ssa(l.module);
    CHECK(count_op(l.module, IrOp::StoreState) == 0);
}

TEST_CASE("inline: one-instruction callee is spliced with its call site chained") {
    Lowered l = lowered(R"(contract ZKVoting {
        mapping(address => bool) hasVoted;
        function verifyZKProof(uint zkProof) internal returns (bool) { return true; }
        function submitVote(uint zkProof) external {
            require(verifyZKProof(zkProof), "Invalid proof");
            hasVoted[msg.sender] = true;
        }
    })");
    PassContext ctx = ctx_for(l);
    PassCounts counts = pass_inline(l.module, ctx);
    verify_ssa(l.module);
    CHECK(counts.deleted == 1); // the call

    // submitVote no longer calls; the callee's const true carries the call
    // site span in its inline chain
    const IrFunction* submit = nullptr;
    for (const auto& fn : l.module.functions)
        if (fn.name == "submitVote")
            submit = &fn;
    REQUIRE(submit);
    size_t call_at = l.unit.text.find("verifyZKProof(zkProof)", l.unit.text.find("require"));
    bool inlined_const = false;
    for (const auto& b : submit->blocks)
        for (const auto& i : b.instrs) {
            CHECK(i.op != IrOp::Call);
            if (i.op == IrOp::Const && i.imm == 1 && !i.prov.inline_chain.empty()) {
                inlined_const = true;
                CHECK(i.prov.inline_chain.size() == 1);
                CHECK(i.prov.inline_chain[0].start == call_at);
            }
        }
    CHECK(inlined_const);
}

TEST_CASE("inline: recursion is never inlined") {
    Lowered l = lowered(R"(contract C {
        function fact(uint n) internal returns (uint) {
            if (n < 2) { return 1; }
            return n * fact(n - 1);
        }
        function run(uint n) external returns (uint) { return fact(n); }
    })");
    pass_inline(l.module, ctx_for(l));
    verify_ssa(l.module);
    CHECK(count_op(l.module, IrOp::Call) >= 2); // run->fact and fact->fact remain
}

TEST_CASE("inline: the size threshold is a hard cutoff") {
    // build a callee of exactly known size by chaining additions
    std::string body = "uint r = a;\n";
    for (int i = 0; i < 18; ++i)
        body += "r = r + " + std::to_string(i + 1) + ";\n";
    std::string src = "contract C { function big(uint a) internal returns (uint) { " + body +
                      " return r; } function run(uint a) external returns (uint) "
                      "{ return big(a); } }";
    Lowered l = lowered(src.c_str());
    size_t callee_size = 0;
    for (const auto& fn : l.module.functions)
        if (fn.name == "big")
            for (const auto& b : fn.blocks)
                callee_size += b.instrs.size();

    PassContext ctx = ctx_for(l);
    ctx.inline_max_instrs = static_cast<uint32_t>(callee_size); // exactly at the limit
    IrModule at_limit = l.module;
    pass_inline(at_limit, ctx);
    CHECK(count_op(at_limit, IrOp::Call) == 0);

    ctx.inline_max_instrs = static_cast<uint32_t>(callee_size) - 1; // one below
    IrModule below = l.module;
    pass_inline(below, ctx);
    CHECK(count_op(below, IrOp::Call) == 1);
}

TEST_CASE("unroll: a three-trip for loop becomes three copies on one span") {
    Lowered l = lowered(R"(contract C {
        uint s;
        function f() external {
            for (uint i = 0; i < 3; i = i + 1) {
                s = s + 1;
            }
        }
    })");
    size_t stores_before = count_op(l.module, IrOp::StoreState);
    CHECK(stores_before == 1);
    PassCounts counts = pass_unroll(l.module, ctx_for(l));
    verify_ssa(l.module);
    CHECK(count_op(l.module, IrOp::StoreState) == 3);
    CHECK(counts.created > 0);

    // all three copies map to the body statement's span
    size_t body_at = l.unit.text.find("s = s + 1;");
    for (const auto& b : l.module.functions[0].blocks)
        for (const auto& i : b.instrs)
            if (i.op == IrOp::StoreState) {
                REQUIRE(i.prov.primary_span.has_value());
                CHECK(i.prov.primary_span->start == body_at);
            }
    // no loop left behind
    CHECK(count_op(l.module, IrOp::Phi) == 0);
}

TEST_CASE("unroll: trip counts beyond the limit stay loops") {
    Lowered l = lowered(R"(contract C {
        uint s;
        function f() external {
            for (uint i = 0; i < 9; i = i + 1) { s = s + 1; }
        }
    })");
    PassContext ctx = ctx_for(l);
    ctx.unroll_max_trips = 8;
    pass_unroll(l.module, ctx);
    verify_ssa(l.module);
    CHECK(count_op(l.module, IrOp::StoreState) == 1); // untouched
    CHECK(count_op(l.module, IrOp::Phi) >= 1);
}

TEST_CASE("unroll: while loops are never unrolled") {
    Lowered l = lowered(R"(contract C {
        uint s;
        function f() external {
            uint i = 0;
            while (i < 3) { s = s + 1; i = i + 1; }
        }
    })");
    pass_unroll(l.module, ctx_for(l));
    verify_ssa(l.module);
    CHECK(count_op(l.module, IrOp::StoreState) == 1);
}

TEST_CASE("reorder: pure definitions sink to their first use") {
    // hand-built block: c = const 5; a = load_state; b = add(a, c); store b
    IrModule m;
    m.contract_count = 1;
    IrFunction fn;
    fn.name = "f";
    fn.is_external = true;
    uint32_t bb = fn.new_block();
    auto instr = [&](IrOp op) {
        IrInstr i;
        i.ir_id = m.fresh_id();
        i.op = op;
        i.prov = Provenance::exact({0, 1, 0}, 0);
        return i;
    };
    IrInstr c = instr(IrOp::Const);
    c.imm = 5;
    IrInstr a = instr(IrOp::LoadState);
    a.slot = 0;
    IrInstr b = instr(IrOp::Add);
    b.args = {a.ir_id, c.ir_id};
    IrInstr st = instr(IrOp::StoreState);
    st.slot = 1;
    st.args = {b.ir_id};
    IrInstr ret = instr(IrOp::Return);
    uint32_t c_id = c.ir_id, a_id = a.ir_id, b_id = b.ir_id;
    fn.find_block(bb)->instrs.push_back(std::move(c));
    fn.find_block(bb)->instrs.push_back(std::move(a));
    fn.find_block(bb)->instrs.push_back(std::move(b));
    fn.find_block(bb)->instrs.push_back(std::move(st));
    fn.find_block(bb)->instrs.push_back(std::move(ret));
    m.functions.push_back(std::move(fn));
    verify_ssa(m);

    PassContext ctx;
    CompilationUnit dummy;
    ctx.unit = &dummy;
    PassCounts counts = pass_reorder(m, ctx);
    verify_ssa(m);
    const auto& out = m.functions[0].blocks[0].instrs;
    REQUIRE(out.size() == 5);
    CHECK(out[0].ir_id == a_id); // operand order of the add: a first
    CHECK(out[1].ir_id == c_id);
    CHECK(out[2].ir_id == b_id);
    CHECK(counts.moved > 0);
}

TEST_CASE("reorder: loads never cross a store to the same slot") {
    // v = load slot0; store slot0 <- k; store slot1 <- v
    IrModule m;
    m.contract_count = 1;
    IrFunction fn;
    fn.name = "f";
    uint32_t bb = fn.new_block();
    auto instr = [&](IrOp op) {
        IrInstr i;
        i.ir_id = m.fresh_id();
        i.op = op;
        i.prov = Provenance::exact({0, 1, 0}, 0);
        return i;
    };
    IrInstr k = instr(IrOp::Const);
    k.imm = 7;
    IrInstr v = instr(IrOp::LoadState);
    v.slot = 0;
    IrInstr s1 = instr(IrOp::StoreState);
    s1.slot = 0;
    s1.args = {k.ir_id};
    IrInstr s2 = instr(IrOp::StoreState);
    s2.slot = 1;
    s2.args = {v.ir_id};
    IrInstr ret = instr(IrOp::Return);
    uint32_t v_id = v.ir_id, s1_id = s1.ir_id;
    auto* blk = fn.find_block(bb);
    blk->instrs.push_back(std::move(k));
    blk->instrs.push_back(std::move(v));
    blk->instrs.push_back(std::move(s1));
    blk->instrs.push_back(std::move(s2));
    blk->instrs.push_back(std::move(ret));
    m.functions.push_back(std::move(fn));

    PassContext ctx;
    CompilationUnit dummy;
    ctx.unit = &dummy;
    pass_reorder(m, ctx);
    verify_ssa(m);
    const auto& out = m.functions[0].blocks[0].instrs;
    size_t load_pos = 0, store_pos = 0;
    for (size_t i = 0; i < out.size(); ++i) {
        if (out[i].ir_id == v_id)
            load_pos = i;
        if (out[i].ir_id == s1_id)
            store_pos = i;
    }
    CHECK(load_pos < store_pos);
}

TEST_CASE("reorder and cfg_restructure never change entry spans") {
    for (const auto& [stem, text] : corpus()) {
        CAPTURE(stem);
        PassConfig without = PassConfig::none();
        PassConfig with;
        with.order = {PassKind::CfgRestructure, PassKind::Reorder};
        Compilation base = compile_source(stem, text, without);
        Compilation moved = compile_source(stem, text, with);

        auto spans_by_ir = [](const Compilation& c) {
            std::map<uint32_t, SourceSpan> out;
            for (const auto& e : c.table.entries)
                out.emplace(e.ir_id, e.span);
            return out;
        };
        auto before = spans_by_ir(base);
        auto after = spans_by_ir(moved);
        for (const auto& [ir_id, span] : after) {
            auto it = before.find(ir_id);
            if (it != before.end())
                CHECK(span == it->second);
        }
    }
}

TEST_CASE("cfg_restructure: straight-line chains merge") {
    IrModule m;
    m.contract_count = 1;
    IrFunction fn;
    fn.name = "f";
    uint32_t b0 = fn.new_block(), b1 = fn.new_block(), b2 = fn.new_block();
    auto instr = [&](IrOp op) {
        IrInstr i;
        i.ir_id = m.fresh_id();
        i.op = op;
        i.prov = Provenance::exact({0, 1, 0}, 0);
        return i;
    };
    IrInstr c0 = instr(IrOp::Const);
    IrInstr j0 = instr(IrOp::Jump);
    j0.targets = {b1};
    IrInstr c1 = instr(IrOp::Const);
    IrInstr j1 = instr(IrOp::Jump);
    j1.targets = {b2};
    IrInstr c2 = instr(IrOp::Const);
    IrInstr ret = instr(IrOp::Return);
    fn.find_block(b0)->instrs.push_back(std::move(c0));
    fn.find_block(b0)->instrs.push_back(std::move(j0));
    fn.find_block(b1)->instrs.push_back(std::move(c1));
    fn.find_block(b1)->instrs.push_back(std::move(j1));
    fn.find_block(b2)->instrs.push_back(std::move(c2));
    fn.find_block(b2)->instrs.push_back(std::move(ret));
    m.functions.push_back(std::move(fn));
    verify_ssa(m);

    PassContext ctx;
    CompilationUnit dummy;
    ctx.unit = &dummy;
    pass_cfg_restructure(m, ctx);
    verify_ssa(m);
    CHECK(m.functions[0].blocks.size() == 1);
}

TEST_CASE("cfg_restructure: an empty else arm is threaded away") {
    Lowered l = lowered(R"(contract C {
        uint s;
        function f(uint x) external {
            if (x > 0) { s = x; } else { }
            s = s + 1;
        }
    })");
    size_t cond_at = l.unit.text.find("x > 0");
    pass_cfg_restructure(l.module, ctx_for(l));
    verify_ssa(l.module);
    const IrInstr* branch = find_op(l.module, IrOp::Branch);
    REQUIRE(branch);
    // the branch still maps into the if header's condition
    REQUIRE(branch->prov.primary_span.has_value());
    CHECK(branch->prov.primary_span->start == cond_at);
}

TEST_CASE("cfg_restructure: diamond dominators") {
    // entry -> (left|right) -> join
    IrModule m;
    m.contract_count = 1;
    IrFunction fn;
    fn.name = "f";
    uint32_t entry = fn.new_block(), left = fn.new_block(), right = fn.new_block(),
             join = fn.new_block();
    auto instr = [&](IrOp op) {
        IrInstr i;
        i.ir_id = m.fresh_id();
        i.op = op;
        i.prov = Provenance::exact({0, 1, 0}, 0);
        return i;
    };
    IrInstr cond = instr(IrOp::Const);
    IrInstr br = instr(IrOp::Branch);
    br.args = {cond.ir_id};
    br.targets = {left, right};
    IrInstr sl = instr(IrOp::StoreState);
    sl.slot = 0;
    sl.args = {cond.ir_id};
    IrInstr jl = instr(IrOp::Jump);
    jl.targets = {join};
    IrInstr sr = instr(IrOp::StoreState);
    sr.slot = 1;
    sr.args = {cond.ir_id};
    IrInstr jr = instr(IrOp::Jump);
    jr.targets = {join};
    IrInstr ret = instr(IrOp::Return);
    fn.find_block(entry)->instrs.push_back(std::move(cond));
    fn.find_block(entry)->instrs.push_back(std::move(br));
    fn.find_block(left)->instrs.push_back(std::move(sl));
    fn.find_block(left)->instrs.push_back(std::move(jl));
    fn.find_block(right)->instrs.push_back(std::move(sr));
    fn.find_block(right)->instrs.push_back(std::move(jr));
    fn.find_block(join)->instrs.push_back(std::move(ret));
    m.functions.push_back(std::move(fn));

    auto idom = dominator_tree(m.functions[0]);
    CHECK(idom.at(left) == entry);
    CHECK(idom.at(right) == entry);
    CHECK(idom.at(join) == entry); // joined only through the entry
}

TEST_CASE("zk_instrument: requires are mapped, gadgets are synthetic") {
    Lowered l = lowered(R"(contract C {
        uint s;
        function f(uint x) external returns (bool) {
            require(x > 0, "p");
            return (x & 1) == 1;
        }
    })");
    PassCounts counts = pass_zk_instrument(l.module, ctx_for(l));
    verify_ssa(l.module);
    CHECK(counts.created == 2);

    size_t mapped = 0, synthetic = 0;
    for (const auto& fn : l.module.functions)
        for (const auto& b : fn.blocks)
            for (const auto& i : b.instrs) {
                if (i.op != IrOp::ZkConstraint)
                    continue;
                if (i.prov.confidence == Confidence::Synthetic) {
                    ++synthetic;
                    CHECK_FALSE(i.prov.primary_span.has_value());
                    CHECK(i.aux == kNoConstraint);
                } else {
                    ++mapped;
                    CHECK(i.prov.confidence == Confidence::Exact);
                    CHECK(i.aux == 1);
                }
            }
    CHECK(mapped == 1);
    CHECK(synthetic == 1);
}

TEST_CASE("zk_instrument is a no-op without requires or bitwise ops") {
    Lowered l = lowered("contract C { uint s; function f() external { s = 1; } }");
    size_t before = l.module.instruction_count();
    PassCounts counts = pass_zk_instrument(l.module, ctx_for(l));
    CHECK(counts.created == 0);
    CHECK(l.module.instruction_count() == before);
}

TEST_CASE("pipeline: an empty pass list leaves the module unchanged") {
    Lowered l = lowered("contract C { uint s; function f() external { s = 1; } }");
    std::string before = dump_ir(l.module);
    PassReport report = run_pipeline(l.module, PassConfig::none(), l.unit);
    CHECK(dump_ir(l.module) == before);
    CHECK(report.passes.empty());
}

TEST_CASE("pipeline: zk_instrument must come last") {
    PassConfig bad;
    bad.order = {PassKind::ZkInstrument, PassKind::Dce};
    CHECK_THROWS_AS(bad.validate(), CompileError);
    PassConfig dup;
    dup.order = {PassKind::Dce, PassKind::Dce};
    CHECK_THROWS_AS(dup.validate(), CompileError);
}

TEST_CASE("pipeline: default order is deterministic") {
    for (const auto& [stem, text] : corpus()) {
        Compilation a = compile_source(stem, text, PassConfig{});
        Compilation b = compile_source(stem, text, PassConfig{});
        CHECK(dump_ir(a.module) == dump_ir(b.module));
        CHECK(a.program.code == b.program.code);
    }
}

TEST_CASE("pass accounting: created minus deleted matches the size change") {
    for (const auto& [stem, text] : corpus()) {
        CAPTURE(stem);
        CompilationUnit unit = run_frontend(stem, text);
        IrModule m = lower(unit);
        PassConfig config; // default order
        PassContext ctx;
        ctx.unit = &unit;
        for (PassKind kind : config.order) {
            size_t before = m.instruction_count();
            PassCounts counts;
            switch (kind) {
            case PassKind::ConstFold: counts = pass_const_fold(m, ctx); break;
            case PassKind::Dce: counts = pass_dce(m, ctx); break;
            case PassKind::Inline: counts = pass_inline(m, ctx); break;
            case PassKind::Unroll: counts = pass_unroll(m, ctx); break;
            case PassKind::Reorder: counts = pass_reorder(m, ctx); break;
            case PassKind::CfgRestructure: counts = pass_cfg_restructure(m, ctx); break;
            case PassKind::ZkInstrument: counts = pass_zk_instrument(m, ctx); break;
            }
            size_t after = m.instruction_count();
            CAPTURE(pass_name(kind));
            CHECK(static_cast<long long>(counts.created) -
                      static_cast<long long>(counts.deleted) ==
                  static_cast<long long>(after) - static_cast<long long>(before));
        }
    }
}

TEST_CASE("mapping off changes no emitted byte") {
    for (const auto& [stem, text] : corpus()) {
        CAPTURE(stem);
        PassConfig on;
        PassConfig off;
        off.mapping_enabled = false;
        Compilation with = compile_source(stem, text, on);
        Compilation without = compile_source(stem, text, off);
        CHECK(with.program.code == without.program.code);
        CHECK(without.table.entries.empty());
    }
}
