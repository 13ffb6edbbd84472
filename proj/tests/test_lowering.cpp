// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include "support.hpp"

#include "zkmap/diag.hpp"
#include "zkmap/lowering.hpp"

#include <set>

using namespace zkmap;
using namespace zkmap::test;

namespace {

IrModule lower_text(const char* text, CompilationUnit& unit) {
    unit = run_frontend("t.msol", text);
    return lower(unit);
}

std::vector<const IrInstr*> instrs_of(const IrModule& m, const std::string& fn_name) {
    std::vector<const IrInstr*> out;
    for (const auto& fn : m.functions)
        if (fn.name == fn_name)
            for (const auto& b : fn.blocks)
                for (const auto& i : b.instrs)
                    out.push_back(&i);
    return out;
}

} // namespace

TEST_CASE("submitVote lowers to call, branch and keyed store") {
    CompilationUnit unit;
    IrModule m = lower_text(R"(contract ZKVoting {
        mapping(address => bool) hasVoted;
        function verifyZKProof(uint zkProof) internal returns (bool) { return true; }
        function submitVote(uint zkProof) external {
            require(verifyZKProof(zkProof), "Invalid proof");
            hasVoted[msg.sender] = true;
        }
    })", unit);

    auto instrs = instrs_of(m, "submitVote");
    bool has_call = false, has_branch_on_call = false, has_store_true = false;
    std::optional<uint32_t> call_value;
    for (const auto* i : instrs) {
        if (i->op == IrOp::Call) {
            has_call = true;
            call_value = i->ir_id;
        }
        if (i->op == IrOp::Branch && call_value && i->args[0] == *call_value)
            has_branch_on_call = true;
        if (i->op == IrOp::StoreKey)
            has_store_true = true;
    }
    CHECK(has_call);
    CHECK(has_branch_on_call);
    CHECK(has_store_true);
    verify_ssa(m);
}

TEST_CASE("checkBit shares one statement across and/eq/return") {
    CompilationUnit unit;
    IrModule m = lower_text(R"(contract C {
        function checkBit(uint input) external returns (bool) {
            return (input & 1) == 1;
        }
    })", unit);
    std::optional<uint32_t> and_stmt, eq_stmt;
    for (const auto* i : instrs_of(m, "checkBit")) {
        if (i->op == IrOp::BitAnd)
            and_stmt = i->prov.statement_id;
        if (i->op == IrOp::CmpEq)
            eq_stmt = i->prov.statement_id;
    }
    REQUIRE((and_stmt && eq_stmt));
    CHECK(*and_stmt == *eq_stmt);
    CHECK(unit.registry.statement(*and_stmt).kind == StatementKind::Return);
}

TEST_CASE("modifier code sits at depth 1, the body at depth 0") {
    CompilationUnit unit;
    IrModule m = lower_text(R"(contract C {
        bool done;
        modifier onlyOnce { require(!done); _; }
        function f() onlyOnce external { done = true; }
    })", unit);
    bool saw_require_at_1 = false, saw_store_at_0 = false;
    for (const auto* i : instrs_of(m, "f")) {
        if (i->op == IrOp::Branch && i->require_branch)
            saw_require_at_1 = i->modifier_depth == 1;
        if (i->op == IrOp::StoreState)
            saw_store_at_0 = i->modifier_depth == 0;
    }
    CHECK(saw_require_at_1);
    CHECK(saw_store_at_0);
}

TEST_CASE("constraint indices number requires in source order per contract") {
    CompilationUnit unit;
    IrModule m = lower_text(R"(contract C {
        uint x;
        function f(uint a) external {
            require(a > 0, "first");
            x = a;
            require(x < 100, "second");
        }
    })", unit);
    std::vector<std::pair<uint32_t, uint32_t>> found; // (ir_id, index)
    for (const auto* i : instrs_of(m, "f"))
        if (i->op == IrOp::Branch && i->require_branch)
            found.emplace_back(i->ir_id, *i->prov.zk_constraint);
    REQUIRE(found.size() == 2);
    CHECK(found[0].second == 1);
    CHECK(found[1].second == 2);

    // idempotent
    assign_constraint_indices(m);
    std::vector<uint32_t> again;
    for (const auto* i : instrs_of(m, "f"))
        if (i->op == IrOp::Branch && i->require_branch)
            again.push_back(*i->prov.zk_constraint);
    CHECK(again == std::vector<uint32_t>{1, 2});
}

TEST_CASE("a contract without require gets no constraint indices") {
    CompilationUnit unit;
    IrModule m = lower_text("contract C { uint x; function f() external { x = 1; } }", unit);
    for (const auto* i : instrs_of(m, "f"))
        CHECK_FALSE(i->prov.zk_constraint.has_value());
}

TEST_CASE("type errors and missing returns are rejected") {
    CompilationUnit unit;
    CHECK_THROWS_AS(
        lower_text("contract C { function f() external { uint b = true; } }", unit),
        CompileError);
    try {
        lower_text("contract C { function f(uint a) external returns (uint) { a = 1; } }", unit);
        FAIL("expected MissingReturn");
    } catch (const CompileError& e) {
        CHECK(e.code == ErrorCode::MissingReturn);
    }
    // division discipline: bool operands of '+'
    CHECK_THROWS_AS(
        lower_text("contract C { function f(bool b) external { uint x = b + 1; } }", unit),
        CompileError);
    // state variable initializers are unsupported
    CHECK_THROWS_AS(lower_text("contract C { uint x = 5; }", unit), CompileError);
    // nested mapping values are rejected at resolution
    CHECK_THROWS_AS(
        lower_text("contract C { mapping(uint => mapping(uint => uint)) m; }", unit),
        CompileError);
}

TEST_CASE("post-lowering, every non-phi instruction is Exact with a statement") {
    for (const auto& [stem, text] : corpus()) {
        CAPTURE(stem);
        CompilationUnit unit = run_frontend(stem, text);
        IrModule m = lower(unit);
        verify_ssa(m);
        for (const auto& fn : m.functions)
            for (const auto& b : fn.blocks)
                for (const auto& i : b.instrs) {
                    if (i.op == IrOp::Phi)
                        continue;
                    CHECK(i.prov.confidence == Confidence::Exact);
                    CHECK(i.prov.primary_span.has_value());
                    CHECK(i.prov.statement_id.has_value());
                }
    }
}

TEST_CASE("every statement is carried by at least one instruction") {
    for (const auto& [stem, text] : corpus()) {
        CAPTURE(stem);
        CompilationUnit unit = run_frontend(stem, text);
        IrModule m = lower(unit);
        std::set<uint32_t> referenced;
        for (const auto& fn : m.functions)
            for (const auto& b : fn.blocks)
                for (const auto& i : b.instrs)
                    if (i.prov.statement_id)
                        referenced.insert(*i.prov.statement_id);
        for (const auto& st : unit.registry.statements()) {
            CAPTURE(st.id);
            // pure local aliases (x = y between registers) produce no
            // machine work and therefore no instructions
            const AstNode& node = unit.ast[st.node];
            NodeId value = 0;
            if (node.kind == NodeKind::VarDeclStmt)
                value = node.as<VarDeclData>().init;
            else if (node.kind == NodeKind::AssignStmt)
                value = node.as<AssignData>().value;
            if (value && unit.ast[value].kind == NodeKind::IdentExpr &&
                !std::holds_alternative<StateVarRef>(unit.ast[value].resolved)) {
                bool target_is_local = true;
                if (node.kind == NodeKind::AssignStmt) {
                    const auto& target = unit.ast[node.as<AssignData>().target];
                    target_is_local = std::holds_alternative<LocalRef>(target.resolved) ||
                                      std::holds_alternative<ParamRef>(target.resolved);
                }
                if (target_is_local)
                    continue;
            }
            CHECK(referenced.count(st.id));
        }
    }
}

TEST_CASE("ir dump lines carry location, confidence and depth") {
    CompilationUnit unit;
    IrModule m = lower_text(R"(contract C {
        uint x;
        function f(uint a) external { require(a > 0, "p"); x = a; }
    })", unit);
    std::string dump = dump_ir(m);
    CHECK(dump.find("conf=E") != std::string::npos);
    CHECK(dump.find("md=0") != std::string::npos);
    CHECK(dump.find("zk=1") != std::string::npos);
    CHECK(dump.find("store_state slot0") != std::string::npos);
    // two lowerings of identical input dump identically
    CompilationUnit unit2;
    IrModule m2 = lower_text(R"(contract C {
        uint x;
        function f(uint a) external { require(a > 0, "p"); x = a; }
    })", unit2);
    CHECK(dump_ir(m2) == dump);
}
