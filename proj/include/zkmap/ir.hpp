// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/provenance.hpp"
#include "zkmap/span.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace zkmap {

enum class IrOp : uint8_t {
    Const,
    // binops
    Add, Sub, Mul, Div, Mod, BitAnd, BitOr, BitXor, Shl, Shr,
    // comparisons
    CmpEq, CmpNe, CmpLt, CmpGt, CmpLe, CmpGe,
    Not,
    LoadState, StoreState, LoadKey, StoreKey,
    Param, Call, Phi,
    Jump, Branch, Return, Revert, EmitEvent, ZkConstraint,
};

const char* ir_op_name(IrOp op);
bool ir_is_binop(IrOp op);
bool ir_is_cmp(IrOp op);
bool ir_is_terminator(IrOp op);

/// Param source index for `msg.sender`.
inline constexpr uint32_t kSenderParam = 0xFFFFFFFFu;
/// Synthetic zk gadgets carry no constraint number.
inline constexpr uint32_t kNoConstraint = 0u;

struct IrInstr {
    uint32_t ir_id = 0;
    IrOp op = IrOp::Const;
    std::vector<uint32_t> args;    // value operands (call args, store value/key, ...)
    std::vector<uint32_t> targets; // block ids: Jump[t], Branch[true,false]
    std::vector<std::pair<uint32_t, uint32_t>> phi_in; // (pred block, value)
    uint64_t imm = 0;              // Const value
    uint32_t slot = 0;             // state slot for Load*/Store*
    uint32_t aux = 0;              // param index / callee fn / string / event / zk index
    bool call_returns = false;     // Call yields a value
    bool require_branch = false;   // Branch lowered from a require statement
    Provenance prov;
    JumpType jump = JumpType::Regular;
    uint32_t modifier_depth = 0;

    bool is_terminator() const { return ir_is_terminator(op); }
    bool produces_value() const;
};

struct IrBlock {
    uint32_t id = 0;
    std::vector<IrInstr> instrs;

    const IrInstr& terminator() const { return instrs.back(); }
};

struct IrParamInfo {
    std::string name;
    SourceSpan span;
};

struct IrFunction {
    std::string name;
    uint32_t arity = 0;
    bool is_external = false;
    bool has_return_value = false;
    uint32_t contract = 0;
    std::vector<IrParamInfo> params;
    std::vector<IrBlock> blocks; // blocks[0] is the entry
    uint32_t next_block_id = 0;

    std::string dispatch_key() const { return name + "/" + std::to_string(arity); }

    IrBlock* find_block(uint32_t id);
    const IrBlock* find_block(uint32_t id) const;
    uint32_t new_block() {
        IrBlock b;
        b.id = next_block_id++;
        blocks.push_back(std::move(b));
        return blocks.back().id;
    }
};

struct IrEvent {
    std::string name;
    uint32_t param_count = 0;
};

struct IrModule {
    std::vector<IrFunction> functions;
    std::vector<std::string> string_table;
    std::vector<IrEvent> event_table;
    uint32_t next_ir_id = 0;
    uint32_t contract_count = 0;

    uint32_t fresh_id() { return next_ir_id++; }
    uint32_t intern_string(const std::string& s);
    size_t instruction_count() const;
};

/// Apply `fn` to every value-operand slot of the instruction (args and phi
/// incomings).
void for_each_use(IrInstr& instr, const std::function<void(uint32_t&)>& fn);
void for_each_use(const IrInstr& instr, const std::function<void(uint32_t)>& fn);

/// Replace every use of `old_id` with `new_id` across the function.
void replace_all_uses(IrFunction& fn, uint32_t old_id, uint32_t new_id);

/// Def-site lookup for one function; rebuild after structural changes.
class ValueIndex {
public:
    explicit ValueIndex(IrFunction& fn);
    IrInstr* def(uint32_t value_id) const;

private:
    std::map<uint32_t, IrInstr*> defs_;
};

/// Predecessor map (block id -> predecessor block ids, in layout order).
std::map<uint32_t, std::vector<uint32_t>> predecessors(const IrFunction& fn);

/// Immediate dominators keyed by block id; the entry maps to itself.
std::map<uint32_t, uint32_t> dominator_tree(const IrFunction& fn);

/// Independent SSA well-formedness checker: single defs, uses dominated by
/// definitions, exactly one terminator per block, entry has no predecessors,
/// phi incomings match predecessors. Throws CompileError(Internal) on the
/// first violation.
void verify_ssa(const IrModule& module);

/// Textual dump, one instruction per line:
///   %id = opcode operands  ; s:l:f conf=E|A|S md=N zk=K
std::string dump_ir(const IrModule& module);
std::string dump_ir(const IrFunction& fn);

} // namespace zkmap
