// SPDX-License-Identifier: Apache-2.0
#include "zkmap/emitter.hpp"

#include "zkmap/diag.hpp"

#include <map>

namespace zkmap {

namespace {

constexpr uint32_t kMaxReach = 255;

class Emitter {
public:
    explicit Emitter(const IrModule& module) : module_(module) {}

    EmitResult run() {
        out_.program.string_table = module_.string_table;
        for (const auto& ev : module_.event_table)
            out_.program.event_table.push_back({ev.name, ev.param_count});

        for (size_t f = 0; f < module_.functions.size(); ++f)
            emit_function(static_cast<uint32_t>(f));

        patch_labels();
        if (out_.program.code.size() > 0xFFFFFFFFull)
            throw CompileError(ErrorCode::JumpTargetOverflow, "program exceeds 2^32 bytes");
        return std::move(out_);
    }

private:
    struct Label {
        uint32_t fn = 0;
        uint32_t block = 0;
        bool operator<(const Label& o) const {
            return fn != o.fn ? fn < o.fn : block < o.block;
        }
    };

    // --- raw byte helpers ---------------------------------------------------

    uint32_t here() const { return static_cast<uint32_t>(out_.program.code.size()); }

    void log_bytes(uint32_t ir_id, bool synthetic, JumpType jump) {
        out_.log.records.push_back({here(), ir_id, synthetic, jump});
    }

    void byte(uint8_t b) { out_.program.code.push_back(b); }
    void imm(uint64_t v, uint8_t width) {
        for (int b = width - 1; b >= 0; --b)
            byte(static_cast<uint8_t>((v >> (8 * b)) & 0xFF));
    }

    void op(Op o, uint32_t ir_id, JumpType jump = JumpType::Regular, bool synthetic = false) {
        log_bytes(ir_id, synthetic, jump);
        byte(static_cast<uint8_t>(o));
    }

    void push_imm(uint64_t v, uint32_t ir_id) {
        op(Op::PUSH, ir_id);
        imm(v, 8);
        ++scratch_;
    }

    void push_label(Label label, uint32_t ir_id) {
        op(Op::PUSH, ir_id);
        fixups_.emplace_back(here(), label);
        imm(0, 8);
        ++scratch_;
    }

    void dup(uint32_t depth, uint32_t ir_id) {
        if (depth > kMaxReach)
            throw CompileError(ErrorCode::Internal, "stack frame too deep for DUP");
        op(Op::DUP, ir_id);
        imm(depth, 1);
        ++scratch_;
    }

    void swap(uint32_t n, uint32_t ir_id) {
        if (n > kMaxReach)
            throw CompileError(ErrorCode::Internal, "stack frame too deep for SWAP");
        op(Op::SWAP, ir_id);
        imm(n, 1);
    }

    void pop(uint32_t ir_id) {
        op(Op::POP, ir_id);
        --scratch_;
    }

    // --- frame model ----------------------------------------------------------

    // Stack shape between instructions (scratch == 0):
    //   internal fn: [ret_addr, arg_0..arg_{n-1}, slot_0..slot_{k-1}]
    //   external fn: [arg_0..arg_{n-1}, slot_0..slot_{k-1}]
    // Every value-producing instruction except arg params owns a slot.

    bool is_arg_param(const IrInstr& i) const {
        return i.op == IrOp::Param && i.aux != kSenderParam;
    }

    uint32_t slot_depth(uint32_t value, uint32_t ir_id) const {
        auto it = slot_of_.find(value);
        if (it == slot_of_.end())
            throw CompileError(ErrorCode::Internal,
                               "no frame slot for value %" + std::to_string(value) +
                                   " used by %" + std::to_string(ir_id));
        return scratch_ + frame_size_ - it->second;
    }

    void materialize(uint32_t value, uint32_t ir_id) {
        const IrInstr* def = defs_.at(value);
        if (is_arg_param(*def)) {
            uint32_t depth = scratch_ + frame_size_ + arity_ - def->aux;
            dup(depth, ir_id);
            return;
        }
        dup(slot_depth(value, ir_id), ir_id);
    }

    // result on top of the scratch; move it into its slot
    void write_slot(uint32_t value, uint32_t ir_id) {
        swap(slot_depth(value, ir_id) - 1, ir_id);
        pop(ir_id);
    }

    // --- function emission -----------------------------------------------------

    const IrInstr* leading_code_instr(const IrBlock& b) const {
        for (const auto& i : b.instrs)
            if (i.op != IrOp::Phi && !is_arg_param(i))
                return &i;
        return &b.instrs.back();
    }

    void emit_function(uint32_t fn_idx) {
        const IrFunction& fn = module_.functions[fn_idx];
        fn_idx_ = fn_idx;
        arity_ = fn.arity;

        defs_.clear();
        slot_of_.clear();
        uint32_t next_slot = 0;
        std::vector<uint32_t> ordered;
        for (const auto& b : fn.blocks) {
            for (const auto& i : b.instrs) {
                if (!i.produces_value())
                    continue;
                defs_[i.ir_id] = &i;
                if (!is_arg_param(i))
                    ordered.push_back(i.ir_id);
            }
        }
        std::sort(ordered.begin(), ordered.end());
        for (uint32_t id : ordered)
            slot_of_[id] = next_slot++;
        frame_size_ = next_slot;

        if (fn.is_external)
            out_.program.function_table[fn.dispatch_key()] = here();

        for (size_t bi = 0; bi < fn.blocks.size(); ++bi) {
            const IrBlock& b = fn.blocks[bi];
            block_offsets_[{fn_idx_, b.id}] = here();
            cur_block_ = b.id;
            scratch_ = 0;

            uint32_t lead = leading_code_instr(b)->ir_id;
            op(Op::JUMPDEST, lead);
            if (bi == 0) {
                // frame slots start zeroed
                for (uint32_t s = 0; s < frame_size_; ++s)
                    push_imm(0, lead);
                scratch_ = 0; // the frame is not scratch
            }

            for (const auto& i : b.instrs)
                emit_instr(fn, i);
        }
    }

    void emit_instr(const IrFunction& fn, const IrInstr& i) {
        switch (i.op) {
        case IrOp::Const:
            push_imm(i.imm, i.ir_id);
            write_slot(i.ir_id, i.ir_id);
            break;
        case IrOp::Param:
            if (i.aux == kSenderParam) {
                op(Op::CALLER, i.ir_id);
                ++scratch_;
                write_slot(i.ir_id, i.ir_id);
            }
            break;
        case IrOp::Phi:
            break; // written by predecessor edge copies
        case IrOp::Not:
            materialize(i.args[0], i.ir_id);
            op(Op::ISZERO, i.ir_id);
            write_slot(i.ir_id, i.ir_id);
            break;
        case IrOp::LoadState:
            op(Op::SLOAD, i.ir_id);
            imm(i.slot, 2);
            ++scratch_;
            write_slot(i.ir_id, i.ir_id);
            break;
        case IrOp::StoreState:
            materialize(i.args[0], i.ir_id);
            op(Op::SSTORE, i.ir_id);
            imm(i.slot, 2);
            --scratch_;
            break;
        case IrOp::LoadKey:
            materialize(i.args[0], i.ir_id);
            op(Op::SLOADK, i.ir_id);
            imm(i.slot, 2);
            write_slot(i.ir_id, i.ir_id);
            break;
        case IrOp::StoreKey:
            materialize(i.args[0], i.ir_id); // key
            materialize(i.args[1], i.ir_id); // value
            op(Op::SSTOREK, i.ir_id);
            imm(i.slot, 2);
            scratch_ -= 2;
            break;
        case IrOp::EmitEvent:
            for (uint32_t a : i.args)
                materialize(a, i.ir_id);
            op(Op::LOG, i.ir_id);
            imm(i.aux, 2);
            imm(i.args.size(), 1);
            scratch_ -= static_cast<uint32_t>(i.args.size());
            break;
        case IrOp::ZkConstraint:
            op(Op::ZKCONST, i.ir_id);
            imm(i.prov.zk_constraint.value_or(kNoConstraint), 4);
            break;
        case IrOp::Call:
            emit_call(i);
            break;
        case IrOp::Jump:
            emit_edge_copies(fn, i, i.targets[0]);
            push_label({fn_idx_, i.targets[0]}, i.ir_id);
            op(Op::JUMP, i.ir_id);
            --scratch_;
            break;
        case IrOp::Branch:
            emit_branch(fn, i);
            break;
        case IrOp::Return:
            emit_return(fn, i);
            break;
        case IrOp::Revert:
            op(Op::REVERT, i.ir_id);
            imm(i.aux, 2);
            break;
        default:
            // binops and comparisons
            materialize(i.args[0], i.ir_id);
            materialize(i.args[1], i.ir_id);
            op(binop_opcode(i.op), i.ir_id);
            --scratch_;
            write_slot(i.ir_id, i.ir_id);
            break;
        }
    }

    static Op binop_opcode(IrOp op) {
        switch (op) {
        case IrOp::Add: return Op::ADD;
        case IrOp::Sub: return Op::SUB;
        case IrOp::Mul: return Op::MUL;
        case IrOp::Div: return Op::DIV;
        case IrOp::Mod: return Op::MOD;
        case IrOp::BitAnd: return Op::AND;
        case IrOp::BitOr: return Op::OR;
        case IrOp::BitXor: return Op::XOR;
        case IrOp::Shl: return Op::SHL;
        case IrOp::Shr: return Op::SHR;
        case IrOp::CmpEq: return Op::EQ;
        case IrOp::CmpNe: return Op::NE;
        case IrOp::CmpLt: return Op::LT;
        case IrOp::CmpGt: return Op::GT;
        case IrOp::CmpLe: return Op::LE;
        case IrOp::CmpGe: return Op::GE;
        default:
            throw CompileError(ErrorCode::Internal, "not a binary opcode");
        }
    }

    // parallel copies feeding the phis of `target` along this edge
    void emit_edge_copies(const IrFunction& fn, const IrInstr& source, uint32_t target) {
        const IrBlock* tgt = fn.find_block(target);
        if (!tgt)
            return;
        std::vector<uint32_t> phi_slots;
        for (const auto& phi : tgt->instrs) {
            if (phi.op != IrOp::Phi)
                continue;
            for (const auto& [pred, value] : phi.phi_in) {
                if (pred == cur_block_) {
                    materialize(value, source.ir_id);
                    phi_slots.push_back(phi.ir_id);
                    break;
                }
            }
        }
        for (auto it = phi_slots.rbegin(); it != phi_slots.rend(); ++it)
            write_slot(*it, source.ir_id);
    }

    void emit_branch(const IrFunction& fn, const IrInstr& i) {
        uint32_t t = i.targets[0], f = i.targets[1];
        auto has_phi_copies = [&](uint32_t target) {
            const IrBlock* b = fn.find_block(target);
            if (!b)
                return false;
            for (const auto& phi : b->instrs)
                if (phi.op == IrOp::Phi)
                    for (const auto& [pred, value] : phi.phi_in)
                        if (pred == cur_block_)
                            return true;
            return false;
        };

        materialize(i.args[0], i.ir_id);
        if (!has_phi_copies(t) && !has_phi_copies(f)) {
            push_label({fn_idx_, t}, i.ir_id);
            op(Op::JUMPI, i.ir_id);
            scratch_ -= 2;
            push_label({fn_idx_, f}, i.ir_id);
            op(Op::JUMP, i.ir_id);
            --scratch_;
            return;
        }

        // per-edge stubs carry the copies
        op(Op::PUSH, i.ir_id);
        size_t stub_fixup = here();
        imm(0, 8);
        ++scratch_;
        op(Op::JUMPI, i.ir_id);
        scratch_ -= 2;

        emit_edge_copies(fn, i, f);
        push_label({fn_idx_, f}, i.ir_id);
        op(Op::JUMP, i.ir_id);
        --scratch_;

        uint32_t stub_offset = here();
        for (int b = 7; b >= 0; --b)
            out_.program.code[stub_fixup + (7 - b)] =
                static_cast<uint8_t>((stub_offset >> (8 * b)) & 0xFF);
        op(Op::JUMPDEST, i.ir_id);
        emit_edge_copies(fn, i, t);
        push_label({fn_idx_, t}, i.ir_id);
        op(Op::JUMP, i.ir_id);
        --scratch_;
    }

    // Calling convention: push the return address, then the arguments, then
    // jump to the callee entry. The callee removes everything it was handed
    // and leaves only the return value.
    void emit_call(const IrInstr& i) {
        const IrFunction& callee = module_.functions[i.aux];

        op(Op::PUSH, i.ir_id);
        size_t ret_fixup = here();
        imm(0, 8);
        ++scratch_;

        for (uint32_t a : i.args)
            materialize(a, i.ir_id);

        push_label({i.aux, callee.blocks.front().id}, i.ir_id);
        op(Op::JUMP, i.ir_id, JumpType::Into);
        --scratch_;

        uint32_t ret_offset = here();
        for (int b = 7; b >= 0; --b)
            out_.program.code[ret_fixup + (7 - b)] =
                static_cast<uint8_t>((static_cast<uint64_t>(ret_offset) >> (8 * b)) & 0xFF);
        // the callee consumed the return address and the arguments
        scratch_ -= 1 + static_cast<uint32_t>(i.args.size());
        op(Op::JUMPDEST, i.ir_id);
        if (i.call_returns) {
            ++scratch_;
            write_slot(i.ir_id, i.ir_id);
        }
    }

    void emit_return(const IrFunction& fn, const IrInstr& i) {
        bool has_value = !i.args.empty();
        if (has_value)
            materialize(i.args[0], i.ir_id);
        uint32_t junk = arity_ + frame_size_;
        if (fn.is_external) {
            if (has_value) {
                for (uint32_t n = 0; n < junk; ++n) {
                    swap(1, i.ir_id);
                    pop(i.ir_id);
                }
                op(Op::RETURN, i.ir_id);
                --scratch_;
            } else {
                for (uint32_t n = 0; n < junk; ++n)
                    op(Op::POP, i.ir_id);
                op(Op::STOP, i.ir_id);
            }
        } else {
            if (has_value) {
                for (uint32_t n = 0; n < junk; ++n) {
                    swap(1, i.ir_id);
                    pop(i.ir_id);
                }
                swap(1, i.ir_id); // bring the return address up
                op(Op::JUMP, i.ir_id, JumpType::OutOf);
                --scratch_;
            } else {
                for (uint32_t n = 0; n < junk; ++n)
                    op(Op::POP, i.ir_id);
                op(Op::JUMP, i.ir_id, JumpType::OutOf);
            }
        }
        scratch_ = 0;
    }

    void patch_labels() {
        for (const auto& [position, label] : fixups_) {
            auto it = block_offsets_.find(label);
            if (it == block_offsets_.end())
                throw CompileError(ErrorCode::Internal, "unresolved label");
            uint64_t target = it->second;
            for (int b = 7; b >= 0; --b)
                out_.program.code[position + (7 - b)] =
                    static_cast<uint8_t>((target >> (8 * b)) & 0xFF);
        }
    }

    const IrModule& module_;
    EmitResult out_;
    uint32_t fn_idx_ = 0;
    uint32_t cur_block_ = 0;
    uint32_t arity_ = 0;
    uint32_t frame_size_ = 0;
    uint32_t scratch_ = 0;
    std::map<uint32_t, const IrInstr*> defs_;
    std::map<uint32_t, uint32_t> slot_of_;
    std::map<Label, uint32_t> block_offsets_;
    std::vector<std::pair<size_t, Label>> fixups_;
};

} // namespace

EmitResult emit(const IrModule& module) { return Emitter(module).run(); }

} // namespace zkmap
