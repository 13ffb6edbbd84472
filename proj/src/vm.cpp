// SPDX-License-Identifier: Apache-2.0
#include "zkmap/vm.hpp"

#include "zkmap/diag.hpp"

#include <set>

namespace zkmap {

VmOutcome run_vm(const BytecodeProgram& program, const TxInput& tx, const Storage& storage) {
    auto entry = program.function_table.find(tx.dispatch_key());
    if (entry == program.function_table.end())
        throw CompileError(ErrorCode::UnknownName,
                           "no external function '" + tx.dispatch_key() + "'");

    std::set<uint32_t> jumpdests;
    {
        uint32_t scan = 0;
        while (scan < program.code.size()) {
            DecodedInstr d = decode_at(program.code, scan);
            if (d.op == Op::JUMPDEST)
                jumpdests.insert(scan);
            scan += d.length;
        }
    }

    VmOutcome out;
    Storage initial = tx.initial_storage ? *tx.initial_storage : storage;
    Storage state = initial;
    std::vector<EventRecord> events;
    std::vector<uint64_t> stack(tx.args.begin(), tx.args.end());

    auto pop = [&]() {
        if (stack.empty())
            throw CompileError(ErrorCode::StackUnderflow, "stack underflow");
        uint64_t v = stack.back();
        stack.pop_back();
        return v;
    };

    uint64_t pc = entry->second;
    uint64_t steps = 0;
    while (true) {
        if (++steps > kVmStepLimit)
            throw CompileError(ErrorCode::StepLimit, "vm step limit exceeded");
        DecodedInstr d = decode_at(program.code, static_cast<uint32_t>(pc));
        out.offset_trace.push_back(static_cast<uint32_t>(pc));
        uint64_t next = pc + d.length;
        switch (d.op) {
        case Op::PUSH:
            stack.push_back(d.imms[0]);
            break;
        case Op::POP:
            pop();
            break;
        case Op::DUP: {
            size_t n = static_cast<size_t>(d.imms[0]);
            if (n == 0 || n > stack.size())
                throw CompileError(ErrorCode::StackUnderflow, "DUP past stack bottom");
            stack.push_back(stack[stack.size() - n]);
            break;
        }
        case Op::SWAP: {
            size_t n = static_cast<size_t>(d.imms[0]);
            if (n + 1 > stack.size())
                throw CompileError(ErrorCode::StackUnderflow, "SWAP past stack bottom");
            std::swap(stack[stack.size() - 1], stack[stack.size() - 1 - n]);
            break;
        }
        case Op::ADD: { uint64_t b = pop(), a = pop(); stack.push_back(a + b); break; }
        case Op::SUB: { uint64_t b = pop(), a = pop(); stack.push_back(a - b); break; }
        case Op::MUL: { uint64_t b = pop(), a = pop(); stack.push_back(a * b); break; }
        case Op::DIV: { uint64_t b = pop(), a = pop(); stack.push_back(b ? a / b : 0); break; }
        case Op::MOD: { uint64_t b = pop(), a = pop(); stack.push_back(b ? a % b : 0); break; }
        case Op::AND: { uint64_t b = pop(), a = pop(); stack.push_back(a & b); break; }
        case Op::OR: { uint64_t b = pop(), a = pop(); stack.push_back(a | b); break; }
        case Op::XOR: { uint64_t b = pop(), a = pop(); stack.push_back(a ^ b); break; }
        case Op::SHL: { uint64_t b = pop(), a = pop(); stack.push_back(b >= 64 ? 0 : a << b); break; }
        case Op::SHR: { uint64_t b = pop(), a = pop(); stack.push_back(b >= 64 ? 0 : a >> b); break; }
        case Op::NOT: { uint64_t a = pop(); stack.push_back(~a); break; }
        case Op::EQ: { uint64_t b = pop(), a = pop(); stack.push_back(a == b ? 1 : 0); break; }
        case Op::NE: { uint64_t b = pop(), a = pop(); stack.push_back(a != b ? 1 : 0); break; }
        case Op::LT: { uint64_t b = pop(), a = pop(); stack.push_back(a < b ? 1 : 0); break; }
        case Op::GT: { uint64_t b = pop(), a = pop(); stack.push_back(a > b ? 1 : 0); break; }
        case Op::LE: { uint64_t b = pop(), a = pop(); stack.push_back(a <= b ? 1 : 0); break; }
        case Op::GE: { uint64_t b = pop(), a = pop(); stack.push_back(a >= b ? 1 : 0); break; }
        case Op::ISZERO: { uint64_t a = pop(); stack.push_back(a == 0 ? 1 : 0); break; }
        case Op::SLOAD:
            stack.push_back(state.read(static_cast<uint32_t>(d.imms[0])));
            break;
        case Op::SSTORE: {
            uint64_t v = pop();
            state.write(static_cast<uint32_t>(d.imms[0]), v);
            break;
        }
        case Op::SLOADK: {
            uint64_t key = pop();
            stack.push_back(state.read(static_cast<uint32_t>(d.imms[0]), key));
            break;
        }
        case Op::SSTOREK: {
            uint64_t v = pop();
            uint64_t key = pop();
            state.write(static_cast<uint32_t>(d.imms[0]), key, v);
            break;
        }
        case Op::JUMP: {
            uint64_t target = pop();
            if (!jumpdests.count(static_cast<uint32_t>(target)))
                throw CompileError(ErrorCode::InvalidJump,
                                   "jump to non-JUMPDEST offset " + std::to_string(target));
            next = target;
            break;
        }
        case Op::JUMPI: {
            uint64_t target = pop();
            uint64_t cond = pop();
            if (cond) {
                if (!jumpdests.count(static_cast<uint32_t>(target)))
                    throw CompileError(ErrorCode::InvalidJump,
                                       "jump to non-JUMPDEST offset " + std::to_string(target));
                next = target;
            }
            break;
        }
        case Op::JUMPDEST:
            break;
        case Op::CALLER:
            stack.push_back(tx.sender);
            break;
        case Op::LOG: {
            uint32_t ev = static_cast<uint32_t>(d.imms[0]);
            size_t argc = static_cast<size_t>(d.imms[1]);
            EventRecord record;
            if (ev >= program.event_table.size())
                throw CompileError(ErrorCode::Internal, "event index out of range");
            record.name = program.event_table[ev].name;
            for (size_t i = 0; i < argc; ++i)
                record.args.push_back(pop());
            std::reverse(record.args.begin(), record.args.end());
            events.push_back(std::move(record));
            break;
        }
        case Op::REVERT: {
            uint32_t idx = static_cast<uint32_t>(d.imms[0]);
            out.result.reverted = true;
            out.result.revert_message =
                idx < program.string_table.size() ? program.string_table[idx] : "";
            out.result.storage = initial; // rollback
            return out;
        }
        case Op::RETURN: {
            uint64_t v = pop();
            out.result.value = v;
            out.result.storage = state;
            out.result.events = events;
            return out;
        }
        case Op::STOP:
            out.result.storage = state;
            out.result.events = events;
            return out;
        case Op::ZKCONST:
            break; // semantic no-op
        }
        pc = next;
    }
}

} // namespace zkmap
