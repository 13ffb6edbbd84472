// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/span.hpp"

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace zkmap {

/// Stack-machine instruction set. One-byte opcodes; immediates are
/// big-endian with the widths listed below. Jump targets are absolute
/// offsets pushed as PUSH immediates.
enum class Op : uint8_t {
    PUSH = 0x01,   // imm8: 64-bit word
    POP = 0x02,
    DUP = 0x03,    // imm1: n, duplicates the n-th item from the top (1-based)
    SWAP = 0x04,   // imm1: n, swaps top with the (n+1)-th item
    ADD = 0x10,
    SUB = 0x11,
    MUL = 0x12,
    DIV = 0x13,
    MOD = 0x14,
    AND = 0x15,
    OR = 0x16,
    XOR = 0x17,
    SHL = 0x18,
    SHR = 0x19,
    NOT = 0x1A,
    EQ = 0x20,
    NE = 0x21,
    LT = 0x22,
    GT = 0x23,
    LE = 0x24,
    GE = 0x25,
    ISZERO = 0x26,
    SLOAD = 0x30,   // imm2: slot
    SSTORE = 0x31,  // imm2: slot; pops value
    SLOADK = 0x32,  // imm2: slot; pops key
    SSTOREK = 0x33, // imm2: slot; pops value, then key
    JUMP = 0x40,    // pops target
    JUMPI = 0x41,   // pops target, then condition
    JUMPDEST = 0x42,
    CALLER = 0x43,  // pushes the transaction sender
    LOG = 0x50,     // imm2: event, imm1: argc; pops argc values
    REVERT = 0x51,  // imm2: string index
    RETURN = 0x52,  // pops the return value and halts
    STOP = 0x53,    // halts with no value
    ZKCONST = 0x60, // imm4: constraint index; semantic no-op
};

struct OpInfo {
    const char* name;
    std::vector<uint8_t> imm_widths; // byte width of each immediate
};

/// nullptr for undefined opcodes.
const OpInfo* op_info(uint8_t opcode);
std::optional<Op> op_from_name(const std::string& name);
size_t instruction_length(uint8_t opcode);

struct DecodedInstr {
    Op op = Op::STOP;
    std::vector<uint64_t> imms;
    uint32_t offset = 0;
    uint32_t length = 0;
};

/// Decode the instruction starting at `offset`. Throws
/// CompileError(TruncatedImmediate) on malformed input.
DecodedInstr decode_at(const std::vector<uint8_t>& code, uint32_t offset);

struct EventSig {
    std::string name;
    uint32_t param_count = 0;
};

struct BytecodeProgram {
    std::vector<uint8_t> code;
    std::map<std::string, uint32_t> function_table; // "name/arity" -> entry offset
    std::vector<std::string> string_table;
    std::vector<EventSig> event_table;
};

/// One record per emitted bytecode instruction, in emission order.
/// `ir_id` names the IR instruction the bytes implement; stack management
/// inserted by the emitter carries the id of the instruction it serves.
/// Records with `synthetic` set belong to no IR instruction (frame setup).
struct OffsetLogRecord {
    uint32_t offset = 0;
    uint32_t ir_id = 0;
    bool synthetic = false;
    JumpType jump = JumpType::Regular;
};

struct OffsetLog {
    std::vector<OffsetLogRecord> records;
};

} // namespace zkmap
