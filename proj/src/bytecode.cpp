// SPDX-License-Identifier: Apache-2.0
#include "zkmap/bytecode.hpp"

#include "zkmap/diag.hpp"

#include <map>

namespace zkmap {

static const std::map<uint8_t, OpInfo>& op_table() {
    static const std::map<uint8_t, OpInfo> table = {
        {uint8_t(Op::PUSH), {"PUSH", {8}}},
        {uint8_t(Op::POP), {"POP", {}}},
        {uint8_t(Op::DUP), {"DUP", {1}}},
        {uint8_t(Op::SWAP), {"SWAP", {1}}},
        {uint8_t(Op::ADD), {"ADD", {}}},
        {uint8_t(Op::SUB), {"SUB", {}}},
        {uint8_t(Op::MUL), {"MUL", {}}},
        {uint8_t(Op::DIV), {"DIV", {}}},
        {uint8_t(Op::MOD), {"MOD", {}}},
        {uint8_t(Op::AND), {"AND", {}}},
        {uint8_t(Op::OR), {"OR", {}}},
        {uint8_t(Op::XOR), {"XOR", {}}},
        {uint8_t(Op::SHL), {"SHL", {}}},
        {uint8_t(Op::SHR), {"SHR", {}}},
        {uint8_t(Op::NOT), {"NOT", {}}},
        {uint8_t(Op::EQ), {"EQ", {}}},
        {uint8_t(Op::NE), {"NE", {}}},
        {uint8_t(Op::LT), {"LT", {}}},
        {uint8_t(Op::GT), {"GT", {}}},
        {uint8_t(Op::LE), {"LE", {}}},
        {uint8_t(Op::GE), {"GE", {}}},
        {uint8_t(Op::ISZERO), {"ISZERO", {}}},
        {uint8_t(Op::SLOAD), {"SLOAD", {2}}},
        {uint8_t(Op::SSTORE), {"SSTORE", {2}}},
        {uint8_t(Op::SLOADK), {"SLOADK", {2}}},
        {uint8_t(Op::SSTOREK), {"SSTOREK", {2}}},
        {uint8_t(Op::JUMP), {"JUMP", {}}},
        {uint8_t(Op::JUMPI), {"JUMPI", {}}},
        {uint8_t(Op::JUMPDEST), {"JUMPDEST", {}}},
        {uint8_t(Op::CALLER), {"CALLER", {}}},
        {uint8_t(Op::LOG), {"LOG", {2, 1}}},
        {uint8_t(Op::REVERT), {"REVERT", {2}}},
        {uint8_t(Op::RETURN), {"RETURN", {}}},
        {uint8_t(Op::STOP), {"STOP", {}}},
        {uint8_t(Op::ZKCONST), {"ZKCONST", {4}}},
    };
    return table;
}

const OpInfo* op_info(uint8_t opcode) {
    auto it = op_table().find(opcode);
    return it == op_table().end() ? nullptr : &it->second;
}

std::optional<Op> op_from_name(const std::string& name) {
    for (const auto& [code, info] : op_table())
        if (name == info.name)
            return Op(code);
    return std::nullopt;
}

size_t instruction_length(uint8_t opcode) {
    const OpInfo* info = op_info(opcode);
    if (!info)
        return 0;
    size_t len = 1;
    for (uint8_t w : info->imm_widths)
        len += w;
    return len;
}

DecodedInstr decode_at(const std::vector<uint8_t>& code, uint32_t offset) {
    if (offset >= code.size())
        throw CompileError(ErrorCode::TruncatedImmediate,
                           "decode past end of code at offset " + std::to_string(offset));
    uint8_t opcode = code[offset];
    const OpInfo* info = op_info(opcode);
    if (!info)
        throw CompileError(ErrorCode::TruncatedImmediate,
                           "undefined opcode 0x" + std::to_string(opcode) + " at offset " +
                               std::to_string(offset));
    DecodedInstr out;
    out.op = Op(opcode);
    out.offset = offset;
    uint32_t pos = offset + 1;
    for (uint8_t w : info->imm_widths) {
        if (pos + w > code.size())
            throw CompileError(ErrorCode::TruncatedImmediate,
                               "truncated immediate at offset " + std::to_string(offset));
        uint64_t v = 0;
        for (uint8_t b = 0; b < w; ++b)
            v = (v << 8) | code[pos + b];
        out.imms.push_back(v);
        pos += w;
    }
    out.length = pos - offset;
    return out;
}

} // namespace zkmap
