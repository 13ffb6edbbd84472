// SPDX-License-Identifier: Apache-2.0
#include "zkmap/disasm.hpp"

#include "zkmap/diag.hpp"

#include <set>
#include <sstream>

namespace zkmap {

static std::string hex(uint64_t v, int min_digits = 1) {
    std::ostringstream out;
    out << std::hex << v;
    std::string s = out.str();
    while (static_cast<int>(s.size()) < min_digits)
        s = "0" + s;
    return "0x" + s;
}

std::string disassemble(const std::vector<uint8_t>& code) {
    std::ostringstream out;
    uint32_t offset = 0;
    while (offset < code.size()) {
        DecodedInstr d = decode_at(code, offset);
        out << hex(offset, 4) << " " << op_info(static_cast<uint8_t>(d.op))->name;
        for (uint64_t v : d.imms)
            out << " " << hex(v);
        out << "\n";
        offset += d.length;
    }
    return out.str();
}

std::string disassemble(const BytecodeProgram& program) { return disassemble(program.code); }

std::vector<uint8_t> assemble(const std::string& listing) {
    std::vector<uint8_t> code;
    std::istringstream in(listing);
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::istringstream ls(line);
        std::string offset_tok, mnemonic;
        if (!(ls >> offset_tok))
            continue; // blank line
        if (!(ls >> mnemonic))
            throw CompileError(ErrorCode::TruncatedImmediate,
                               "line " + std::to_string(line_no) + ": missing mnemonic");
        auto op = op_from_name(mnemonic);
        if (!op)
            throw CompileError(ErrorCode::TruncatedImmediate,
                               "line " + std::to_string(line_no) + ": unknown mnemonic '" +
                                   mnemonic + "'");
        uint64_t stated_offset = std::stoull(offset_tok, nullptr, 16);
        if (stated_offset != code.size())
            throw CompileError(ErrorCode::TruncatedImmediate,
                               "line " + std::to_string(line_no) + ": offset mismatch");
        const OpInfo* info = op_info(static_cast<uint8_t>(*op));
        code.push_back(static_cast<uint8_t>(*op));
        for (uint8_t width : info->imm_widths) {
            std::string imm_tok;
            if (!(ls >> imm_tok))
                throw CompileError(ErrorCode::TruncatedImmediate,
                                   "line " + std::to_string(line_no) + ": missing immediate");
            uint64_t v = std::stoull(imm_tok, nullptr, 16);
            for (int b = width - 1; b >= 0; --b)
                code.push_back(static_cast<uint8_t>((v >> (8 * b)) & 0xFF));
        }
    }
    return code;
}

std::vector<uint32_t> verify_jump_targets(const BytecodeProgram& program) {
    std::set<uint32_t> jumpdests;
    uint32_t offset = 0;
    std::vector<DecodedInstr> instrs;
    while (offset < program.code.size()) {
        DecodedInstr d = decode_at(program.code, offset);
        if (d.op == Op::JUMPDEST)
            jumpdests.insert(offset);
        instrs.push_back(d);
        offset += d.length;
    }

    std::vector<uint32_t> violations;
    for (size_t i = 0; i + 1 < instrs.size(); ++i) {
        if (instrs[i].op != Op::PUSH)
            continue;
        if (instrs[i + 1].op != Op::JUMP && instrs[i + 1].op != Op::JUMPI)
            continue;
        if (!jumpdests.count(static_cast<uint32_t>(instrs[i].imms[0])))
            violations.push_back(instrs[i].offset);
    }
    for (const auto& [name, entry] : program.function_table)
        if (!jumpdests.count(entry))
            violations.push_back(entry);
    return violations;
}

} // namespace zkmap
