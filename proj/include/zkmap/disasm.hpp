// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/bytecode.hpp"

#include <string>
#include <vector>

namespace zkmap {

/// One line per instruction: hex offset, mnemonic, immediates.
/// Re-assembling the listing reproduces the bytes exactly.
std::string disassemble(const BytecodeProgram& program);
std::string disassemble(const std::vector<uint8_t>& code);

/// Inverse of disassemble (offsets are checked against the rebuilt stream).
std::vector<uint8_t> assemble(const std::string& listing);

/// Static check that every statically-known jump target (PUSH immediately
/// followed by JUMP/JUMPI, and every function table entry) lands on a
/// JUMPDEST. Returns the list of violating offsets.
std::vector<uint32_t> verify_jump_targets(const BytecodeProgram& program);

} // namespace zkmap
