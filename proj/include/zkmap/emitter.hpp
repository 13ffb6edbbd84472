// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/bytecode.hpp"
#include "zkmap/ir.hpp"

namespace zkmap {

struct EmitResult {
    BytecodeProgram program;
    OffsetLog log;
};

/// Emit stack-machine bytecode for the final IR. Deterministic: the same IR
/// always produces the same bytes. Every emitted instruction is logged with
/// the ir_id it implements; DUP/SWAP/POP shuffles carry the id of the
/// instruction they serve. Non-inlined calls log their entry jump as Into
/// and the callee's return jump as OutOf.
EmitResult emit(const IrModule& module);

} // namespace zkmap
