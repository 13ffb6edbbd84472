// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/bytecode.hpp"
#include "zkmap/interpreter.hpp"

namespace zkmap {

struct VmOutcome {
    ExecResult result;
    /// Offset of every executed instruction, in execution order.
    std::vector<uint32_t> offset_trace;
};

inline constexpr uint64_t kVmStepLimit = 10'000'000;

/// Bytecode machine for the backend instruction set. Same ExecResult
/// contract as interpret_source; InvalidJump/StackUnderflow/StepLimit signal
/// compiler bugs, not transaction failures.
VmOutcome run_vm(const BytecodeProgram& program, const TxInput& tx, const Storage& storage);

} // namespace zkmap
