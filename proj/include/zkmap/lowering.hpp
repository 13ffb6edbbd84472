// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/ir.hpp"
#include "zkmap/unit.hpp"

namespace zkmap {

struct LoweringOptions {
    /// When false, span/confidence/inline-chain bookkeeping is skipped
    /// (statement ids, modifier depths and zk indices are semantic metadata
    /// and stay on). Emitted bytecode is identical either way.
    bool mapping_enabled = true;
};

/// Lower the resolved AST to SSA IR. Modifier bodies are spliced around the
/// `_;` placeholder (function body at modifier_depth 0, the k-th modifier
/// layer at depth k), `require` expands to a conditional revert, and every
/// instruction carries Exact provenance for its originating expression.
IrModule lower(CompilationUnit& unit, const LoweringOptions& options = {});

/// Number require-derived branches 1..n per contract, in lowering order,
/// storing the index in provenance.zk_constraint. Idempotent.
void assign_constraint_indices(IrModule& module);

} // namespace zkmap
