// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/ir.hpp"
#include "zkmap/unit.hpp"

#include <optional>
#include <string>
#include <vector>

namespace zkmap {

enum class PassKind : uint8_t {
    ConstFold,
    Dce,
    Inline,
    Unroll,
    Reorder,
    CfgRestructure,
    ZkInstrument,
};

const char* pass_name(PassKind k);
std::optional<PassKind> pass_from_name(const std::string& name);
std::vector<PassKind> default_pass_order();

struct PassConfig {
    std::vector<PassKind> order = default_pass_order();
    uint32_t unroll_max_trips = 8;
    uint32_t inline_max_instrs = 40;
    /// Off: provenance updates are skipped entirely (overhead measurement).
    bool mapping_enabled = true;

    /// Throws CompileError on duplicate passes or zk_instrument not last.
    void validate() const;

    static PassConfig none() {
        PassConfig c;
        c.order.clear();
        return c;
    }
    static PassConfig single(PassKind k) {
        PassConfig c;
        c.order = {k};
        return c;
    }
};

struct PassCounts {
    size_t created = 0;
    size_t deleted = 0;
    size_t moved = 0;
    size_t downgrades = 0;              // Exact -> Approximate
    std::vector<uint32_t> no_mapping;   // ir_ids that will have no mapping entry
};

struct PassReport {
    std::vector<std::pair<PassKind, PassCounts>> passes;

    size_t total_created() const;
    size_t total_deleted() const;
};

struct PassContext {
    const CompilationUnit* unit = nullptr;
    bool mapping_enabled = true;
    uint32_t unroll_max_trips = 8;
    uint32_t inline_max_instrs = 40;
};

PassCounts pass_const_fold(IrModule& module, const PassContext& ctx);
PassCounts pass_dce(IrModule& module, const PassContext& ctx);
PassCounts pass_inline(IrModule& module, const PassContext& ctx);
PassCounts pass_unroll(IrModule& module, const PassContext& ctx);
PassCounts pass_reorder(IrModule& module, const PassContext& ctx);
PassCounts pass_cfg_restructure(IrModule& module, const PassContext& ctx);
PassCounts pass_zk_instrument(IrModule& module, const PassContext& ctx);

/// Run the configured passes in order; SSA validity is re-checked after each
/// one. Deterministic for identical inputs.
PassReport run_pipeline(IrModule& module, const PassConfig& config, const CompilationUnit& unit);

} // namespace zkmap
