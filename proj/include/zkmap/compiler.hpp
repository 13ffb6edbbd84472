// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/artifact.hpp"
#include "zkmap/emitter.hpp"
#include "zkmap/ir.hpp"
#include "zkmap/mapgen.hpp"
#include "zkmap/passes.hpp"
#include "zkmap/unit.hpp"

#include <string>

namespace zkmap {

struct StageTimes {
    double frontend_lowering_ms = 0;
    double passes_ms = 0;
    double backend_mapgen_ms = 0;
    double total_ms() const { return frontend_lowering_ms + passes_ms + backend_mapgen_ms; }
};

struct Compilation {
    CompilationUnit unit;
    IrModule module; // final, post-pass IR
    PassReport pass_report;
    BytecodeProgram program;
    OffsetLog log;
    MappingTable table;
    size_t synthetic_excluded = 0;
    StageTimes times;
};

/// Full pipeline: frontend, lowering, passes, emission, table build.
/// With mapping disabled the table stays empty and provenance bookkeeping is
/// skipped; the bytecode is byte-identical either way.
Compilation compile_source(const std::string& file_name, const std::string& text,
                           const PassConfig& config);

CompiledArtifact make_artifact(const Compilation& compilation);

} // namespace zkmap
