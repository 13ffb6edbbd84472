// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/bytecode.hpp"
#include "zkmap/ir.hpp"
#include "zkmap/mapping.hpp"
#include "zkmap/registry.hpp"

#include <optional>
#include <string>
#include <vector>

namespace zkmap {

struct BuildTableResult {
    MappingTable table;
    size_t synthetic_excluded = 0; // logged offsets with no user-visible origin
};

/// Consolidate the offset log and instruction provenance into the unified
/// mapping table. One entry per logged offset whose instruction has
/// non-Synthetic provenance with a present span; everything else is counted
/// as excluded. Throws CompileError(DanglingIrId) when the log names an
/// instruction missing from the final IR.
BuildTableResult build_table(const OffsetLog& log, const IrModule& module,
                             const BytecodeProgram& program,
                             const std::vector<std::string>& files);

/// Exact-match lookup by instruction start; offsets inside an instruction
/// resolve to the covering instruction's entry. Unmapped instructions yield
/// nullopt. Throws CompileError(OffsetOutOfRange) past the code end.
std::optional<MappingEntry> query_offset(const MappingTable& table,
                                         const BytecodeProgram& program, uint32_t offset);

/// All offsets whose entry span Equals, is contained in, or contains `span`.
std::vector<uint32_t> query_span(const MappingTable& table, const SourceSpan& span);

struct Violation {
    std::string check;
    std::string detail;
    std::optional<uint32_t> offset_a;
    std::optional<uint32_t> offset_b;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

/// Syntactic validation: per-offset uniqueness and ascending order; any two
/// distinct spans must be Disjoint, Equal or properly nested; spans must be
/// well formed against the file list.
ValidationReport validate_syntactic(const MappingTable& table,
                                    const std::vector<size_t>& file_lengths);

/// Structural validation: spans are registered statement/expression spans,
/// ir_ids exist in the final IR, consecutive distinct statements within a
/// bytecode basic block are connected in the statement CFG, and Into jumps
/// pair with an OutOf in the callee they enter.
ValidationReport validate_structural(const MappingTable& table, const StatementRegistry& registry,
                                     const SpanIndex& span_index, const IrModule& module,
                                     const BytecodeProgram& program);

/// Rich (lossless) export: a JSON array of full entries. Files travel in the
/// artifact container, not in this text.
std::string export_rich(const MappingTable& table);
MappingTable import_rich(const std::string& text, std::vector<std::string> files);

enum class ExportFormat { Rich, Compressed };
std::string export_table(const MappingTable& table, ExportFormat format);

} // namespace zkmap
