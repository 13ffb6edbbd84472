// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/mapping.hpp"
#include "zkmap/registry.hpp"

#include <optional>
#include <vector>

namespace zkmap {

struct SourceTraceEvent {
    uint32_t statement_id = 0;
    SourceSpan span; // the statement's registered span
    std::optional<uint32_t> zk_constraint;

    friend bool operator==(const SourceTraceEvent&, const SourceTraceEvent&) = default;
};

struct SourceTrace {
    std::vector<SourceTraceEvent> events;
    size_t dropped = 0; // executed offsets with no usable mapping
};

/// Join an executed offset trace with the mapping table and statement
/// registry: unmapped offsets are dropped (and counted), consecutive
/// duplicate statements collapse into one event. Throws
/// CompileError(TableMismatch) when an offset lies outside the program.
SourceTrace reconstruct_trace(const std::vector<uint32_t>& offset_trace,
                              const MappingTable& table, const StatementRegistry& registry,
                              size_t code_size);

} // namespace zkmap
