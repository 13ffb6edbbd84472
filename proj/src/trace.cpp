// SPDX-License-Identifier: Apache-2.0
#include "zkmap/trace.hpp"

#include "zkmap/diag.hpp"

#include <map>

namespace zkmap {

SourceTrace reconstruct_trace(const std::vector<uint32_t>& offset_trace,
                              const MappingTable& table, const StatementRegistry& registry,
                              size_t code_size) {
    std::map<uint32_t, const MappingEntry*> by_offset;
    for (const auto& e : table.entries)
        by_offset[e.offset] = &e;

    SourceTrace out;
    for (uint32_t offset : offset_trace) {
        if (offset >= code_size)
            throw CompileError(ErrorCode::TableMismatch,
                               "trace offset " + std::to_string(offset) +
                                   " outside the program");
        auto found = by_offset.find(offset);
        if (found == by_offset.end()) {
            ++out.dropped;
            continue;
        }
        auto stmt = registry.statement_at(found->second->span);
        if (!stmt) {
            ++out.dropped;
            continue;
        }
        if (!out.events.empty() && out.events.back().statement_id == *stmt) {
            if (!out.events.back().zk_constraint && found->second->zk_constraint)
                out.events.back().zk_constraint = found->second->zk_constraint;
            continue;
        }
        SourceTraceEvent event;
        event.statement_id = *stmt;
        event.span = registry.statement(*stmt).span;
        event.zk_constraint = found->second->zk_constraint;
        out.events.push_back(event);
    }
    return out;
}

} // namespace zkmap
