// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/span.hpp"

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace zkmap {

/// One row of the unified mapping table: a source span (s, l, f), the IR
/// instruction id I, the bytecode offset B, plus jump type, modifier depth
/// and zk metadata.
struct MappingEntry {
    SourceSpan span;
    uint32_t ir_id = 0;
    uint32_t offset = 0;
    JumpType jump = JumpType::Regular;
    uint32_t modifier_depth = 0;
    std::optional<uint32_t> zk_constraint;
    Confidence confidence = Confidence::Exact;

    friend bool operator==(const MappingEntry&, const MappingEntry&) = default;
};

/// Entries sorted strictly ascending by offset; at most one entry per
/// bytecode instruction.
struct MappingTable {
    std::vector<MappingEntry> entries;
    std::vector<std::string> files;

    friend bool operator==(const MappingTable&, const MappingTable&) = default;
};

/// The (s, l, f, j, m) stream carried by the legacy compressed format.
/// zk metadata and confidence are not representable here; the rich export is
/// the lossless one.
struct SourceMapRecord {
    uint32_t start = 0;
    uint32_t length = 0;
    uint32_t file = 0;
    JumpType jump = JumpType::Regular;
    uint32_t modifier_depth = 0;

    friend bool operator==(const SourceMapRecord&, const SourceMapRecord&) = default;
};

struct DecodedSourceMap {
    std::vector<SourceMapRecord> records;
    std::vector<std::string> files;
};

class CodecError : public std::runtime_error {
public:
    enum class Kind { MalformedField, DanglingInheritance };

    CodecError(Kind kind, size_t entry_index, std::string message)
        : std::runtime_error(std::move(message)), kind(kind), entry_index(entry_index) {}

    Kind kind;
    size_t entry_index;
};

/// Encode as solc-style compressed text: entries joined by ';', fields
/// "s:l:f:j:m". An entry fully equal to its predecessor collapses to the
/// empty string; otherwise fields are written up to the last one that
/// changed, never fewer than the s:l:f triple.
std::string encode_compressed(const MappingTable& table);

/// Inverse of encode_compressed. Omitted fields (empty or truncated)
/// inherit from the previous entry; the first entry must be complete.
DecodedSourceMap decode_compressed(const std::string& text, std::vector<std::string> files);

std::vector<SourceMapRecord> table_records(const MappingTable& table);

} // namespace zkmap
