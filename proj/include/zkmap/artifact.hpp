// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/bytecode.hpp"
#include "zkmap/mapping.hpp"

#include <string>
#include <vector>

namespace zkmap {

struct SourceFileEntry {
    std::string name;
    std::string text;
};

/// The on-disk compilation container (`.zkb.json`). Self-contained: sources
/// are embedded so queries, traces and validation never need external files.
struct CompiledArtifact {
    uint32_t version = 1;
    std::vector<SourceFileEntry> source_files;
    BytecodeProgram program;
    MappingTable table;
    size_t synthetic_excluded = 0;
    std::string sourcemap_compressed;

    std::vector<std::string> file_names() const;
    std::vector<size_t> file_lengths() const;
};

std::string artifact_to_json(const CompiledArtifact& artifact);
CompiledArtifact artifact_from_json(const std::string& text);

void save_artifact(const CompiledArtifact& artifact, const std::string& path);
CompiledArtifact load_artifact(const std::string& path);

std::string bytes_to_hex(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> hex_to_bytes(const std::string& hex);

} // namespace zkmap
