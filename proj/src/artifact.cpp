// SPDX-License-Identifier: Apache-2.0
#include "zkmap/artifact.hpp"

#include "zkmap/diag.hpp"
#include "zkmap/mapgen.hpp"

#include <json.hpp>

#include <fstream>

namespace zkmap {

using nlohmann::json;

std::vector<std::string> CompiledArtifact::file_names() const {
    std::vector<std::string> names;
    for (const auto& f : source_files)
        names.push_back(f.name);
    return names;
}

std::vector<size_t> CompiledArtifact::file_lengths() const {
    std::vector<size_t> lengths;
    for (const auto& f : source_files)
        lengths.push_back(f.text.size());
    return lengths;
}

std::string bytes_to_hex(const std::vector<uint8_t>& bytes) {
    static const char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (uint8_t b : bytes) {
        out += digits[b >> 4];
        out += digits[b & 0xF];
    }
    return out;
}

std::vector<uint8_t> hex_to_bytes(const std::string& hex) {
    if (hex.size() % 2 != 0)
        throw CompileError(ErrorCode::TableMismatch, "odd-length hex string");
    auto nibble = [](char c) -> int {
        if (c >= '0' && c <= '9')
            return c - '0';
        if (c >= 'a' && c <= 'f')
            return c - 'a' + 10;
        if (c >= 'A' && c <= 'F')
            return c - 'A' + 10;
        return -1;
    };
    std::vector<uint8_t> out;
    out.reserve(hex.size() / 2);
    for (size_t i = 0; i < hex.size(); i += 2) {
        int hi = nibble(hex[i]), lo = nibble(hex[i + 1]);
        if (hi < 0 || lo < 0)
            throw CompileError(ErrorCode::TableMismatch, "bad hex digit");
        out.push_back(static_cast<uint8_t>((hi << 4) | lo));
    }
    return out;
}

std::string artifact_to_json(const CompiledArtifact& a) {
    json j;
    j["version"] = a.version;
    j["source_files"] = json::array();
    for (const auto& f : a.source_files)
        j["source_files"].push_back({{"name", f.name}, {"text", f.text}});
    j["bytecode_hex"] = bytes_to_hex(a.program.code);
    j["function_table"] = json::object();
    for (const auto& [key, offset] : a.program.function_table)
        j["function_table"][key] = offset;
    j["string_table"] = a.program.string_table;
    j["event_table"] = json::array();
    for (const auto& ev : a.program.event_table)
        j["event_table"].push_back({{"name", ev.name}, {"params", ev.param_count}});
    j["sourcemap"] = {{"entries", json::parse(export_rich(a.table))},
                      {"synthetic_excluded", a.synthetic_excluded}};
    j["sourcemap_compressed"] = a.sourcemap_compressed;
    return j.dump(2) + "\n";
}

CompiledArtifact artifact_from_json(const std::string& text) {
    CompiledArtifact a;
    json j = json::parse(text);
    a.version = j.at("version").get<uint32_t>();
    for (const auto& f : j.at("source_files"))
        a.source_files.push_back({f.at("name").get<std::string>(), f.at("text").get<std::string>()});
    a.program.code = hex_to_bytes(j.at("bytecode_hex").get<std::string>());
    for (const auto& [key, value] : j.at("function_table").items())
        a.program.function_table[key] = value.get<uint32_t>();
    a.program.string_table = j.at("string_table").get<std::vector<std::string>>();
    for (const auto& ev : j.at("event_table"))
        a.program.event_table.push_back(
            {ev.at("name").get<std::string>(), ev.at("params").get<uint32_t>()});
    a.table = import_rich(j.at("sourcemap").at("entries").dump(), a.file_names());
    a.synthetic_excluded = j.at("sourcemap").at("synthetic_excluded").get<size_t>();
    a.sourcemap_compressed = j.at("sourcemap_compressed").get<std::string>();
    return a;
}

void save_artifact(const CompiledArtifact& artifact, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw CompileError(ErrorCode::Internal, "cannot write " + path);
    out << artifact_to_json(artifact);
}

CompiledArtifact load_artifact(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw CompileError(ErrorCode::Internal, "cannot read " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return artifact_from_json(text);
}

} // namespace zkmap
