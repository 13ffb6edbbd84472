// SPDX-License-Identifier: Apache-2.0
#include "zkmap/mapgen.hpp"

#include "zkmap/diag.hpp"

#include <json.hpp>

#include <map>
#include <set>
#include <sstream>

namespace zkmap {

using nlohmann::json;

BuildTableResult build_table(const OffsetLog& log, const IrModule& module,
                             const BytecodeProgram& program,
                             const std::vector<std::string>& files) {
    (void)program;
    std::map<uint32_t, const IrInstr*> instrs;
    for (const auto& fn : module.functions)
        for (const auto& b : fn.blocks)
            for (const auto& i : b.instrs)
                instrs[i.ir_id] = &i;

    BuildTableResult out;
    out.table.files = files;
    for (const auto& rec : log.records) {
        if (rec.synthetic) {
            ++out.synthetic_excluded;
            continue;
        }
        auto it = instrs.find(rec.ir_id);
        if (it == instrs.end())
            throw CompileError(ErrorCode::DanglingIrId,
                               "offset log references ir_id " + std::to_string(rec.ir_id) +
                                   " absent from the final IR");
        const IrInstr& instr = *it->second;
        if (instr.prov.confidence == Confidence::Synthetic || !instr.prov.primary_span) {
            ++out.synthetic_excluded;
            continue;
        }
        MappingEntry e;
        e.span = *instr.prov.primary_span;
        e.ir_id = rec.ir_id;
        e.offset = rec.offset;
        e.jump = rec.jump;
        e.modifier_depth = instr.modifier_depth;
        e.zk_constraint = instr.prov.zk_constraint;
        e.confidence = instr.prov.confidence;
        out.table.entries.push_back(e);
    }
    return out;
}

std::optional<MappingEntry> query_offset(const MappingTable& table,
                                         const BytecodeProgram& program, uint32_t offset) {
    if (offset >= program.code.size())
        throw CompileError(ErrorCode::OffsetOutOfRange,
                           "offset " + std::to_string(offset) + " is past the end of code (" +
                               std::to_string(program.code.size()) + " bytes)");
    // resolve to the covering instruction start
    uint32_t start = 0;
    uint32_t cursor = 0;
    while (cursor <= offset) {
        start = cursor;
        cursor += static_cast<uint32_t>(decode_at(program.code, cursor).length);
    }
    for (const auto& e : table.entries)
        if (e.offset == start)
            return e;
    return std::nullopt;
}

std::vector<uint32_t> query_span(const MappingTable& table, const SourceSpan& span) {
    std::vector<uint32_t> out;
    for (const auto& e : table.entries) {
        auto rel = span_relation(e.span, span);
        if (rel == SpanRelation::Equal || rel == SpanRelation::AContainsB ||
            rel == SpanRelation::BContainsA)
            out.push_back(e.offset);
    }
    return out;
}

std::string ValidationReport::to_string() const {
    std::ostringstream out;
    for (const auto& v : violations) {
        out << v.check << ": " << v.detail;
        if (v.offset_a)
            out << " [offset 0x" << std::hex << *v.offset_a << std::dec << "]";
        if (v.offset_b)
            out << " [offset 0x" << std::hex << *v.offset_b << std::dec << "]";
        out << "\n";
    }
    return out.str();
}

ValidationReport validate_syntactic(const MappingTable& table,
                                    const std::vector<size_t>& file_lengths) {
    ValidationReport report;

    for (size_t i = 0; i + 1 < table.entries.size(); ++i) {
        if (table.entries[i].offset == table.entries[i + 1].offset)
            report.violations.push_back({"offset-uniqueness",
                                         "two entries share offset",
                                         table.entries[i].offset,
                                         table.entries[i + 1].offset});
        else if (table.entries[i].offset > table.entries[i + 1].offset)
            report.violations.push_back({"offset-order",
                                         "entries not sorted ascending",
                                         table.entries[i].offset,
                                         table.entries[i + 1].offset});
    }

    // overlap rule over the distinct span set
    std::map<SourceSpan, uint32_t> first_offset;
    for (const auto& e : table.entries)
        if (!first_offset.count(e.span))
            first_offset[e.span] = e.offset;
    std::vector<SourceSpan> spans;
    for (const auto& [span, off] : first_offset)
        spans.push_back(span);
    for (size_t i = 0; i < spans.size(); ++i) {
        for (size_t j = i + 1; j < spans.size(); ++j) {
            if (span_relation(spans[i], spans[j]) == SpanRelation::PartialOverlap) {
                std::ostringstream detail;
                detail << "spans (" << spans[i].start << "," << spans[i].length << ",f"
                       << spans[i].file << ") and (" << spans[j].start << "," << spans[j].length
                       << ",f" << spans[j].file << ") partially overlap";
                report.violations.push_back({"span-overlap", detail.str(),
                                             first_offset[spans[i]], first_offset[spans[j]]});
            }
        }
    }

    for (const auto& e : table.entries) {
        if (e.span.length < 1) {
            report.violations.push_back(
                {"span-invariant", "span length must be at least 1", e.offset, std::nullopt});
            continue;
        }
        if (e.span.file >= table.files.size()) {
            report.violations.push_back(
                {"span-invariant", "file index out of range", e.offset, std::nullopt});
            continue;
        }
        if (e.span.file < file_lengths.size() &&
            e.span.end() > file_lengths[e.span.file])
            report.violations.push_back(
                {"span-invariant", "span extends past the end of its file", e.offset,
                 std::nullopt});
    }
    return report;
}

ValidationReport validate_structural(const MappingTable& table, const StatementRegistry& registry,
                                     const SpanIndex& span_index, const IrModule& module,
                                     const BytecodeProgram& program) {
    ValidationReport report;

    // (a) registered spans only
    for (const auto& e : table.entries) {
        if (!span_index.contains(e.span)) {
            std::ostringstream detail;
            detail << "span (" << e.span.start << "," << e.span.length << ",f" << e.span.file
                   << ") is not a registered statement/expression span";
            report.violations.push_back({"registry-membership", detail.str(), e.offset,
                                         std::nullopt});
        }
    }

    // (b) ir_ids present in the final IR
    std::set<uint32_t> ids;
    for (const auto& fn : module.functions)
        for (const auto& b : fn.blocks)
            for (const auto& i : b.instrs)
                ids.insert(i.ir_id);
    for (const auto& e : table.entries)
        if (!ids.count(e.ir_id))
            report.violations.push_back({"dangling-ir-id",
                                         "entry references ir_id " + std::to_string(e.ir_id) +
                                             " not present in the final IR",
                                         e.offset, std::nullopt});

    // (c) control-flow consistency within bytecode basic blocks: consecutive
    // distinct statements must be connected in the statement CFG (either
    // direction; instruction scheduling may move a definition across
    // statements)
    std::map<uint32_t, const MappingEntry*> by_offset;
    for (const auto& e : table.entries)
        by_offset[e.offset] = &e;

    uint32_t offset = 0;
    std::optional<uint32_t> prev_stmt;
    std::optional<uint32_t> prev_offset;
    std::set<uint32_t> leaders; // block leader offsets
    leaders.insert(0);
    {
        uint32_t scan = 0;
        while (scan < program.code.size()) {
            DecodedInstr d = decode_at(program.code, scan);
            if (d.op == Op::JUMPDEST)
                leaders.insert(scan);
            if (d.op == Op::JUMP || d.op == Op::JUMPI || d.op == Op::RETURN ||
                d.op == Op::REVERT || d.op == Op::STOP)
                leaders.insert(scan + d.length);
            scan += d.length;
        }
    }
    while (offset < program.code.size()) {
        DecodedInstr d = decode_at(program.code, offset);
        if (leaders.count(offset)) {
            prev_stmt.reset();
            prev_offset.reset();
        }
        auto found = by_offset.find(offset);
        if (found != by_offset.end()) {
            auto stmt = registry.statement_at(found->second->span);
            if (stmt) {
                if (prev_stmt && *prev_stmt != *stmt &&
                    !registry.connected(*prev_stmt, *stmt)) {
                    std::ostringstream detail;
                    detail << "statements " << *prev_stmt << " and " << *stmt
                           << " are adjacent in a basic block but not connected in the "
                              "statement CFG";
                    report.violations.push_back(
                        {"cfg-consistency", detail.str(), prev_offset, found->second->offset});
                }
                prev_stmt = stmt;
                prev_offset = offset;
            }
        }
        offset += d.length;
    }

    // (d) Into jumps enter functions that also contain an OutOf
    std::map<uint32_t, std::pair<uint32_t, uint32_t>> fn_ranges; // entry -> [start, end)
    {
        std::vector<uint32_t> entries;
        for (const auto& [key, entry] : program.function_table)
            entries.push_back(entry);
        std::sort(entries.begin(), entries.end());
        for (size_t i = 0; i < entries.size(); ++i) {
            uint32_t end = i + 1 < entries.size() ? entries[i + 1]
                                                  : static_cast<uint32_t>(program.code.size());
            fn_ranges[entries[i]] = {entries[i], end};
        }
    }
    auto out_of_between = [&](uint32_t start, uint32_t end) {
        for (const auto& e : table.entries)
            if (e.offset >= start && e.offset < end && e.jump == JumpType::OutOf)
                return true;
        return false;
    };
    for (const auto& e : table.entries) {
        if (e.jump != JumpType::Into)
            continue;
        // the jump target is the immediately preceding PUSH immediate
        std::optional<uint64_t> target;
        uint32_t scan = 0;
        std::optional<DecodedInstr> prev;
        while (scan < program.code.size()) {
            DecodedInstr d = decode_at(program.code, scan);
            if (d.offset == e.offset && prev && prev->op == Op::PUSH)
                target = prev->imms[0];
            prev = d;
            scan += d.length;
        }
        if (!target) {
            report.violations.push_back({"jump-pairing",
                                         "Into jump without a statically known target",
                                         e.offset, std::nullopt});
            continue;
        }
        // locate the containing internal function: the greatest range start
        // at or below the target
        bool paired = false;
        uint32_t range_start = 0, range_end = static_cast<uint32_t>(program.code.size());
        for (const auto& [entry, range] : fn_ranges)
            if (range.first <= *target)
                std::tie(range_start, range_end) = range;
        // internal functions are not in the function table; fall back to the
        // code region between the surrounding table entries
        paired = out_of_between(range_start, range_end);
        if (!paired)
            report.violations.push_back({"jump-pairing",
                                         "Into jump targets a region with no OutOf return",
                                         e.offset, std::nullopt});
    }
    return report;
}

static json entry_to_json(const MappingEntry& e) {
    json j;
    j["s"] = e.span.start;
    j["l"] = e.span.length;
    j["f"] = e.span.file;
    j["ir_id"] = e.ir_id;
    j["offset"] = e.offset;
    j["jump"] = std::string(1, jump_type_char(e.jump));
    j["modifier_depth"] = e.modifier_depth;
    if (e.zk_constraint)
        j["zk_constraint"] = *e.zk_constraint;
    else
        j["zk_constraint"] = nullptr;
    j["confidence"] = std::string(1, confidence_letter(e.confidence));
    return j;
}

static MappingEntry entry_from_json(const json& j) {
    MappingEntry e;
    e.span.start = j.at("s").get<uint32_t>();
    e.span.length = j.at("l").get<uint32_t>();
    e.span.file = j.at("f").get<uint32_t>();
    e.ir_id = j.at("ir_id").get<uint32_t>();
    e.offset = j.at("offset").get<uint32_t>();
    std::string jump = j.at("jump").get<std::string>();
    auto jt = jump.size() == 1 ? jump_type_from_char(jump[0]) : std::nullopt;
    if (!jt)
        throw CompileError(ErrorCode::TableMismatch, "bad jump type in rich source map");
    e.jump = *jt;
    e.modifier_depth = j.at("modifier_depth").get<uint32_t>();
    if (!j.at("zk_constraint").is_null())
        e.zk_constraint = j.at("zk_constraint").get<uint32_t>();
    std::string conf = j.at("confidence").get<std::string>();
    auto c = conf.size() == 1 ? confidence_from_letter(conf[0]) : std::nullopt;
    if (!c)
        throw CompileError(ErrorCode::TableMismatch, "bad confidence in rich source map");
    e.confidence = *c;
    return e;
}

std::string export_rich(const MappingTable& table) {
    json arr = json::array();
    for (const auto& e : table.entries)
        arr.push_back(entry_to_json(e));
    return arr.dump();
}

MappingTable import_rich(const std::string& text, std::vector<std::string> files) {
    MappingTable table;
    table.files = std::move(files);
    json arr = json::parse(text);
    for (const auto& j : arr)
        table.entries.push_back(entry_from_json(j));
    return table;
}

std::string export_table(const MappingTable& table, ExportFormat format) {
    return format == ExportFormat::Rich ? export_rich(table) : encode_compressed(table);
}

} // namespace zkmap
