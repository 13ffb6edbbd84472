// SPDX-License-Identifier: Apache-2.0
#include "zkmap/mapping.hpp"

#include <array>
#include <charconv>

namespace zkmap {

std::vector<SourceMapRecord> table_records(const MappingTable& table) {
    std::vector<SourceMapRecord> out;
    out.reserve(table.entries.size());
    for (const auto& e : table.entries)
        out.push_back({e.span.start, e.span.length, e.span.file, e.jump, e.modifier_depth});
    return out;
}

static std::array<std::string, 5> record_fields(const SourceMapRecord& r) {
    return {std::to_string(r.start), std::to_string(r.length), std::to_string(r.file),
            std::string(1, jump_type_char(r.jump)), std::to_string(r.modifier_depth)};
}

std::string encode_compressed(const MappingTable& table) {
    std::string out;
    std::optional<std::array<std::string, 5>> prev;
    for (const auto& rec : table_records(table)) {
        auto fields = record_fields(rec);
        if (prev)
            out += ';';
        size_t count = 5;
        if (prev) {
            int last_diff = -1;
            for (int i = 0; i < 5; ++i)
                if (fields[i] != (*prev)[i])
                    last_diff = i;
            count = last_diff < 0 ? 0 : std::max<size_t>(3, static_cast<size_t>(last_diff) + 1);
        }
        for (size_t i = 0; i < count; ++i) {
            if (i)
                out += ':';
            out += fields[i];
        }
        prev = fields;
    }
    return out;
}

static std::vector<std::string> split(const std::string& s, char sep) {
    std::vector<std::string> parts;
    size_t begin = 0;
    while (true) {
        size_t pos = s.find(sep, begin);
        if (pos == std::string::npos) {
            parts.push_back(s.substr(begin));
            break;
        }
        parts.push_back(s.substr(begin, pos - begin));
        begin = pos + 1;
    }
    return parts;
}

static uint32_t parse_uint_field(const std::string& text, size_t entry_index, const char* name) {
    uint32_t value = 0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw CodecError(CodecError::Kind::MalformedField, entry_index,
                         "malformed " + std::string(name) + " field: '" + text + "'");
    return value;
}

DecodedSourceMap decode_compressed(const std::string& text, std::vector<std::string> files) {
    DecodedSourceMap out;
    out.files = std::move(files);
    if (text.empty())
        return out;

    std::optional<SourceMapRecord> prev;
    auto entries = split(text, ';');
    for (size_t i = 0; i < entries.size(); ++i) {
        auto fields = split(entries[i], ':');
        if (fields.size() > 5)
            throw CodecError(CodecError::Kind::MalformedField, i, "too many fields in entry");
        if (fields.size() == 1 && fields[0].empty())
            fields.clear();

        auto field_at = [&](size_t idx) -> std::optional<std::string> {
            if (idx >= fields.size() || fields[idx].empty())
                return std::nullopt;
            return fields[idx];
        };
        auto inherit_or = [&](size_t idx, const char* name, uint32_t SourceMapRecord::*member) {
            if (auto f = field_at(idx))
                return parse_uint_field(*f, i, name);
            if (!prev)
                throw CodecError(CodecError::Kind::DanglingInheritance, i,
                                 std::string("first entry omits the ") + name + " field");
            return (*prev).*member;
        };

        SourceMapRecord rec;
        rec.start = inherit_or(0, "s", &SourceMapRecord::start);
        rec.length = inherit_or(1, "l", &SourceMapRecord::length);
        rec.file = inherit_or(2, "f", &SourceMapRecord::file);
        if (auto f = field_at(3)) {
            if (f->size() != 1)
                throw CodecError(CodecError::Kind::MalformedField, i,
                                 "malformed j field: '" + *f + "'");
            auto j = jump_type_from_char((*f)[0]);
            if (!j)
                throw CodecError(CodecError::Kind::MalformedField, i,
                                 "unknown jump type: '" + *f + "'");
            rec.jump = *j;
        } else {
            if (!prev)
                throw CodecError(CodecError::Kind::DanglingInheritance, i,
                                 "first entry omits the j field");
            rec.jump = prev->jump;
        }
        rec.modifier_depth = inherit_or(4, "m", &SourceMapRecord::modifier_depth);

        out.records.push_back(rec);
        prev = rec;
    }
    return out;
}

} // namespace zkmap
