// SPDX-License-Identifier: Apache-2.0
#include "zkmap/span.hpp"

#include <algorithm>

namespace zkmap {

char confidence_letter(Confidence c) {
    switch (c) {
    case Confidence::Exact: return 'E';
    case Confidence::Approximate: return 'A';
    case Confidence::Synthetic: return 'S';
    }
    return '?';
}

std::optional<Confidence> confidence_from_letter(char c) {
    switch (c) {
    case 'E': return Confidence::Exact;
    case 'A': return Confidence::Approximate;
    case 'S': return Confidence::Synthetic;
    default: return std::nullopt;
    }
}

char jump_type_char(JumpType j) {
    switch (j) {
    case JumpType::Into: return 'i';
    case JumpType::OutOf: return 'o';
    case JumpType::Regular: return '-';
    }
    return '-';
}

std::optional<JumpType> jump_type_from_char(char c) {
    switch (c) {
    case 'i': return JumpType::Into;
    case 'o': return JumpType::OutOf;
    case '-': return JumpType::Regular;
    default: return std::nullopt;
    }
}

SpanRelation span_relation(const SourceSpan& a, const SourceSpan& b) {
    if (a.file != b.file)
        return SpanRelation::Disjoint;
    if (a.start == b.start && a.length == b.length)
        return SpanRelation::Equal;
    if (a.end() <= b.start || b.end() <= a.start)
        return SpanRelation::Disjoint;
    if (a.start <= b.start && b.end() <= a.end())
        return SpanRelation::AContainsB;
    if (b.start <= a.start && a.end() <= b.end())
        return SpanRelation::BContainsA;
    return SpanRelation::PartialOverlap;
}

void SpanIndex::add(const SourceSpan& s) {
    auto it = std::lower_bound(spans_.begin(), spans_.end(), s);
    if (it != spans_.end() && *it == s)
        return;
    spans_.insert(it, s);
}

bool SpanIndex::contains(const SourceSpan& s) const {
    return std::binary_search(spans_.begin(), spans_.end(), s);
}

std::optional<SourceSpan> SpanIndex::smallest_containing(const SourceSpan& hull) const {
    std::optional<SourceSpan> best;
    for (const auto& s : spans_) {
        if (s.file != hull.file)
            continue;
        if (s.start <= hull.start && hull.end() <= s.end()) {
            if (!best || s.length < best->length ||
                (s.length == best->length && s.start > best->start))
                best = s;
        }
    }
    return best;
}

LineCol line_col_at(const std::string& text, uint32_t offset) {
    LineCol lc;
    for (uint32_t i = 0; i < offset && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++lc.line;
            lc.column = 1;
        } else {
            ++lc.column;
        }
    }
    return lc;
}

} // namespace zkmap
