// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace zkmap {

/// A source segment: byte offset, byte length, file index. Offsets are
/// 0-based and intervals are half-open [start, start + length).
struct SourceSpan {
    uint32_t start = 0;
    uint32_t length = 0;
    uint32_t file = 0;

    uint32_t end() const { return start + length; }

    friend bool operator==(const SourceSpan&, const SourceSpan&) = default;
    friend auto operator<=>(const SourceSpan&, const SourceSpan&) = default;
};

/// How precisely a mapped location reflects the original source.
/// Ordered so that the weaker level has the smaller value; merging two
/// provenances takes std::min.
enum class Confidence : uint8_t {
    Synthetic = 0,   // compiler-injected, no user-visible origin
    Approximate = 1, // origin blurred by simplification
    Exact = 2,       // exact source origin
};

char confidence_letter(Confidence c);
std::optional<Confidence> confidence_from_letter(char c);

enum class JumpType : uint8_t {
    Regular,
    Into,
    OutOf,
};

/// Serialized forms are exactly 'i', 'o' and '-'.
char jump_type_char(JumpType j);
std::optional<JumpType> jump_type_from_char(char c);

enum class SpanRelation {
    Disjoint,
    Equal,
    AContainsB,
    BContainsA,
    PartialOverlap,
};

/// Exact interval relation between two spans over half-open intervals.
/// Spans in different files are always Disjoint.
SpanRelation span_relation(const SourceSpan& a, const SourceSpan& b);

/// Registry of all statement/expression spans known to the frontend.
/// Used by provenance merging (smallest common container) and by the
/// structural validator (membership).
class SpanIndex {
public:
    void add(const SourceSpan& s);
    bool contains(const SourceSpan& s) const;

    /// Smallest registered span that contains `hull` (same file). Ties on
    /// length are broken by the larger start, i.e. the innermost-rightmost.
    std::optional<SourceSpan> smallest_containing(const SourceSpan& hull) const;

    size_t size() const { return spans_.size(); }
    const std::vector<SourceSpan>& spans() const { return spans_; }

private:
    std::vector<SourceSpan> spans_; // kept sorted, unique
};

/// 1-based line:column for display; positions everywhere else are byte
/// offsets.
struct LineCol {
    uint32_t line = 1;
    uint32_t column = 1;
};
LineCol line_col_at(const std::string& text, uint32_t offset);

} // namespace zkmap
