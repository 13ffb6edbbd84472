// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/span.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace zkmap {

/// Source-origin record attached to every IR instruction.
///
/// `inline_chain` lists the call-site spans an instruction passed through
/// while being inlined, outermost call site first. `zk_constraint` links the
/// instruction to a circuit constraint index when one exists.
struct Provenance {
    std::optional<SourceSpan> primary_span;
    Confidence confidence = Confidence::Synthetic;
    std::vector<SourceSpan> inline_chain;
    std::optional<uint32_t> zk_constraint;
    std::optional<uint32_t> statement_id;

    friend bool operator==(const Provenance&, const Provenance&) = default;

    static Provenance exact(SourceSpan span, uint32_t statement_id) {
        Provenance p;
        p.primary_span = span;
        p.confidence = Confidence::Exact;
        p.statement_id = statement_id;
        return p;
    }
    static Provenance synthetic() { return Provenance{}; }
};

/// Combine the provenance of two instructions that fuse into one.
///
/// Confidence takes the weaker side and is never raised. If both spans are
/// present and distinct, the result is the smallest registered span covering
/// both; when no such span exists (or the files differ) the first span is
/// kept and the confidence drops to Approximate. The inline chain keeps the
/// longest common prefix.
Provenance merge_provenance(const Provenance& a, const Provenance& b, const SpanIndex& index);

} // namespace zkmap
