// SPDX-License-Identifier: Apache-2.0
#include "zkmap/provenance.hpp"

#include <algorithm>

namespace zkmap {

Provenance merge_provenance(const Provenance& a, const Provenance& b, const SpanIndex& index) {
    Provenance out;
    out.confidence = std::min(a.confidence, b.confidence);

    if (a.primary_span && b.primary_span) {
        const SourceSpan& sa = *a.primary_span;
        const SourceSpan& sb = *b.primary_span;
        if (sa == sb) {
            out.primary_span = sa;
        } else if (sa.file == sb.file) {
            SourceSpan hull;
            hull.file = sa.file;
            hull.start = std::min(sa.start, sb.start);
            hull.length = std::max(sa.end(), sb.end()) - hull.start;
            if (auto container = index.smallest_containing(hull)) {
                out.primary_span = *container;
            } else {
                out.primary_span = sa;
                out.confidence = std::min(out.confidence, Confidence::Approximate);
            }
        } else {
            out.primary_span = sa;
            out.confidence = std::min(out.confidence, Confidence::Approximate);
        }
    } else if (a.primary_span) {
        out.primary_span = a.primary_span;
    } else {
        out.primary_span = b.primary_span;
    }

    size_t common = 0;
    while (common < a.inline_chain.size() && common < b.inline_chain.size() &&
           a.inline_chain[common] == b.inline_chain[common])
        ++common;
    out.inline_chain.assign(a.inline_chain.begin(), a.inline_chain.begin() + common);

    out.zk_constraint = a.zk_constraint ? a.zk_constraint : b.zk_constraint;
    if (a.statement_id == b.statement_id)
        out.statement_id = a.statement_id;
    return out;
}

} // namespace zkmap
