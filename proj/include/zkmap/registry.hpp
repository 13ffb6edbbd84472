// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/ast.hpp"
#include "zkmap/resolver.hpp"
#include "zkmap/span.hpp"

#include <map>
#include <optional>
#include <vector>

namespace zkmap {

enum class StatementKind : uint8_t {
    VarDecl,
    Assign,
    Require,
    If,
    While,
    For,
    Return,
    ImplicitReturn,
    Emit,
    ExprStmt,
};

const char* statement_kind_name(StatementKind k);

enum class CfgEdgeKind : uint8_t { Sequence, Branch, LoopBack, Call };

/// Statement-level view of the compilation unit: one id per source statement
/// (composite statements carry their full span), a control-flow graph over
/// those ids, and span lookup. Serves as the reference structure for
/// structural validation and for trace reconstruction.
class StatementRegistry {
public:
    struct Statement {
        uint32_t id = 0;
        SourceSpan span;
        StatementKind kind = StatementKind::ExprStmt;
        NodeId node = 0; // defining AST node; the function node for headers
    };
    struct Edge {
        uint32_t from = 0;
        uint32_t to = 0;
        CfgEdgeKind kind = CfgEdgeKind::Sequence;
    };
    struct FunctionStatements {
        /// First statement control reaches when the function is entered
        /// (modifier layers included); the implicit return for empty bodies.
        uint32_t first_executed = 0;
        uint32_t implicit_return = 0;
        std::vector<uint32_t> returns; // explicit returns in the body
    };

    uint32_t size() const { return static_cast<uint32_t>(statements_.size()); }
    const Statement& statement(uint32_t id) const { return statements_[id]; }
    const std::vector<Statement>& statements() const { return statements_; }
    const std::vector<Edge>& edges() const { return edges_; }

    /// Innermost registered statement whose span contains (or equals) `s`.
    std::optional<uint32_t> statement_at(const SourceSpan& s) const;

    /// Directed reachability over all edge kinds (not reflexive).
    bool reachable(uint32_t from, uint32_t to) const;
    /// Reachable in either direction.
    bool connected(uint32_t a, uint32_t b) const { return reachable(a, b) || reachable(b, a); }

    const FunctionStatements& function_statements(NodeId fn_node) const {
        return per_function_.at(fn_node);
    }
    bool has_function(NodeId fn_node) const { return per_function_.count(fn_node) != 0; }

    // builder interface
    uint32_t add_statement(SourceSpan span, StatementKind kind, NodeId node);
    void add_edge(uint32_t from, uint32_t to, CfgEdgeKind kind);
    void set_function_statements(NodeId fn_node, FunctionStatements fs) {
        per_function_[fn_node] = std::move(fs);
    }
    void seal(); // precompute reachability

private:
    std::vector<Statement> statements_;
    std::vector<Edge> edges_;
    std::map<NodeId, FunctionStatements> per_function_;
    std::vector<std::vector<bool>> reach_;
};

/// Build the registry from a resolved AST; statement nodes are stamped with
/// their statement_id. Modifier-expanded control flow is threaded per
/// function through the shared modifier-body statements.
StatementRegistry build_statement_registry(Ast& ast, const SymbolTable& symbols);

/// Register every statement and expression span (provenance merging and
/// validator membership draw from this set).
SpanIndex build_span_index(const Ast& ast, const StatementRegistry& registry);

} // namespace zkmap
