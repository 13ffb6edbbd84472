// SPDX-License-Identifier: Apache-2.0
#include "zkmap/registry.hpp"

#include "zkmap/diag.hpp"
#include "zkmap/parser.hpp"

#include <deque>
#include <functional>

namespace zkmap {

const char* statement_kind_name(StatementKind k) {
    switch (k) {
    case StatementKind::VarDecl: return "var-decl";
    case StatementKind::Assign: return "assign";
    case StatementKind::Require: return "require";
    case StatementKind::If: return "if";
    case StatementKind::While: return "while";
    case StatementKind::For: return "for";
    case StatementKind::Return: return "return";
    case StatementKind::ImplicitReturn: return "implicit-return";
    case StatementKind::Emit: return "emit";
    case StatementKind::ExprStmt: return "expr-stmt";
    }
    return "?";
}

uint32_t StatementRegistry::add_statement(SourceSpan span, StatementKind kind, NodeId node) {
    uint32_t id = static_cast<uint32_t>(statements_.size());
    statements_.push_back({id, span, kind, node});
    return id;
}

void StatementRegistry::add_edge(uint32_t from, uint32_t to, CfgEdgeKind kind) {
    for (const auto& e : edges_)
        if (e.from == from && e.to == to)
            return;
    edges_.push_back({from, to, kind});
}

std::optional<uint32_t> StatementRegistry::statement_at(const SourceSpan& s) const {
    std::optional<uint32_t> best;
    for (const auto& st : statements_) {
        auto rel = span_relation(st.span, s);
        if (rel == SpanRelation::Equal || rel == SpanRelation::AContainsB) {
            if (!best || st.span.length < statements_[*best].span.length)
                best = st.id;
        }
    }
    return best;
}

void StatementRegistry::seal() {
    size_t n = statements_.size();
    std::vector<std::vector<uint32_t>> succ(n);
    for (const auto& e : edges_)
        succ[e.from].push_back(e.to);
    reach_.assign(n, std::vector<bool>(n, false));
    for (uint32_t s = 0; s < n; ++s) {
        std::deque<uint32_t> queue = {s};
        while (!queue.empty()) {
            uint32_t cur = queue.front();
            queue.pop_front();
            for (uint32_t next : succ[cur]) {
                if (!reach_[s][next]) {
                    reach_[s][next] = true;
                    queue.push_back(next);
                }
            }
        }
    }
}

bool StatementRegistry::reachable(uint32_t from, uint32_t to) const {
    if (from >= reach_.size() || to >= reach_.size())
        return false;
    return reach_[from][to];
}

namespace {

/// Entries/exits of a statement sequence while wiring CFG edges.
struct Flow {
    std::vector<uint32_t> entries;
    std::vector<uint32_t> exits;
    bool transparent = true; // no statements at all
};

class RegistryBuilder {
public:
    RegistryBuilder(Ast& ast, const SymbolTable& symbols) : ast_(ast), symbols_(symbols) {}

    StatementRegistry run() {
        // Statements first, in pre-order, so ids are deterministic.
        for (const auto& contract : symbols_.contracts) {
            for (const auto& mod : contract.modifiers)
                register_block(ast_[mod.node].as<ModifierData>().body);
            for (const auto& fn : contract.functions)
                register_function(fn);
        }
        // Then control flow, per function: intra-function edges first so
        // every function's entry statement is known before call edges.
        for (const auto& contract : symbols_.contracts)
            for (const auto& fn : contract.functions)
                wire_function(fn);
        for (const auto& contract : symbols_.contracts)
            for (const auto& fn : contract.functions)
                wire_function_calls(fn);
        registry_.seal();
        return std::move(registry_);
    }

private:
    // --- statement registration ------------------------------------------

    void register_function(const FunctionSym& fn) {
        auto& d = ast_[fn.node].as<FunctionData>();
        StatementRegistry::FunctionStatements fs;
        register_block(d.body);
        const auto& body = ast_[d.body];
        SourceSpan closing{body.span.end() - 1, 1, body.span.file};
        fs.implicit_return =
            registry_.add_statement(closing, StatementKind::ImplicitReturn, d.body);
        collect_returns(d.body, fs.returns);
        registry_.set_function_statements(fn.node, std::move(fs));
    }

    void register_block(NodeId block) {
        for (NodeId s : ast_[block].as<BlockData>().stmts)
            register_stmt(s);
    }

    void register_stmt(NodeId id) {
        auto& node = ast_[id];
        auto add = [&](StatementKind kind) {
            node.statement_id = registry_.add_statement(node.span, kind, id);
        };
        switch (node.kind) {
        case NodeKind::Block:
            register_block(id);
            break;
        case NodeKind::VarDeclStmt: add(StatementKind::VarDecl); break;
        case NodeKind::AssignStmt: add(StatementKind::Assign); break;
        case NodeKind::RequireStmt: add(StatementKind::Require); break;
        case NodeKind::EmitStmt: add(StatementKind::Emit); break;
        case NodeKind::ReturnStmt: add(StatementKind::Return); break;
        case NodeKind::ExprStmt: add(StatementKind::ExprStmt); break;
        case NodeKind::PlaceholderStmt:
            break; // not a registry statement
        case NodeKind::IfStmt: {
            add(StatementKind::If);
            auto& d = node.as<IfData>();
            register_stmt(d.then_branch);
            if (d.else_branch)
                register_stmt(*d.else_branch);
            break;
        }
        case NodeKind::WhileStmt: {
            add(StatementKind::While);
            register_stmt(node.as<WhileData>().body);
            break;
        }
        case NodeKind::ForStmt: {
            add(StatementKind::For);
            register_stmt(node.as<ForData>().body);
            break;
        }
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unexpected statement node");
        }
    }

    void collect_returns(NodeId id, std::vector<uint32_t>& out) {
        const auto& node = ast_[id];
        if (node.kind == NodeKind::ReturnStmt && node.statement_id) {
            out.push_back(*node.statement_id);
            return;
        }
        for_each_child(node, [&](NodeId c) {
            const auto& child = ast_[c];
            switch (child.kind) {
            case NodeKind::Block:
            case NodeKind::IfStmt:
            case NodeKind::WhileStmt:
            case NodeKind::ForStmt:
            case NodeKind::ReturnStmt:
                collect_returns(c, out);
                break;
            default:
                break;
            }
        });
    }

    // --- control-flow wiring ----------------------------------------------

    void wire_function(const FunctionSym& fn) {
        const auto& d = ast_[fn.node].as<FunctionData>();
        auto fs = registry_.function_statements(fn.node);

        layers_.clear();
        for (NodeId inv : d.mod_invokes) {
            auto ref = std::get<ModifierRef>(ast_[inv].resolved);
            const auto& mod = symbols_.contracts[ref.contract].modifiers[ref.index];
            layers_.push_back(ast_[mod.node].as<ModifierData>().body);
        }
        layers_.push_back(d.body);
        body_returns_ = &fs.returns;

        layer_index_ = 0;
        Flow flow = flow_of_block(layers_[0]);
        fs.first_executed = flow.transparent ? fs.implicit_return : flow.entries.front();
        for (uint32_t e : flow.exits)
            registry_.add_edge(e, fs.implicit_return, CfgEdgeKind::Sequence);
        // without modifiers an explicit return flows straight to the
        // function exit point; with modifiers the trailing modifier code
        // already provides the path
        if (layers_.size() == 1)
            for (uint32_t r : fs.returns)
                registry_.add_edge(r, fs.implicit_return, CfgEdgeKind::Sequence);
        registry_.set_function_statements(fn.node, fs);
    }

    void wire_function_calls(const FunctionSym& fn) {
        const auto& d = ast_[fn.node].as<FunctionData>();
        const auto& fs = registry_.function_statements(fn.node);
        wire_calls_in(d.body);
        for (NodeId inv : d.mod_invokes) {
            auto ref = std::get<ModifierRef>(ast_[inv].resolved);
            const auto& mod = symbols_.contracts[ref.contract].modifiers[ref.index];
            wire_calls_in(ast_[mod.node].as<ModifierData>().body);
            for (NodeId arg : ast_[inv].as<ModInvokeData>().args)
                wire_call_exprs(arg, fs.first_executed);
        }
    }

    Flow flow_of_block(NodeId block) {
        Flow flow;
        for (NodeId s : ast_[block].as<BlockData>().stmts) {
            Flow cur = flow_of_stmt(s);
            if (cur.transparent)
                continue;
            if (flow.transparent) {
                flow.entries = cur.entries;
                flow.transparent = false;
            } else {
                for (uint32_t e : flow.exits)
                    for (uint32_t t : cur.entries)
                        registry_.add_edge(e, t, CfgEdgeKind::Sequence);
            }
            flow.exits = cur.exits;
        }
        return flow;
    }

    Flow flow_of_stmt(NodeId id) {
        auto& node = ast_[id];
        switch (node.kind) {
        case NodeKind::Block:
            return flow_of_block(id);
        case NodeKind::PlaceholderStmt: {
            // splice the next layer here
            size_t saved = layer_index_;
            ++layer_index_;
            if (layer_index_ >= layers_.size())
                throw CompileError(ErrorCode::Internal, node.span, "placeholder without layer");
            Flow inner = flow_of_block(layers_[layer_index_]);
            bool inner_is_body = layer_index_ + 1 == layers_.size();
            layer_index_ = saved;
            if (inner_is_body && !body_returns_->empty()) {
                // body returns resume after the innermost placeholder
                inner.transparent = false;
                for (uint32_t r : *body_returns_)
                    inner.exits.push_back(r);
            }
            return inner;
        }
        case NodeKind::VarDeclStmt:
        case NodeKind::AssignStmt:
        case NodeKind::RequireStmt:
        case NodeKind::EmitStmt:
        case NodeKind::ExprStmt: {
            uint32_t sid = *node.statement_id;
            return Flow{{sid}, {sid}, false};
        }
        case NodeKind::ReturnStmt:
            return Flow{{*node.statement_id}, {}, false};
        case NodeKind::IfStmt: {
            uint32_t sid = *node.statement_id;
            auto& d = node.as<IfData>();
            Flow out{{sid}, {}, false};
            Flow then_flow = flow_of_stmt(d.then_branch);
            if (!then_flow.transparent) {
                for (uint32_t t : then_flow.entries)
                    registry_.add_edge(sid, t, CfgEdgeKind::Branch);
                out.exits.insert(out.exits.end(), then_flow.exits.begin(), then_flow.exits.end());
            } else {
                out.exits.push_back(sid);
            }
            if (d.else_branch) {
                Flow else_flow = flow_of_stmt(*d.else_branch);
                if (!else_flow.transparent) {
                    for (uint32_t t : else_flow.entries)
                        registry_.add_edge(sid, t, CfgEdgeKind::Branch);
                    out.exits.insert(out.exits.end(), else_flow.exits.begin(),
                                     else_flow.exits.end());
                } else {
                    out.exits.push_back(sid);
                }
            } else {
                out.exits.push_back(sid);
            }
            return out;
        }
        case NodeKind::WhileStmt: {
            uint32_t sid = *node.statement_id;
            Flow body = flow_of_stmt(node.as<WhileData>().body);
            if (!body.transparent) {
                for (uint32_t t : body.entries)
                    registry_.add_edge(sid, t, CfgEdgeKind::Branch);
                for (uint32_t e : body.exits)
                    registry_.add_edge(e, sid, CfgEdgeKind::LoopBack);
            } else {
                registry_.add_edge(sid, sid, CfgEdgeKind::LoopBack);
            }
            return Flow{{sid}, {sid}, false};
        }
        case NodeKind::ForStmt: {
            uint32_t sid = *node.statement_id;
            Flow body = flow_of_stmt(node.as<ForData>().body);
            if (!body.transparent) {
                for (uint32_t t : body.entries)
                    registry_.add_edge(sid, t, CfgEdgeKind::Branch);
                for (uint32_t e : body.exits)
                    registry_.add_edge(e, sid, CfgEdgeKind::LoopBack);
            } else {
                registry_.add_edge(sid, sid, CfgEdgeKind::LoopBack);
            }
            return Flow{{sid}, {sid}, false};
        }
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unexpected statement node");
        }
    }

    void wire_calls_in(NodeId block_or_stmt) {
        walk_statements(block_or_stmt, [&](NodeId stmt) {
            const auto& node = ast_[stmt];
            if (!node.statement_id)
                return;
            wire_call_exprs(stmt, *node.statement_id);
        });
    }

    // visit statement nodes (not crossing into nested expressions twice)
    void walk_statements(NodeId id, const std::function<void(NodeId)>& fn) {
        const auto& node = ast_[id];
        switch (node.kind) {
        case NodeKind::Block:
            for (NodeId s : node.as<BlockData>().stmts)
                walk_statements(s, fn);
            break;
        case NodeKind::IfStmt: {
            fn(id);
            const auto& d = node.as<IfData>();
            walk_statements(d.then_branch, fn);
            if (d.else_branch)
                walk_statements(*d.else_branch, fn);
            break;
        }
        case NodeKind::WhileStmt:
            fn(id);
            walk_statements(node.as<WhileData>().body, fn);
            break;
        case NodeKind::ForStmt:
            fn(id);
            walk_statements(node.as<ForData>().body, fn);
            break;
        case NodeKind::PlaceholderStmt:
            break;
        default:
            fn(id);
            break;
        }
    }

    // Call edges: statement -> callee header, callee returns -> statement.
    // For composite statements only the header expressions belong to the
    // statement itself; nested statements are visited separately.
    void wire_call_exprs(NodeId id, uint32_t stmt_id) {
        const auto& node = ast_[id];
        if (node.kind == NodeKind::CallExpr) {
            auto ref = std::get<FnRef>(node.resolved);
            const auto& callee = symbols_.contracts[ref.contract].functions[ref.index];
            const auto& callee_fs = registry_.function_statements(callee.node);
            registry_.add_edge(stmt_id, callee_fs.first_executed, CfgEdgeKind::Call);
            for (uint32_t r : callee_fs.returns)
                registry_.add_edge(r, stmt_id, CfgEdgeKind::Call);
            registry_.add_edge(callee_fs.implicit_return, stmt_id, CfgEdgeKind::Call);
        }
        switch (node.kind) {
        case NodeKind::IfStmt:
            wire_call_exprs(node.as<IfData>().cond, stmt_id);
            return;
        case NodeKind::WhileStmt:
            wire_call_exprs(node.as<WhileData>().cond, stmt_id);
            return;
        case NodeKind::ForStmt: {
            const auto& d = node.as<ForData>();
            if (d.init)
                wire_call_exprs(*d.init, stmt_id);
            if (d.cond)
                wire_call_exprs(*d.cond, stmt_id);
            if (d.update)
                wire_call_exprs(*d.update, stmt_id);
            return;
        }
        case NodeKind::Block:
        case NodeKind::PlaceholderStmt:
            return;
        default:
            break;
        }
        for_each_child(node, [&](NodeId c) { wire_call_exprs(c, stmt_id); });
    }

    Ast& ast_;
    const SymbolTable& symbols_;
    StatementRegistry registry_;
    std::vector<NodeId> layers_;
    size_t layer_index_ = 0;
    const std::vector<uint32_t>* body_returns_ = nullptr;
};

} // namespace

StatementRegistry build_statement_registry(Ast& ast, const SymbolTable& symbols) {
    return RegistryBuilder(ast, symbols).run();
}

SpanIndex build_span_index(const Ast& ast, const StatementRegistry& registry) {
    SpanIndex index;
    for (const auto& node : ast.nodes) {
        switch (node.kind) {
        case NodeKind::BinaryExpr:
        case NodeKind::UnaryExpr:
        case NodeKind::CallExpr:
        case NodeKind::IndexExpr:
        case NodeKind::IdentExpr:
        case NodeKind::NumberExpr:
        case NodeKind::BoolExpr:
        case NodeKind::StringExpr:
        case NodeKind::SenderExpr:
        case NodeKind::Param:
            index.add(node.span);
            break;
        default:
            break;
        }
    }
    for (const auto& st : registry.statements())
        index.add(st.span);
    return index;
}

} // namespace zkmap
