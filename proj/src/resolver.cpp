// SPDX-License-Identifier: Apache-2.0
#include "zkmap/resolver.hpp"

#include "zkmap/diag.hpp"
#include "zkmap/parser.hpp"

namespace zkmap {

namespace {

class Resolver {
public:
    explicit Resolver(Ast& ast) : ast_(ast) {}

    SymbolTable run() {
        collect_declarations();
        for (uint32_t c = 0; c < table_.contracts.size(); ++c)
            resolve_contract(c);
        return std::move(table_);
    }

private:
    void check_state_type(const Type& t, SourceSpan span) {
        if (t.kind == TypeKind::Mapping) {
            if (!Type::scalar(t.key).is_scalar())
                throw CompileError(ErrorCode::TypeError, span, "mapping key must be a scalar type");
            if (!t.value || !t.value->is_scalar())
                throw CompileError(ErrorCode::TypeError, span,
                                   "mapping value must be a scalar type");
        }
    }

    void collect_declarations() {
        uint32_t next_slot = 0;
        uint32_t next_event = 0;
        const auto& file = ast_[ast_.root()].as<FileData>();
        for (NodeId cid : file.contracts) {
            auto& cnode = ast_[cid];
            auto& cdata = cnode.as<ContractData>();
            for (const auto& existing : table_.contracts)
                if (existing.name == cdata.name)
                    throw CompileError(ErrorCode::DuplicateDefinition, cnode.span,
                                       "duplicate contract '" + cdata.name + "'");
            ContractSym contract;
            contract.node = cid;
            contract.name = cdata.name;

            for (NodeId mid : cdata.members) {
                auto& m = ast_[mid];
                switch (m.kind) {
                case NodeKind::StateVar: {
                    auto& d = m.as<StateVarData>();
                    if (d.init)
                        throw CompileError(ErrorCode::TypeError, ast_[*d.init].span,
                                           "state variable initializers are not supported; "
                                           "storage starts zeroed");
                    for (const auto& v : contract.state_vars)
                        if (v.name == d.name)
                            throw CompileError(ErrorCode::DuplicateDefinition, m.span,
                                               "duplicate state variable '" + d.name + "'");
                    Type t = ast_[d.type].as<ParamData>().type;
                    check_state_type(t, ast_[d.type].span);
                    contract.state_vars.push_back({mid, d.name, t, next_slot++});
                    break;
                }
                case NodeKind::Function: {
                    auto& d = m.as<FunctionData>();
                    uint32_t arity = static_cast<uint32_t>(d.params.size());
                    // same name and arity is a duplicate only when the
                    // parameter types also coincide; arity ties between
                    // distinct signatures surface as AmbiguousOverload at
                    // the call site
                    for (const auto& f : contract.functions) {
                        if (f.name != d.name || f.arity != arity)
                            continue;
                        const auto& other = ast_[f.node].as<FunctionData>();
                        bool same = true;
                        for (uint32_t i = 0; i < arity; ++i)
                            if (ast_[other.params[i]].as<ParamData>().type.kind !=
                                ast_[d.params[i]].as<ParamData>().type.kind)
                                same = false;
                        if (same)
                            throw CompileError(ErrorCode::DuplicateDefinition, m.span,
                                               "duplicate function '" + d.name +
                                                   "' with arity " + std::to_string(arity));
                    }
                    for (NodeId p : d.params)
                        if (!ast_[p].as<ParamData>().type.is_scalar())
                            throw CompileError(ErrorCode::TypeError, ast_[p].span,
                                               "parameters must have scalar types");
                    if (d.ret && !d.ret->is_scalar())
                        throw CompileError(ErrorCode::TypeError, m.span,
                                           "return type must be scalar");
                    contract.functions.push_back({mid, d.name, arity, d.vis, d.ret});
                    break;
                }
                case NodeKind::Modifier: {
                    auto& d = m.as<ModifierData>();
                    for (const auto& md : contract.modifiers)
                        if (md.name == d.name)
                            throw CompileError(ErrorCode::DuplicateDefinition, m.span,
                                               "duplicate modifier '" + d.name + "'");
                    for (NodeId p : d.params)
                        if (!ast_[p].as<ParamData>().type.is_scalar())
                            throw CompileError(ErrorCode::TypeError, ast_[p].span,
                                               "parameters must have scalar types");
                    contract.modifiers.push_back(
                        {mid, d.name, static_cast<uint32_t>(d.params.size())});
                    break;
                }
                case NodeKind::Event: {
                    auto& d = m.as<EventData>();
                    for (const auto& e : contract.events)
                        if (e.name == d.name)
                            throw CompileError(ErrorCode::DuplicateDefinition, m.span,
                                               "duplicate event '" + d.name + "'");
                    for (NodeId p : d.params)
                        if (!ast_[p].as<ParamData>().type.is_scalar())
                            throw CompileError(ErrorCode::TypeError, ast_[p].span,
                                               "event parameters must have scalar types");
                    contract.events.push_back(
                        {mid, d.name, static_cast<uint32_t>(d.params.size()), next_event++});
                    break;
                }
                default:
                    break;
                }
            }
            table_.contracts.push_back(std::move(contract));
        }

        // External dispatch keys are unit-wide.
        for (uint32_t c = 0; c < table_.contracts.size(); ++c) {
            auto& contract = table_.contracts[c];
            for (uint32_t f = 0; f < contract.functions.size(); ++f) {
                const auto& fn = contract.functions[f];
                if (fn.vis != Visibility::External)
                    continue;
                std::string key = fn.name + "/" + std::to_string(fn.arity);
                if (table_.dispatch.count(key))
                    throw CompileError(ErrorCode::DuplicateDefinition, ast_[fn.node].span,
                                       "duplicate external function '" + key + "'");
                table_.dispatch[key] = FnRef{c, f};
            }
        }
    }

    void resolve_contract(uint32_t c) {
        contract_ = c;
        const auto& members = ast_[table_.contracts[c].node].as<ContractData>().members;
        for (NodeId mid : members) {
            auto& m = ast_[mid];
            if (m.kind == NodeKind::Function) {
                auto& d = m.as<FunctionData>();
                scopes_.clear();
                push_scope();
                declare_params(mid, d.params);
                for (NodeId inv : d.mod_invokes)
                    resolve_mod_invoke(inv);
                in_modifier_ = false;
                resolve_stmt(d.body);
                pop_scope();
            } else if (m.kind == NodeKind::Modifier) {
                auto& d = m.as<ModifierData>();
                scopes_.clear();
                push_scope();
                declare_params(mid, d.params);
                in_modifier_ = true;
                placeholders_ = 0;
                resolve_stmt(d.body);
                if (placeholders_ != 1)
                    throw CompileError(ErrorCode::SyntaxError, m.span,
                                       "modifier body must contain exactly one '_;'");
                in_modifier_ = false;
                pop_scope();
            }
        }
    }

    void declare_params(NodeId owner, const std::vector<NodeId>& params) {
        for (uint32_t i = 0; i < params.size(); ++i) {
            const auto& p = ast_[params[i]].as<ParamData>();
            declare(p.name, ParamRef{owner, i}, ast_[params[i]].span);
        }
    }

    void push_scope() { scopes_.emplace_back(); }
    void pop_scope() { scopes_.pop_back(); }

    void declare(const std::string& name, Resolved ref, SourceSpan span) {
        auto& scope = scopes_.back();
        if (scope.count(name))
            throw CompileError(ErrorCode::DuplicateDefinition, span,
                               "duplicate declaration of '" + name + "'");
        scope[name] = std::move(ref);
    }

    std::optional<Resolved> lookup_value(const std::string& name) {
        for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
            auto found = it->find(name);
            if (found != it->end())
                return found->second;
        }
        const auto& vars = table_.contracts[contract_].state_vars;
        for (uint32_t i = 0; i < vars.size(); ++i)
            if (vars[i].name == name)
                return Resolved{StateVarRef{contract_, i}};
        return std::nullopt;
    }

    void resolve_mod_invoke(NodeId id) {
        auto& node = ast_[id];
        auto& d = node.as<ModInvokeData>();
        const auto& mods = table_.contracts[contract_].modifiers;
        const ModifierSym* found = nullptr;
        uint32_t index = 0;
        for (uint32_t i = 0; i < mods.size(); ++i) {
            if (mods[i].name == d.name) {
                found = &mods[i];
                index = i;
                break;
            }
        }
        if (!found)
            throw CompileError(ErrorCode::UnknownName, d.name_span,
                               "unknown modifier '" + d.name + "'");
        if (found->arity != d.args.size())
            throw CompileError(ErrorCode::TypeError, node.span,
                               "modifier '" + d.name + "' expects " +
                                   std::to_string(found->arity) + " argument(s)");
        node.resolved = ModifierRef{contract_, index};
        for (NodeId a : d.args)
            resolve_expr(a);
    }

    void resolve_stmt(NodeId id) {
        auto& node = ast_[id];
        switch (node.kind) {
        case NodeKind::Block: {
            push_scope();
            for (NodeId s : node.as<BlockData>().stmts)
                resolve_stmt(s);
            pop_scope();
            break;
        }
        case NodeKind::VarDeclStmt: {
            auto& d = node.as<VarDeclData>();
            if (!d.type.is_scalar())
                throw CompileError(ErrorCode::TypeError, node.span,
                                   "local variables must have scalar types");
            resolve_expr(d.init);
            declare(d.name, LocalRef{id}, node.span);
            break;
        }
        case NodeKind::AssignStmt: {
            auto& d = node.as<AssignData>();
            resolve_expr(d.target);
            resolve_expr(d.value);
            break;
        }
        case NodeKind::IfStmt: {
            auto& d = node.as<IfData>();
            resolve_expr(d.cond);
            resolve_stmt(d.then_branch);
            if (d.else_branch)
                resolve_stmt(*d.else_branch);
            break;
        }
        case NodeKind::WhileStmt: {
            auto& d = node.as<WhileData>();
            resolve_expr(d.cond);
            resolve_stmt(d.body);
            break;
        }
        case NodeKind::ForStmt: {
            auto& d = node.as<ForData>();
            push_scope(); // the init declaration scopes over the loop
            if (d.init)
                resolve_stmt(*d.init);
            if (d.cond)
                resolve_expr(*d.cond);
            if (d.update)
                resolve_stmt(*d.update);
            resolve_stmt(d.body);
            pop_scope();
            break;
        }
        case NodeKind::RequireStmt:
            resolve_expr(node.as<RequireData>().cond);
            break;
        case NodeKind::EmitStmt: {
            auto& d = node.as<EmitData>();
            const auto& events = table_.contracts[contract_].events;
            const EventSym* found = nullptr;
            uint32_t index = 0;
            for (uint32_t i = 0; i < events.size(); ++i) {
                if (events[i].name == d.event_name) {
                    found = &events[i];
                    index = i;
                    break;
                }
            }
            if (!found)
                throw CompileError(ErrorCode::UnknownName, d.name_span,
                                   "unknown event '" + d.event_name + "'");
            if (found->arity != d.args.size())
                throw CompileError(ErrorCode::TypeError, node.span,
                                   "event '" + d.event_name + "' expects " +
                                       std::to_string(found->arity) + " argument(s)");
            node.resolved = EventRef{contract_, index};
            for (NodeId a : d.args)
                resolve_expr(a);
            break;
        }
        case NodeKind::ReturnStmt: {
            if (in_modifier_)
                throw CompileError(ErrorCode::TypeError, node.span,
                                   "'return' is not allowed inside a modifier body");
            auto& d = node.as<ReturnData>();
            if (d.value)
                resolve_expr(*d.value);
            break;
        }
        case NodeKind::ExprStmt:
            resolve_expr(node.as<ExprStmtData>().expr);
            break;
        case NodeKind::PlaceholderStmt:
            if (!in_modifier_)
                throw CompileError(ErrorCode::SyntaxError, node.span,
                                   "'_;' is only allowed inside a modifier body");
            ++placeholders_;
            break;
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unexpected node in statement");
        }
    }

    void resolve_expr(NodeId id) {
        auto& node = ast_[id];
        switch (node.kind) {
        case NodeKind::IdentExpr: {
            const auto& name = node.as<IdentData>().name;
            auto ref = lookup_value(name);
            if (!ref)
                throw CompileError(ErrorCode::UnknownName, node.span,
                                   "unknown name '" + name + "'");
            node.resolved = *ref;
            break;
        }
        case NodeKind::CallExpr: {
            auto& d = node.as<CallData>();
            const auto& fns = table_.contracts[contract_].functions;
            std::vector<uint32_t> candidates;
            bool name_exists = false;
            for (uint32_t i = 0; i < fns.size(); ++i) {
                if (fns[i].name != d.callee)
                    continue;
                name_exists = true;
                if (fns[i].arity == d.args.size())
                    candidates.push_back(i);
            }
            if (candidates.empty())
                throw CompileError(ErrorCode::UnknownName, d.callee_span,
                                   name_exists
                                       ? "no overload of '" + d.callee + "' takes " +
                                             std::to_string(d.args.size()) + " argument(s)"
                                       : "unknown function '" + d.callee + "'");
            if (candidates.size() > 1)
                throw CompileError(ErrorCode::AmbiguousOverload, d.callee_span,
                                   "ambiguous call to '" + d.callee + "': " +
                                       std::to_string(candidates.size()) +
                                       " candidates share arity " +
                                       std::to_string(d.args.size()));
            if (fns[candidates[0]].vis == Visibility::External)
                throw CompileError(ErrorCode::TypeError, d.callee_span,
                                   "external function '" + d.callee +
                                       "' cannot be called internally");
            node.resolved = FnRef{contract_, candidates[0]};
            for (NodeId a : d.args)
                resolve_expr(a);
            break;
        }
        case NodeKind::IndexExpr: {
            auto& d = node.as<IndexData>();
            resolve_expr(d.base);
            resolve_expr(d.index);
            break;
        }
        case NodeKind::BinaryExpr: {
            auto& d = node.as<BinaryData>();
            resolve_expr(d.lhs);
            resolve_expr(d.rhs);
            break;
        }
        case NodeKind::UnaryExpr:
            resolve_expr(node.as<UnaryData>().operand);
            break;
        case NodeKind::NumberExpr:
        case NodeKind::BoolExpr:
        case NodeKind::StringExpr:
        case NodeKind::SenderExpr:
            break;
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unexpected node in expression");
        }
    }

    Ast& ast_;
    SymbolTable table_;
    uint32_t contract_ = 0;
    std::vector<std::map<std::string, Resolved>> scopes_;
    bool in_modifier_ = false;
    int placeholders_ = 0;
};

} // namespace

SymbolTable resolve(Ast& ast) { return Resolver(ast).run(); }

} // namespace zkmap
