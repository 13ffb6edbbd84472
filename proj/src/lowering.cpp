// SPDX-License-Identifier: Apache-2.0
#include "zkmap/lowering.hpp"

#include "zkmap/diag.hpp"
#include "zkmap/parser.hpp"

#include <cassert>
#include <map>
#include <set>

namespace zkmap {

namespace {

// ---------------------------------------------------------------------------
// type checking
// ---------------------------------------------------------------------------

class TypeChecker {
public:
    TypeChecker(Ast& ast, const SymbolTable& symbols) : ast_(ast), symbols_(symbols) {}

    void run() {
        for (uint32_t c = 0; c < symbols_.contracts.size(); ++c) {
            contract_ = c;
            for (const auto& mod : symbols_.contracts[c].modifiers) {
                current_ret_.reset();
                check_stmt(ast_[mod.node].as<ModifierData>().body);
            }
            for (const auto& fn : symbols_.contracts[c].functions) {
                const auto& d = ast_[fn.node].as<FunctionData>();
                current_ret_ = fn.ret;
                for (NodeId inv : d.mod_invokes)
                    check_mod_invoke(inv);
                check_stmt(d.body);
                if (fn.ret && !returns_always(d.body))
                    throw CompileError(ErrorCode::MissingReturn, ast_[fn.node].span,
                                       "function '" + fn.name +
                                           "' does not return a value on every path");
            }
        }
    }

private:
    [[noreturn]] void type_fail(SourceSpan span, const std::string& msg) {
        throw CompileError(ErrorCode::TypeError, span, msg);
    }

    void expect(const Type& t, TypeKind kind, SourceSpan span, const char* what) {
        if (t.kind != kind)
            type_fail(span, std::string(what) + ": expected " +
                                type_name(Type::scalar(kind)) + ", found " + type_name(t));
    }

    void check_mod_invoke(NodeId id) {
        const auto& d = ast_[id].as<ModInvokeData>();
        auto ref = std::get<ModifierRef>(ast_[id].resolved);
        const auto& mod = symbols_.contracts[ref.contract].modifiers[ref.index];
        const auto& params = ast_[mod.node].as<ModifierData>().params;
        for (size_t i = 0; i < d.args.size(); ++i) {
            Type at = check_expr(d.args[i]);
            Type pt = ast_[params[i]].as<ParamData>().type;
            if (!at.same_scalar(pt))
                type_fail(ast_[d.args[i]].span, "modifier argument type mismatch: expected " +
                                                    type_name(pt) + ", found " + type_name(at));
        }
    }

    void check_stmt(NodeId id) {
        auto& node = ast_[id];
        switch (node.kind) {
        case NodeKind::Block:
            for (NodeId s : node.as<BlockData>().stmts)
                check_stmt(s);
            break;
        case NodeKind::VarDeclStmt: {
            const auto& d = node.as<VarDeclData>();
            Type vt = check_expr(d.init);
            if (!vt.same_scalar(d.type))
                type_fail(node.span, "cannot initialize " + type_name(d.type) + " with " +
                                         type_name(vt));
            break;
        }
        case NodeKind::AssignStmt: {
            const auto& d = node.as<AssignData>();
            Type target = check_lvalue(d.target);
            Type value = check_expr(d.value);
            if (!target.same_scalar(value))
                type_fail(node.span, "cannot assign " + type_name(value) + " to " +
                                         type_name(target));
            break;
        }
        case NodeKind::IfStmt: {
            const auto& d = node.as<IfData>();
            expect(check_expr(d.cond), TypeKind::Bool, ast_[d.cond].span, "if condition");
            check_stmt(d.then_branch);
            if (d.else_branch)
                check_stmt(*d.else_branch);
            break;
        }
        case NodeKind::WhileStmt: {
            const auto& d = node.as<WhileData>();
            expect(check_expr(d.cond), TypeKind::Bool, ast_[d.cond].span, "while condition");
            check_stmt(d.body);
            break;
        }
        case NodeKind::ForStmt: {
            const auto& d = node.as<ForData>();
            if (d.init)
                check_stmt(*d.init);
            if (d.cond)
                expect(check_expr(*d.cond), TypeKind::Bool, ast_[*d.cond].span, "for condition");
            if (d.update)
                check_stmt(*d.update);
            check_stmt(d.body);
            break;
        }
        case NodeKind::RequireStmt:
            expect(check_expr(node.as<RequireData>().cond), TypeKind::Bool,
                   ast_[node.as<RequireData>().cond].span, "require condition");
            break;
        case NodeKind::EmitStmt: {
            const auto& d = node.as<EmitData>();
            auto ref = std::get<EventRef>(node.resolved);
            const auto& ev = symbols_.contracts[ref.contract].events[ref.index];
            const auto& params = ast_[ev.node].as<EventData>().params;
            for (size_t i = 0; i < d.args.size(); ++i) {
                Type at = check_expr(d.args[i]);
                Type pt = ast_[params[i]].as<ParamData>().type;
                if (!at.same_scalar(pt))
                    type_fail(ast_[d.args[i]].span, "event argument type mismatch: expected " +
                                                        type_name(pt) + ", found " +
                                                        type_name(at));
            }
            break;
        }
        case NodeKind::ReturnStmt: {
            const auto& d = node.as<ReturnData>();
            if (d.value) {
                if (!current_ret_)
                    type_fail(node.span, "cannot return a value from a void function");
                Type vt = check_expr(*d.value);
                if (!vt.same_scalar(*current_ret_))
                    type_fail(node.span, "return type mismatch: expected " +
                                             type_name(*current_ret_) + ", found " +
                                             type_name(vt));
            } else if (current_ret_) {
                type_fail(node.span, "function must return a value");
            }
            break;
        }
        case NodeKind::ExprStmt:
            check_expr(node.as<ExprStmtData>().expr);
            break;
        case NodeKind::PlaceholderStmt:
            break;
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unexpected statement");
        }
    }

    Type check_lvalue(NodeId id) {
        auto& node = ast_[id];
        Type t = check_expr(id);
        if (node.kind == NodeKind::IdentExpr && t.kind == TypeKind::Mapping)
            type_fail(node.span, "cannot assign a whole mapping");
        if (node.kind == NodeKind::IdentExpr) {
            if (std::holds_alternative<FnRef>(node.resolved) ||
                std::holds_alternative<EventRef>(node.resolved))
                type_fail(node.span, "assignment target must be a variable");
        }
        return t;
    }

    Type check_expr(NodeId id) {
        auto& node = ast_[id];
        Type t = compute_expr(node);
        node.expr_type = t;
        return t;
    }

    Type compute_expr(AstNode& node) {
        switch (node.kind) {
        case NodeKind::NumberExpr: return Type::scalar(TypeKind::Uint);
        case NodeKind::BoolExpr: return Type::scalar(TypeKind::Bool);
        case NodeKind::SenderExpr: return Type::scalar(TypeKind::Address);
        case NodeKind::StringExpr:
            type_fail(node.span, "string literals may only appear as require messages");
        case NodeKind::IdentExpr: {
            if (auto* sv = std::get_if<StateVarRef>(&node.resolved))
                return symbols_.contracts[sv->contract].state_vars[sv->index].type;
            if (auto* local = std::get_if<LocalRef>(&node.resolved))
                return ast_[local->decl].as<VarDeclData>().type;
            if (auto* param = std::get_if<ParamRef>(&node.resolved)) {
                const auto& owner = ast_[param->owner];
                const auto& params = owner.kind == NodeKind::Function
                                         ? owner.as<FunctionData>().params
                                         : owner.as<ModifierData>().params;
                return ast_[params[param->index]].as<ParamData>().type;
            }
            type_fail(node.span, "'" + node.as<IdentData>().name + "' is not a value");
        }
        case NodeKind::IndexExpr: {
            const auto& d = node.as<IndexData>();
            Type base = check_expr(d.base);
            if (base.kind != TypeKind::Mapping)
                type_fail(node.span, "only mappings can be indexed");
            Type key = check_expr(d.index);
            if (key.kind != base.key)
                type_fail(ast_[d.index].span, "mapping key type mismatch: expected " +
                                                  type_name(Type::scalar(base.key)) +
                                                  ", found " + type_name(key));
            return *base.value;
        }
        case NodeKind::UnaryExpr: {
            const auto& d = node.as<UnaryData>();
            Type ot = check_expr(d.operand);
            if (d.op == UnOp::Not) {
                expect(ot, TypeKind::Bool, node.span, "operand of '!'");
                return Type::scalar(TypeKind::Bool);
            }
            expect(ot, TypeKind::Uint, node.span, "operand of unary '-'");
            return Type::scalar(TypeKind::Uint);
        }
        case NodeKind::BinaryExpr: {
            const auto& d = node.as<BinaryData>();
            Type lt = check_expr(d.lhs);
            Type rt = check_expr(d.rhs);
            switch (d.op) {
            case BinOp::Or:
            case BinOp::And:
                expect(lt, TypeKind::Bool, ast_[d.lhs].span, "logical operand");
                expect(rt, TypeKind::Bool, ast_[d.rhs].span, "logical operand");
                return Type::scalar(TypeKind::Bool);
            case BinOp::Eq:
            case BinOp::Ne:
                if (!lt.is_scalar() || !lt.same_scalar(rt))
                    type_fail(node.span, "cannot compare " + type_name(lt) + " with " +
                                             type_name(rt));
                return Type::scalar(TypeKind::Bool);
            case BinOp::Lt:
            case BinOp::Gt:
            case BinOp::Le:
            case BinOp::Ge:
                expect(lt, TypeKind::Uint, ast_[d.lhs].span, "comparison operand");
                expect(rt, TypeKind::Uint, ast_[d.rhs].span, "comparison operand");
                return Type::scalar(TypeKind::Bool);
            default:
                expect(lt, TypeKind::Uint, ast_[d.lhs].span, "arithmetic operand");
                expect(rt, TypeKind::Uint, ast_[d.rhs].span, "arithmetic operand");
                return Type::scalar(TypeKind::Uint);
            }
        }
        case NodeKind::CallExpr: {
            const auto& d = node.as<CallData>();
            auto ref = std::get<FnRef>(node.resolved);
            const auto& fn = symbols_.contracts[ref.contract].functions[ref.index];
            const auto& params = ast_[fn.node].as<FunctionData>().params;
            for (size_t i = 0; i < d.args.size(); ++i) {
                Type at = check_expr(d.args[i]);
                Type pt = ast_[params[i]].as<ParamData>().type;
                if (!at.same_scalar(pt))
                    type_fail(ast_[d.args[i]].span,
                              "argument type mismatch: expected " + type_name(pt) + ", found " +
                                  type_name(at));
            }
            return fn.ret ? *fn.ret : Type::scalar(TypeKind::Void);
        }
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unexpected expression");
        }
    }

    bool returns_always(NodeId id) {
        const auto& node = ast_[id];
        switch (node.kind) {
        case NodeKind::ReturnStmt:
            return true;
        case NodeKind::Block: {
            for (NodeId s : node.as<BlockData>().stmts)
                if (returns_always(s))
                    return true;
            return false;
        }
        case NodeKind::IfStmt: {
            const auto& d = node.as<IfData>();
            return d.else_branch && returns_always(d.then_branch) &&
                   returns_always(*d.else_branch);
        }
        default:
            return false;
        }
    }

    Ast& ast_;
    const SymbolTable& symbols_;
    uint32_t contract_ = 0;
    std::optional<Type> current_ret_;
};

// ---------------------------------------------------------------------------
// lowering
// ---------------------------------------------------------------------------

/// SSA variable identity: a declaration site plus a splice instance so a
/// modifier used twice gets independent variables.
struct VarKey {
    NodeId owner = 0;
    uint32_t index = 0;
    uint32_t instance = 0;
    auto operator<=>(const VarKey&) const = default;
};

constexpr uint32_t kRetVarIndex = 0xFFFFFFFFu;

class FunctionLowerer {
public:
    FunctionLowerer(CompilationUnit& unit, IrModule& module, IrFunction& fn,
                    const FunctionSym& sym, uint32_t contract,
                    const std::map<std::pair<uint32_t, uint32_t>, uint32_t>& fn_index,
                    bool mapping)
        : unit_(unit), ast_(unit.ast), module_(module), fn_(fn), sym_(sym), contract_(contract),
          fn_index_(fn_index), mapping_(mapping) {}

    void run() {
        const auto& d = ast_[sym_.node].as<FunctionData>();
        const auto& fs = unit_.registry.function_statements(sym_.node);
        first_executed_ = fs.first_executed;
        implicit_return_ = fs.implicit_return;

        cur_stmt_ = first_executed_;
        cur_block_ = fn_.new_block();
        block_stmt_[cur_block_] = first_executed_;
        seal(cur_block_);

        // parameters
        for (uint32_t i = 0; i < d.params.size(); ++i) {
            IrInstr p = make(IrOp::Param);
            p.aux = i;
            p.prov = prov_for(ast_[d.params[i]].span);
            uint32_t v = emit(std::move(p));
            write_var({sym_.node, i, 0}, cur_block_, v);
        }

        // exit block: the single Return, mapped to the implicit return
        exit_block_ = fn_.new_block();
        block_stmt_[exit_block_] = implicit_return_;

        if (sym_.ret) {
            // default return value; anchored at the entry statement so the
            // function prologue maps where execution begins
            IrInstr zero = make(IrOp::Const);
            zero.imm = 0;
            zero.prov = prov_for(stmt_span(first_executed_), first_executed_);
            uint32_t v = emit(std::move(zero));
            write_var(ret_key(), cur_block_, v);
        }

        // modifier layers, outermost first; arguments evaluated eagerly at
        // entry, left to right
        layers_.clear();
        for (NodeId inv : d.mod_invokes) {
            auto ref = std::get<ModifierRef>(ast_[inv].resolved);
            const auto& mod = unit_.symbols.contracts[ref.contract].modifiers[ref.index];
            Layer layer;
            layer.body = ast_[mod.node].as<ModifierData>().body;
            layer.owner = mod.node;
            layer.instance = next_instance_++;
            const auto& inv_data = ast_[inv].as<ModInvokeData>();
            uint32_t depth = static_cast<uint32_t>(layers_.size()) + 1;
            uint32_t saved_depth = depth_;
            depth_ = depth;
            for (uint32_t i = 0; i < inv_data.args.size(); ++i) {
                uint32_t v = lower_expr(inv_data.args[i]);
                write_var({mod.node, i, layer.instance}, cur_block_, v);
            }
            depth_ = saved_depth;
            layers_.push_back(layer);
        }
        Layer body_layer;
        body_layer.body = d.body;
        body_layer.owner = sym_.node;
        body_layer.instance = 0;
        body_layer.is_body = true;
        layers_.push_back(body_layer);

        if (layers_.size() == 1)
            return_target_ = exit_block_;

        lower_layer(0);

        // fall-through into the exit block
        if (!terminated_)
            emit_jump(exit_block_);
        seal(exit_block_);
        cur_block_ = exit_block_;
        terminated_ = false;
        cur_stmt_ = implicit_return_;

        IrInstr ret = make(IrOp::Return);
        if (sym_.ret)
            ret.args.push_back(read_var(ret_key(), exit_block_));
        ret.prov = prov_for(stmt_span(implicit_return_), implicit_return_);
        if (!fn_.is_external)
            ret.jump = JumpType::OutOf;
        emit(std::move(ret));

        thread_forwarding_blocks();
    }

private:
    struct Layer {
        NodeId body = 0;
        NodeId owner = 0;
        uint32_t instance = 0;
        bool is_body = false;
    };

    // --- provenance helpers ------------------------------------------------

    SourceSpan stmt_span(uint32_t stmt_id) const {
        return unit_.registry.statement(stmt_id).span;
    }

    Provenance prov_for(SourceSpan span) const { return prov_for(span, cur_stmt_); }
    Provenance prov_for(SourceSpan span, uint32_t stmt) const {
        Provenance p;
        p.statement_id = stmt;
        p.confidence = Confidence::Exact;
        if (mapping_)
            p.primary_span = span;
        return p;
    }

    // --- instruction plumbing ----------------------------------------------

    IrInstr make(IrOp op) {
        IrInstr i;
        i.ir_id = module_.fresh_id();
        i.op = op;
        i.modifier_depth = depth_;
        return i;
    }

    IrBlock& block(uint32_t id) { return *fn_.find_block(id); }

    uint32_t emit(IrInstr instr) {
        uint32_t id = instr.ir_id;
        block(cur_block_).instrs.push_back(std::move(instr));
        return id;
    }

    void add_edge(uint32_t from, uint32_t to) { preds_[to].push_back(from); }

    void emit_jump(uint32_t target) {
        IrInstr j = make(IrOp::Jump);
        j.targets = {target};
        const auto& instrs = block(cur_block_).instrs;
        const IrInstr* last = nullptr;
        for (auto it = instrs.rbegin(); it != instrs.rend(); ++it) {
            if (it->op != IrOp::Phi) {
                last = &*it;
                break;
            }
        }
        if (last) {
            j.prov.primary_span = last->prov.primary_span;
            j.prov.confidence = last->prov.confidence;
            j.prov.statement_id = last->prov.statement_id;
            j.prov.inline_chain = last->prov.inline_chain;
        } else {
            j.prov = prov_for(stmt_span(cur_stmt_));
        }
        add_edge(cur_block_, target);
        emit(std::move(j));
        terminated_ = true;
    }

    void emit_branch(uint32_t cond, uint32_t if_true, uint32_t if_false, Provenance prov,
                     bool from_require = false) {
        IrInstr b = make(IrOp::Branch);
        b.args = {cond};
        b.targets = {if_true, if_false};
        b.prov = std::move(prov);
        b.require_branch = from_require;
        add_edge(cur_block_, if_true);
        add_edge(cur_block_, if_false);
        emit(std::move(b));
        terminated_ = true;
    }

    uint32_t new_block(uint32_t stmt) {
        uint32_t id = fn_.new_block();
        block_stmt_[id] = stmt;
        return id;
    }

    void switch_to(uint32_t id) {
        cur_block_ = id;
        terminated_ = false;
    }

    // --- SSA variables (Braun et al. style) --------------------------------

    VarKey ret_key() const { return {sym_.node, kRetVarIndex, 0}; }

    void write_var(const VarKey& var, uint32_t blk, uint32_t value) {
        defs_[var][blk] = value;
    }

    uint32_t read_var(const VarKey& var, uint32_t blk) {
        auto it = defs_.find(var);
        if (it != defs_.end()) {
            auto found = it->second.find(blk);
            if (found != it->second.end())
                return found->second;
        }
        return read_var_recursive(var, blk);
    }

    uint32_t read_var_recursive(const VarKey& var, uint32_t blk) {
        uint32_t value;
        if (!sealed_.count(blk)) {
            value = new_phi(blk);
            incomplete_[blk].emplace_back(var, value);
        } else if (preds_[blk].size() == 1) {
            value = read_var(var, preds_[blk][0]);
        } else if (preds_[blk].empty()) {
            // unreachable code (e.g. after return in both branches): any
            // value will do, it never executes; keep the terminator last
            IrInstr undef = make(IrOp::Const);
            undef.imm = 0;
            undef.prov = prov_for(stmt_span(cur_stmt_));
            value = undef.ir_id;
            auto& instrs = block(blk).instrs;
            if (!instrs.empty() && instrs.back().is_terminator())
                instrs.insert(instrs.end() - 1, std::move(undef));
            else
                instrs.push_back(std::move(undef));
        } else {
            value = new_phi(blk);
            write_var(var, blk, value);
            value = add_phi_operands(var, value, blk);
        }
        write_var(var, blk, value);
        return value;
    }

    uint32_t new_phi(uint32_t blk) {
        IrInstr phi = make(IrOp::Phi);
        phi.op = IrOp::Phi;
        phi.prov.confidence = Confidence::Approximate;
        uint32_t owner_stmt = block_stmt_.count(blk) ? block_stmt_[blk] : cur_stmt_;
        phi.prov.statement_id = owner_stmt;
        if (mapping_)
            phi.prov.primary_span = stmt_span(owner_stmt);
        uint32_t id = phi.ir_id;
        auto& instrs = block(blk).instrs;
        // phis live at the block head
        size_t pos = 0;
        while (pos < instrs.size() && instrs[pos].op == IrOp::Phi)
            ++pos;
        instrs.insert(instrs.begin() + pos, std::move(phi));
        return id;
    }

    uint32_t add_phi_operands(const VarKey& var, uint32_t phi_id, uint32_t blk) {
        for (uint32_t pred : preds_[blk]) {
            uint32_t v = read_var(var, pred);
            IrInstr* phi = find_instr(phi_id);
            phi->phi_in.emplace_back(pred, v);
        }
        return try_remove_trivial_phi(phi_id, blk);
    }

    uint32_t try_remove_trivial_phi(uint32_t phi_id, uint32_t blk) {
        IrInstr* phi = find_instr(phi_id);
        uint32_t unique = 0;
        bool found = false;
        for (const auto& [pred, v] : phi->phi_in) {
            if (v == phi_id)
                continue;
            if (found && v != unique)
                return phi_id; // genuinely joins distinct values
            unique = v;
            found = true;
        }
        if (!found)
            return phi_id;
        // drop the phi, rewire its uses
        auto& instrs = block(blk).instrs;
        for (size_t i = 0; i < instrs.size(); ++i) {
            if (instrs[i].ir_id == phi_id) {
                instrs.erase(instrs.begin() + i);
                break;
            }
        }
        replace_all_uses(fn_, phi_id, unique);
        for (auto& [var, defs] : defs_)
            for (auto& [b, v] : defs)
                if (v == phi_id)
                    v = unique;
        return unique;
    }

    IrInstr* find_instr(uint32_t ir_id) {
        for (auto& b : fn_.blocks)
            for (auto& i : b.instrs)
                if (i.ir_id == ir_id)
                    return &i;
        return nullptr;
    }

    void seal(uint32_t blk) {
        auto pending = incomplete_.find(blk);
        if (pending != incomplete_.end()) {
            auto list = std::move(pending->second);
            incomplete_.erase(pending);
            for (auto& [var, phi] : list) {
                uint32_t result = add_phi_operands(var, phi, blk);
                // reads that resolved to the phi keep working via
                // replace_all_uses; the def map was updated there
                (void)result;
            }
        }
        sealed_.insert(blk);
    }

    // --- statements ---------------------------------------------------------

    void lower_layer(size_t index) {
        const Layer& layer = layers_[index];
        uint32_t saved_depth = depth_;
        depth_ = layer.is_body ? 0 : static_cast<uint32_t>(index) + 1;
        size_t saved_layer = layer_index_;
        layer_index_ = index;

        if (layer.is_body && layers_.size() > 1) {
            // body returns resume right after the innermost placeholder
            uint32_t join = new_block(cur_stmt_);
            return_target_ = join;
            lower_block(layer.body, layer.instance);
            if (!terminated_)
                emit_jump(join);
            seal(join);
            switch_to(join);
        } else {
            lower_block(layer.body, layer.instance);
        }

        layer_index_ = saved_layer;
        depth_ = saved_depth;
    }

    void lower_block(NodeId block_node, uint32_t instance) {
        for (NodeId s : ast_[block_node].as<BlockData>().stmts) {
            if (terminated_) {
                // unreachable statements still lower, into a fresh block
                uint32_t dead = new_block(cur_stmt_);
                seal(dead);
                switch_to(dead);
            }
            lower_stmt(s, instance);
        }
    }

    void lower_stmt(NodeId id, uint32_t instance) {
        auto& node = ast_[id];
        if (node.statement_id)
            cur_stmt_ = *node.statement_id;
        switch (node.kind) {
        case NodeKind::Block:
            lower_block(id, instance);
            break;
        case NodeKind::PlaceholderStmt:
            lower_layer(layer_index_ + 1);
            break;
        case NodeKind::VarDeclStmt: {
            uint32_t v = lower_expr(node.as<VarDeclData>().init);
            write_var({id, 0, instance}, cur_block_, v);
            break;
        }
        case NodeKind::AssignStmt:
            lower_assign(node, instance);
            break;
        case NodeKind::ExprStmt:
            lower_expr(node.as<ExprStmtData>().expr);
            break;
        case NodeKind::RequireStmt: {
            const auto& d = node.as<RequireData>();
            uint32_t cond = lower_expr(d.cond);
            uint32_t fail = new_block(cur_stmt_);
            uint32_t cont = new_block(cur_stmt_);
            emit_branch(cond, cont, fail, prov_for(node.span), /*from_require=*/true);
            seal(fail);
            seal(cont);
            switch_to(fail);
            IrInstr rv = make(IrOp::Revert);
            rv.aux = module_.intern_string(d.has_message ? d.message : "");
            rv.prov = prov_for(node.span);
            emit(std::move(rv));
            switch_to(cont);
            break;
        }
        case NodeKind::IfStmt: {
            const auto& d = node.as<IfData>();
            uint32_t cond = lower_expr(d.cond);
            uint32_t stmt = cur_stmt_;
            uint32_t then_blk = new_block(stmt);
            uint32_t join = new_block(stmt);
            uint32_t else_blk = d.else_branch ? new_block(stmt) : join;
            emit_branch(cond, then_blk, else_blk, prov_for(ast_[d.cond].span));
            seal(then_blk);
            if (d.else_branch)
                seal(else_blk);
            switch_to(then_blk);
            lower_stmt(d.then_branch, instance);
            if (!terminated_)
                emit_jump(join);
            if (d.else_branch) {
                switch_to(else_blk);
                lower_stmt(*d.else_branch, instance);
                if (!terminated_)
                    emit_jump(join);
            }
            seal(join);
            switch_to(join);
            cur_stmt_ = stmt;
            break;
        }
        case NodeKind::WhileStmt: {
            const auto& d = node.as<WhileData>();
            uint32_t stmt = cur_stmt_;
            uint32_t header = new_block(stmt);
            uint32_t body = new_block(stmt);
            uint32_t exit = new_block(stmt);
            emit_jump(header); // header stays unsealed until the latch edge
            switch_to(header);
            uint32_t cond = lower_expr(d.cond);
            emit_branch(cond, body, exit, prov_for(ast_[d.cond].span));
            seal(body);
            switch_to(body);
            lower_stmt(d.body, instance);
            if (!terminated_)
                emit_jump(header);
            seal(header);
            seal(exit);
            switch_to(exit);
            cur_stmt_ = stmt;
            break;
        }
        case NodeKind::ForStmt: {
            const auto& d = node.as<ForData>();
            uint32_t stmt = cur_stmt_;
            if (d.init)
                lower_stmt(*d.init, instance);
            cur_stmt_ = stmt;
            uint32_t header = new_block(stmt);
            uint32_t body = new_block(stmt);
            uint32_t latch = new_block(stmt);
            uint32_t exit = new_block(stmt);
            emit_jump(header);
            switch_to(header);
            uint32_t cond;
            if (d.cond) {
                cond = lower_expr(*d.cond);
            } else {
                IrInstr t = make(IrOp::Const);
                t.imm = 1;
                t.prov = prov_for(node.span);
                cond = emit(std::move(t));
            }
            emit_branch(cond, body, exit, prov_for(d.cond ? ast_[*d.cond].span : node.span));
            seal(body);
            switch_to(body);
            lower_stmt(d.body, instance);
            if (!terminated_)
                emit_jump(latch);
            seal(latch);
            switch_to(latch);
            cur_stmt_ = stmt;
            if (d.update)
                lower_stmt(*d.update, instance);
            cur_stmt_ = stmt;
            if (!terminated_)
                emit_jump(header);
            seal(header);
            seal(exit);
            switch_to(exit);
            break;
        }
        case NodeKind::EmitStmt: {
            const auto& d = node.as<EmitData>();
            auto ref = std::get<EventRef>(node.resolved);
            const auto& ev = unit_.symbols.contracts[ref.contract].events[ref.index];
            IrInstr e = make(IrOp::EmitEvent);
            for (NodeId a : d.args)
                e.args.push_back(lower_expr(a));
            e.aux = ev.index;
            e.prov = prov_for(node.span);
            emit(std::move(e));
            break;
        }
        case NodeKind::ReturnStmt: {
            const auto& d = node.as<ReturnData>();
            if (d.value) {
                uint32_t v = lower_expr(*d.value);
                write_var(ret_key(), cur_block_, v);
            }
            IrInstr j = make(IrOp::Jump);
            j.targets = {return_target_};
            j.prov = prov_for(node.span);
            add_edge(cur_block_, return_target_);
            emit(std::move(j));
            terminated_ = true;
            break;
        }
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unexpected statement");
        }
    }

    void lower_assign(AstNode& node, uint32_t instance) {
        const auto& d = node.as<AssignData>();
        auto& target = ast_[d.target];
        if (target.kind == NodeKind::IdentExpr) {
            if (auto* sv = std::get_if<StateVarRef>(&target.resolved)) {
                uint32_t v = lower_expr(d.value);
                const auto& var = unit_.symbols.contracts[sv->contract].state_vars[sv->index];
                IrInstr st = make(IrOp::StoreState);
                st.slot = var.slot;
                st.args = {v};
                st.prov = prov_for(node.span);
                emit(std::move(st));
            } else if (auto* local = std::get_if<LocalRef>(&target.resolved)) {
                uint32_t v = lower_expr(d.value);
                write_var({local->decl, 0, instance}, cur_block_, v);
            } else if (auto* param = std::get_if<ParamRef>(&target.resolved)) {
                uint32_t v = lower_expr(d.value);
                write_var(param_key(*param), cur_block_, v);
            } else {
                throw CompileError(ErrorCode::Internal, node.span, "unresolved assignment");
            }
            return;
        }
        // mapping element: evaluate key, then value
        const auto& ix = target.as<IndexData>();
        const auto& base = ast_[ix.base];
        auto* sv = std::get_if<StateVarRef>(&base.resolved);
        if (!sv)
            throw CompileError(ErrorCode::TypeError, base.span,
                               "indexed assignment requires a state mapping");
        uint32_t key = lower_expr(ix.index);
        uint32_t v = lower_expr(d.value);
        const auto& var = unit_.symbols.contracts[sv->contract].state_vars[sv->index];
        IrInstr st = make(IrOp::StoreKey);
        st.slot = var.slot;
        st.args = {key, v};
        st.prov = prov_for(node.span);
        emit(std::move(st));
    }

    VarKey param_key(const ParamRef& ref) const {
        // parameters of the current function use instance 0; modifier
        // parameters use the instance of the enclosing layer
        for (const auto& layer : layers_)
            if (layer.owner == ref.owner)
                return {ref.owner, ref.index, layer.instance};
        return {ref.owner, ref.index, 0};
    }

    // --- expressions --------------------------------------------------------

    uint32_t lower_expr(NodeId id) {
        auto& node = ast_[id];
        switch (node.kind) {
        case NodeKind::NumberExpr: {
            IrInstr c = make(IrOp::Const);
            c.imm = node.as<NumberData>().value;
            c.prov = prov_for(node.span);
            return emit(std::move(c));
        }
        case NodeKind::BoolExpr: {
            IrInstr c = make(IrOp::Const);
            c.imm = node.as<BoolData>().value ? 1 : 0;
            c.prov = prov_for(node.span);
            return emit(std::move(c));
        }
        case NodeKind::SenderExpr: {
            IrInstr p = make(IrOp::Param);
            p.aux = kSenderParam;
            p.prov = prov_for(node.span);
            return emit(std::move(p));
        }
        case NodeKind::IdentExpr: {
            if (auto* sv = std::get_if<StateVarRef>(&node.resolved)) {
                const auto& var = unit_.symbols.contracts[sv->contract].state_vars[sv->index];
                IrInstr ld = make(IrOp::LoadState);
                ld.slot = var.slot;
                ld.prov = prov_for(node.span);
                return emit(std::move(ld));
            }
            if (auto* local = std::get_if<LocalRef>(&node.resolved))
                return read_var({local->decl, 0, cur_instance()}, cur_block_);
            if (auto* param = std::get_if<ParamRef>(&node.resolved))
                return read_var(param_key(*param), cur_block_);
            throw CompileError(ErrorCode::Internal, node.span, "unresolved identifier");
        }
        case NodeKind::IndexExpr: {
            const auto& d = node.as<IndexData>();
            const auto& base = ast_[d.base];
            auto* sv = std::get_if<StateVarRef>(&base.resolved);
            if (!sv)
                throw CompileError(ErrorCode::TypeError, base.span,
                                   "indexing requires a state mapping");
            uint32_t key = lower_expr(d.index);
            const auto& var = unit_.symbols.contracts[sv->contract].state_vars[sv->index];
            IrInstr ld = make(IrOp::LoadKey);
            ld.slot = var.slot;
            ld.args = {key};
            ld.prov = prov_for(node.span);
            return emit(std::move(ld));
        }
        case NodeKind::UnaryExpr: {
            const auto& d = node.as<UnaryData>();
            uint32_t v = lower_expr(d.operand);
            if (d.op == UnOp::Not) {
                IrInstr n = make(IrOp::Not);
                n.args = {v};
                n.prov = prov_for(node.span);
                return emit(std::move(n));
            }
            IrInstr zero = make(IrOp::Const);
            zero.imm = 0;
            zero.prov = prov_for(node.span);
            uint32_t z = emit(std::move(zero));
            IrInstr sub = make(IrOp::Sub);
            sub.args = {z, v};
            sub.prov = prov_for(node.span);
            return emit(std::move(sub));
        }
        case NodeKind::BinaryExpr:
            return lower_binary(node);
        case NodeKind::CallExpr: {
            const auto& d = node.as<CallData>();
            auto ref = std::get<FnRef>(node.resolved);
            const auto& callee = unit_.symbols.contracts[ref.contract].functions[ref.index];
            IrInstr call = make(IrOp::Call);
            for (NodeId a : d.args)
                call.args.push_back(lower_expr(a));
            call.aux = fn_index_.at({ref.contract, ref.index});
            call.call_returns = callee.ret.has_value();
            call.prov = prov_for(node.span);
            call.jump = JumpType::Into;
            return emit(std::move(call));
        }
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unexpected expression");
        }
    }

    uint32_t lower_binary(AstNode& node) {
        const auto& d = node.as<BinaryData>();
        if (d.op == BinOp::And || d.op == BinOp::Or)
            return lower_short_circuit(node);

        uint32_t lhs = lower_expr(d.lhs);
        uint32_t rhs = lower_expr(d.rhs);

        IrOp op;
        switch (d.op) {
        case BinOp::Add: op = IrOp::Add; break;
        case BinOp::Sub: op = IrOp::Sub; break;
        case BinOp::Mul: op = IrOp::Mul; break;
        case BinOp::Div: op = IrOp::Div; break;
        case BinOp::Mod: op = IrOp::Mod; break;
        case BinOp::BitAnd: op = IrOp::BitAnd; break;
        case BinOp::BitOr: op = IrOp::BitOr; break;
        case BinOp::BitXor: op = IrOp::BitXor; break;
        case BinOp::Shl: op = IrOp::Shl; break;
        case BinOp::Shr: op = IrOp::Shr; break;
        case BinOp::Eq: op = IrOp::CmpEq; break;
        case BinOp::Ne: op = IrOp::CmpNe; break;
        case BinOp::Lt: op = IrOp::CmpLt; break;
        case BinOp::Gt: op = IrOp::CmpGt; break;
        case BinOp::Le: op = IrOp::CmpLe; break;
        case BinOp::Ge: op = IrOp::CmpGe; break;
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unhandled operator");
        }

        if (op == IrOp::Div || op == IrOp::Mod) {
            // division by zero reverts, carrying the operator's span
            IrInstr zero = make(IrOp::Const);
            zero.imm = 0;
            zero.prov = prov_for(node.span);
            uint32_t z = emit(std::move(zero));
            IrInstr is_zero = make(IrOp::CmpEq);
            is_zero.args = {rhs, z};
            is_zero.prov = prov_for(node.span);
            uint32_t cond = emit(std::move(is_zero));
            uint32_t fail = new_block(cur_stmt_);
            uint32_t cont = new_block(cur_stmt_);
            emit_branch(cond, fail, cont, prov_for(node.span));
            seal(fail);
            seal(cont);
            switch_to(fail);
            IrInstr rv = make(IrOp::Revert);
            rv.aux = module_.intern_string("division by zero");
            rv.prov = prov_for(node.span);
            emit(std::move(rv));
            switch_to(cont);
        }

        IrInstr instr = make(op);
        instr.args = {lhs, rhs};
        instr.prov = prov_for(node.span);
        return emit(std::move(instr));
    }

    uint32_t lower_short_circuit(AstNode& node) {
        const auto& d = node.as<BinaryData>();
        bool is_and = d.op == BinOp::And;
        uint32_t lhs = lower_expr(d.lhs);

        IrInstr skip = make(IrOp::Const);
        skip.imm = is_and ? 0 : 1;
        skip.prov = prov_for(node.span);
        uint32_t skip_value = emit(std::move(skip));
        uint32_t lhs_block = cur_block_;

        uint32_t rhs_block = new_block(cur_stmt_);
        uint32_t join = new_block(cur_stmt_);
        if (is_and)
            emit_branch(lhs, rhs_block, join, prov_for(node.span));
        else
            emit_branch(lhs, join, rhs_block, prov_for(node.span));
        seal(rhs_block);
        switch_to(rhs_block);
        uint32_t rhs = lower_expr(d.rhs);
        uint32_t rhs_end = cur_block_;
        emit_jump(join);
        seal(join);
        switch_to(join);

        IrInstr phi = make(IrOp::Phi);
        phi.phi_in = {{lhs_block, skip_value}, {rhs_end, rhs}};
        phi.prov.confidence = Confidence::Approximate;
        phi.prov.statement_id = cur_stmt_;
        if (mapping_)
            phi.prov.primary_span = stmt_span(cur_stmt_);
        uint32_t id = phi.ir_id;
        auto& instrs = block(join).instrs;
        size_t pos = 0;
        while (pos < instrs.size() && instrs[pos].op == IrOp::Phi)
            ++pos;
        instrs.insert(instrs.begin() + pos, std::move(phi));
        return id;
    }

    uint32_t cur_instance() const {
        return layers_.empty() ? 0 : layers_[layer_index_].instance;
    }

    // Merge single-pred/single-succ chains left behind by structured
    // lowering (join blocks flowing straight into the loop latch, return
    // joins, ...). Single-incoming phis fold into their value.
    bool merge_chains_once() {
        std::map<uint32_t, int> pred_count;
        for (const auto& b : fn_.blocks)
            if (!b.instrs.empty())
                for (uint32_t t : b.instrs.back().targets)
                    ++pred_count[t];
        for (size_t ai = 0; ai < fn_.blocks.size(); ++ai) {
            IrBlock& a = fn_.blocks[ai];
            if (a.instrs.empty() || a.instrs.back().op != IrOp::Jump)
                continue;
            uint32_t next = a.instrs.back().targets[0];
            if (next == a.id || next == fn_.blocks.front().id || pred_count[next] != 1)
                continue;
            // the exit block stays separate so return statements keep their
            // own control transfer; the bare fall-through of an empty body
            // does collapse (an empty external function is JUMPDEST + STOP)
            if (next == exit_block_) {
                bool trivial_fallthrough =
                    a.instrs.size() == 1 &&
                    a.instrs[0].prov.statement_id &&
                    *a.instrs[0].prov.statement_id == implicit_return_;
                if (!trivial_fallthrough)
                    continue;
            }
            IrBlock* b = fn_.find_block(next);
            if (!b)
                continue;
            for (size_t ii = 0; ii < b->instrs.size();) {
                IrInstr& i = b->instrs[ii];
                if (i.op == IrOp::Phi) {
                    uint32_t v = i.phi_in.at(0).second;
                    uint32_t old_id = i.ir_id;
                    b->instrs.erase(b->instrs.begin() + ii);
                    replace_all_uses(fn_, old_id, v);
                } else {
                    ++ii;
                }
            }
            uint32_t a_id = a.id;
            uint32_t merged_id = b->id;
            a.instrs.pop_back();
            for (auto& i : b->instrs)
                a.instrs.push_back(std::move(i));
            for (size_t rm = 0; rm < fn_.blocks.size(); ++rm) {
                if (fn_.blocks[rm].id == merged_id) {
                    fn_.blocks.erase(fn_.blocks.begin() + rm);
                    break;
                }
            }
            for (auto& blk : fn_.blocks)
                for (auto& i : blk.instrs)
                    for (auto& [pred, value] : i.phi_in)
                        if (pred == merged_id)
                            pred = a_id;
            return true;
        }
        return false;
    }

    // Remove blocks that contain nothing but an unconditional jump and have
    // no phis; branch/jump targets and phi incomings are rewired. Keeps the
    // entry block.
    void thread_forwarding_blocks() {
        bool changed = true;
        while (changed) {
            changed = merge_chains_once();
            for (size_t bi = 1; bi < fn_.blocks.size(); ++bi) {
                IrBlock& b = fn_.blocks[bi];
                if (b.instrs.size() != 1 || b.instrs[0].op != IrOp::Jump)
                    continue;
                uint32_t target = b.instrs[0].targets[0];
                if (target == b.id)
                    continue;
                // jumps into the exit block are return statements; they stay
                if (target == exit_block_)
                    continue;
                uint32_t victim = b.id;

                // rewire phi incomings in the target block
                std::vector<uint32_t> new_preds;
                for (auto& other : fn_.blocks) {
                    if (other.id == victim || other.instrs.empty())
                        continue;
                    for (uint32_t t : other.instrs.back().targets)
                        if (t == victim)
                            new_preds.push_back(other.id);
                }
                IrBlock* tgt = fn_.find_block(target);
                bool phi_conflict = false;
                for (auto& i : tgt->instrs) {
                    if (i.op != IrOp::Phi)
                        continue;
                    auto incoming_from = [&](uint32_t blk) -> std::optional<uint32_t> {
                        for (const auto& [p, v] : i.phi_in)
                            if (p == blk)
                                return v;
                        return std::nullopt;
                    };
                    auto via_victim = incoming_from(victim);
                    if (!via_victim)
                        continue;
                    for (uint32_t p : new_preds) {
                        auto direct = incoming_from(p);
                        if (direct && *direct != *via_victim)
                            phi_conflict = true;
                    }
                }
                if (phi_conflict)
                    continue;
                for (auto& i : tgt->instrs) {
                    if (i.op != IrOp::Phi)
                        continue;
                    std::optional<uint32_t> via_victim;
                    for (const auto& [p, v] : i.phi_in)
                        if (p == victim)
                            via_victim = v;
                    if (!via_victim)
                        continue;
                    std::vector<std::pair<uint32_t, uint32_t>> rewired;
                    for (const auto& [p, v] : i.phi_in)
                        if (p != victim)
                            rewired.emplace_back(p, v);
                    for (uint32_t p : new_preds) {
                        bool present = false;
                        for (const auto& [rp, rv] : rewired)
                            if (rp == p)
                                present = true;
                        if (!present)
                            rewired.emplace_back(p, *via_victim);
                    }
                    i.phi_in = std::move(rewired);
                }

                // retarget every jump/branch that pointed at the victim
                for (auto& other : fn_.blocks) {
                    if (other.instrs.empty() || other.id == victim)
                        continue;
                    auto& term = other.instrs.back();
                    for (uint32_t& t : term.targets)
                        if (t == victim)
                            t = target;
                    if (term.op == IrOp::Branch && term.targets[0] == term.targets[1]) {
                        term.op = IrOp::Jump;
                        term.targets = {term.targets[0]};
                        term.args.clear();
                        term.require_branch = false;
                    }
                }
                fn_.blocks.erase(fn_.blocks.begin() + bi);
                changed = true;
                break;
            }
        }
    }

    CompilationUnit& unit_;
    Ast& ast_;
    IrModule& module_;
    IrFunction& fn_;
    const FunctionSym& sym_;
    uint32_t contract_;
    const std::map<std::pair<uint32_t, uint32_t>, uint32_t>& fn_index_;
    bool mapping_;

    uint32_t cur_block_ = 0;
    uint32_t exit_block_ = 0;
    uint32_t return_target_ = 0;
    bool terminated_ = false;
    uint32_t cur_stmt_ = 0;
    uint32_t first_executed_ = 0;
    uint32_t implicit_return_ = 0;
    uint32_t depth_ = 0;
    uint32_t next_instance_ = 1;

    std::vector<Layer> layers_;
    size_t layer_index_ = 0;

    std::map<VarKey, std::map<uint32_t, uint32_t>> defs_;
    std::map<uint32_t, std::vector<uint32_t>> preds_;
    std::set<uint32_t> sealed_;
    std::map<uint32_t, std::vector<std::pair<VarKey, uint32_t>>> incomplete_;
    std::map<uint32_t, uint32_t> block_stmt_;
};

} // namespace

IrModule lower(CompilationUnit& unit, const LoweringOptions& options) {
    TypeChecker(unit.ast, unit.symbols).run();

    IrModule module;
    module.contract_count = static_cast<uint32_t>(unit.symbols.contracts.size());
    for (const auto& contract : unit.symbols.contracts)
        for (const auto& ev : contract.events)
            module.event_table.push_back({ev.name, ev.arity});

    std::map<std::pair<uint32_t, uint32_t>, uint32_t> fn_index;
    uint32_t next = 0;
    for (uint32_t c = 0; c < unit.symbols.contracts.size(); ++c)
        for (uint32_t f = 0; f < unit.symbols.contracts[c].functions.size(); ++f)
            fn_index[{c, f}] = next++;

    module.functions.resize(next);
    for (uint32_t c = 0; c < unit.symbols.contracts.size(); ++c) {
        for (uint32_t f = 0; f < unit.symbols.contracts[c].functions.size(); ++f) {
            const auto& sym = unit.symbols.contracts[c].functions[f];
            IrFunction& fn = module.functions[fn_index[{c, f}]];
            fn.name = sym.name;
            fn.arity = sym.arity;
            fn.is_external = sym.vis == Visibility::External;
            fn.has_return_value = sym.ret.has_value();
            fn.contract = c;
            const auto& d = unit.ast[sym.node].as<FunctionData>();
            for (NodeId p : d.params)
                fn.params.push_back({unit.ast[p].as<ParamData>().name, unit.ast[p].span});
            FunctionLowerer(unit, module, fn, sym, c, fn_index, options.mapping_enabled).run();
        }
    }

    assign_constraint_indices(module);
    return module;
}

void assign_constraint_indices(IrModule& module) {
    for (uint32_t c = 0; c < module.contract_count; ++c) {
        std::vector<IrInstr*> branches;
        for (auto& fn : module.functions) {
            if (fn.contract != c)
                continue;
            for (auto& b : fn.blocks)
                for (auto& i : b.instrs)
                    if (i.op == IrOp::Branch && i.require_branch)
                        branches.push_back(&i);
        }
        std::sort(branches.begin(), branches.end(),
                  [](const IrInstr* a, const IrInstr* b) { return a->ir_id < b->ir_id; });
        uint32_t next = 1;
        for (IrInstr* b : branches)
            b->prov.zk_constraint = next++;
    }
}

} // namespace zkmap
