// SPDX-License-Identifier: Apache-2.0
#include "zkmap/interpreter.hpp"

#include "zkmap/diag.hpp"

#include <sstream>

namespace zkmap {

uint64_t Storage::read(uint32_t slot) const {
    auto it = scalars.find(slot);
    return it == scalars.end() ? 0 : it->second;
}
uint64_t Storage::read(uint32_t slot, uint64_t key) const {
    auto it = keyed.find({slot, key});
    return it == keyed.end() ? 0 : it->second;
}
void Storage::write(uint32_t slot, uint64_t value) { scalars[slot] = value; }
void Storage::write(uint32_t slot, uint64_t key, uint64_t value) { keyed[{slot, key}] = value; }

Storage Storage::normalized() const {
    Storage out;
    for (const auto& [slot, value] : scalars)
        if (value != 0)
            out.scalars.emplace(slot, value);
    for (const auto& [cell, value] : keyed)
        if (value != 0)
            out.keyed.emplace(cell, value);
    return out;
}

std::string ExecResult::describe() const {
    std::ostringstream out;
    if (reverted) {
        out << "reverted \"" << revert_message << "\"";
    } else if (value) {
        out << "returned " << *value;
    } else {
        out << "returned";
    }
    out << ", " << events.size() << " event(s)";
    return out.str();
}

namespace {

struct RevertSignal {
    std::string message;
};

class Interpreter {
public:
    Interpreter(const CompilationUnit& unit, const TxInput& tx, Storage storage)
        : unit_(unit), ast_(unit.ast), tx_(tx), storage_(std::move(storage)) {}

    InterpOutcome run() {
        auto dispatch = unit_.symbols.dispatch.find(tx_.dispatch_key());
        if (dispatch == unit_.symbols.dispatch.end())
            throw CompileError(ErrorCode::UnknownName,
                               "no external function '" + tx_.dispatch_key() + "'");
        Storage before = storage_;
        InterpOutcome out;
        trace_ = &out.statement_trace;
        try {
            auto value = exec_function(dispatch->second, tx_.args);
            out.result.value = value;
            out.result.storage = storage_;
            out.result.events = events_;
        } catch (const RevertSignal& revert) {
            out.result.reverted = true;
            out.result.revert_message = revert.message;
            out.result.storage = before; // whole-transaction rollback
            out.result.events.clear();
        }
        return out;
    }

private:
    enum class Flow { Normal, Returned };

    struct Frame {
        const FunctionSym* fn = nullptr;
        std::map<std::pair<NodeId, uint32_t>, uint64_t> params; // (owner, index)
        std::map<NodeId, uint64_t> locals;                      // decl node
        std::vector<NodeId> layers;                             // modifier bodies, then body
        size_t layer = 0;
        std::optional<uint64_t> ret_value;
        bool has_ret = false;
        uint32_t implicit_return = 0;
    };

    void step() {
        if (++steps_ > kInterpStepLimit)
            throw CompileError(ErrorCode::StepLimit, "interpreter step limit exceeded");
    }

    void trace_stmt(uint32_t id) {
        step();
        trace_->push_back(id);
    }

    std::optional<uint64_t> exec_function(const FnRef& ref, const std::vector<uint64_t>& args) {
        const auto& sym = unit_.symbols.contracts[ref.contract].functions[ref.index];
        const auto& d = ast_[sym.node].as<FunctionData>();
        const auto& fs = unit_.registry.function_statements(sym.node);

        Frame frame;
        frame.fn = &sym;
        frame.has_ret = sym.ret.has_value();
        frame.implicit_return = fs.implicit_return;
        for (uint32_t i = 0; i < d.params.size(); ++i)
            frame.params[{sym.node, i}] = args[i];

        frames_.push_back(std::move(frame));
        contract_ = ref.contract;

        // modifier arguments evaluate eagerly at entry, outermost first
        Frame& f = frames_.back();
        for (NodeId inv : ast_[sym.node].as<FunctionData>().mod_invokes) {
            auto mref = std::get<ModifierRef>(ast_[inv].resolved);
            const auto& mod = unit_.symbols.contracts[mref.contract].modifiers[mref.index];
            const auto& inv_data = ast_[inv].as<ModInvokeData>();
            for (uint32_t i = 0; i < inv_data.args.size(); ++i)
                f.params[{mod.node, i}] = eval(inv_data.args[i]);
            f.layers.push_back(ast_[mod.node].as<ModifierData>().body);
        }
        f.layers.push_back(d.body);

        exec_layer(0);

        // every exit that falls off the spliced end is the implicit return
        trace_stmt(frames_.back().implicit_return);
        std::optional<uint64_t> value;
        if (frames_.back().has_ret)
            value = frames_.back().ret_value.value_or(0);
        frames_.pop_back();
        return value;
    }

    void exec_layer(size_t index) {
        Frame& f = frames_.back();
        size_t saved = f.layer;
        f.layer = index;
        NodeId body = f.layers[index];
        Flow flow = exec_block(body);
        // a Returned flow that reaches the top of a layer resumes the outer
        // layer after its placeholder (or ends the function)
        (void)flow;
        frames_.back().layer = saved;
    }

    Flow exec_block(NodeId id) {
        for (NodeId s : ast_[id].as<BlockData>().stmts) {
            Flow flow = exec_stmt(s);
            if (flow == Flow::Returned)
                return flow;
        }
        return Flow::Normal;
    }

    Flow exec_stmt(NodeId id) {
        const auto& node = ast_[id];
        if (node.statement_id) {
            trace_stmt(*node.statement_id);
            cur_stmt_ = *node.statement_id;
        }
        switch (node.kind) {
        case NodeKind::Block:
            return exec_block(id);
        case NodeKind::PlaceholderStmt: {
            Frame& f = frames_.back();
            size_t next = f.layer + 1;
            bool inner_is_body = next + 1 == f.layers.size();
            size_t saved = f.layer;
            f.layer = next;
            Flow flow = exec_block(f.layers[next]);
            frames_.back().layer = saved;
            // a return out of the body resumes after the innermost placeholder
            if (flow == Flow::Returned && inner_is_body)
                return Flow::Normal;
            return flow;
        }
        case NodeKind::VarDeclStmt: {
            uint64_t v = eval(node.as<VarDeclData>().init);
            frames_.back().locals[id] = v;
            return Flow::Normal;
        }
        case NodeKind::AssignStmt: {
            const auto& d = node.as<AssignData>();
            const auto& target = ast_[d.target];
            if (target.kind == NodeKind::IdentExpr) {
                if (auto* sv = std::get_if<StateVarRef>(&target.resolved)) {
                    uint64_t v = eval(d.value);
                    const auto& var = unit_.symbols.contracts[sv->contract].state_vars[sv->index];
                    storage_.write(var.slot, v);
                } else if (auto* local = std::get_if<LocalRef>(&target.resolved)) {
                    uint64_t v = eval(d.value);
                    frames_.back().locals[local->decl] = v;
                } else if (auto* param = std::get_if<ParamRef>(&target.resolved)) {
                    uint64_t v = eval(d.value);
                    frames_.back().params[{param->owner, param->index}] = v;
                }
            } else {
                const auto& ix = target.as<IndexData>();
                auto* sv = std::get_if<StateVarRef>(&ast_[ix.base].resolved);
                uint64_t key = eval(ix.index);
                uint64_t v = eval(d.value);
                const auto& var = unit_.symbols.contracts[sv->contract].state_vars[sv->index];
                storage_.write(var.slot, key, v);
            }
            return Flow::Normal;
        }
        case NodeKind::IfStmt: {
            const auto& d = node.as<IfData>();
            if (eval(d.cond))
                return exec_stmt(d.then_branch);
            if (d.else_branch)
                return exec_stmt(*d.else_branch);
            return Flow::Normal;
        }
        case NodeKind::WhileStmt: {
            const auto& d = node.as<WhileData>();
            uint32_t stmt = *node.statement_id;
            while (true) {
                if (!eval(d.cond))
                    return Flow::Normal;
                Flow flow = exec_stmt(d.body);
                if (flow == Flow::Returned)
                    return flow;
                trace_stmt(stmt); // loop re-entry evaluates the header again
                cur_stmt_ = stmt;
            }
        }
        case NodeKind::ForStmt: {
            const auto& d = node.as<ForData>();
            uint32_t stmt = *node.statement_id;
            if (d.init)
                exec_stmt(*d.init);
            cur_stmt_ = stmt;
            while (true) {
                if (d.cond && !eval(*d.cond))
                    return Flow::Normal;
                Flow flow = exec_stmt(d.body);
                if (flow == Flow::Returned)
                    return flow;
                trace_stmt(stmt); // header re-entry: update + next condition
                cur_stmt_ = stmt;
                if (d.update)
                    exec_stmt(*d.update);
                cur_stmt_ = stmt;
            }
        }
        case NodeKind::RequireStmt: {
            const auto& d = node.as<RequireData>();
            if (!eval(d.cond))
                throw RevertSignal{d.has_message ? d.message : ""};
            return Flow::Normal;
        }
        case NodeKind::EmitStmt: {
            const auto& d = node.as<EmitData>();
            auto ref = std::get<EventRef>(node.resolved);
            const auto& ev = unit_.symbols.contracts[ref.contract].events[ref.index];
            EventRecord record;
            record.name = ev.name;
            for (NodeId a : d.args)
                record.args.push_back(eval(a));
            events_.push_back(std::move(record));
            return Flow::Normal;
        }
        case NodeKind::ReturnStmt: {
            const auto& d = node.as<ReturnData>();
            if (d.value)
                frames_.back().ret_value = eval(*d.value);
            return Flow::Returned;
        }
        case NodeKind::ExprStmt:
            eval(node.as<ExprStmtData>().expr);
            return Flow::Normal;
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unexpected statement");
        }
    }

    uint64_t eval(NodeId id) {
        step();
        const auto& node = ast_[id];
        switch (node.kind) {
        case NodeKind::NumberExpr:
            return node.as<NumberData>().value;
        case NodeKind::BoolExpr:
            return node.as<BoolData>().value ? 1 : 0;
        case NodeKind::SenderExpr:
            return tx_.sender;
        case NodeKind::IdentExpr: {
            if (auto* sv = std::get_if<StateVarRef>(&node.resolved)) {
                const auto& var = unit_.symbols.contracts[sv->contract].state_vars[sv->index];
                return storage_.read(var.slot);
            }
            if (auto* local = std::get_if<LocalRef>(&node.resolved))
                return frames_.back().locals.at(local->decl);
            if (auto* param = std::get_if<ParamRef>(&node.resolved))
                return frames_.back().params.at({param->owner, param->index});
            throw CompileError(ErrorCode::Internal, node.span, "unresolved identifier");
        }
        case NodeKind::IndexExpr: {
            const auto& d = node.as<IndexData>();
            auto* sv = std::get_if<StateVarRef>(&ast_[d.base].resolved);
            uint64_t key = eval(d.index);
            const auto& var = unit_.symbols.contracts[sv->contract].state_vars[sv->index];
            return storage_.read(var.slot, key);
        }
        case NodeKind::UnaryExpr: {
            const auto& d = node.as<UnaryData>();
            uint64_t v = eval(d.operand);
            return d.op == UnOp::Not ? (v == 0 ? 1 : 0) : (0 - v);
        }
        case NodeKind::BinaryExpr: {
            const auto& d = node.as<BinaryData>();
            if (d.op == BinOp::And) {
                if (!eval(d.lhs))
                    return 0;
                return eval(d.rhs) ? 1 : 0;
            }
            if (d.op == BinOp::Or) {
                if (eval(d.lhs))
                    return 1;
                return eval(d.rhs) ? 1 : 0;
            }
            uint64_t a = eval(d.lhs);
            uint64_t b = eval(d.rhs);
            switch (d.op) {
            case BinOp::Add: return a + b;
            case BinOp::Sub: return a - b;
            case BinOp::Mul: return a * b;
            case BinOp::Div:
                if (b == 0)
                    throw RevertSignal{"division by zero"};
                return a / b;
            case BinOp::Mod:
                if (b == 0)
                    throw RevertSignal{"division by zero"};
                return a % b;
            case BinOp::BitAnd: return a & b;
            case BinOp::BitOr: return a | b;
            case BinOp::BitXor: return a ^ b;
            case BinOp::Shl: return b >= 64 ? 0 : a << b;
            case BinOp::Shr: return b >= 64 ? 0 : a >> b;
            case BinOp::Eq: return a == b ? 1 : 0;
            case BinOp::Ne: return a != b ? 1 : 0;
            case BinOp::Lt: return a < b ? 1 : 0;
            case BinOp::Gt: return a > b ? 1 : 0;
            case BinOp::Le: return a <= b ? 1 : 0;
            case BinOp::Ge: return a >= b ? 1 : 0;
            default:
                throw CompileError(ErrorCode::Internal, node.span, "unhandled operator");
            }
        }
        case NodeKind::CallExpr: {
            const auto& d = node.as<CallData>();
            auto ref = std::get<FnRef>(node.resolved);
            std::vector<uint64_t> args;
            for (NodeId a : d.args)
                args.push_back(eval(a));
            uint32_t resume_stmt = cur_stmt_;
            uint32_t saved_contract = contract_;
            auto value = exec_function(ref, args);
            contract_ = saved_contract;
            // returning into the middle of a statement resumes it
            trace_stmt(resume_stmt);
            cur_stmt_ = resume_stmt;
            return value.value_or(0);
        }
        default:
            throw CompileError(ErrorCode::Internal, node.span, "unexpected expression");
        }
    }

    const CompilationUnit& unit_;
    const Ast& ast_;
    const TxInput& tx_;
    Storage storage_;
    std::vector<EventRecord> events_;
    std::vector<Frame> frames_;
    std::vector<uint32_t>* trace_ = nullptr;
    uint64_t steps_ = 0;
    uint32_t contract_ = 0;
    uint32_t cur_stmt_ = 0;
};

} // namespace

InterpOutcome interpret_source(const CompilationUnit& unit, const TxInput& tx,
                               const Storage& storage) {
    Storage initial = tx.initial_storage ? *tx.initial_storage : storage;
    return Interpreter(unit, tx, initial).run();
}

} // namespace zkmap
