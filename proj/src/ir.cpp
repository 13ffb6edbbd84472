// SPDX-License-Identifier: Apache-2.0
#include "zkmap/ir.hpp"

#include "zkmap/diag.hpp"

#include <algorithm>
#include <set>
#include <sstream>

namespace zkmap {

const char* ir_op_name(IrOp op) {
    switch (op) {
    case IrOp::Const: return "const";
    case IrOp::Add: return "add";
    case IrOp::Sub: return "sub";
    case IrOp::Mul: return "mul";
    case IrOp::Div: return "div";
    case IrOp::Mod: return "mod";
    case IrOp::BitAnd: return "and";
    case IrOp::BitOr: return "or";
    case IrOp::BitXor: return "xor";
    case IrOp::Shl: return "shl";
    case IrOp::Shr: return "shr";
    case IrOp::CmpEq: return "eq";
    case IrOp::CmpNe: return "ne";
    case IrOp::CmpLt: return "lt";
    case IrOp::CmpGt: return "gt";
    case IrOp::CmpLe: return "le";
    case IrOp::CmpGe: return "ge";
    case IrOp::Not: return "not";
    case IrOp::LoadState: return "load_state";
    case IrOp::StoreState: return "store_state";
    case IrOp::LoadKey: return "load_key";
    case IrOp::StoreKey: return "store_key";
    case IrOp::Param: return "param";
    case IrOp::Call: return "call";
    case IrOp::Phi: return "phi";
    case IrOp::Jump: return "jump";
    case IrOp::Branch: return "branch";
    case IrOp::Return: return "return";
    case IrOp::Revert: return "revert";
    case IrOp::EmitEvent: return "emit_event";
    case IrOp::ZkConstraint: return "zk_constraint";
    }
    return "?";
}

bool ir_is_binop(IrOp op) {
    switch (op) {
    case IrOp::Add: case IrOp::Sub: case IrOp::Mul: case IrOp::Div: case IrOp::Mod:
    case IrOp::BitAnd: case IrOp::BitOr: case IrOp::BitXor: case IrOp::Shl: case IrOp::Shr:
        return true;
    default:
        return false;
    }
}

bool ir_is_cmp(IrOp op) {
    switch (op) {
    case IrOp::CmpEq: case IrOp::CmpNe: case IrOp::CmpLt:
    case IrOp::CmpGt: case IrOp::CmpLe: case IrOp::CmpGe:
        return true;
    default:
        return false;
    }
}

bool ir_is_terminator(IrOp op) {
    return op == IrOp::Jump || op == IrOp::Branch || op == IrOp::Return || op == IrOp::Revert;
}

bool IrInstr::produces_value() const {
    switch (op) {
    case IrOp::Const:
    case IrOp::Not:
    case IrOp::LoadState:
    case IrOp::LoadKey:
    case IrOp::Param:
    case IrOp::Phi:
        return true;
    case IrOp::Call:
        return call_returns;
    default:
        return ir_is_binop(op) || ir_is_cmp(op);
    }
}

IrBlock* IrFunction::find_block(uint32_t id) {
    for (auto& b : blocks)
        if (b.id == id)
            return &b;
    return nullptr;
}
const IrBlock* IrFunction::find_block(uint32_t id) const {
    for (const auto& b : blocks)
        if (b.id == id)
            return &b;
    return nullptr;
}

uint32_t IrModule::intern_string(const std::string& s) {
    for (uint32_t i = 0; i < string_table.size(); ++i)
        if (string_table[i] == s)
            return i;
    string_table.push_back(s);
    return static_cast<uint32_t>(string_table.size() - 1);
}

size_t IrModule::instruction_count() const {
    size_t n = 0;
    for (const auto& fn : functions)
        for (const auto& b : fn.blocks)
            n += b.instrs.size();
    return n;
}

void for_each_use(IrInstr& instr, const std::function<void(uint32_t&)>& fn) {
    for (auto& a : instr.args)
        fn(a);
    for (auto& [block, value] : instr.phi_in)
        fn(value);
}

void for_each_use(const IrInstr& instr, const std::function<void(uint32_t)>& fn) {
    for (auto a : instr.args)
        fn(a);
    for (const auto& [block, value] : instr.phi_in)
        fn(value);
}

void replace_all_uses(IrFunction& fn, uint32_t old_id, uint32_t new_id) {
    for (auto& b : fn.blocks)
        for (auto& i : b.instrs)
            for_each_use(i, [&](uint32_t& use) {
                if (use == old_id)
                    use = new_id;
            });
}

ValueIndex::ValueIndex(IrFunction& fn) {
    for (auto& b : fn.blocks)
        for (auto& i : b.instrs)
            if (i.produces_value())
                defs_[i.ir_id] = &i;
}

IrInstr* ValueIndex::def(uint32_t value_id) const {
    auto it = defs_.find(value_id);
    return it == defs_.end() ? nullptr : it->second;
}

std::map<uint32_t, std::vector<uint32_t>> predecessors(const IrFunction& fn) {
    std::map<uint32_t, std::vector<uint32_t>> preds;
    for (const auto& b : fn.blocks)
        preds[b.id]; // ensure presence
    for (const auto& b : fn.blocks) {
        if (b.instrs.empty())
            continue;
        for (uint32_t t : b.instrs.back().targets)
            preds[t].push_back(b.id);
    }
    return preds;
}

static std::vector<uint32_t> reverse_post_order(const IrFunction& fn) {
    std::set<uint32_t> visited;
    std::vector<uint32_t> post;
    std::function<void(uint32_t)> dfs = [&](uint32_t id) {
        if (!visited.insert(id).second)
            return;
        const IrBlock* b = fn.find_block(id);
        if (!b || b->instrs.empty())
            return;
        for (uint32_t t : b->instrs.back().targets)
            dfs(t);
        post.push_back(id);
    };
    if (!fn.blocks.empty())
        dfs(fn.blocks.front().id);
    std::reverse(post.begin(), post.end());
    return post;
}

std::map<uint32_t, uint32_t> dominator_tree(const IrFunction& fn) {
    // Cooper-Harvey-Kennedy iterative algorithm over RPO indices.
    std::vector<uint32_t> rpo = reverse_post_order(fn);
    std::map<uint32_t, size_t> rpo_index;
    for (size_t i = 0; i < rpo.size(); ++i)
        rpo_index[rpo[i]] = i;
    auto preds = predecessors(fn);

    std::vector<std::optional<size_t>> idom(rpo.size());
    if (!rpo.empty())
        idom[0] = 0;
    auto intersect = [&](size_t a, size_t b) {
        while (a != b) {
            while (a > b)
                a = *idom[a];
            while (b > a)
                b = *idom[b];
        }
        return a;
    };
    bool changed = true;
    while (changed) {
        changed = false;
        for (size_t i = 1; i < rpo.size(); ++i) {
            std::optional<size_t> new_idom;
            for (uint32_t p : preds[rpo[i]]) {
                auto it = rpo_index.find(p);
                if (it == rpo_index.end() || !idom[it->second])
                    continue;
                new_idom = new_idom ? intersect(*new_idom, it->second) : it->second;
            }
            if (new_idom && idom[i] != new_idom) {
                idom[i] = new_idom;
                changed = true;
            }
        }
    }
    std::map<uint32_t, uint32_t> tree;
    for (size_t i = 0; i < rpo.size(); ++i)
        if (idom[i])
            tree[rpo[i]] = rpo[*idom[i]];
    return tree;
}

namespace {

[[noreturn]] void ssa_fail(const IrFunction& fn, const std::string& what) {
    throw CompileError(ErrorCode::Internal,
                       "SSA check failed in '" + fn.name + "': " + what);
}

void verify_function(const IrFunction& fn) {
    if (fn.blocks.empty())
        ssa_fail(fn, "no blocks");

    std::set<uint32_t> block_ids;
    for (const auto& b : fn.blocks)
        if (!block_ids.insert(b.id).second)
            ssa_fail(fn, "duplicate block id " + std::to_string(b.id));

    // exactly one terminator, at the end
    for (const auto& b : fn.blocks) {
        if (b.instrs.empty())
            ssa_fail(fn, "empty block bb" + std::to_string(b.id));
        for (size_t i = 0; i < b.instrs.size(); ++i) {
            bool is_term = b.instrs[i].is_terminator();
            if (is_term != (i + 1 == b.instrs.size()))
                ssa_fail(fn, "terminator misplaced in bb" + std::to_string(b.id));
        }
        for (uint32_t t : b.instrs.back().targets)
            if (!block_ids.count(t))
                ssa_fail(fn, "jump to unknown block bb" + std::to_string(t));
    }

    auto preds = predecessors(fn);
    if (!preds[fn.blocks.front().id].empty())
        ssa_fail(fn, "entry block has predecessors");

    // single definitions
    std::map<uint32_t, uint32_t> def_block;
    std::set<uint32_t> defined;
    for (const auto& b : fn.blocks) {
        for (const auto& i : b.instrs) {
            if (!i.produces_value())
                continue;
            if (!defined.insert(i.ir_id).second)
                ssa_fail(fn, "value %" + std::to_string(i.ir_id) + " defined twice");
            def_block[i.ir_id] = b.id;
        }
    }

    // phi incomings match predecessors exactly
    for (const auto& b : fn.blocks) {
        for (const auto& i : b.instrs) {
            if (i.op != IrOp::Phi)
                continue;
            std::set<uint32_t> incoming;
            for (const auto& [pred, value] : i.phi_in)
                if (!incoming.insert(pred).second)
                    ssa_fail(fn, "phi %" + std::to_string(i.ir_id) + " repeats a predecessor");
            std::set<uint32_t> expect(preds[b.id].begin(), preds[b.id].end());
            if (incoming != expect)
                ssa_fail(fn, "phi %" + std::to_string(i.ir_id) +
                                 " incomings do not match predecessors of bb" +
                                 std::to_string(b.id));
        }
    }

    // dominance: defs dominate uses (via the independent dominator tree)
    auto idom = dominator_tree(fn);
    auto dominates = [&](uint32_t a, uint32_t b) {
        // does block a dominate block b?
        uint32_t cur = b;
        while (true) {
            if (cur == a)
                return true;
            auto it = idom.find(cur);
            if (it == idom.end() || it->second == cur)
                return cur == a;
            cur = it->second;
        }
    };

    for (const auto& b : fn.blocks) {
        // position of each def within the block for same-block ordering
        std::map<uint32_t, size_t> pos;
        for (size_t i = 0; i < b.instrs.size(); ++i)
            pos[b.instrs[i].ir_id] = i;

        for (size_t i = 0; i < b.instrs.size(); ++i) {
            const auto& instr = b.instrs[i];
            if (instr.op == IrOp::Phi) {
                for (const auto& [pred, value] : instr.phi_in) {
                    auto def = def_block.find(value);
                    if (def == def_block.end())
                        ssa_fail(fn, "phi %" + std::to_string(instr.ir_id) +
                                         " uses undefined value %" + std::to_string(value));
                    if (!dominates(def->second, pred))
                        ssa_fail(fn, "phi incoming %" + std::to_string(value) +
                                         " does not dominate edge from bb" +
                                         std::to_string(pred));
                }
                continue;
            }
            for_each_use(instr, [&](uint32_t use) {
                auto def = def_block.find(use);
                if (def == def_block.end())
                    ssa_fail(fn, "%" + std::to_string(instr.ir_id) + " uses undefined value %" +
                                     std::to_string(use));
                if (def->second == b.id) {
                    if (pos.count(use) && pos[use] >= i)
                        ssa_fail(fn, "%" + std::to_string(instr.ir_id) +
                                         " uses %" + std::to_string(use) + " before definition");
                } else if (!dominates(def->second, b.id)) {
                    ssa_fail(fn, "%" + std::to_string(instr.ir_id) + " use of %" +
                                     std::to_string(use) + " not dominated by its definition");
                }
            });
        }
    }
}

} // namespace

void verify_ssa(const IrModule& module) {
    std::set<uint32_t> ids;
    for (const auto& fn : module.functions)
        for (const auto& b : fn.blocks)
            for (const auto& i : b.instrs) {
                if (!ids.insert(i.ir_id).second)
                    throw CompileError(ErrorCode::Internal,
                                       "duplicate ir_id " + std::to_string(i.ir_id) +
                                           " across module");
                if (i.ir_id >= module.next_ir_id)
                    throw CompileError(ErrorCode::Internal,
                                       "ir_id " + std::to_string(i.ir_id) +
                                           " outside allocated range");
            }
    for (const auto& fn : module.functions)
        verify_function(fn);
}

static void dump_instr(std::ostringstream& out, const IrInstr& i) {
    out << "    ";
    if (i.produces_value())
        out << "%" << i.ir_id << " = ";
    else
        out << "!" << i.ir_id << " ";
    out << ir_op_name(i.op);
    if (i.op == IrOp::Const)
        out << " " << i.imm;
    if (i.op == IrOp::Param)
        out << (i.aux == kSenderParam ? " sender" : " " + std::to_string(i.aux));
    if (i.op == IrOp::LoadState || i.op == IrOp::StoreState || i.op == IrOp::LoadKey ||
        i.op == IrOp::StoreKey)
        out << " slot" << i.slot;
    if (i.op == IrOp::Call)
        out << " @fn" << i.aux;
    if (i.op == IrOp::EmitEvent)
        out << " @ev" << i.aux;
    if (i.op == IrOp::Revert)
        out << " str" << i.aux;
    if (i.op == IrOp::ZkConstraint)
        out << " idx" << i.aux;
    for (uint32_t a : i.args)
        out << " %" << a;
    if (i.op == IrOp::Phi) {
        for (const auto& [pred, value] : i.phi_in)
            out << " [bb" << pred << ": %" << value << "]";
    }
    for (uint32_t t : i.targets)
        out << " bb" << t;

    out << "  ; ";
    if (i.prov.primary_span)
        out << i.prov.primary_span->start << ":" << i.prov.primary_span->length << ":"
            << i.prov.primary_span->file;
    else
        out << "-:-:-";
    out << " conf=" << confidence_letter(i.prov.confidence);
    out << " md=" << i.modifier_depth;
    if (i.prov.zk_constraint)
        out << " zk=" << *i.prov.zk_constraint;
    if (!i.prov.inline_chain.empty()) {
        out << " inl=";
        for (size_t c = 0; c < i.prov.inline_chain.size(); ++c) {
            if (c)
                out << ",";
            out << i.prov.inline_chain[c].start << ":" << i.prov.inline_chain[c].length;
        }
    }
    out << "\n";
}

std::string dump_ir(const IrFunction& fn) {
    std::ostringstream out;
    out << "fn @" << fn.dispatch_key() << (fn.is_external ? " external" : " internal");
    if (fn.has_return_value)
        out << " -> word";
    out << "\n";
    for (const auto& b : fn.blocks) {
        out << "  bb" << b.id << ":\n";
        for (const auto& i : b.instrs)
            dump_instr(out, i);
    }
    return out.str();
}

std::string dump_ir(const IrModule& module) {
    std::ostringstream out;
    for (const auto& fn : module.functions)
        out << dump_ir(fn);
    if (!module.string_table.empty()) {
        out << "strings:\n";
        for (size_t i = 0; i < module.string_table.size(); ++i)
            out << "  str" << i << " = \"" << module.string_table[i] << "\"\n";
    }
    if (!module.event_table.empty()) {
        out << "events:\n";
        for (size_t i = 0; i < module.event_table.size(); ++i)
            out << "  ev" << i << " = " << module.event_table[i].name << "/"
                << module.event_table[i].param_count << "\n";
    }
    return out.str();
}

} // namespace zkmap
