// SPDX-License-Identifier: Apache-2.0
#include "zkmap/passes.hpp"

#include "zkmap/diag.hpp"

#include <algorithm>
#include <map>
#include <set>

namespace zkmap {

const char* pass_name(PassKind k) {
    switch (k) {
    case PassKind::ConstFold: return "const_fold";
    case PassKind::Dce: return "dce";
    case PassKind::Inline: return "inline";
    case PassKind::Unroll: return "unroll";
    case PassKind::Reorder: return "reorder";
    case PassKind::CfgRestructure: return "cfg_restructure";
    case PassKind::ZkInstrument: return "zk_instrument";
    }
    return "?";
}

std::optional<PassKind> pass_from_name(const std::string& name) {
    for (PassKind k : {PassKind::ConstFold, PassKind::Dce, PassKind::Inline, PassKind::Unroll,
                       PassKind::Reorder, PassKind::CfgRestructure, PassKind::ZkInstrument})
        if (name == pass_name(k))
            return k;
    return std::nullopt;
}

std::vector<PassKind> default_pass_order() {
    return {PassKind::Inline,  PassKind::ConstFold,      PassKind::Unroll, PassKind::Dce,
            PassKind::CfgRestructure, PassKind::Reorder, PassKind::ZkInstrument};
}

void PassConfig::validate() const {
    std::set<PassKind> seen;
    for (size_t i = 0; i < order.size(); ++i) {
        if (!seen.insert(order[i]).second)
            throw CompileError(ErrorCode::Internal,
                               std::string("pass '") + pass_name(order[i]) +
                                   "' appears more than once");
        if (order[i] == PassKind::ZkInstrument && i + 1 != order.size())
            throw CompileError(ErrorCode::Internal, "zk_instrument must be the last pass");
    }
}

size_t PassReport::total_created() const {
    size_t n = 0;
    for (const auto& [kind, counts] : passes)
        n += counts.created;
    return n;
}
size_t PassReport::total_deleted() const {
    size_t n = 0;
    for (const auto& [kind, counts] : passes)
        n += counts.deleted;
    return n;
}

namespace {

bool is_pure(const IrInstr& i) {
    switch (i.op) {
    case IrOp::Const:
    case IrOp::Not:
    case IrOp::LoadState:
    case IrOp::LoadKey:
    case IrOp::Param:
    case IrOp::Phi:
        return true;
    default:
        return ir_is_binop(i.op) || ir_is_cmp(i.op);
    }
}

std::map<uint32_t, size_t> use_counts(const IrFunction& fn) {
    std::map<uint32_t, size_t> uses;
    for (const auto& b : fn.blocks)
        for (const auto& i : b.instrs)
            for_each_use(i, [&](uint32_t v) { ++uses[v]; });
    return uses;
}

void erase_instr(IrBlock& b, size_t index) { b.instrs.erase(b.instrs.begin() + index); }

Provenance merged_fold_prov(const IrInstr& instr, const IrInstr& lhs, const IrInstr& rhs,
                            const PassContext& ctx, PassCounts& counts) {
    if (!ctx.mapping_enabled) {
        Provenance p;
        p.statement_id = instr.prov.statement_id;
        p.confidence = instr.prov.confidence;
        return p;
    }
    // anchor the merge at the operator so fallback spans stay at the fold site
    Provenance merged =
        merge_provenance(merge_provenance(instr.prov, lhs.prov, ctx.unit->span_index),
                         rhs.prov, ctx.unit->span_index);
    if (instr.prov.confidence == Confidence::Exact &&
        merged.confidence == Confidence::Approximate)
        ++counts.downgrades;
    return merged;
}

std::optional<uint64_t> eval_binop(IrOp op, uint64_t a, uint64_t b) {
    switch (op) {
    case IrOp::Add: return a + b;
    case IrOp::Sub: return a - b;
    case IrOp::Mul: return a * b;
    case IrOp::Div: return b == 0 ? std::optional<uint64_t>() : a / b;
    case IrOp::Mod: return b == 0 ? std::optional<uint64_t>() : a % b;
    case IrOp::BitAnd: return a & b;
    case IrOp::BitOr: return a | b;
    case IrOp::BitXor: return a ^ b;
    case IrOp::Shl: return b >= 64 ? 0 : a << b;
    case IrOp::Shr: return b >= 64 ? 0 : a >> b;
    case IrOp::CmpEq: return a == b ? 1 : 0;
    case IrOp::CmpNe: return a != b ? 1 : 0;
    case IrOp::CmpLt: return a < b ? 1 : 0;
    case IrOp::CmpGt: return a > b ? 1 : 0;
    case IrOp::CmpLe: return a <= b ? 1 : 0;
    case IrOp::CmpGe: return a >= b ? 1 : 0;
    default: return std::nullopt;
    }
}

} // namespace

// ---------------------------------------------------------------------------
// const_fold
// ---------------------------------------------------------------------------

PassCounts pass_const_fold(IrModule& module, const PassContext& ctx) {
    PassCounts counts;
    for (auto& fn : module.functions) {
        // the value index holds raw pointers; restart the sweep after every
        // mutation
        bool changed = true;
        while (changed) {
            changed = false;
            ValueIndex index(fn);
            for (auto& b : fn.blocks) {
                if (changed)
                    break;
                for (size_t ii = 0; ii < b.instrs.size() && !changed; ++ii) {
                    IrInstr& i = b.instrs[ii];
                    if (!ir_is_binop(i.op) && !ir_is_cmp(i.op))
                        continue;
                    IrInstr* lhs = index.def(i.args[0]);
                    IrInstr* rhs = index.def(i.args[1]);
                    if (!lhs || !rhs)
                        continue;
                    bool lc = lhs->op == IrOp::Const;
                    bool rc = rhs->op == IrOp::Const;

                    if (lc && rc) {
                        auto value = eval_binop(i.op, lhs->imm, rhs->imm);
                        if (!value)
                            continue; // division by constant zero keeps its guard
                        IrInstr folded;
                        folded.ir_id = module.fresh_id();
                        folded.op = IrOp::Const;
                        folded.imm = *value;
                        folded.modifier_depth = i.modifier_depth;
                        folded.prov = merged_fold_prov(i, *lhs, *rhs, ctx, counts);
                        uint32_t old_id = i.ir_id;
                        counts.no_mapping.push_back(old_id);
                        ++counts.created;
                        ++counts.deleted;
                        b.instrs[ii] = std::move(folded);
                        replace_all_uses(fn, old_id, b.instrs[ii].ir_id);
                        changed = true;
                        continue;
                    }

                    auto drop_for = [&](uint32_t replacement) {
                        uint32_t old_id = i.ir_id;
                        counts.no_mapping.push_back(old_id);
                        ++counts.deleted;
                        erase_instr(b, ii);
                        replace_all_uses(fn, old_id, replacement);
                        changed = true;
                    };
                    auto fold_to_zero = [&](const IrInstr& zero_const) {
                        IrInstr folded;
                        folded.ir_id = module.fresh_id();
                        folded.op = IrOp::Const;
                        folded.imm = 0;
                        folded.modifier_depth = i.modifier_depth;
                        if (ctx.mapping_enabled) {
                            folded.prov = merge_provenance(i.prov, zero_const.prov,
                                                           ctx.unit->span_index);
                        } else {
                            folded.prov.statement_id = i.prov.statement_id;
                        }
                        uint32_t old_id = i.ir_id;
                        counts.no_mapping.push_back(old_id);
                        ++counts.created;
                        ++counts.deleted;
                        b.instrs[ii] = std::move(folded);
                        replace_all_uses(fn, old_id, b.instrs[ii].ir_id);
                        changed = true;
                    };

                    if (i.op == IrOp::Add && rc && rhs->imm == 0) { drop_for(i.args[0]); continue; }
                    if (i.op == IrOp::Add && lc && lhs->imm == 0) { drop_for(i.args[1]); continue; }
                    if (i.op == IrOp::Mul && rc && rhs->imm == 1) { drop_for(i.args[0]); continue; }
                    if (i.op == IrOp::Mul && lc && lhs->imm == 1) { drop_for(i.args[1]); continue; }
                    if (i.op == IrOp::Mul && rc && rhs->imm == 0) { fold_to_zero(*rhs); continue; }
                    if (i.op == IrOp::Mul && lc && lhs->imm == 0) { fold_to_zero(*lhs); continue; }
                    if (i.op == IrOp::BitOr && rc && rhs->imm == 0) { drop_for(i.args[0]); continue; }
                    if (i.op == IrOp::BitOr && lc && lhs->imm == 0) { drop_for(i.args[1]); continue; }
                    if (i.op == IrOp::BitXor && rc && rhs->imm == 0) { drop_for(i.args[0]); continue; }
                    if (i.op == IrOp::BitXor && lc && lhs->imm == 0) { drop_for(i.args[1]); continue; }
                    if (i.op == IrOp::BitAnd && i.args[0] == i.args[1]) { drop_for(i.args[0]); continue; }
                }
            }
        }
    }
    return counts;
}

// ---------------------------------------------------------------------------
// dce
// ---------------------------------------------------------------------------

PassCounts pass_dce(IrModule& module, const PassContext&) {
    PassCounts counts;
    for (auto& fn : module.functions) {
        std::set<uint32_t> reachable;
        std::vector<uint32_t> stack = {fn.blocks.front().id};
        while (!stack.empty()) {
            uint32_t id = stack.back();
            stack.pop_back();
            if (!reachable.insert(id).second)
                continue;
            const IrBlock* b = fn.find_block(id);
            if (b && !b->instrs.empty())
                for (uint32_t t : b->instrs.back().targets)
                    stack.push_back(t);
        }
        for (size_t bi = 0; bi < fn.blocks.size();) {
            if (!reachable.count(fn.blocks[bi].id)) {
                for (const auto& i : fn.blocks[bi].instrs) {
                    counts.no_mapping.push_back(i.ir_id);
                    ++counts.deleted;
                }
                fn.blocks.erase(fn.blocks.begin() + bi);
            } else {
                ++bi;
            }
        }
        for (auto& b : fn.blocks)
            for (auto& i : b.instrs) {
                if (i.op != IrOp::Phi)
                    continue;
                std::erase_if(i.phi_in, [&](const std::pair<uint32_t, uint32_t>& in) {
                    return !reachable.count(in.first);
                });
            }

        bool changed = true;
        while (changed) {
            changed = false;
            auto uses = use_counts(fn);
            for (auto& b : fn.blocks) {
                for (size_t ii = 0; ii < b.instrs.size();) {
                    IrInstr& i = b.instrs[ii];
                    if (is_pure(i) && i.produces_value() && uses[i.ir_id] == 0) {
                        counts.no_mapping.push_back(i.ir_id);
                        ++counts.deleted;
                        erase_instr(b, ii);
                        changed = true;
                    } else {
                        ++ii;
                    }
                }
            }
        }
    }
    return counts;
}

// ---------------------------------------------------------------------------
// inline
// ---------------------------------------------------------------------------

namespace {

std::set<uint32_t> cyclic_functions(const IrModule& module) {
    size_t n = module.functions.size();
    std::vector<std::set<uint32_t>> callees(n);
    for (uint32_t f = 0; f < n; ++f)
        for (const auto& b : module.functions[f].blocks)
            for (const auto& i : b.instrs)
                if (i.op == IrOp::Call)
                    callees[f].insert(i.aux);

    std::set<uint32_t> cyclic;
    for (uint32_t start = 0; start < n; ++start) {
        std::set<uint32_t> seen;
        std::vector<uint32_t> stack(callees[start].begin(), callees[start].end());
        while (!stack.empty()) {
            uint32_t cur = stack.back();
            stack.pop_back();
            if (cur == start) {
                cyclic.insert(start);
                break;
            }
            if (!seen.insert(cur).second)
                continue;
            for (uint32_t next : callees[cur])
                stack.push_back(next);
        }
    }
    return cyclic;
}

size_t function_size(const IrFunction& fn) {
    size_t n = 0;
    for (const auto& b : fn.blocks)
        n += b.instrs.size();
    return n;
}

void replace_uses_everywhere(IrFunction& caller, IrBlock& detached, uint32_t old_id,
                             uint32_t new_id) {
    replace_all_uses(caller, old_id, new_id);
    for (auto& i : detached.instrs)
        for_each_use(i, [&](uint32_t& v) {
            if (v == old_id)
                v = new_id;
        });
}

void inline_site(IrModule& module, IrFunction& caller, uint32_t block_index,
                 uint32_t instr_index, const PassContext& ctx, PassCounts& counts) {
    IrInstr call = caller.blocks[block_index].instrs[instr_index];
    const IrFunction& callee = module.functions[call.aux];

    // split the call block
    IrBlock cont;
    cont.id = caller.next_block_id++;
    {
        IrBlock& site = caller.blocks[block_index];
        cont.instrs.assign(site.instrs.begin() + instr_index + 1, site.instrs.end());
        site.instrs.erase(site.instrs.begin() + instr_index, site.instrs.end());

        // edges that used to leave `site` now leave `cont`
        if (!cont.instrs.empty()) {
            for (uint32_t t : cont.instrs.back().targets) {
                IrBlock* tb = caller.find_block(t);
                if (!tb)
                    continue;
                for (auto& phi : tb->instrs)
                    if (phi.op == IrOp::Phi)
                        for (auto& [pred, value] : phi.phi_in)
                            if (pred == site.id)
                                pred = cont.id;
            }
        }
    }

    std::map<uint32_t, uint32_t> value_map; // callee value -> caller value
    std::map<uint32_t, uint32_t> block_map; // callee block -> caller block
    for (const auto& b : callee.blocks)
        block_map[b.id] = caller.next_block_id++;
    for (const auto& b : callee.blocks)
        for (const auto& i : b.instrs)
            if (i.op == IrOp::Param && i.aux != kSenderParam)
                value_map[i.ir_id] = call.args[i.aux];

    std::vector<IrBlock> copies;
    for (const auto& b : callee.blocks) {
        IrBlock copy;
        copy.id = block_map[b.id];
        for (const auto& i : b.instrs) {
            if (i.op == IrOp::Param && i.aux != kSenderParam)
                continue;
            IrInstr c = i;
            c.ir_id = module.fresh_id();
            value_map[i.ir_id] = c.ir_id;
            ++counts.created;
            copy.instrs.push_back(std::move(c));
        }
        copies.push_back(std::move(copy));
    }

    for (auto& b : copies) {
        for (auto& i : b.instrs) {
            for_each_use(i, [&](uint32_t& v) {
                auto it = value_map.find(v);
                if (it != value_map.end())
                    v = it->second;
            });
            for (auto& t : i.targets)
                t = block_map.at(t);
            for (auto& [pred, value] : i.phi_in)
                pred = block_map.at(pred);
            if (ctx.mapping_enabled && call.prov.primary_span)
                i.prov.inline_chain.insert(i.prov.inline_chain.begin(), *call.prov.primary_span);
        }
    }

    // returns become jumps to the continuation
    std::vector<std::pair<uint32_t, uint32_t>> returns; // (block id, value)
    for (auto& b : copies) {
        if (b.instrs.empty() || b.instrs.back().op != IrOp::Return)
            continue;
        IrInstr& term = b.instrs.back();
        if (!term.args.empty())
            returns.emplace_back(b.id, term.args[0]);
        else
            returns.emplace_back(b.id, 0);
        IrInstr jump;
        jump.ir_id = term.ir_id;
        jump.op = IrOp::Jump;
        jump.targets = {cont.id};
        jump.prov = term.prov;
        jump.modifier_depth = term.modifier_depth;
        term = std::move(jump);
    }

    if (call.call_returns) {
        if (returns.size() == 1) {
            replace_uses_everywhere(caller, cont, call.ir_id, returns[0].second);
        } else if (returns.size() > 1) {
            IrInstr phi;
            phi.ir_id = module.fresh_id();
            phi.op = IrOp::Phi;
            phi.prov = call.prov;
            phi.prov.confidence = Confidence::Approximate;
            phi.modifier_depth = call.modifier_depth;
            for (const auto& [blk, value] : returns)
                phi.phi_in.emplace_back(blk, value);
            uint32_t phi_id = phi.ir_id;
            ++counts.created;
            cont.instrs.insert(cont.instrs.begin(), std::move(phi));
            replace_uses_everywhere(caller, cont, call.ir_id, phi_id);
        } else {
            // the callee never returns; the continuation is unreachable
            IrInstr undef;
            undef.ir_id = module.fresh_id();
            undef.op = IrOp::Const;
            undef.imm = 0;
            undef.prov = call.prov;
            undef.modifier_depth = call.modifier_depth;
            uint32_t undef_id = undef.ir_id;
            ++counts.created;
            cont.instrs.insert(cont.instrs.begin(), std::move(undef));
            replace_uses_everywhere(caller, cont, call.ir_id, undef_id);
        }
    }

    IrInstr enter;
    enter.ir_id = module.fresh_id();
    enter.op = IrOp::Jump;
    enter.targets = {block_map.at(callee.blocks.front().id)};
    enter.prov = call.prov;
    enter.modifier_depth = call.modifier_depth;
    ++counts.created;
    caller.blocks[block_index].instrs.push_back(std::move(enter));
    ++counts.deleted; // the call itself
    counts.no_mapping.push_back(call.ir_id);

    auto insert_at = caller.blocks.begin() + block_index + 1;
    for (auto& b : copies)
        insert_at = std::next(caller.blocks.insert(insert_at, std::move(b)));
    caller.blocks.insert(insert_at, std::move(cont));
}

} // namespace

PassCounts pass_inline(IrModule& module, const PassContext& ctx) {
    PassCounts counts;
    auto cyclic = cyclic_functions(module);

    bool any = true;
    while (any) {
        any = false;
        for (uint32_t f = 0; f < module.functions.size() && !any; ++f) {
            IrFunction& caller = module.functions[f];
            for (uint32_t bi = 0; bi < caller.blocks.size() && !any; ++bi) {
                auto& instrs = caller.blocks[bi].instrs;
                for (uint32_t ii = 0; ii < instrs.size(); ++ii) {
                    const IrInstr& call = instrs[ii];
                    if (call.op != IrOp::Call)
                        continue;
                    uint32_t callee_idx = call.aux;
                    if (callee_idx == f || cyclic.count(callee_idx) || cyclic.count(f))
                        continue;
                    if (function_size(module.functions[callee_idx]) > ctx.inline_max_instrs)
                        continue;
                    inline_site(module, caller, bi, ii, ctx, counts);
                    any = true;
                    break;
                }
            }
        }
    }
    return counts;
}

// ---------------------------------------------------------------------------
// unroll
// ---------------------------------------------------------------------------

namespace {

struct LoopShape {
    uint32_t header = 0;
    uint32_t latch = 0;
    uint32_t preheader = 0;
    uint32_t body_entry = 0;
    uint32_t exit = 0;
    std::set<uint32_t> blocks;      // loop blocks including the header
    uint32_t induction_phi = 0;     // value id
    uint64_t start = 0, bound = 0, step = 0;
    uint64_t trips = 0;
};

const IrInstr* find_def_in(const IrFunction& fn, uint32_t value) {
    for (const auto& b : fn.blocks)
        for (const auto& i : b.instrs)
            if (i.produces_value() && i.ir_id == value)
                return &i;
    return nullptr;
}

std::optional<LoopShape> match_for_loop(const IrFunction& fn, const StatementRegistry& registry,
                                        uint32_t max_trips) {
    auto idom = dominator_tree(fn);
    auto dominates = [&](uint32_t a, uint32_t b) {
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
    auto preds = predecessors(fn);

    for (const auto& hb : fn.blocks) {
        uint32_t header = hb.id;
        if (!idom.count(header) && header != fn.blocks.front().id)
            continue; // unreachable
        // exactly two predecessors: a preheader and a latch dominated by the header
        if (preds[header].size() != 2)
            continue;
        uint32_t latch = 0, preheader = 0;
        int latches = 0;
        for (uint32_t p : preds[header]) {
            if (dominates(header, p)) {
                latch = p;
                ++latches;
            } else {
                preheader = p;
            }
        }
        if (latches != 1)
            continue;

        LoopShape shape;
        shape.header = header;
        shape.latch = latch;
        shape.preheader = preheader;

        // loop membership: blocks reaching the latch without passing the header
        shape.blocks.insert(header);
        std::vector<uint32_t> stack = {latch};
        while (!stack.empty()) {
            uint32_t cur = stack.back();
            stack.pop_back();
            if (cur == header || !shape.blocks.insert(cur).second)
                continue;
            for (uint32_t p : preds[cur])
                stack.push_back(p);
        }

        const IrBlock* h = fn.find_block(header);
        const IrInstr& term = h->instrs.back();
        if (term.op != IrOp::Branch)
            continue;
        // the source statement must be a `for` header
        if (!term.prov.statement_id)
            continue;
        if (registry.statement(*term.prov.statement_id).kind != StatementKind::For)
            continue;
        uint32_t body_entry = term.targets[0];
        uint32_t exit = term.targets[1];
        if (!shape.blocks.count(body_entry) || shape.blocks.count(exit))
            continue;
        shape.body_entry = body_entry;
        shape.exit = exit;

        // header shape: phis + consts + one cmp-lt + branch
        const IrInstr* cmp = nullptr;
        bool clean = true;
        for (const auto& i : h->instrs) {
            if (i.op == IrOp::Phi || i.op == IrOp::Branch || i.op == IrOp::Const)
                continue;
            if (i.op == IrOp::CmpLt && !cmp) {
                cmp = &i;
                continue;
            }
            clean = false;
            break;
        }
        if (!clean || !cmp || term.args[0] != cmp->ir_id)
            continue;

        // induction: phi(pre: const, latch: add(phi, const)), step > 0
        const IrInstr* ind = nullptr;
        for (const auto& i : h->instrs)
            if (i.op == IrOp::Phi && i.ir_id == cmp->args[0])
                ind = &i;
        if (!ind || ind->phi_in.size() != 2)
            continue;
        const IrInstr* bound = find_def_in(fn, cmp->args[1]);
        if (!bound || bound->op != IrOp::Const)
            continue;
        uint32_t init_value = 0, next_value = 0;
        for (const auto& [pred, value] : ind->phi_in) {
            if (pred == preheader)
                init_value = value;
            else if (pred == latch)
                next_value = value;
        }
        const IrInstr* init = find_def_in(fn, init_value);
        const IrInstr* next = find_def_in(fn, next_value);
        if (!init || init->op != IrOp::Const || !next || next->op != IrOp::Add)
            continue;
        const IrInstr* step = nullptr;
        if (next->args[0] == ind->ir_id)
            step = find_def_in(fn, next->args[1]);
        else if (next->args[1] == ind->ir_id)
            step = find_def_in(fn, next->args[0]);
        if (!step || step->op != IrOp::Const || step->imm == 0)
            continue;

        shape.induction_phi = ind->ir_id;
        shape.start = init->imm;
        shape.bound = bound->imm;
        shape.step = step->imm;
        shape.trips = shape.start >= shape.bound
                          ? 0
                          : (shape.bound - shape.start + shape.step - 1) / shape.step;
        if (shape.trips > max_trips)
            continue;

        // self-contained: loop blocks only target loop blocks, the header's
        // exit, or phi-free terminal revert blocks
        bool contained = true;
        for (uint32_t id : shape.blocks) {
            const IrBlock* b = fn.find_block(id);
            for (uint32_t t : b->instrs.back().targets) {
                if (shape.blocks.count(t) || (id == header && t == exit))
                    continue;
                const IrBlock* tb = fn.find_block(t);
                bool terminal_revert = tb && tb->instrs.size() == 1 &&
                                       tb->instrs.back().op == IrOp::Revert;
                if (!terminal_revert)
                    contained = false;
            }
        }
        // no header phi may be fed from outside (preheader/latch only), and
        // the exit block must not own phis
        const IrBlock* exit_block = fn.find_block(exit);
        for (const auto& i : exit_block->instrs)
            if (i.op == IrOp::Phi)
                contained = false;
        if (!contained)
            continue;

        return shape;
    }
    return std::nullopt;
}

void unroll_loop(IrModule& module, IrFunction& fn, const LoopShape& shape, PassCounts& counts) {
    const IrBlock* header = fn.find_block(shape.header);

    // header phi bookkeeping: initial values and latch-side values
    struct PhiInfo {
        uint32_t phi = 0;
        uint32_t init = 0;
        uint32_t next = 0;
    };
    std::vector<PhiInfo> phis;
    for (const auto& i : header->instrs) {
        if (i.op != IrOp::Phi)
            continue;
        PhiInfo info;
        info.phi = i.ir_id;
        for (const auto& [pred, value] : i.phi_in) {
            if (pred == shape.preheader)
                info.init = value;
            else
                info.next = value;
        }
        phis.push_back(info);
    }

    std::vector<uint32_t> body_ids;
    for (const auto& b : fn.blocks)
        if (shape.blocks.count(b.id) && b.id != shape.header)
            body_ids.push_back(b.id);

    // current value of each header phi entering the next copy
    std::map<uint32_t, uint32_t> cur; // phi id -> value id
    for (const auto& p : phis)
        cur[p.phi] = p.init;

    std::vector<IrBlock> new_blocks;
    uint32_t entry_target = shape.exit; // where the preheader will jump

    for (uint64_t t = 0; t < shape.trips; ++t) {
        std::map<uint32_t, uint32_t> block_map;
        std::map<uint32_t, uint32_t> value_map;
        for (uint32_t id : body_ids)
            block_map[id] = fn.next_block_id++;
        for (const auto& p : phis)
            value_map[p.phi] = cur[p.phi];

        for (uint32_t id : body_ids) {
            const IrBlock* src = fn.find_block(id);
            IrBlock copy;
            copy.id = block_map[id];
            for (const auto& i : src->instrs) {
                IrInstr c = i;
                c.ir_id = module.fresh_id();
                value_map[i.ir_id] = c.ir_id;
                ++counts.created;
                copy.instrs.push_back(std::move(c));
            }
            new_blocks.push_back(std::move(copy));
        }
        // remap the fresh copies (they sit at the tail of new_blocks)
        size_t first = new_blocks.size() - body_ids.size();
        for (size_t nb = first; nb < new_blocks.size(); ++nb) {
            for (auto& i : new_blocks[nb].instrs) {
                for_each_use(i, [&](uint32_t& v) {
                    auto it = value_map.find(v);
                    if (it != value_map.end())
                        v = it->second;
                });
                for (auto& tgt : i.targets) {
                    if (tgt == shape.header)
                        tgt = 0xFFFFFFFF; // patched below: next copy or exit
                    else if (block_map.count(tgt))
                        tgt = block_map[tgt];
                }
                for (auto& [pred, value] : i.phi_in)
                    if (block_map.count(pred))
                        pred = block_map[pred];
            }
        }
        if (t == 0)
            entry_target = block_map[shape.body_entry];
        else {
            // previous copy's latch jumps here
            for (auto& b : new_blocks)
                for (auto& i : b.instrs)
                    for (auto& tgt : i.targets)
                        if (tgt == 0xFFFFFFFF && &b - new_blocks.data() <
                                                     static_cast<ptrdiff_t>(first))
                            tgt = block_map[shape.body_entry];
        }
        // advance phi values through this copy
        for (const auto& p : phis)
            cur[p.phi] = value_map.count(p.next) ? value_map[p.next] : p.next;
    }
    // the last copy's back edge leaves the loop
    for (auto& b : new_blocks)
        for (auto& i : b.instrs)
            for (auto& tgt : i.targets)
                if (tgt == 0xFFFFFFFF)
                    tgt = shape.exit;

    // uses of header phis after the loop see the final values
    for (const auto& p : phis)
        replace_all_uses(fn, p.phi, cur[p.phi]);

    // the preheader enters the first copy (or skips the loop entirely)
    IrBlock* pre = fn.find_block(shape.preheader);
    for (auto& tgt : pre->instrs.back().targets)
        if (tgt == shape.header)
            tgt = entry_target;

    // drop the original loop blocks
    for (size_t bi = 0; bi < fn.blocks.size();) {
        if (shape.blocks.count(fn.blocks[bi].id)) {
            for (const auto& i : fn.blocks[bi].instrs) {
                counts.no_mapping.push_back(i.ir_id);
                ++counts.deleted;
            }
            fn.blocks.erase(fn.blocks.begin() + bi);
        } else {
            ++bi;
        }
    }

    // splice the copies where the loop used to start
    size_t insert_pos = fn.blocks.size();
    for (size_t bi = 0; bi < fn.blocks.size(); ++bi) {
        if (fn.blocks[bi].id == shape.preheader) {
            insert_pos = bi + 1;
            break;
        }
    }
    fn.blocks.insert(fn.blocks.begin() + insert_pos,
                     std::make_move_iterator(new_blocks.begin()),
                     std::make_move_iterator(new_blocks.end()));
}

} // namespace

PassCounts pass_unroll(IrModule& module, const PassContext& ctx) {
    PassCounts counts;
    const StatementRegistry& registry = ctx.unit->registry;
    for (auto& fn : module.functions) {
        while (auto shape = match_for_loop(fn, registry, ctx.unroll_max_trips))
            unroll_loop(module, fn, *shape, counts);
    }
    return counts;
}

// ---------------------------------------------------------------------------
// reorder
// ---------------------------------------------------------------------------

namespace {

bool is_sinkable(const IrInstr& i) {
    switch (i.op) {
    case IrOp::Const:
    case IrOp::Not:
    case IrOp::LoadState:
    case IrOp::LoadKey:
    case IrOp::Param:
        return true;
    default:
        return ir_is_binop(i.op) || ir_is_cmp(i.op);
    }
}

bool conflicts(const IrInstr& load, const IrInstr& anchor) {
    if (anchor.op == IrOp::Call)
        return load.op == IrOp::LoadState || load.op == IrOp::LoadKey;
    if (anchor.op == IrOp::StoreState)
        return load.op == IrOp::LoadState && load.slot == anchor.slot;
    if (anchor.op == IrOp::StoreKey)
        return load.op == IrOp::LoadKey && load.slot == anchor.slot;
    return false;
}

} // namespace

PassCounts pass_reorder(IrModule& module, const PassContext&) {
    PassCounts counts;
    for (auto& fn : module.functions) {
        for (auto& b : fn.blocks) {
            std::vector<IrInstr> original = std::move(b.instrs);
            b.instrs.clear();

            std::map<uint32_t, size_t> position;
            for (size_t i = 0; i < original.size(); ++i)
                position[original[i].ir_id] = i;

            std::set<uint32_t> emitted;
            std::map<uint32_t, size_t> by_value; // value id -> index in original
            for (size_t i = 0; i < original.size(); ++i)
                if (original[i].produces_value())
                    by_value[original[i].ir_id] = i;

            // values with a non-phi use inside this block sink to their
            // first user; everything else keeps its original position
            std::set<uint32_t> used_in_block;
            for (const auto& i : original)
                if (i.op != IrOp::Phi)
                    for_each_use(i, [&](uint32_t v) { used_in_block.insert(v); });

            std::function<void(size_t)> schedule = [&](size_t idx) {
                const IrInstr& i = original[idx];
                if (emitted.count(i.ir_id))
                    return;
                emitted.insert(i.ir_id);
                for_each_use(i, [&](uint32_t v) {
                    auto it = by_value.find(v);
                    if (it == by_value.end())
                        return;
                    const IrInstr& def = original[it->second];
                    if (def.op != IrOp::Phi && is_sinkable(def))
                        schedule(it->second);
                });
                b.instrs.push_back(i);
            };
            // phis stay at the block head; they read on the incoming edges
            for (size_t i = 0; i < original.size(); ++i)
                if (original[i].op == IrOp::Phi) {
                    emitted.insert(original[i].ir_id);
                    b.instrs.push_back(original[i]);
                }

            for (size_t i = 0; i < original.size(); ++i) {
                const IrInstr& a = original[i];
                if (a.op == IrOp::Phi)
                    continue;
                if (is_sinkable(a) && used_in_block.count(a.ir_id))
                    continue; // pulled by its first user
                // memory fences force pending conflicting loads out first
                for (size_t j = 0; j < i; ++j) {
                    const IrInstr& l = original[j];
                    if (l.op != IrOp::Phi && is_sinkable(l) && !emitted.count(l.ir_id) &&
                        conflicts(l, a))
                        schedule(j);
                }
                schedule(i);
            }

            for (size_t i = 0; i < b.instrs.size(); ++i)
                if (position[b.instrs[i].ir_id] != i)
                    ++counts.moved;
        }
    }
    return counts;
}

// ---------------------------------------------------------------------------
// cfg_restructure
// ---------------------------------------------------------------------------

namespace {

// retarget every jump/branch aimed at `from` to `to`; phi incomings naming
// `from` as pred move to the given replacement predecessors
void retarget(IrFunction& fn, uint32_t from, uint32_t to) {
    for (auto& b : fn.blocks) {
        if (b.instrs.empty())
            continue;
        auto& term = b.instrs.back();
        for (auto& t : term.targets)
            if (t == from)
                t = to;
        if (term.op == IrOp::Branch && term.targets.size() == 2 &&
            term.targets[0] == term.targets[1]) {
            IrInstr jump;
            jump.ir_id = term.ir_id;
            jump.op = IrOp::Jump;
            jump.targets = {term.targets[0]};
            jump.prov = term.prov;
            jump.modifier_depth = term.modifier_depth;
            jump.jump = term.jump;
            term = std::move(jump);
        }
    }
}

} // namespace

PassCounts pass_cfg_restructure(IrModule& module, const PassContext&) {
    PassCounts counts;
    for (auto& fn : module.functions) {
        bool changed = true;
        while (changed) {
            changed = false;

            // thread empty forwarding blocks (jump-only, no phis)
            for (size_t bi = 1; bi < fn.blocks.size() && !changed; ++bi) {
                IrBlock& b = fn.blocks[bi];
                if (b.instrs.size() != 1 || b.instrs[0].op != IrOp::Jump)
                    continue;
                uint32_t victim = b.id;
                uint32_t target = b.instrs[0].targets[0];
                if (target == victim)
                    continue;

                std::vector<uint32_t> incoming;
                for (auto& other : fn.blocks) {
                    if (other.id == victim || other.instrs.empty())
                        continue;
                    for (uint32_t t : other.instrs.back().targets)
                        if (t == victim)
                            incoming.push_back(other.id);
                }
                IrBlock* tgt = fn.find_block(target);
                bool conflict = false;
                for (auto& phi : tgt->instrs) {
                    if (phi.op != IrOp::Phi)
                        continue;
                    std::optional<uint32_t> via;
                    for (const auto& [p, v] : phi.phi_in)
                        if (p == victim)
                            via = v;
                    if (!via)
                        continue;
                    for (uint32_t in : incoming)
                        for (const auto& [p, v] : phi.phi_in)
                            if (p == in && v != *via)
                                conflict = true;
                }
                if (conflict)
                    continue;
                for (auto& phi : tgt->instrs) {
                    if (phi.op != IrOp::Phi)
                        continue;
                    std::optional<uint32_t> via;
                    for (const auto& [p, v] : phi.phi_in)
                        if (p == victim)
                            via = v;
                    if (!via)
                        continue;
                    std::erase_if(phi.phi_in, [&](const std::pair<uint32_t, uint32_t>& in) {
                        return in.first == victim;
                    });
                    for (uint32_t in : incoming) {
                        bool present = false;
                        for (const auto& [p, v] : phi.phi_in)
                            if (p == in)
                                present = true;
                        if (!present)
                            phi.phi_in.emplace_back(in, *via);
                    }
                }
                retarget(fn, victim, target);
                counts.no_mapping.push_back(b.instrs[0].ir_id);
                ++counts.deleted;
                fn.blocks.erase(fn.blocks.begin() + bi);
                changed = true;
            }
            if (changed)
                continue;

            // merge single-pred/single-succ chains
            auto preds = predecessors(fn);
            for (size_t bi = 0; bi < fn.blocks.size() && !changed; ++bi) {
                IrBlock& a = fn.blocks[bi];
                if (a.instrs.empty() || a.instrs.back().op != IrOp::Jump)
                    continue;
                uint32_t next = a.instrs.back().targets[0];
                if (next == a.id || next == fn.blocks.front().id)
                    continue;
                if (preds[next].size() != 1)
                    continue;
                IrBlock* b = fn.find_block(next);
                if (!b)
                    continue;
                // fold single-incoming phis of b
                for (size_t ii = 0; ii < b->instrs.size();) {
                    IrInstr& i = b->instrs[ii];
                    if (i.op == IrOp::Phi) {
                        uint32_t v = i.phi_in.at(0).second;
                        uint32_t old_id = i.ir_id;
                        b->instrs.erase(b->instrs.begin() + ii);
                        replace_all_uses(fn, old_id, v);
                        ++counts.deleted;
                        counts.no_mapping.push_back(old_id);
                    } else {
                        ++ii;
                    }
                }
                counts.no_mapping.push_back(a.instrs.back().ir_id);
                ++counts.deleted; // the jump
                uint32_t a_id = a.id;
                uint32_t merged_id = b->id;
                a.instrs.pop_back();
                for (auto& i : b->instrs)
                    a.instrs.push_back(std::move(i));
                for (size_t rm = 0; rm < fn.blocks.size(); ++rm) {
                    if (fn.blocks[rm].id == merged_id) {
                        fn.blocks.erase(fn.blocks.begin() + rm);
                        break;
                    }
                }
                // edges that left `b` now leave `a`
                for (auto& blk : fn.blocks)
                    for (auto& i : blk.instrs)
                        for (auto& [pred, value] : i.phi_in)
                            if (pred == merged_id)
                                pred = a_id;
                changed = true;
            }
        }

        // layout: reverse post-order from the entry; unreachable blocks keep
        // their relative order at the end
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
        dfs(fn.blocks.front().id);
        std::reverse(post.begin(), post.end());
        std::vector<IrBlock> layout;
        for (uint32_t id : post) {
            for (auto& b : fn.blocks)
                if (b.id == id)
                    layout.push_back(std::move(b));
        }
        for (auto& b : fn.blocks)
            if (!visited.count(b.id))
                layout.push_back(std::move(b));
        fn.blocks = std::move(layout);
    }
    return counts;
}

// ---------------------------------------------------------------------------
// zk_instrument
// ---------------------------------------------------------------------------

PassCounts pass_zk_instrument(IrModule& module, const PassContext&) {
    PassCounts counts;
    for (auto& fn : module.functions) {
        for (auto& b : fn.blocks) {
            for (size_t ii = 0; ii < b.instrs.size(); ++ii) {
                IrInstr& i = b.instrs[ii];
                if (i.op == IrOp::Branch && i.require_branch) {
                    // a require condition is visible source semantics: mapped
                    IrInstr zk;
                    zk.ir_id = module.fresh_id();
                    zk.op = IrOp::ZkConstraint;
                    zk.args = {i.args[0]};
                    zk.aux = i.prov.zk_constraint.value_or(kNoConstraint);
                    zk.prov = i.prov;
                    zk.prov.confidence = Confidence::Exact;
                    zk.modifier_depth = i.modifier_depth;
                    ++counts.created;
                    b.instrs.insert(b.instrs.begin() + ii, std::move(zk));
                    ++ii;
                } else if (ir_is_binop(i.op) &&
                           (i.op == IrOp::BitAnd || i.op == IrOp::BitOr ||
                            i.op == IrOp::BitXor || i.op == IrOp::Shl || i.op == IrOp::Shr)) {
                    // arithmetic gadget: synthetic, excluded from the mapping
                    IrInstr zk;
                    zk.ir_id = module.fresh_id();
                    zk.op = IrOp::ZkConstraint;
                    zk.args = {i.ir_id};
                    zk.aux = kNoConstraint;
                    zk.prov = Provenance::synthetic();
                    zk.modifier_depth = i.modifier_depth;
                    ++counts.created;
                    counts.no_mapping.push_back(zk.ir_id);
                    b.instrs.insert(b.instrs.begin() + ii + 1, std::move(zk));
                    ++ii;
                }
            }
        }
    }
    return counts;
}

// ---------------------------------------------------------------------------
// pipeline
// ---------------------------------------------------------------------------

PassReport run_pipeline(IrModule& module, const PassConfig& config,
                        const CompilationUnit& unit) {
    config.validate();
    PassContext ctx;
    ctx.unit = &unit;
    ctx.mapping_enabled = config.mapping_enabled;
    ctx.unroll_max_trips = config.unroll_max_trips;
    ctx.inline_max_instrs = config.inline_max_instrs;

    PassReport report;
    for (PassKind kind : config.order) {
        PassCounts counts;
        switch (kind) {
        case PassKind::ConstFold: counts = pass_const_fold(module, ctx); break;
        case PassKind::Dce: counts = pass_dce(module, ctx); break;
        case PassKind::Inline: counts = pass_inline(module, ctx); break;
        case PassKind::Unroll: counts = pass_unroll(module, ctx); break;
        case PassKind::Reorder: counts = pass_reorder(module, ctx); break;
        case PassKind::CfgRestructure: counts = pass_cfg_restructure(module, ctx); break;
        case PassKind::ZkInstrument: counts = pass_zk_instrument(module, ctx); break;
        }
        verify_ssa(module);
        report.passes.emplace_back(kind, std::move(counts));
    }
    return report;
}

} // namespace zkmap
