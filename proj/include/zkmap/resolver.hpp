// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/ast.hpp"

#include <map>
#include <string>
#include <vector>

namespace zkmap {

struct StateVarSym {
    NodeId node = 0;
    std::string name;
    Type type;
    uint32_t slot = 0; // unit-wide storage slot
};
struct FunctionSym {
    NodeId node = 0;
    std::string name;
    uint32_t arity = 0;
    Visibility vis = Visibility::Internal;
    std::optional<Type> ret;
};
struct ModifierSym {
    NodeId node = 0;
    std::string name;
    uint32_t arity = 0;
};
struct EventSym {
    NodeId node = 0;
    std::string name;
    uint32_t arity = 0;
    uint32_t index = 0; // unit-wide event index
};
struct ContractSym {
    NodeId node = 0;
    std::string name;
    std::vector<StateVarSym> state_vars;
    std::vector<FunctionSym> functions;
    std::vector<ModifierSym> modifiers;
    std::vector<EventSym> events;
};

struct SymbolTable {
    std::vector<ContractSym> contracts;
    // "name/arity" -> external function, unit-wide
    std::map<std::string, FnRef> dispatch;

    const FunctionSym& fn(const FnRef& ref) const {
        return contracts[ref.contract].functions[ref.index];
    }
};

/// Bind every identifier in the AST to its definition. Function overloads
/// resolve by arity alone; modifier invocations bind to modifier definitions.
/// Also enforces the structural rules that precede lowering: the `_;`
/// placeholder appears exactly once per modifier body and nowhere else,
/// mapping types stay scalar-keyed/scalar-valued, and state variables have
/// no initializers.
SymbolTable resolve(Ast& ast);

} // namespace zkmap
