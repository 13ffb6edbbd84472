// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/ast.hpp"
#include "zkmap/lexer.hpp"

#include <functional>

namespace zkmap {

/// Parse a token stream into an AST. Node ids are dense, pre-order and
/// deterministic; every node carries the span of exactly its source extent
/// (statement spans include the trailing ';'). The first error aborts.
Ast parse(const std::vector<Token>& tokens);

/// Invoke `fn` for every child id slot of `node`.
void for_each_child(const AstNode& node, const std::function<void(NodeId)>& fn);

} // namespace zkmap
