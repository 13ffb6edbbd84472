// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "zkmap/ast.hpp"
#include "zkmap/registry.hpp"
#include "zkmap/resolver.hpp"
#include "zkmap/span.hpp"

#include <string>

namespace zkmap {

/// Everything the frontend produces for one source file.
struct CompilationUnit {
    std::string file_name;
    std::string text;
    Ast ast;
    SymbolTable symbols;
    StatementRegistry registry;
    SpanIndex span_index;
};

/// Tokenize, parse, resolve and build the statement registry.
CompilationUnit run_frontend(std::string file_name, std::string text);

} // namespace zkmap
