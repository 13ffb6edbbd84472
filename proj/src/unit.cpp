// SPDX-License-Identifier: Apache-2.0
#include "zkmap/unit.hpp"

#include "zkmap/lexer.hpp"
#include "zkmap/parser.hpp"

namespace zkmap {

CompilationUnit run_frontend(std::string file_name, std::string text) {
    CompilationUnit unit;
    unit.file_name = std::move(file_name);
    unit.text = std::move(text);
    auto tokens = tokenize(unit.text, 0);
    unit.ast = parse(tokens);
    unit.symbols = resolve(unit.ast);
    unit.registry = build_statement_registry(unit.ast, unit.symbols);
    unit.span_index = build_span_index(unit.ast, unit.registry);
    return unit;
}

} // namespace zkmap
